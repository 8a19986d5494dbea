#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace flexbid::opt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { kContinuous, kBinary, kInteger };
enum class Sense { kLe, kEq, kGe };
enum class SolveStatus {
    kOptimal,
    kInfeasible,
    kUnbounded,
    // Terminated (time limit / numerical safeguard) without a proof of
    // infeasibility and without an incumbent.
    kUnknown,
};

struct Term {
    int var;
    double coef;
};

// A linear model: minimize c'x subject to linear rows and variable bounds.
class Model {
  public:
    int add_var(std::string name, double lb, double ub,
                VarKind kind = VarKind::kContinuous);
    void add_constraint(std::vector<Term> terms, Sense sense, double rhs,
                        std::string name = "");
    // Objective is always minimization; `constant` is added to the optimum.
    void set_objective(std::vector<Term> terms, double constant = 0.0);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(rows_.size()); }

    struct Var {
        std::string name;
        double lb, ub;
        VarKind kind;
    };
    struct Row {
        std::string name;
        std::vector<Term> terms;
        Sense sense;
        double rhs;
    };

    const std::vector<Var>& vars() const { return vars_; }
    const std::vector<Row>& rows() const { return rows_; }
    const std::vector<Term>& objective() const { return obj_; }
    double objective_constant() const { return obj_const_; }

    void set_var_bounds(int var, double lb, double ub);

    // Throws std::invalid_argument on malformed models (bad indices,
    // lb > ub, binaries outside [0,1], non-finite coefficients).
    void validate() const;

  private:
    std::vector<Var> vars_;
    std::vector<Row> rows_;
    std::vector<Term> obj_;
    double obj_const_ = 0.0;
};

struct Solution {
    SolveStatus status = SolveStatus::kUnknown;
    double objective = 0.0;
    std::vector<double> values;  // one per model variable when optimal
    double gap = 0.0;            // |incumbent - best bound| from solve_mip
    int64_t nodes = 0;           // branch-and-bound nodes processed
};

// Primal simplex on a dense tableau with bounded variables, two phases,
// Dantzig pricing with Bland's rule fallback for anti-cycling.
// Integrality marks are relaxed. Feasibility and optimality tolerance 1e-7.
Solution solve_lp(const Model& model);

struct MipOptions {
    double abs_gap = 1e-6;
    double rel_gap = 0.0;  // fraction of |incumbent|; 0 disables
    double time_limit_s = kInf;
};

// Best-bound branch and bound over LP relaxations; branches on the most
// fractional integer variable (ties: lowest index) with floor/ceil children.
// Deterministic for identical models and options.
Solution solve_mip(const Model& model, const MipOptions& options = {});

// Largest constraint/bound/integrality violation of an assignment; test aid.
double max_violation(const Model& model, const std::vector<double>& x);

// Plain-text dump. Grammar: "min: <terms> [+ const]", one "name: <terms>
// <=|=|>= rhs" line per row, "lb <= name <= ub" per variable, and a final
// "int: name..." line listing integer/binary variables.
void write_lp(const Model& model, std::ostream& out);

}  // namespace flexbid::opt
