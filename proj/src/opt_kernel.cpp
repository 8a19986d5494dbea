#include "flexbid/opt_kernel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace flexbid::opt {

namespace {

constexpr double kFeasTol = 1e-7;
constexpr double kOptTol = 1e-7;
constexpr double kPivotTol = 1e-9;
constexpr double kIntTol = 1e-6;

bool is_int_kind(VarKind k) { return k != VarKind::kContinuous; }

// ---------------------------------------------------------------------------
// Standardized LP: minimize c'y, A y = b, 0 <= y <= u (u may be +inf).
// Original variables map onto columns by shift, mirror, or free split.

struct ColMapEntry {
    enum Type { kShift, kMirror, kSplit, kFixed } type;
    int col = -1;      // primary column
    int col_neg = -1;  // negative part for kSplit
    double base = 0.0; // lb for kShift, ub for kMirror, value for kFixed
};

struct StandardLp {
    int n = 0;                         // structural columns
    bool infeasible = false;           // crossed bounds detected up front
    std::vector<double> ub;            // per column
    std::vector<double> cost;          // per column
    double cost_const = 0.0;
    std::vector<std::vector<double>> a;  // dense rows over structural columns
    std::vector<double> b;
    std::vector<Sense> sense;
    std::vector<ColMapEntry> map;      // per model variable
};

StandardLp standardize(const Model& model, const std::vector<double>& lb,
                       const std::vector<double>& ub) {
    const int nv = model.num_vars();
    StandardLp lp;
    lp.map.resize(nv);
    for (int v = 0; v < nv; ++v) {
        ColMapEntry& e = lp.map[v];
        const double l = lb[v], u = ub[v];
        if (l > u + 1e-12) {
            lp.infeasible = true;
            e.type = ColMapEntry::kFixed;
            e.base = l;
            continue;
        }
        if (l == u) {
            e.type = ColMapEntry::kFixed;
            e.base = l;
        } else if (l > -kInf) {
            e.type = ColMapEntry::kShift;
            e.base = l;
            e.col = lp.n++;
            lp.ub.push_back(u - l);
        } else if (u < kInf) {
            e.type = ColMapEntry::kMirror;
            e.base = u;
            e.col = lp.n++;
            lp.ub.push_back(kInf);
        } else {
            e.type = ColMapEntry::kSplit;
            e.col = lp.n++;
            e.col_neg = lp.n++;
            lp.ub.push_back(kInf);
            lp.ub.push_back(kInf);
        }
    }
    lp.cost.assign(lp.n, 0.0);
    lp.cost_const = model.objective_constant();
    for (const Term& t : model.objective()) {
        const ColMapEntry& e = lp.map[t.var];
        switch (e.type) {
            case ColMapEntry::kFixed: lp.cost_const += t.coef * e.base; break;
            case ColMapEntry::kShift:
                lp.cost[e.col] += t.coef;
                lp.cost_const += t.coef * e.base;
                break;
            case ColMapEntry::kMirror:
                lp.cost[e.col] -= t.coef;
                lp.cost_const += t.coef * e.base;
                break;
            case ColMapEntry::kSplit:
                lp.cost[e.col] += t.coef;
                lp.cost[e.col_neg] -= t.coef;
                break;
        }
    }
    for (const auto& row : model.rows()) {
        std::vector<double> arow(lp.n, 0.0);
        double rhs = row.rhs;
        for (const Term& t : row.terms) {
            const ColMapEntry& e = lp.map[t.var];
            switch (e.type) {
                case ColMapEntry::kFixed: rhs -= t.coef * e.base; break;
                case ColMapEntry::kShift:
                    arow[e.col] += t.coef;
                    rhs -= t.coef * e.base;
                    break;
                case ColMapEntry::kMirror:
                    arow[e.col] -= t.coef;
                    rhs -= t.coef * e.base;
                    break;
                case ColMapEntry::kSplit:
                    arow[e.col] += t.coef;
                    arow[e.col_neg] -= t.coef;
                    break;
            }
        }
        lp.a.push_back(std::move(arow));
        lp.b.push_back(rhs);
        lp.sense.push_back(row.sense);
    }
    return lp;
}

// ---------------------------------------------------------------------------
// Bounded-variable primal simplex. Nonbasic columns sit at 0 in their current
// frame; a column whose variable rests at its upper bound is kept "flipped"
// (y = u - y'), so ordinary simplex mechanics apply unchanged.

class Simplex {
  public:
    enum class Result { kOptimal, kInfeasible, kUnbounded, kNumeric };

    Result solve(const StandardLp& lp) {
        build(lp);
        // Phase 1: drive artificial infeasibility to zero.
        Result r = iterate(cost1_, /*phase1=*/true);
        if (r != Result::kOptimal) return r == Result::kUnbounded ? Result::kNumeric : r;
        if (-cost1_[ncols_] > 1e-6) return Result::kInfeasible;
        for (int j = art_begin_; j < ncols_; ++j) ub_[j] = 0.0;
        return iterate(cost2_, /*phase1=*/false);
    }

    double objective() const { return -cost2_[ncols_]; }

    // Value of structural column j in the standardized frame.
    double col_value(int j) const {
        double raw = 0.0;
        if (basic_row_[j] >= 0) raw = tab_[basic_row_[j]][ncols_];
        return flipped_[j] ? ub_[j] - raw : raw;
    }

  private:
    int m_ = 0, ncols_ = 0, art_begin_ = 0;
    std::vector<std::vector<double>> tab_;
    std::vector<double> cost1_, cost2_, ub_;
    std::vector<int> basis_, basic_row_;
    std::vector<char> flipped_;

    void build(const StandardLp& lp) {
        m_ = static_cast<int>(lp.a.size());
        const int n = lp.n;
        // slack per inequality row
        int nslack = 0;
        for (Sense s : lp.sense)
            if (s != Sense::kEq) ++nslack;
        art_begin_ = n + nslack;
        ncols_ = art_begin_;  // artificials appended below as needed
        std::vector<int> slack_col(m_, -1);
        {
            int next = n;
            for (int i = 0; i < m_; ++i)
                if (lp.sense[i] != Sense::kEq) slack_col[i] = next++;
        }
        tab_.assign(m_, std::vector<double>());
        ub_ = lp.ub;
        ub_.resize(art_begin_, kInf);
        basis_.assign(m_, -1);

        // Count artificials first so rows can be sized once.
        std::vector<char> needs_art(m_, 0);
        for (int i = 0; i < m_; ++i) {
            const double b = lp.b[i];
            if (lp.sense[i] == Sense::kLe && b >= 0) continue;
            if (lp.sense[i] == Sense::kGe && b <= 0) continue;
            needs_art[i] = 1;
        }
        int nart = 0;
        for (int i = 0; i < m_; ++i) nart += needs_art[i];
        ncols_ = art_begin_ + nart;
        ub_.resize(ncols_, kInf);

        int next_art = art_begin_;
        for (int i = 0; i < m_; ++i) {
            auto& row = tab_[i];
            row.assign(ncols_ + 1, 0.0);
            for (int j = 0; j < n; ++j) row[j] = lp.a[i][j];
            row[ncols_] = lp.b[i];
            if (lp.sense[i] == Sense::kLe) row[slack_col[i]] = 1.0;
            if (lp.sense[i] == Sense::kGe) row[slack_col[i]] = -1.0;
            if (!needs_art[i]) {
                // slack doubles as the initial basic variable
                if (lp.sense[i] == Sense::kGe) {
                    // slack coef is -1 and b <= 0: negate the row
                    for (double& x : row) x = -x;
                }
                basis_[i] = slack_col[i];
            } else {
                const double sign = lp.b[i] >= 0 ? 1.0 : -1.0;
                if (sign < 0)
                    for (double& x : row) x = -x;
                row[next_art] = 1.0;
                basis_[i] = next_art++;
            }
        }

        cost1_.assign(ncols_ + 1, 0.0);
        for (int j = art_begin_; j < ncols_; ++j) cost1_[j] = 1.0;
        cost2_.assign(ncols_ + 1, 0.0);
        for (int j = 0; j < n; ++j) cost2_[j] = lp.cost[j];
        flipped_.assign(ncols_, 0);
        basic_row_.assign(ncols_, -1);
        for (int i = 0; i < m_; ++i) basic_row_[basis_[i]] = i;

        // Price out the initial basis from both cost rows.
        price_out(cost1_);
        price_out(cost2_);
    }

    void price_out(std::vector<double>& cost) {
        for (int i = 0; i < m_; ++i) {
            const double cb = cost[basis_[i]];
            if (std::fabs(cb) < 1e-300) continue;
            const auto& row = tab_[i];
            for (int j = 0; j <= ncols_; ++j) cost[j] -= cb * row[j];
        }
    }

    void flip_column(int j) {
        const double u = ub_[j];
        for (int i = 0; i < m_; ++i) {
            auto& row = tab_[i];
            if (row[j] != 0.0) {
                row[ncols_] -= u * row[j];
                row[j] = -row[j];
            }
        }
        for (auto* cost : {&cost1_, &cost2_}) {
            auto& c = *cost;
            if (c[j] != 0.0) {
                c[ncols_] -= u * c[j];
                c[j] = -c[j];
            }
        }
        flipped_[j] = !flipped_[j];
    }

    void pivot(int r, int j) {
        auto& prow = tab_[r];
        const double piv = prow[j];
        const double inv = 1.0 / piv;
        for (double& x : prow) x *= inv;
        prow[j] = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            auto& row = tab_[i];
            const double f = row[j];
            if (std::fabs(f) < 1e-13) {
                row[j] = 0.0;
                continue;
            }
            for (int k = 0; k <= ncols_; ++k) row[k] -= f * prow[k];
            row[j] = 0.0;
        }
        for (auto* cost : {&cost1_, &cost2_}) {
            auto& c = *cost;
            const double f = c[j];
            if (std::fabs(f) >= 1e-13) {
                for (int k = 0; k <= ncols_; ++k) c[k] -= f * prow[k];
            }
            c[j] = 0.0;
        }
        basic_row_[basis_[r]] = -1;
        basis_[r] = j;
        basic_row_[j] = r;
    }

    Result iterate(std::vector<double>& cost, bool phase1) {
        const int64_t bland_after = 200 + 4LL * (m_ + ncols_);
        const int64_t max_iter = 2000000;
        for (int64_t it = 0; it < max_iter; ++it) {
            const bool bland = it > bland_after;
            // entering column
            int enter = -1;
            double best = -kOptTol;
            for (int j = 0; j < ncols_; ++j) {
                if (basic_row_[j] >= 0 || ub_[j] <= 0.0) continue;
                const double cj = cost[j];
                if (cj < best) {
                    if (bland) {
                        enter = j;
                        break;
                    }
                    best = cj;
                    enter = j;
                }
            }
            if (enter < 0) return Result::kOptimal;

            // ratio test: smallest step; ties take the lowest basic index
            double t = ub_[enter];
            int leave_row = -1;
            bool leave_upper = false;
            for (int i = 0; i < m_; ++i) {
                const double a = tab_[i][enter];
                if (a > kPivotTol) {
                    const double lim = std::max(tab_[i][ncols_], 0.0) / a;
                    if (lim < t - 1e-12 ||
                        (lim < t + 1e-12 && leave_row >= 0 &&
                         basis_[i] < basis_[leave_row])) {
                        t = lim;
                        leave_row = i;
                        leave_upper = false;
                    }
                } else if (a < -kPivotTol && ub_[basis_[i]] < kInf) {
                    const double room = ub_[basis_[i]] - tab_[i][ncols_];
                    const double lim = std::max(room, 0.0) / (-a);
                    if (lim < t - 1e-12 ||
                        (lim < t + 1e-12 && leave_row >= 0 &&
                         basis_[i] < basis_[leave_row])) {
                        t = lim;
                        leave_row = i;
                        leave_upper = true;
                    }
                }
            }
            if (leave_row < 0) {
                if (t >= kInf) return phase1 ? Result::kNumeric : Result::kUnbounded;
                flip_column(enter);  // entering variable jumps to its bound
                continue;
            }
            const int leaving = basis_[leave_row];
            pivot(leave_row, enter);
            if (leave_upper) flip_column(leaving);
        }
        return Result::kNumeric;
    }
};

Solution solve_lp_bounds(const Model& model, const std::vector<double>& lb,
                         const std::vector<double>& ub) {
    StandardLp lp = standardize(model, lb, ub);
    Solution sol;
    if (lp.infeasible) {
        sol.status = SolveStatus::kInfeasible;
        return sol;
    }
    if (lp.n == 0) {
        // Everything fixed; check row feasibility directly.
        bool ok = true;
        for (size_t i = 0; i < lp.b.size(); ++i) {
            const double r = lp.b[i];
            if (lp.sense[i] == Sense::kEq && std::fabs(r) > kFeasTol) ok = false;
            if (lp.sense[i] == Sense::kLe && r < -kFeasTol) ok = false;
            if (lp.sense[i] == Sense::kGe && r > kFeasTol) ok = false;
        }
        sol.status = ok ? SolveStatus::kOptimal : SolveStatus::kInfeasible;
        if (ok) {
            sol.objective = lp.cost_const;
            sol.values.resize(model.num_vars());
            for (int v = 0; v < model.num_vars(); ++v)
                sol.values[v] = lp.map[v].base;
        }
        return sol;
    }

    Simplex spx;
    switch (spx.solve(lp)) {
        case Simplex::Result::kInfeasible:
            sol.status = SolveStatus::kInfeasible;
            return sol;
        case Simplex::Result::kUnbounded:
            sol.status = SolveStatus::kUnbounded;
            return sol;
        case Simplex::Result::kNumeric:
            sol.status = SolveStatus::kUnknown;
            return sol;
        case Simplex::Result::kOptimal:
            break;
    }
    sol.status = SolveStatus::kOptimal;
    sol.objective = spx.objective() + lp.cost_const;
    sol.values.resize(model.num_vars());
    for (int v = 0; v < model.num_vars(); ++v) {
        const ColMapEntry& e = lp.map[v];
        switch (e.type) {
            case ColMapEntry::kFixed: sol.values[v] = e.base; break;
            case ColMapEntry::kShift:
                sol.values[v] = e.base + spx.col_value(e.col);
                break;
            case ColMapEntry::kMirror:
                sol.values[v] = e.base - spx.col_value(e.col);
                break;
            case ColMapEntry::kSplit:
                sol.values[v] = spx.col_value(e.col) - spx.col_value(e.col_neg);
                break;
        }
    }
    return sol;
}

}  // namespace

// ---------------------------------------------------------------------------

int Model::add_var(std::string name, double lb, double ub, VarKind kind) {
    vars_.push_back({std::move(name), lb, ub, kind});
    return static_cast<int>(vars_.size()) - 1;
}

void Model::add_constraint(std::vector<Term> terms, Sense sense, double rhs,
                           std::string name) {
    rows_.push_back({std::move(name), std::move(terms), sense, rhs});
}

void Model::set_objective(std::vector<Term> terms, double constant) {
    obj_ = std::move(terms);
    obj_const_ = constant;
}

void Model::set_var_bounds(int var, double lb, double ub) {
    vars_.at(var).lb = lb;
    vars_.at(var).ub = ub;
}

void Model::validate() const {
    auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
        for (const Term& t : terms) {
            if (t.var < 0 || t.var >= num_vars())
                throw std::invalid_argument(where + ": unknown variable index " +
                                            std::to_string(t.var));
            if (!std::isfinite(t.coef))
                throw std::invalid_argument(where + ": non-finite coefficient");
        }
    };
    for (const auto& v : vars_) {
        if (std::isnan(v.lb) || std::isnan(v.ub) || v.lb > v.ub)
            throw std::invalid_argument("variable '" + v.name + "': bad bounds");
        if (v.kind == VarKind::kBinary && (v.lb < 0.0 || v.ub > 1.0))
            throw std::invalid_argument("variable '" + v.name +
                                        "': binary bounds must lie in [0,1]");
    }
    for (const auto& r : rows_) {
        check_terms(r.terms, "constraint '" + r.name + "'");
        if (!std::isfinite(r.rhs))
            throw std::invalid_argument("constraint '" + r.name +
                                        "': non-finite rhs");
    }
    check_terms(obj_, "objective");
    if (!std::isfinite(obj_const_))
        throw std::invalid_argument("objective: non-finite constant");
}

Solution solve_lp(const Model& model) {
    model.validate();
    std::vector<double> lb(model.num_vars()), ub(model.num_vars());
    for (int v = 0; v < model.num_vars(); ++v) {
        lb[v] = model.vars()[v].lb;
        ub[v] = model.vars()[v].ub;
    }
    return solve_lp_bounds(model, lb, ub);
}

namespace {

struct BbNode {
    double bound;
    uint64_t id;
    std::vector<double> lb, ub;
};

struct BbNodeOrder {
    bool operator()(const BbNode& a, const BbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
        return a.id > b.id;
    }
};

}  // namespace

Solution solve_mip(const Model& model, const MipOptions& options) {
    model.validate();
    const int nv = model.num_vars();
    std::vector<int> int_vars;
    for (int v = 0; v < nv; ++v)
        if (is_int_kind(model.vars()[v].kind)) int_vars.push_back(v);

    std::vector<double> lb0(nv), ub0(nv);
    for (int v = 0; v < nv; ++v) {
        lb0[v] = model.vars()[v].lb;
        ub0[v] = model.vars()[v].ub;
    }
    // Bound tightening for integer variables.
    for (int v : int_vars) {
        lb0[v] = std::ceil(lb0[v] - kIntTol);
        ub0[v] = std::floor(ub0[v] + kIntTol);
    }

    if (int_vars.empty()) {
        Solution s = solve_lp_bounds(model, lb0, ub0);
        s.nodes = 1;
        return s;
    }

    const auto t_start = std::chrono::steady_clock::now();
    auto out_of_time = [&] {
        if (options.time_limit_s >= kInf) return false;
        const std::chrono::duration<double> dt =
            std::chrono::steady_clock::now() - t_start;
        return dt.count() > options.time_limit_s;
    };

    std::priority_queue<BbNode, std::vector<BbNode>, BbNodeOrder> frontier;
    uint64_t next_id = 0;
    frontier.push({-kInf, next_id++, lb0, ub0});

    Solution best;
    bool have_best = false;
    double best_obj = kInf;
    int64_t nodes = 0;
    bool hit_limit = false;
    bool root_unbounded = false;
    double global_bound = -kInf;

    auto gap_limit = [&](double incumbent) {
        double g = options.abs_gap;
        if (options.rel_gap > 0)
            g = std::max(g, options.rel_gap * std::fabs(incumbent));
        return g;
    };

    while (!frontier.empty()) {
        if (out_of_time()) {
            hit_limit = true;
            break;
        }
        BbNode node = frontier.top();
        frontier.pop();
        global_bound = node.bound;
        if (have_best && node.bound >= best_obj - gap_limit(best_obj)) break;

        ++nodes;
        Solution rel = solve_lp_bounds(model, node.lb, node.ub);
        if (rel.status == SolveStatus::kInfeasible) continue;
        if (rel.status == SolveStatus::kUnbounded) {
            if (nodes == 1) root_unbounded = true;
            break;
        }
        if (rel.status == SolveStatus::kUnknown) {
            hit_limit = true;
            continue;
        }
        if (have_best && rel.objective >= best_obj - gap_limit(best_obj)) continue;

        // most fractional integer variable, ties by lowest index
        int branch_var = -1;
        double branch_frac = kIntTol;
        double branch_val = 0.0;
        for (int v : int_vars) {
            const double x = rel.values[v];
            const double f = x - std::floor(x);
            const double dist = std::min(f, 1.0 - f);
            if (dist > branch_frac + 1e-12) {
                branch_frac = dist;
                branch_var = v;
                branch_val = x;
            }
        }
        if (branch_var < 0) {
            if (rel.objective < best_obj) {
                best = rel;
                for (int v : int_vars)
                    best.values[v] = std::round(best.values[v]) + 0.0;  // drop -0
                best_obj = rel.objective;
                have_best = true;
            }
            continue;
        }
        BbNode down{rel.objective, next_id++, node.lb, node.ub};
        down.ub[branch_var] = std::floor(branch_val);
        BbNode up{rel.objective, next_id++, node.lb, node.ub};
        up.lb[branch_var] = std::floor(branch_val) + 1.0;
        frontier.push(std::move(down));
        frontier.push(std::move(up));
    }

    if (root_unbounded) {
        Solution s;
        s.status = SolveStatus::kUnbounded;
        s.nodes = nodes;
        return s;
    }
    if (have_best) {
        best.status = SolveStatus::kOptimal;
        best.nodes = nodes;
        double bound = frontier.empty() ? best_obj
                                        : std::min(global_bound, frontier.top().bound);
        if (frontier.empty() && !hit_limit) bound = best_obj;
        best.gap = std::max(0.0, best_obj - std::min(bound, best_obj));
        // A fully explored tree proves optimality regardless of the last bound.
        if (frontier.empty()) best.gap = 0.0;
        return best;
    }
    Solution s;
    s.status = hit_limit ? SolveStatus::kUnknown : SolveStatus::kInfeasible;
    s.nodes = nodes;
    return s;
}

double max_violation(const Model& model, const std::vector<double>& x) {
    double worst = 0.0;
    for (int v = 0; v < model.num_vars(); ++v) {
        const auto& var = model.vars()[v];
        worst = std::max(worst, var.lb - x[v]);
        worst = std::max(worst, x[v] - var.ub);
        if (is_int_kind(var.kind))
            worst = std::max(worst, std::fabs(x[v] - std::round(x[v])));
    }
    for (const auto& row : model.rows()) {
        double lhs = 0.0;
        for (const Term& t : row.terms) lhs += t.coef * x[t.var];
        if (row.sense == Sense::kLe) worst = std::max(worst, lhs - row.rhs);
        if (row.sense == Sense::kGe) worst = std::max(worst, row.rhs - lhs);
        if (row.sense == Sense::kEq) worst = std::max(worst, std::fabs(lhs - row.rhs));
    }
    return worst;
}

void write_lp(const Model& model, std::ostream& out) {
    auto write_terms = [&](const std::vector<Term>& terms) {
        bool first = true;
        for (const Term& t : terms) {
            const double c = t.coef;
            if (c == 0.0) continue;
            if (first) {
                out << (c < 0 ? "- " : "");
            } else {
                out << (c < 0 ? " - " : " + ");
            }
            out << std::fabs(c) << " " << model.vars()[t.var].name;
            first = false;
        }
        if (first) out << "0";
    };
    out << "min: ";
    write_terms(model.objective());
    if (model.objective_constant() != 0.0)
        out << " + " << model.objective_constant();
    out << "\n";
    int anon = 0;
    for (const auto& row : model.rows()) {
        std::string name = row.name.empty() ? "c" + std::to_string(anon++) : row.name;
        out << name << ": ";
        write_terms(row.terms);
        switch (row.sense) {
            case Sense::kLe: out << " <= "; break;
            case Sense::kEq: out << " = "; break;
            case Sense::kGe: out << " >= "; break;
        }
        out << row.rhs << "\n";
    }
    for (const auto& v : model.vars())
        out << v.lb << " <= " << v.name << " <= " << v.ub << "\n";
    bool any_int = false;
    for (const auto& v : model.vars())
        if (is_int_kind(v.kind)) {
            if (!any_int) out << "int:";
            out << " " << v.name;
            any_int = true;
        }
    if (any_int) out << "\n";
}

}  // namespace flexbid::opt
