#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexbid/binomial.hpp"
#include "flexbid/energy_system.hpp"
#include "flexbid/market_data.hpp"
#include "flexbid/opt_kernel.hpp"

namespace flexbid {

class MultimarketError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scenario tree. A day splits into six 4-hour slices; each (slice, price
// combination) spans 16 scenarios: capacity-bid acceptance per direction
// (a_plus, a_minus), the intraday outcome m, and the request branch r.

struct Scenario {
    int a_plus = 0, a_minus = 0;  // capacity bid accepted per direction
    int m = 0;                    // intraday outcome: 0 = sell, 1 = buy
    int r = 0;                    // request branch: 0 = positive, 1 = negative
    // remuneration / activation flags
    int s_cp_plus = 0, s_cp_minus = 0;
    int s_sell = 0, s_buy = 0;
    int s_ep_plus = 0, s_ep_minus = 0;
    double prob = 0;
};

inline int scenario_index(int a_plus, int a_minus, int m, int r) {
    return a_plus * 8 + a_minus * 4 + m * 2 + r;
}
inline int scenario_branch(const Scenario& s) {
    return s.a_plus * 2 + s.a_minus;
}

// The 16 scenarios with probabilities
//   prob = P_acc(a_plus) * P_acc(a_minus) * P_id(m) * P_req(r | a_plus, a_minus).
// The request split follows the acceptance pattern: with one direction
// accepted the request branch carries that direction's request probability
// and the other branch is request-free; with both accepted the two request
// probabilities are ratio-normalized (an even split when both are zero);
// with neither accepted both branches are request-free halves.
// Throws std::invalid_argument for probabilities outside [0,1].
std::array<Scenario, 16> build_scenarios(const PriceCombination& combination,
                                         const OptionQuote& quote);

// ---------------------------------------------------------------------------
// Day inputs.

struct HourInputs {
    double da_price = 0;   // EUR/MWh, same price for both trade directions
    double gas_price = 0;  // EUR/MWh
    Demands demands;
    TradingSession session;  // carries the hour's mu/sigma and marginal cost
    OptionQuote quote;       // option values and sell/buy probabilities
};

struct DayInputs {
    std::vector<HourInputs> hours;  // exactly 24
    std::array<std::vector<PriceCombination>, 6> combinations;  // per slice
    int bp_max = 10;  // MW cap on each balancing-power bid
};

enum class MarketSubset { kDa, kDaId, kDaBp, kDaIdBp };

inline bool subset_has_id(MarketSubset s) {
    return s == MarketSubset::kDaId || s == MarketSubset::kDaIdBp;
}
inline bool subset_has_bp(MarketSubset s) {
    return s == MarketSubset::kDaBp || s == MarketSubset::kDaIdBp;
}

// How optimize_slice picks the best price combination: solve one MILP per
// combination and take the explicit minimum, or build the single MILP that
// selects the combination through an indicator binary and a Big-M bound on
// the per-combination cost. Both give the same optimal value; the explicit
// minimum also fixes tie-breaking (lowest combination index).
enum class SliceMethod { kExplicitMin, kBigM };

struct SolveSettings {
    MarketSubset subset = MarketSubset::kDaIdBp;
    SliceMethod method = SliceMethod::kExplicitMin;
    opt::MipOptions mip{1e-9, 0, opt::kInf};
};

// ---------------------------------------------------------------------------
// Subproblem: the MILP for one (slice, combination).
//
// Variables: integer bp_plus/bp_minus shared over the slice; per hour and
// acceptance branch one set of day-ahead volumes with an exclusivity binary
// and intraday blocks bounded by the hour's flexible capacity (trading
// recourse never anticipates the intraday or request outcome); per hour and
// scenario a full dispatch block whose electricity balance couples dispatch
// with the market position under the scenario's activation flags. All 16
// scenarios keep their constraints even at probability zero. A direction
// whose acceptance probability is zero can never earn revenue, so its bid
// variable is pinned to zero.

struct SubproblemModel {
    opt::Model model;
    int bp_plus = -1, bp_minus = -1;
    // [hour in slice][branch], branch = a_plus*2 + a_minus
    std::array<std::array<int, 4>, 4> da_sell{}, da_buy{}, lambda_da{},
        id_sell{}, id_buy{};
    // [hour in slice][scenario]
    std::array<std::array<DispatchBlock, 16>, 4> blocks;
    std::array<std::array<Scenario, 16>, 4> scenarios;
    std::array<double, 4> big_m_da{};
};

SubproblemModel build_subproblem(int slice, const PriceCombination& combination,
                                 const DayInputs& day,
                                 const EnergySystem& system,
                                 const SolveSettings& settings = {});

// ---------------------------------------------------------------------------
// Results.

struct OpexBreakdown {
    double gas_cost = 0;
    double r_bp = 0;
    double r_da = 0;
    double r_id = 0;
};

struct BranchVolumes {
    double da_sell = 0, da_buy = 0;
    double id_sell = 0, id_buy = 0;
    int lambda_da = 0;
};

struct SliceSchedule {
    int slice = 0;
    int combination_index = -1;
    PriceCombination combination;
    int bp_plus = 0, bp_minus = 0;
    std::array<std::array<BranchVolumes, 4>, 4> volumes{};     // [hour][branch]
    std::array<std::array<DispatchResult, 16>, 4> dispatch{};  // [hour][scenario]
    std::array<std::array<Scenario, 16>, 4> scenarios{};       // [hour][scenario]
    double expected_opex = 0;  // EUR over the four hours
    OpexBreakdown breakdown;   // expectations, same sign convention as opex
};

struct BidSchedule {
    std::vector<SliceSchedule> slices;
    double expected_opex = 0;
    OpexBreakdown breakdown;
};

// Minimum over the slice's price combinations (ties to the lowest index).
// Throws MultimarketError when every combination is infeasible (the site
// demand is unservable) or the solver gives up.
SliceSchedule optimize_slice(int slice, const DayInputs& day,
                             const EnergySystem& system,
                             const SolveSettings& settings = {});

// Six independent slices concatenated; expectations summed.
BidSchedule optimize_day(const DayInputs& day, const EnergySystem& system,
                         const SolveSettings& settings = {});

// ---------------------------------------------------------------------------
// Solver-independent re-evaluation of a schedule: recomputes the expected
// operational cost from the stored bids, volumes, and dispatches, and checks
// every scenario's balances and unit limits. Inconsistency and infeasibility
// are reported, not thrown.

struct EvaluationReport {
    double recomputed_opex = 0;
    double claimed_opex = 0;
    bool consistent = true;  // |recomputed - claimed| <= tolerance
    bool feasible = true;
    double max_violation = 0;
    std::string message;  // first defect found, empty when clean
};

EvaluationReport evaluate_schedule(const BidSchedule& schedule,
                                   const DayInputs& day,
                                   const EnergySystem& system,
                                   double tolerance = 1e-6);

}  // namespace flexbid
