#include "flexbid/multimarket.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace flexbid {

using opt::Model;
using opt::Sense;
using opt::Solution;
using opt::SolveStatus;
using opt::Term;
using opt::VarKind;

namespace {

constexpr int kHoursPerSlice = 4;
constexpr int kNumSlices = 6;
constexpr int kNumScenarios = 16;
constexpr int kNumBranches = 4;
// Strict-improvement margin: a combination replaces the incumbent only when
// it beats it by more than this, so equal-value ties keep the lowest index.
constexpr double kTieTol = 1e-9;

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(std::string("build_scenarios: ") + what +
                                    " must lie in [0,1]");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void check_day(const DayInputs& day) {
    if (day.hours.size() != 24)
        throw std::invalid_argument("day inputs must cover exactly 24 hours");
    if (day.bp_max < 0)
        throw std::invalid_argument("bp_max must be nonnegative");
}

void check_slice(int slice) {
    if (slice < 0 || slice >= kNumSlices)
        throw std::invalid_argument("slice index must lie in [0,6)");
}

struct HourContext {
    FlexCapacity flex;
    double big_m_da = 0;
};

std::array<HourContext, kHoursPerSlice> slice_context(
    int slice, const DayInputs& day, const EnergySystem& system) {
    double max_el = 0;
    for (const HourInputs& h : day.hours)
        max_el = std::max(max_el, h.demands.el);
    std::array<HourContext, kHoursPerSlice> ctx;
    for (int h = 0; h < kHoursPerSlice; ++h) {
        const HourInputs& hour = day.hours[slice * kHoursPerSlice + h];
        try {
            ctx[h].flex = flex_capacity(system, hour.demands);
        } catch (const DispatchError& e) {
            throw MultimarketError("slice " + std::to_string(slice) + " hour " +
                                   std::to_string(h) +
                                   ": site demand unservable (" + e.what() +
                                   ")");
        }
        // Covers any sensible day-ahead position: full upward flexibility
        // plus buying the day's peak electricity demand plus the largest
        // balancing bid that could be displaced.
        ctx[h].big_m_da = ctx[h].flex.max_positive + max_el + day.bp_max;
    }
    return ctx;
}

Scenario scenario_flags(int a_plus, int a_minus, int m, int r) {
    Scenario s;
    s.a_plus = a_plus;
    s.a_minus = a_minus;
    s.m = m;
    s.r = r;
    s.s_cp_plus = a_plus;
    s.s_cp_minus = a_minus;
    s.s_sell = m == 0 ? 1 : 0;
    s.s_buy = m == 1 ? 1 : 0;
    s.s_ep_plus = (a_plus == 1 && r == 0) ? 1 : 0;
    s.s_ep_minus = (a_minus == 1 && r == 1) ? 1 : 0;
    return s;
}

// Variables and rows shared by both slice methods. Scenario slots are filled
// with activation flags only; probabilities depend on the price combination
// and are set by the caller.
void build_structure(SubproblemModel& sp, int slice, const DayInputs& day,
                     const EnergySystem& system, bool with_id,
                     double bp_plus_ub, double bp_minus_ub,
                     const std::array<HourContext, kHoursPerSlice>& ctx) {
    Model& m = sp.model;
    sp.bp_plus = m.add_var("bp_pos", 0, bp_plus_ub, VarKind::kInteger);
    sp.bp_minus = m.add_var("bp_neg", 0, bp_minus_ub, VarKind::kInteger);
    for (int h = 0; h < kHoursPerSlice; ++h) {
        const int t = slice * kHoursPerSlice + h;
        const HourInputs& hour = day.hours[t];
        sp.big_m_da[h] = ctx[h].big_m_da;
        const std::string th = "t" + std::to_string(t);
        for (int b = 0; b < kNumBranches; ++b) {
            const std::string tb = th + ".b" + std::to_string(b) + ".";
            sp.da_sell[h][b] = m.add_var(tb + "da_sell", 0, opt::kInf);
            sp.da_buy[h][b] = m.add_var(tb + "da_buy", 0, opt::kInf);
            sp.lambda_da[h][b] = m.add_var(tb + "da_dir", 0, 1, VarKind::kBinary);
            sp.id_sell[h][b] = m.add_var(
                tb + "id_sell", 0, with_id ? ctx[h].flex.max_positive : 0.0);
            sp.id_buy[h][b] = m.add_var(
                tb + "id_buy", 0, with_id ? ctx[h].flex.max_negative : 0.0);
            m.add_constraint({{sp.da_sell[h][b], 1.0},
                              {sp.lambda_da[h][b], -ctx[h].big_m_da}},
                             Sense::kLe, 0, tb + "sell_gate");
            m.add_constraint({{sp.da_buy[h][b], 1.0},
                              {sp.lambda_da[h][b], ctx[h].big_m_da}},
                             Sense::kLe, ctx[h].big_m_da, tb + "buy_gate");
        }
        for (int w = 0; w < kNumScenarios; ++w) {
            Scenario& sc = sp.scenarios[h][w];
            sc = scenario_flags((w >> 3) & 1, (w >> 2) & 1, (w >> 1) & 1,
                                w & 1);
            const int b = scenario_branch(sc);
            const std::string tw = th + ".w" + std::to_string(w) + ".";
            sp.blocks[h][w] = add_dispatch_block(m, system, hour.demands.heat,
                                                 hour.demands.cool, tw);
            std::vector<Term> bal = sp.blocks[h][w].el_terms;
            bal.push_back({sp.da_buy[h][b], 1.0});
            bal.push_back({sp.da_sell[h][b], -1.0});
            if (sc.s_buy) bal.push_back({sp.id_buy[h][b], 1.0});
            if (sc.s_sell) bal.push_back({sp.id_sell[h][b], -1.0});
            if (sc.s_ep_minus) bal.push_back({sp.bp_minus, 1.0});
            if (sc.s_ep_plus) bal.push_back({sp.bp_plus, -1.0});
            m.add_constraint(std::move(bal), Sense::kEq, hour.demands.el,
                             tw + "el_balance");
        }
    }
}

// Expected-cost objective for one price combination; also stamps the
// combination's probabilities into the scenario slots.
void set_expected_objective(SubproblemModel& sp, int slice,
                            const PriceCombination& comb,
                            const DayInputs& day) {
    std::vector<Term> obj;
    auto push = [&obj](int var, double coef) {
        if (coef != 0.0) obj.push_back({var, coef});
    };
    double bp_plus_coef = 0, bp_minus_coef = 0;
    for (int h = 0; h < kHoursPerSlice; ++h) {
        const HourInputs& hour = day.hours[slice * kHoursPerSlice + h];
        sp.scenarios[h] = build_scenarios(comb, hour.quote);
        double p_acc[kNumBranches] = {0, 0, 0, 0};
        double id_sell_coef[kNumBranches] = {0, 0, 0, 0};
        double id_buy_coef[kNumBranches] = {0, 0, 0, 0};
        for (int w = 0; w < kNumScenarios; ++w) {
            const Scenario& sc = sp.scenarios[h][w];
            const double pi = sc.prob;
            const int b = scenario_branch(sc);
            push(sp.blocks[h][w].gas_var, pi * hour.gas_price);
            bp_plus_coef -= pi * (sc.s_cp_plus * comb.cp_plus +
                                  sc.s_ep_plus * comb.ep_plus);
            bp_minus_coef -= pi * (sc.s_cp_minus * comb.cp_minus +
                                   sc.s_ep_minus * comb.ep_minus);
            p_acc[b] += pi;
            id_sell_coef[b] +=
                pi * (hour.quote.opt_sell + sc.s_sell * hour.session.mc);
            id_buy_coef[b] +=
                pi * (hour.quote.opt_buy - sc.s_buy * hour.session.mc);
        }
        for (int b = 0; b < kNumBranches; ++b) {
            push(sp.da_sell[h][b], -hour.da_price * p_acc[b]);
            push(sp.da_buy[h][b], hour.da_price * p_acc[b]);
            push(sp.id_sell[h][b], -id_sell_coef[b]);
            push(sp.id_buy[h][b], -id_buy_coef[b]);
        }
    }
    push(sp.bp_plus, bp_plus_coef);
    push(sp.bp_minus, bp_minus_coef);
    sp.model.set_objective(std::move(obj));
}

SubproblemModel build_subproblem_ctx(
    int slice, const PriceCombination& comb, const DayInputs& day,
    const EnergySystem& system, const SolveSettings& settings,
    const std::array<HourContext, kHoursPerSlice>& ctx) {
    SubproblemModel sp;
    const bool with_bp = subset_has_bp(settings.subset);
    // A direction that can never be accepted earns nothing; pinning its bid
    // removes it from the balances without touching the value.
    const double bp_plus_ub =
        (with_bp && comb.acc_prob_plus > 0) ? day.bp_max : 0.0;
    const double bp_minus_ub =
        (with_bp && comb.acc_prob_minus > 0) ? day.bp_max : 0.0;
    build_structure(sp, slice, day, system, subset_has_id(settings.subset),
                    bp_plus_ub, bp_minus_ub, ctx);
    set_expected_objective(sp, slice, comb, day);
    return sp;
}

SliceSchedule extract_schedule(int slice, int combo_index,
                               const PriceCombination& comb,
                               const SubproblemModel& sp, const Solution& sol,
                               const DayInputs& day,
                               const EnergySystem& system) {
    SliceSchedule ss;
    ss.slice = slice;
    ss.combination_index = combo_index;
    ss.combination = comb;
    ss.bp_plus = static_cast<int>(std::lround(sol.values[sp.bp_plus]));
    ss.bp_minus = static_cast<int>(std::lround(sol.values[sp.bp_minus]));
    ss.scenarios = sp.scenarios;
    ss.expected_opex = sol.objective;
    for (int h = 0; h < kHoursPerSlice; ++h) {
        const HourInputs& hour = day.hours[slice * kHoursPerSlice + h];
        for (int b = 0; b < kNumBranches; ++b) {
            BranchVolumes& v = ss.volumes[h][b];
            // + 0.0 turns a negative zero from the solver into plain zero
            v.da_sell = sol.values[sp.da_sell[h][b]] + 0.0;
            v.da_buy = sol.values[sp.da_buy[h][b]] + 0.0;
            v.id_sell = sol.values[sp.id_sell[h][b]] + 0.0;
            v.id_buy = sol.values[sp.id_buy[h][b]] + 0.0;
            v.lambda_da = sol.values[sp.lambda_da[h][b]] > 0.5 ? 1 : 0;
        }
        for (int w = 0; w < kNumScenarios; ++w) {
            ss.dispatch[h][w] =
                extract_dispatch(system, sp.blocks[h][w], sol, hour.gas_price);
            const Scenario& sc = ss.scenarios[h][w];
            const BranchVolumes& v = ss.volumes[h][scenario_branch(sc)];
            const double pi = sc.prob;
            ss.breakdown.gas_cost += pi * ss.dispatch[h][w].cost;
            ss.breakdown.r_bp +=
                pi * (ss.bp_plus * (sc.s_cp_plus * comb.cp_plus +
                                    sc.s_ep_plus * comb.ep_plus) +
                      ss.bp_minus * (sc.s_cp_minus * comb.cp_minus +
                                     sc.s_ep_minus * comb.ep_minus));
            ss.breakdown.r_da += pi * hour.da_price * (v.da_sell - v.da_buy);
            ss.breakdown.r_id +=
                pi * (v.id_sell *
                          (hour.quote.opt_sell + sc.s_sell * hour.session.mc) +
                      v.id_buy *
                          (hour.quote.opt_buy - sc.s_buy * hour.session.mc));
        }
    }
    return ss;
}

SliceSchedule optimize_slice_bigm(
    int slice, const DayInputs& day, const EnergySystem& system,
    const SolveSettings& settings,
    const std::array<HourContext, kHoursPerSlice>& ctx) {
    const std::vector<PriceCombination>& combos = day.combinations[slice];
    const bool with_bp = subset_has_bp(settings.subset);
    const std::size_t n_combos = with_bp ? combos.size() : 1;

    SubproblemModel sp;
    build_structure(sp, slice, day, system, subset_has_id(settings.subset),
                    with_bp ? day.bp_max : 0.0, with_bp ? day.bp_max : 0.0,
                    ctx);
    Model& m = sp.model;

    double gas_cap = 0;
    for (const UnitSpec& u : system.units)
        gas_cap += u.alpha * u.capacity + u.beta;
    double bp_span = 0;
    for (std::size_t c = 0; c < n_combos; ++c)
        bp_span = std::max(
            bp_span, std::fabs(combos[c].cp_plus) + std::fabs(combos[c].ep_plus) +
                         std::fabs(combos[c].cp_minus) +
                         std::fabs(combos[c].ep_minus));

    std::vector<int> pick(n_combos);
    std::vector<Term> pick_row;
    for (std::size_t c = 0; c < n_combos; ++c) {
        pick[c] = m.add_var("pick.c" + std::to_string(c), 0, 1, VarKind::kBinary);
        pick_row.push_back({pick[c], 1.0});
    }
    m.add_constraint(std::move(pick_row), Sense::kEq, 1, "pick.one");

    std::array<int, kHoursPerSlice> opex_var{};
    std::array<double, kHoursPerSlice> opex_bound{};
    for (int h = 0; h < kHoursPerSlice; ++h) {
        const int t = slice * kHoursPerSlice + h;
        const HourInputs& hour = day.hours[t];
        opex_var[h] = m.add_var("opex.t" + std::to_string(t), -opt::kInf,
                                opt::kInf);
        // Bound on the magnitude of one hour's cost under any combination;
        // the row relaxation below needs twice this (worst cost spread).
        opex_bound[h] =
            std::fabs(hour.gas_price) * gas_cap + day.bp_max * bp_span +
            2 * std::fabs(hour.da_price) * ctx[h].big_m_da +
            ctx[h].flex.max_positive *
                (std::fabs(hour.quote.opt_sell) + std::fabs(hour.session.mc)) +
            ctx[h].flex.max_negative *
                (std::fabs(hour.quote.opt_buy) + std::fabs(hour.session.mc)) +
            10.0;
    }

    for (std::size_t c = 0; c < n_combos; ++c) {
        for (int h = 0; h < kHoursPerSlice; ++h) {
            const int t = slice * kHoursPerSlice + h;
            const HourInputs& hour = day.hours[t];
            const std::array<Scenario, 16> scen =
                build_scenarios(combos[c], hour.quote);
            std::vector<Term> row;
            row.push_back({opex_var[h], 1.0});
            double bp_plus_coef = 0, bp_minus_coef = 0;
            double p_acc[kNumBranches] = {0, 0, 0, 0};
            double id_sell_coef[kNumBranches] = {0, 0, 0, 0};
            double id_buy_coef[kNumBranches] = {0, 0, 0, 0};
            for (int w = 0; w < kNumScenarios; ++w) {
                const Scenario& sc = scen[w];
                const double pi = sc.prob;
                const int b = scenario_branch(sc);
                if (pi * hour.gas_price != 0.0)
                    row.push_back(
                        {sp.blocks[h][w].gas_var, -pi * hour.gas_price});
                bp_plus_coef += pi * (sc.s_cp_plus * combos[c].cp_plus +
                                      sc.s_ep_plus * combos[c].ep_plus);
                bp_minus_coef += pi * (sc.s_cp_minus * combos[c].cp_minus +
                                       sc.s_ep_minus * combos[c].ep_minus);
                p_acc[b] += pi;
                id_sell_coef[b] +=
                    pi * (hour.quote.opt_sell + sc.s_sell * hour.session.mc);
                id_buy_coef[b] +=
                    pi * (hour.quote.opt_buy - sc.s_buy * hour.session.mc);
            }
            for (int b = 0; b < kNumBranches; ++b) {
                if (hour.da_price * p_acc[b] != 0.0) {
                    row.push_back(
                        {sp.da_sell[h][b], hour.da_price * p_acc[b]});
                    row.push_back(
                        {sp.da_buy[h][b], -hour.da_price * p_acc[b]});
                }
                if (id_sell_coef[b] != 0.0)
                    row.push_back({sp.id_sell[h][b], id_sell_coef[b]});
                if (id_buy_coef[b] != 0.0)
                    row.push_back({sp.id_buy[h][b], id_buy_coef[b]});
            }
            if (bp_plus_coef != 0.0)
                row.push_back({sp.bp_plus, bp_plus_coef});
            if (bp_minus_coef != 0.0)
                row.push_back({sp.bp_minus, bp_minus_coef});
            const double big = 2 * opex_bound[h];
            row.push_back({pick[c], -big});
            m.add_constraint(std::move(row), Sense::kGe, -big,
                             "opex.t" + std::to_string(t) + ".c" +
                                 std::to_string(c));
        }
    }
    std::vector<Term> obj;
    for (int h = 0; h < kHoursPerSlice; ++h)
        obj.push_back({opex_var[h], 1.0});
    m.set_objective(std::move(obj));

    const Solution sol = opt::solve_mip(m, settings.mip);
    if (sol.status == SolveStatus::kInfeasible)
        throw MultimarketError("slice " + std::to_string(slice) +
                               ": every price combination is infeasible");
    if (sol.status == SolveStatus::kUnbounded)
        throw MultimarketError("slice " + std::to_string(slice) +
                               ": model unbounded; check the price inputs");
    if (sol.status != SolveStatus::kOptimal)
        throw MultimarketError("slice " + std::to_string(slice) +
                               ": solver gave up before optimality");
    std::size_t chosen = 0;
    for (std::size_t c = 0; c < n_combos; ++c)
        if (sol.values[pick[c]] > 0.5) {
            chosen = c;
            break;
        }
    for (int h = 0; h < kHoursPerSlice; ++h) {
        const HourInputs& hour = day.hours[slice * kHoursPerSlice + h];
        sp.scenarios[h] = build_scenarios(combos[chosen], hour.quote);
    }
    return extract_schedule(slice, static_cast<int>(chosen), combos[chosen],
                            sp, sol, day, system);
}

}  // namespace

std::array<Scenario, 16> build_scenarios(const PriceCombination& comb,
                                         const OptionQuote& quote) {
    check_probability(comb.acc_prob_plus, "acc_prob_plus");
    check_probability(comb.acc_prob_minus, "acc_prob_minus");
    check_probability(comb.req_prob_plus, "req_prob_plus");
    check_probability(comb.req_prob_minus, "req_prob_minus");
    check_probability(quote.p_sell, "p_sell");
    check_probability(quote.p_buy, "p_buy");
    std::array<Scenario, 16> out;
    for (int w = 0; w < kNumScenarios; ++w) {
        const int a_plus = (w >> 3) & 1;
        const int a_minus = (w >> 2) & 1;
        const int m = (w >> 1) & 1;
        const int r = w & 1;
        Scenario s = scenario_flags(a_plus, a_minus, m, r);
        const double p_acc =
            (a_plus ? comb.acc_prob_plus : 1 - comb.acc_prob_plus) *
            (a_minus ? comb.acc_prob_minus : 1 - comb.acc_prob_minus);
        const double p_id = m == 0 ? quote.p_sell : quote.p_buy;
        double p_req;
        if (a_plus == 1 && a_minus == 1) {
            const double tot = comb.req_prob_plus + comb.req_prob_minus;
            p_req = tot > 0
                        ? (r == 0 ? comb.req_prob_plus : comb.req_prob_minus) /
                              tot
                        : 0.5;
        } else if (a_plus == 1) {
            p_req = r == 0 ? comb.req_prob_plus : 1 - comb.req_prob_plus;
        } else if (a_minus == 1) {
            p_req = r == 1 ? comb.req_prob_minus : 1 - comb.req_prob_minus;
        } else {
            p_req = 0.5;
        }
        s.prob = p_acc * p_id * p_req;
        out[scenario_index(a_plus, a_minus, m, r)] = s;
    }
    return out;
}

SubproblemModel build_subproblem(int slice, const PriceCombination& comb,
                                 const DayInputs& day,
                                 const EnergySystem& system,
                                 const SolveSettings& settings) {
    check_day(day);
    check_slice(slice);
    check_system(system);
    return build_subproblem_ctx(slice, comb, day, system, settings,
                                slice_context(slice, day, system));
}

SliceSchedule optimize_slice(int slice, const DayInputs& day,
                             const EnergySystem& system,
                             const SolveSettings& settings) {
    check_day(day);
    check_slice(slice);
    check_system(system);
    const std::vector<PriceCombination>& combos = day.combinations[slice];
    if (combos.empty())
        throw MultimarketError("slice " + std::to_string(slice) +
                               ": no price combinations to choose from");
    const auto ctx = slice_context(slice, day, system);
    if (settings.method == SliceMethod::kBigM)
        return optimize_slice_bigm(slice, day, system, settings, ctx);

    // Without balancing power the combination only enters through bid prices
    // that never pay out, so every subproblem has the same value; solving the
    // first one alone already realizes the lowest-index tie rule.
    const std::size_t n_combos =
        subset_has_bp(settings.subset) ? combos.size() : 1;

    SliceSchedule best;
    double best_value = 0;
    bool have_best = false;
    for (std::size_t c = 0; c < n_combos; ++c) {
        SubproblemModel sp =
            build_subproblem_ctx(slice, combos[c], day, system, settings, ctx);
        if (have_best) {
            const Solution relax = opt::solve_lp(sp.model);
            if (relax.status == SolveStatus::kInfeasible) continue;
            if (relax.status == SolveStatus::kUnbounded)
                throw MultimarketError(
                    "slice " + std::to_string(slice) +
                    ": model unbounded; check the price inputs");
            if (relax.status == SolveStatus::kOptimal &&
                relax.objective >= best_value - kTieTol)
                continue;  // bound cannot strictly beat the incumbent
        }
        const Solution sol = opt::solve_mip(sp.model, settings.mip);
        if (sol.status == SolveStatus::kInfeasible) continue;
        if (sol.status == SolveStatus::kUnbounded)
            throw MultimarketError("slice " + std::to_string(slice) +
                                   ": model unbounded; check the price inputs");
        if (sol.status != SolveStatus::kOptimal)
            throw MultimarketError("slice " + std::to_string(slice) +
                                   ": solver gave up before optimality");
        if (!have_best || sol.objective < best_value - kTieTol) {
            best_value = sol.objective;
            best = extract_schedule(slice, static_cast<int>(c), combos[c], sp,
                                    sol, day, system);
            have_best = true;
        }
    }
    if (!have_best)
        throw MultimarketError("slice " + std::to_string(slice) +
                               ": every price combination is infeasible");
    return best;
}

BidSchedule optimize_day(const DayInputs& day, const EnergySystem& system,
                         const SolveSettings& settings) {
    check_day(day);
    BidSchedule bid;
    for (int s = 0; s < kNumSlices; ++s) {
        bid.slices.push_back(optimize_slice(s, day, system, settings));
        const SliceSchedule& ss = bid.slices.back();
        bid.expected_opex += ss.expected_opex;
        bid.breakdown.gas_cost += ss.breakdown.gas_cost;
        bid.breakdown.r_bp += ss.breakdown.r_bp;
        bid.breakdown.r_da += ss.breakdown.r_da;
        bid.breakdown.r_id += ss.breakdown.r_id;
    }
    return bid;
}

EvaluationReport evaluate_schedule(const BidSchedule& schedule,
                                   const DayInputs& day,
                                   const EnergySystem& system,
                                   double tolerance) {
    check_day(day);
    check_system(system);
    EvaluationReport rep;
    rep.claimed_opex = schedule.expected_opex;
    double total = 0;
    auto note = [&rep, tolerance](double violation, auto&& describe) {
        if (violation > rep.max_violation) rep.max_violation = violation;
        if (violation > tolerance && rep.message.empty())
            rep.message = describe();
    };
    for (const SliceSchedule& ss : schedule.slices) {
        const std::string at_slice = "slice " + std::to_string(ss.slice);
        if (ss.slice < 0 || ss.slice >= kNumSlices) {
            note(1.0, [&] { return at_slice + ": slice index out of range"; });
            continue;
        }
        note(std::max({0.0, -double(ss.bp_plus), -double(ss.bp_minus),
                       double(ss.bp_plus) - day.bp_max,
                       double(ss.bp_minus) - day.bp_max}),
             [&] {
                 return at_slice + ": balancing bid outside [0, " +
                        std::to_string(day.bp_max) + "]";
             });
        for (int h = 0; h < kHoursPerSlice; ++h) {
            const int t = ss.slice * kHoursPerSlice + h;
            const HourInputs& hour = day.hours[t];
            const std::string at_hour = at_slice + " hour " + std::to_string(t);
            std::array<Scenario, 16> scen;
            try {
                scen = build_scenarios(ss.combination, hour.quote);
            } catch (const std::invalid_argument& e) {
                note(1.0, [&] { return at_hour + ": " + e.what(); });
                continue;
            }
            for (int b = 0; b < kNumBranches; ++b) {
                const BranchVolumes& v = ss.volumes[h][b];
                note(std::max({0.0, -v.da_sell, -v.da_buy, -v.id_sell,
                               -v.id_buy}),
                     [&] {
                         return at_hour + " branch " + std::to_string(b) +
                                ": negative trade volume";
                     });
                note(std::min(std::max(v.da_sell, 0.0),
                              std::max(v.da_buy, 0.0)),
                     [&] {
                         return at_hour + " branch " + std::to_string(b) +
                                ": day-ahead sell and buy both positive";
                     });
            }
            for (int w = 0; w < kNumScenarios; ++w) {
                const Scenario& sc = scen[w];
                const DispatchResult& d = ss.dispatch[h][w];
                const BranchVolumes& v = ss.volumes[h][scenario_branch(sc)];
                const std::string at =
                    at_hour + " scenario " + std::to_string(w);
                if (d.units.size() != system.units.size()) {
                    note(1.0, [&] {
                        return at + ": dispatch does not match the unit list";
                    });
                    continue;
                }
                double el_net = 0, heat = 0, cool = 0, gas = 0;
                for (std::size_t i = 0; i < system.units.size(); ++i) {
                    const UnitSpec& u = system.units[i];
                    const UnitDispatch& ud = d.units[i];
                    const bool committed = u.min_part_load > 0 || u.beta > 0;
                    note(std::max({0.0, -ud.output, ud.output - u.capacity}),
                         [&] {
                             return at + " unit " + u.id +
                                    ": output outside [0, capacity]";
                         });
                    if (!ud.on)
                        note(std::fabs(ud.output), [&] {
                            return at + " unit " + u.id + ": output while off";
                        });
                    else if (u.min_part_load > 0)
                        note(std::max(0.0, u.min_part_load * u.capacity -
                                               ud.output),
                             [&] {
                                 return at + " unit " + u.id +
                                        ": output below minimum part load";
                             });
                    const double draw =
                        u.alpha * ud.output + (ud.on && committed ? u.beta : 0.0);
                    double exp_el = 0, exp_heat = 0, exp_cool = 0, exp_gas = 0;
                    switch (u.kind) {
                        case UnitKind::kBoiler:
                            exp_heat = ud.output;
                            exp_gas = draw;
                            break;
                        case UnitKind::kElectrodeBoiler:
                            exp_heat = ud.output;
                            exp_el = -draw;
                            break;
                        case UnitKind::kChp:
                            exp_el = ud.output;
                            exp_heat = u.heat_ratio * ud.output;
                            exp_gas = draw;
                            break;
                        case UnitKind::kCompressionChiller:
                            exp_cool = ud.output;
                            exp_el = -draw;
                            break;
                        case UnitKind::kAbsorptionChiller:
                            exp_cool = ud.output;
                            exp_heat = -draw;
                            break;
                    }
                    note(std::max({std::fabs(ud.el - exp_el),
                                   std::fabs(ud.heat - exp_heat),
                                   std::fabs(ud.cool - exp_cool),
                                   std::fabs(ud.gas - exp_gas)}),
                         [&] {
                             return at + " unit " + u.id +
                                    ": stored flows disagree with the unit "
                                    "model";
                         });
                    el_net += ud.el;
                    heat += ud.heat;
                    cool += ud.cool;
                    gas += ud.gas;
                }
                note(std::fabs(d.gas_purchase - gas), [&] {
                    return at + ": gas purchase does not match unit draws";
                });
                note(std::fabs(d.cost - d.gas_purchase * hour.gas_price),
                     [&] {
                         return at +
                                ": stored cost does not match the gas price";
                     });
                const double lhs = el_net + v.da_buy + sc.s_buy * v.id_buy +
                                   sc.s_ep_minus * ss.bp_minus - v.da_sell -
                                   sc.s_sell * v.id_sell -
                                   sc.s_ep_plus * ss.bp_plus;
                note(std::fabs(lhs - hour.demands.el), [&] {
                    return at + ": electricity balance violated";
                });
                note(std::max(0.0, hour.demands.heat - heat),
                     [&] { return at + ": heat demand unmet"; });
                note(std::max(0.0, hour.demands.cool - cool),
                     [&] { return at + ": cooling demand unmet"; });
                const double r_bp =
                    ss.bp_plus * (sc.s_cp_plus * ss.combination.cp_plus +
                                  sc.s_ep_plus * ss.combination.ep_plus) +
                    ss.bp_minus * (sc.s_cp_minus * ss.combination.cp_minus +
                                   sc.s_ep_minus * ss.combination.ep_minus);
                const double r_da =
                    hour.da_price * (v.da_sell - v.da_buy);
                const double r_id =
                    v.id_sell *
                        (hour.quote.opt_sell + sc.s_sell * hour.session.mc) +
                    v.id_buy *
                        (hour.quote.opt_buy - sc.s_buy * hour.session.mc);
                total += sc.prob * (d.gas_purchase * hour.gas_price - r_bp -
                                    r_da - r_id);
            }
        }
    }
    rep.recomputed_opex = total;
    rep.feasible = rep.max_violation <= tolerance;
    rep.consistent =
        std::fabs(rep.recomputed_opex - rep.claimed_opex) <= tolerance;
    if (!rep.consistent && rep.message.empty())
        rep.message = "recomputed expected cost " + fmt(rep.recomputed_opex) +
                      " differs from stored " + fmt(rep.claimed_opex);
    return rep;
}

}  // namespace flexbid
