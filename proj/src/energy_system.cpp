#include "flexbid/energy_system.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "flexbid/stats.hpp"

namespace flexbid {

namespace {

using opt::Model;
using opt::Sense;
using opt::SolveStatus;
using opt::Solution;
using opt::Term;
using opt::VarKind;

bool produces_heat(const UnitSpec& u) {
    return u.kind == UnitKind::kBoiler || u.kind == UnitKind::kElectrodeBoiler;
}

bool is_chiller(const UnitSpec& u) {
    return u.kind == UnitKind::kCompressionChiller ||
           u.kind == UnitKind::kAbsorptionChiller;
}

// Input draw of a unit as (per-output, per-on) coefficients.
double input_per_output(const UnitSpec& u) { return u.alpha; }

double chp_capacity(const EnergySystem& system) {
    double cap = 0;
    for (const UnitSpec& u : system.units)
        if (u.kind == UnitKind::kChp) cap += u.capacity;
    return cap;
}

// Crude per-product supply ceilings used only to name the violated product
// in infeasibility errors.
std::string blaming_product(const EnergySystem& system, const Demands& d,
                            double grid) {
    double heat_cap = 0, cool_cap = 0;
    for (const UnitSpec& u : system.units) {
        if (produces_heat(u)) heat_cap += u.capacity;
        if (u.kind == UnitKind::kChp) heat_cap += u.heat_ratio * u.capacity;
        if (is_chiller(u)) cool_cap += u.capacity;
    }
    if (d.heat > heat_cap + 1e-9) return "heat";
    if (d.cool > cool_cap + 1e-9) return "cooling";
    if (d.el - grid > chp_capacity(system) + 1e-9) return "electricity";
    return "coupled demands";
}

}  // namespace

void check_system(const EnergySystem& system) {
    std::set<std::string> seen;
    for (const UnitSpec& u : system.units) {
        if (u.id.empty())
            throw std::invalid_argument("unit with empty id");
        if (!seen.insert(u.id).second)
            throw std::invalid_argument("duplicate unit id '" + u.id + "'");
        if (!(u.capacity > 0))
            throw std::invalid_argument("unit '" + u.id +
                                        "': capacity must be positive");
        if (!(u.alpha > 0))
            throw std::invalid_argument("unit '" + u.id +
                                        "': alpha must be positive");
        if (u.beta < 0)
            throw std::invalid_argument("unit '" + u.id +
                                        "': beta must be nonnegative");
        if (u.min_part_load < 0 || u.min_part_load >= 1)
            throw std::invalid_argument("unit '" + u.id +
                                        "': min_part_load must lie in [0,1)");
        if (u.kind != UnitKind::kChp && u.heat_ratio != 0)
            throw std::invalid_argument("unit '" + u.id +
                                        "': heat_ratio applies to chp only");
        if (u.heat_ratio < 0)
            throw std::invalid_argument("unit '" + u.id +
                                        "': heat_ratio must be nonnegative");
    }
}

DispatchBlock add_dispatch_block(Model& model, const EnergySystem& system,
                                 double heat_demand, double cool_demand,
                                 const std::string& prefix) {
    DispatchBlock block;
    std::vector<Term> heat_balance, cool_balance, gas_draw;

    for (const UnitSpec& u : system.units) {
        const std::string base = prefix + u.id;
        const int x = model.add_var(base + ".out", 0, u.capacity);
        block.output_vars.push_back(x);
        int on = -1;
        if (u.min_part_load > 0 || u.beta > 0) {
            on = model.add_var(base + ".on", 0, 1, VarKind::kBinary);
            model.add_constraint({{x, 1}, {on, -u.capacity}}, Sense::kLe, 0,
                                 base + ".cap");
            if (u.min_part_load > 0)
                model.add_constraint({{x, 1}, {on, -u.min_part_load * u.capacity}},
                                     Sense::kGe, 0, base + ".mpl");
        }
        block.on_vars.push_back(on);

        const double a = input_per_output(u);
        switch (u.kind) {
            case UnitKind::kBoiler:
                heat_balance.push_back({x, 1});
                gas_draw.push_back({x, a});
                if (on >= 0) gas_draw.push_back({on, u.beta});
                break;
            case UnitKind::kElectrodeBoiler:
                heat_balance.push_back({x, 1});
                block.el_terms.push_back({x, -a});
                if (on >= 0) block.el_terms.push_back({on, -u.beta});
                break;
            case UnitKind::kChp:
                block.el_terms.push_back({x, 1});
                if (u.heat_ratio > 0) heat_balance.push_back({x, u.heat_ratio});
                gas_draw.push_back({x, a});
                if (on >= 0) gas_draw.push_back({on, u.beta});
                break;
            case UnitKind::kCompressionChiller:
                cool_balance.push_back({x, 1});
                block.el_terms.push_back({x, -a});
                if (on >= 0) block.el_terms.push_back({on, -u.beta});
                break;
            case UnitKind::kAbsorptionChiller:
                cool_balance.push_back({x, 1});
                heat_balance.push_back({x, -a});
                if (on >= 0) heat_balance.push_back({on, -u.beta});
                break;
        }
    }

    block.gas_var = model.add_var(prefix + "gas", 0, opt::kInf);
    std::vector<Term> gas_link = gas_draw;
    gas_link.push_back({block.gas_var, -1});
    model.add_constraint(std::move(gas_link), Sense::kEq, 0, prefix + "gas_link");
    // Surplus heat and cooling may be vented, so both balances are one-sided.
    // A balance with no producing units is kept only when it carries a demand
    // (it is then infeasible and reported as such).
    if (!heat_balance.empty() || heat_demand > 0)
        model.add_constraint(std::move(heat_balance), Sense::kGe, heat_demand,
                             prefix + "heat");
    if (!cool_balance.empty() || cool_demand > 0)
        model.add_constraint(std::move(cool_balance), Sense::kGe, cool_demand,
                             prefix + "cool");
    return block;
}

DispatchResult extract_dispatch(const EnergySystem& system,
                                const DispatchBlock& block, const Solution& sol,
                                double gas_price) {
    DispatchResult result;
    for (size_t i = 0; i < system.units.size(); ++i) {
        const UnitSpec& u = system.units[i];
        UnitDispatch d;
        d.id = u.id;
        d.output = sol.values[block.output_vars[i]];
        d.on = block.on_vars[i] >= 0 ? sol.values[block.on_vars[i]] > 0.5
                                     : d.output > 1e-9;
        const double draw =
            u.alpha * d.output + (d.on && block.on_vars[i] >= 0 ? u.beta : 0.0);
        switch (u.kind) {
            case UnitKind::kBoiler:
                d.heat = d.output;
                d.gas = draw;
                break;
            case UnitKind::kElectrodeBoiler:
                d.heat = d.output;
                d.el = -draw;
                break;
            case UnitKind::kChp:
                d.el = d.output;
                d.heat = u.heat_ratio * d.output;
                d.gas = draw;
                break;
            case UnitKind::kCompressionChiller:
                d.cool = d.output;
                d.el = -draw;
                break;
            case UnitKind::kAbsorptionChiller:
                d.cool = d.output;
                d.heat = -draw;
                break;
        }
        result.gas_purchase += d.gas;
        result.units.push_back(std::move(d));
    }
    result.cost = result.gas_purchase * gas_price;
    return result;
}

DispatchResult dispatch(const EnergySystem& system, const Demands& demands,
                        double net_grid_electricity) {
    check_system(system);
    if (demands.el < 0 || demands.heat < 0 || demands.cool < 0)
        throw std::invalid_argument("dispatch: demands must be nonnegative");

    Model model;
    DispatchBlock block = add_dispatch_block(model, system, demands.heat,
                                             demands.cool, "");
    std::vector<Term> el_balance = block.el_terms;
    model.add_constraint(std::move(el_balance), Sense::kEq,
                         demands.el - net_grid_electricity, "el");
    model.set_objective({{block.gas_var, system.gas_price}});

    const Solution sol = opt::solve_mip(model);
    if (sol.status == SolveStatus::kInfeasible)
        throw DispatchError("dispatch infeasible: " +
                            blaming_product(system, demands, net_grid_electricity));
    if (sol.status != SolveStatus::kOptimal)
        throw DispatchError("dispatch: solver terminated without an optimum");
    return extract_dispatch(system, block, sol, system.gas_price);
}

MarginalCostFit marginal_cost(const EnergySystem& system, double heat_demand,
                              double cool_demand, int sweep_points) {
    check_system(system);
    if (sweep_points < 3)
        throw std::invalid_argument("marginal_cost: sweep needs >= 3 points");
    const double max_el = chp_capacity(system);
    if (!(max_el > 0))
        throw std::invalid_argument(
            "marginal_cost: no electric generation capacity to sweep");

    MarginalCostFit fit;
    std::vector<double> xs, ys;
    for (int i = 0; i < sweep_points; ++i) {
        const double d_el = max_el * i / (sweep_points - 1);
        Demands d;
        d.el = d_el;
        d.heat = heat_demand;
        d.cool = cool_demand;
        DispatchResult r;
        try {
            r = dispatch(system, d);
        } catch (const DispatchError&) {
            throw DispatchError("marginal_cost: sweep infeasible at demand " +
                                std::to_string(d_el) + " MW");
        }
        xs.push_back(d_el);
        ys.push_back(r.cost);
        fit.sweep.emplace_back(d_el, r.cost);
    }
    const LinearFit line = fit_line(xs, ys);
    fit.mc = line.slope;
    fit.intercept = line.intercept;
    fit.r2 = line.r2;
    return fit;
}

FlexCapacity flex_capacity(const EnergySystem& system, const Demands& demands) {
    check_system(system);
    dispatch(system, demands);  // feasibility gate

    auto net_extreme = [&](double sign) {
        Model model;
        DispatchBlock block = add_dispatch_block(model, system, demands.heat,
                                                 demands.cool, "");
        std::vector<Term> obj;
        for (const Term& t : block.el_terms) obj.push_back({t.var, -sign * t.coef});
        model.set_objective(std::move(obj));
        const Solution sol = opt::solve_mip(model);
        if (sol.status != SolveStatus::kOptimal)
            throw DispatchError("flex_capacity: auxiliary solve failed");
        double net = 0;
        for (const Term& t : block.el_terms) net += t.coef * sol.values[t.var];
        return net;
    };
    FlexCapacity flex;
    flex.max_positive = std::max(0.0, net_extreme(+1.0) - demands.el);
    flex.max_negative = std::max(0.0, demands.el - net_extreme(-1.0));
    return flex;
}

}  // namespace flexbid
