#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flexbid/opt_kernel.hpp"

namespace flexbid {

// Conversion units of the site. Each unit turns one input product into a
// primary output (and, for CHP, a coupled heat stream):
//   boiler               gas         -> heat
//   electrode_boiler     electricity -> heat
//   chp                  gas         -> electricity (+ heat_ratio * el)
//   compression_chiller  electricity -> cooling
//   absorption_chiller   heat        -> cooling
enum class UnitKind {
    kBoiler,
    kElectrodeBoiler,
    kChp,
    kCompressionChiller,
    kAbsorptionChiller,
};

struct UnitSpec {
    std::string id;
    UnitKind kind = UnitKind::kBoiler;
    double capacity = 0;       // MW of primary output
    double min_part_load = 0;  // fraction of capacity in [0,1)
    double alpha = 1;          // input MW per MW of primary output
    double beta = 0;           // extra input MW drawn whenever the unit is on
    double heat_ratio = 0;     // chp only: coupled heat MW per MW electricity
};

struct EnergySystem {
    std::vector<UnitSpec> units;
    double gas_price = 0;  // EUR/MWh
};

// Throws std::invalid_argument when a unit violates its invariants
// (capacity > 0, alpha > 0, beta >= 0, min_part_load in [0,1), heat_ratio
// only on chp units, ids nonempty and unique).
void check_system(const EnergySystem& system);

struct Demands {
    double el = 0;    // MW
    double heat = 0;  // MW
    double cool = 0;  // MW
};

// Per-unit operating point. Electricity is signed (generation positive,
// consumption negative); heat is negative for absorption chillers (they
// consume it); gas is the unit's fuel draw.
struct UnitDispatch {
    std::string id;
    bool on = false;
    double output = 0;  // primary product, MW
    double el = 0;
    double heat = 0;
    double cool = 0;
    double gas = 0;
};

struct DispatchResult {
    std::vector<UnitDispatch> units;
    double gas_purchase = 0;  // MW
    double cost = 0;          // EUR/h, gas_purchase * gas_price
};

class DispatchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// One self-contained block of dispatch variables and rows appended to an
// existing model: per-unit output (and commitment binary where min part load
// or idle draw demands one), heat and cooling balances with surplus venting
// allowed, and a gas-purchase variable tied to the units' fuel draw. The
// electricity balance is NOT added; the caller couples net electricity
// (el_terms) with whatever market position applies.
struct DispatchBlock {
    std::vector<int> output_vars;      // per unit
    std::vector<int> on_vars;          // per unit, -1 when always free
    int gas_var = -1;                  // total fuel purchase, MW
    std::vector<opt::Term> el_terms;   // net electricity of the site
};

DispatchBlock add_dispatch_block(opt::Model& model, const EnergySystem& system,
                                 double heat_demand, double cool_demand,
                                 const std::string& prefix);

// Reads one block's operating point out of a solved model.
DispatchResult extract_dispatch(const EnergySystem& system,
                                const DispatchBlock& block,
                                const opt::Solution& sol, double gas_price);

// Gas-cost-minimal operation meeting the demands, with net_grid_electricity
// entering the electricity balance as external supply (so positive grid
// inflow displaces on-site generation one for one). Throws DispatchError
// when no feasible operation exists, naming the violated product when one
// demand alone exceeds buildable supply.
DispatchResult dispatch(const EnergySystem& system, const Demands& demands,
                        double net_grid_electricity = 0);

struct MarginalCostFit {
    double mc = 0;         // EUR/MWh, regression slope
    double intercept = 0;  // EUR/h
    double r2 = 1;
    std::vector<std::pair<double, double>> sweep;  // (el demand MW, cost EUR/h)
};

// Sweeps electricity demand over sweep_points equally spaced levels from zero
// to the total generator capacity (heat and cooling demands held fixed, no
// market exchange) and fits cost against demand by least squares.
// Throws DispatchError naming the demand level if a sweep point is
// infeasible, or std::invalid_argument for degenerate sweeps
// (sweep_points < 3 or no electric generation capacity).
MarginalCostFit marginal_cost(const EnergySystem& system, double heat_demand,
                              double cool_demand, int sweep_points);

struct FlexCapacity {
    double max_positive = 0;  // MW of extra net generation beyond the demands
    double max_negative = 0;  // MW of extra net consumption
};

// Bounds of the site's tradable electric flexibility around the given
// demands, from one maximization and one minimization of net generation
// under the thermal balances.
FlexCapacity flex_capacity(const EnergySystem& system, const Demands& demands);

}  // namespace flexbid
