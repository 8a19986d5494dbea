#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexbid/binomial.hpp"
#include "flexbid/energy_system.hpp"
#include "flexbid/market_data.hpp"
#include "flexbid/multimarket.hpp"

namespace flexbid {

// Configuration or file-format problems (bad JSON, missing files, values out
// of range, misaligned series). Mapped to exit code 2 by the CLI.
class PipelineError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitInsufficientData = 3;
inline constexpr int kExitInfeasible = 4;
inline constexpr int kExitValidation = 5;

struct RunConfig {
    std::string forecasts;
    std::string spot;
    std::string bp_auctions;
    std::string demands;
    std::string units;
    std::string parameters = "parameters.json";
    std::string schedule = "schedule.json";
    int k = 4;
    std::vector<double> capacity_targets{0.8, 0.5, 0.2};
    std::vector<double> energy_targets{0.8, 0.6, 0.4, 0.2};
    double sigma_multiplier = 1.0;  // allowed range [0.5, 6.0]
    int bp_max = 10;
    int n_steps = 64;
    double mip_abs_gap = 1e-9;
    double mip_time_limit_s = 0;  // 0 = no limit
    std::uint64_t seed = 1;
    MarketSubset subset = MarketSubset::kDaIdBp;
    int weeks = 4;  // typical weeks extracted from the demand history
    int week = 0;   // which typical week to optimize
    int day = 0;    // day within that week, 0..6
    int jobs = 1;   // upper bound on internal parallelism
    int mc_sweep_points = 9;
};

// Overlays the JSON fields present in `path` onto `base` and validates
// ranges. Unknown keys raise PipelineError (typos should not pass silently).
RunConfig load_run_config(const std::string& path, RunConfig base = {});
void check_run_config(const RunConfig& cfg);

const char* subset_name(MarketSubset subset);
MarketSubset parse_subset(const std::string& name);  // PipelineError if unknown

// units.json: {"gas_price": EUR/MWh, "units": [{"id", "kind", "capacity",
// "min_part_load"?, "alpha"?, "beta"?, "heat_ratio"?}]} with kind one of
// boiler, electrode_boiler, chp, compression_chiller, absorption_chiller.
EnergySystem load_units(const std::string& path);

// Everything `prepare` learns from history: cluster models for hours and
// 4-hour slices, per-cluster intraday drift and volatility, per-cluster
// bid ladders for both directions, and the typical demand weeks.
struct Parameters {
    int k = 0;
    std::uint64_t seed = 0;
    ClusterModel hour_model;   // assignment not persisted
    std::vector<ClusterStat> hour_stats;
    ClusterModel slice_model;  // 4-hour features
    std::vector<std::array<PriceLadder, 2>> ladders;  // per cluster: pos, neg
    std::vector<int> typical_week_starts;  // hour offsets into the demand series
};

Parameters prepare_parameters(const RunConfig& cfg);
void save_parameters(const Parameters& params, const std::string& path);
Parameters load_parameters(const std::string& path);

// Assembles the 24 hours of the configured typical day: demands and
// day-ahead prices from the matching history rows, drift/volatility from the
// hour's cluster (sigma scaled by the configured multiplier), marginal cost
// from the unit model, option quotes from the binomial model, and each
// slice's price combinations from its cluster's ladders.
DayInputs build_day_inputs(const RunConfig& cfg, const Parameters& params,
                           const EnergySystem& system,
                           int64_t* day_start = nullptr);

// Deterministic serialization: identical schedules and settings yield
// byte-identical text.
std::string schedule_to_json(const BidSchedule& schedule, const RunConfig& cfg,
                             int64_t day_start);

struct ValidateOptions {
    bool exhaustive = false;
    int sessions = 40;
    int samples = 256;
    // Negative control: corrupts one hedge ratio before replay so the
    // validator must report a failure.
    bool inject_hedge_error = false;
};

int cmd_prepare(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_optimize(const RunConfig& cfg, bool compare_subsets, std::ostream& out,
                 std::ostream& err);
int cmd_validate(const RunConfig& cfg, const ValidateOptions& options,
                 std::ostream& out, std::ostream& err);
int cmd_price_options(const TradingSession& session, std::ostream& out,
                      std::ostream& err);
int cmd_estimate_mc(const RunConfig& cfg, double heat_demand,
                    double cool_demand, std::ostream& out, std::ostream& err);
int cmd_report(const std::string& schedule_path, const std::string& csv_path,
               std::ostream& out, std::ostream& err);

}  // namespace flexbid
