#include <cstdlib>
#include <functional>
#include <iostream>
#include <list>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "flexbid/pipeline.hpp"

namespace {

using flexbid::RunConfig;

// Effective settings are layered: built-in defaults, then the config file,
// then FLEXBID_SEED from the environment, then explicit flags (flags win).
class ConfigOpts {
  public:
    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_, "JSON run configuration file")
            ->check(CLI::ExistingFile);
        bind(cmd->add_option("--forecasts", f_.forecasts,
                             "quarter-hourly wind/pv/load forecast CSV"),
             [this](RunConfig& c) { c.forecasts = f_.forecasts; });
        bind(cmd->add_option("--spot", f_.spot, "hourly day-ahead/ID1 price CSV"),
             [this](RunConfig& c) { c.spot = f_.spot; });
        bind(cmd->add_option("--bp-auctions", f_.bp_auctions,
                             "4-hourly balancing auction result CSV"),
             [this](RunConfig& c) { c.bp_auctions = f_.bp_auctions; });
        bind(cmd->add_option("--demands", f_.demands, "hourly site demand CSV"),
             [this](RunConfig& c) { c.demands = f_.demands; });
        bind(cmd->add_option("--units", f_.units, "energy system units JSON"),
             [this](RunConfig& c) { c.units = f_.units; });
        bind(cmd->add_option("--parameters", f_.parameters,
                             "prepared parameters file (written by prepare)"),
             [this](RunConfig& c) { c.parameters = f_.parameters; });
        bind(cmd->add_option("--schedule", f_.schedule, "bid schedule JSON path"),
             [this](RunConfig& c) { c.schedule = f_.schedule; });
        bind(cmd->add_option("--k", f_.k, "number of clusters"),
             [this](RunConfig& c) { c.k = f_.k; });
        bind(cmd->add_option("--capacity-targets", f_.capacity_targets,
                             "acceptance probability targets for capacity bids"),
             [this](RunConfig& c) { c.capacity_targets = f_.capacity_targets; });
        bind(cmd->add_option("--energy-targets", f_.energy_targets,
                             "request probability targets for energy bids"),
             [this](RunConfig& c) { c.energy_targets = f_.energy_targets; });
        bind(cmd->add_option("--sigma-multiplier", f_.sigma_multiplier,
                             "scales every session volatility, range [0.5, 6]"),
             [this](RunConfig& c) { c.sigma_multiplier = f_.sigma_multiplier; });
        bind(cmd->add_option("--bp-max", f_.bp_max,
                             "largest balancing bid per direction, MW"),
             [this](RunConfig& c) { c.bp_max = f_.bp_max; });
        bind(cmd->add_option("--n-steps", f_.n_steps,
                             "trading opportunities per intraday session"),
             [this](RunConfig& c) { c.n_steps = f_.n_steps; });
        bind(cmd->add_option("--mip-gap", f_.mip_abs_gap,
                             "absolute optimality gap for the solver"),
             [this](RunConfig& c) { c.mip_abs_gap = f_.mip_abs_gap; });
        bind(cmd->add_option("--time-limit", f_.mip_time_limit_s,
                             "solver time limit per subproblem, seconds (0 = none)"),
             [this](RunConfig& c) { c.mip_time_limit_s = f_.mip_time_limit_s; });
        bind(cmd->add_option("--seed", f_.seed, "random seed"),
             [this](RunConfig& c) { c.seed = f_.seed; });
        bind(cmd->add_option("--subset", subset_,
                             "markets in play: da, da_id, da_bp or da_id_bp"),
             [this](RunConfig& c) { c.subset = flexbid::parse_subset(subset_); });
        bind(cmd->add_option("--weeks", f_.weeks,
                             "typical weeks extracted from the demand history"),
             [this](RunConfig& c) { c.weeks = f_.weeks; });
        bind(cmd->add_option("--week", f_.week, "typical week to optimize"),
             [this](RunConfig& c) { c.week = f_.week; });
        bind(cmd->add_option("--day", f_.day, "day within the week, 0..6"),
             [this](RunConfig& c) { c.day = f_.day; });
        bind(cmd->add_option("--jobs", f_.jobs, "internal parallelism bound"),
             [this](RunConfig& c) { c.jobs = f_.jobs; });
        bind(cmd->add_option("--mc-sweep-points", f_.mc_sweep_points,
                             "demand levels in the marginal cost sweep"),
             [this](RunConfig& c) { c.mc_sweep_points = f_.mc_sweep_points; });
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_.empty()) cfg = flexbid::load_run_config(config_);
        if (const char* env = std::getenv("FLEXBID_SEED")) cfg.seed = parse_env_seed(env);
        for (const auto& [opt, apply] : binds_)
            if (opt->count() > 0) apply(cfg);
        flexbid::check_run_config(cfg);
        return cfg;
    }

  private:
    static std::uint64_t parse_env_seed(const std::string& text) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(text, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != text.size() || text[0] == '-')
            throw flexbid::PipelineError("FLEXBID_SEED must be a nonnegative integer, got \"" +
                                         text + "\"");
        return v;
    }

    void bind(CLI::Option* opt, std::function<void(RunConfig&)> apply) {
        binds_.emplace_back(opt, std::move(apply));
    }

    std::string config_;
    RunConfig f_;
    std::string subset_;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> binds_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coordinated bidding for a flexible energy system across "
                 "balancing, day-ahead and intraday markets"};
    app.require_subcommand(1);

    int rc = flexbid::kExitOk;
    std::list<ConfigOpts> opt_sets;  // stable addresses for the callbacks

    auto* prepare = app.add_subcommand(
        "prepare", "Cluster market history and fit ladders, intraday statistics "
                   "and typical demand weeks");
    {
        ConfigOpts& o = opt_sets.emplace_back();
        o.attach(prepare);
        prepare->callback(
            [&rc, &o] { rc = flexbid::cmd_prepare(o.resolve(), std::cout, std::cerr); });
    }

    auto* price = app.add_subcommand(
        "price-options", "Value intraday flexibility for one trading session");
    {
        static flexbid::TradingSession session;
        session = flexbid::TradingSession{};
        session.n_steps = 64;
        price->add_option("--s-ini", session.s_ini, "initial price, EUR/MWh")->required();
        price->add_option("--mu", session.mu, "drift over the session, EUR/MWh");
        price->add_option("--sigma", session.sigma, "volatility over the session, EUR/MWh")
            ->required();
        price->add_option("--n-steps", session.n_steps, "trading opportunities");
        price->add_option("--mc", session.mc, "marginal electricity cost, EUR/MWh")
            ->required();
        price->callback(
            [&rc] { rc = flexbid::cmd_price_options(session, std::cout, std::cerr); });
    }

    auto* estimate = app.add_subcommand(
        "estimate-mc", "Fit the marginal electricity cost of the unit portfolio");
    {
        ConfigOpts& o = opt_sets.emplace_back();
        o.attach(estimate);
        static double heat = 0, cool = 0;
        heat = cool = 0;
        estimate->add_option("--heat", heat, "heat demand held fixed, MW");
        estimate->add_option("--cool", cool, "cooling demand held fixed, MW");
        estimate->callback([&rc, &o] {
            rc = flexbid::cmd_estimate_mc(o.resolve(), heat, cool, std::cout, std::cerr);
        });
    }

    auto* optimize = app.add_subcommand(
        "optimize", "Solve the bidding problem for the configured typical day");
    {
        ConfigOpts& o = opt_sets.emplace_back();
        o.attach(optimize);
        static bool compare = false;
        compare = false;
        optimize->add_flag("--compare-subsets", compare,
                           "also solve da, da_bp, da_id and da_id_bp and print a table");
        optimize->callback([&rc, &o] {
            rc = flexbid::cmd_optimize(o.resolve(), compare, std::cout, std::cerr);
        });
    }

    auto* validate = app.add_subcommand(
        "validate", "Check hedge replication and solver results against oracles");
    {
        ConfigOpts& o = opt_sets.emplace_back();
        o.attach(validate);
        static flexbid::ValidateOptions vo;
        vo = flexbid::ValidateOptions{};
        validate->add_flag("--exhaustive", vo.exhaustive,
                           "replay every price path (needs n_steps <= 16)");
        validate->add_option("--sessions", vo.sessions, "random sessions per suite");
        validate->add_option("--samples", vo.samples, "sampled paths per session");
        validate->add_flag("--inject-hedge-error", vo.inject_hedge_error)->group("");
        validate->callback([&rc, &o] {
            rc = flexbid::cmd_validate(o.resolve(), vo, std::cout, std::cerr);
        });
    }

    auto* report = app.add_subcommand(
        "report", "Summarize a bid schedule, optionally flattening it to CSV");
    {
        ConfigOpts& o = opt_sets.emplace_back();
        o.attach(report);
        static std::string csv_path;
        csv_path.clear();
        report->add_option("--csv", csv_path, "also write the bid volumes as CSV rows");
        report->callback([&rc, &o] {
            rc = flexbid::cmd_report(o.resolve().schedule, csv_path, std::cout, std::cerr);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return flexbid::kExitSchema;
    } catch (const flexbid::PipelineError& e) {
        std::cerr << e.what() << "\n";
        return flexbid::kExitSchema;
    }
    return rc;
}
