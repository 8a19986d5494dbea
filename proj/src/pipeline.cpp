#include "flexbid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "flexbid/csv.hpp"
#include "flexbid/replication.hpp"
#include "flexbid/time_util.hpp"
#include "json.hpp"

namespace flexbid {
namespace {

using json = nlohmann::ordered_json;

std::string num(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PipelineError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw PipelineError(path + ": " + e.what());
    }
}

double as_number(const json& v, const std::string& ctx) {
    if (!v.is_number()) throw PipelineError(ctx + " must be a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& ctx) {
    if (!v.is_number_integer()) throw PipelineError(ctx + " must be an integer");
    return v.get<int>();
}

std::uint64_t as_seed(const json& v, const std::string& ctx) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw PipelineError(ctx + " must be a nonnegative integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
        throw PipelineError(ctx + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& ctx) {
    if (!v.is_string()) throw PipelineError(ctx + " must be a string");
    return v.get<std::string>();
}

std::vector<double> as_number_list(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw PipelineError(ctx + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(as_number(e, ctx + " entry"));
    return out;
}

json cluster_model_to_json(const ClusterModel& m) {
    json j;
    j["feature_mean"] = m.feat_mean;
    j["feature_scale"] = m.feat_scale;
    j["inertia"] = m.inertia;
    j["centroids"] = m.centroids;
    return j;
}

ClusterModel cluster_model_from_json(const json& j, int k) {
    ClusterModel m;
    m.k = k;
    m.feat_mean = j.at("feature_mean").get<std::array<double, 3>>();
    m.feat_scale = j.at("feature_scale").get<std::array<double, 3>>();
    m.inertia = j.at("inertia").get<double>();
    m.centroids = j.at("centroids").get<std::vector<std::array<double, 3>>>();
    if (static_cast<int>(m.centroids.size()) != k)
        throw PipelineError("centroid count differs from k");
    return m;
}

json ladder_to_json(const PriceLadder& l) {
    json j;
    json cap = json::array();
    for (const auto& e : l.capacity)
        cap.push_back({{"price", e.price}, {"probability", e.probability}});
    json en = json::array();
    for (const auto& e : l.energy)
        en.push_back({{"price", e.price}, {"probability", e.probability}});
    j["capacity"] = cap;
    j["energy"] = en;
    return j;
}

PriceLadder ladder_from_json(const json& j) {
    PriceLadder l;
    for (const auto& e : j.at("capacity"))
        l.capacity.push_back({e.at("price").get<double>(), e.at("probability").get<double>()});
    for (const auto& e : j.at("energy"))
        l.energy.push_back({e.at("price").get<double>(), e.at("probability").get<double>()});
    if (l.capacity.empty() || l.energy.empty())
        throw PipelineError("ladder without entries");
    return l;
}

void check_hourly_contiguous(const std::vector<DemandRecord>& demands,
                             size_t begin, size_t end, const std::string& path) {
    for (size_t i = begin + 1; i < end; ++i) {
        if (demands[i].timestamp - demands[i - 1].timestamp != 3600)
            throw PipelineError(path + ": hourly series broken before " +
                                format_timestamp(demands[i].timestamp));
    }
}

}  // namespace

RunConfig load_run_config(const std::string& path, RunConfig base) {
    json j = parse_json_file(path);
    if (!j.is_object()) throw PipelineError(path + ": config must be a JSON object");
    RunConfig cfg = std::move(base);
    for (const auto& [key, value] : j.items()) {
        const std::string ctx = path + ": \"" + key + "\"";
        if (key == "forecasts") cfg.forecasts = as_string(value, ctx);
        else if (key == "spot") cfg.spot = as_string(value, ctx);
        else if (key == "bp_auctions") cfg.bp_auctions = as_string(value, ctx);
        else if (key == "demands") cfg.demands = as_string(value, ctx);
        else if (key == "units") cfg.units = as_string(value, ctx);
        else if (key == "parameters") cfg.parameters = as_string(value, ctx);
        else if (key == "schedule") cfg.schedule = as_string(value, ctx);
        else if (key == "k") cfg.k = as_int(value, ctx);
        else if (key == "capacity_targets") cfg.capacity_targets = as_number_list(value, ctx);
        else if (key == "energy_targets") cfg.energy_targets = as_number_list(value, ctx);
        else if (key == "sigma_multiplier") cfg.sigma_multiplier = as_number(value, ctx);
        else if (key == "bp_max") cfg.bp_max = as_int(value, ctx);
        else if (key == "n_steps") cfg.n_steps = as_int(value, ctx);
        else if (key == "mip_abs_gap") cfg.mip_abs_gap = as_number(value, ctx);
        else if (key == "mip_time_limit_s") cfg.mip_time_limit_s = as_number(value, ctx);
        else if (key == "seed") cfg.seed = as_seed(value, ctx);
        else if (key == "subset") cfg.subset = parse_subset(as_string(value, ctx));
        else if (key == "weeks") cfg.weeks = as_int(value, ctx);
        else if (key == "week") cfg.week = as_int(value, ctx);
        else if (key == "day") cfg.day = as_int(value, ctx);
        else if (key == "jobs") cfg.jobs = as_int(value, ctx);
        else if (key == "mc_sweep_points") cfg.mc_sweep_points = as_int(value, ctx);
        else throw PipelineError(path + ": unknown config key \"" + key + "\"");
    }
    check_run_config(cfg);
    return cfg;
}

void check_run_config(const RunConfig& cfg) {
    auto bad = [](const std::string& m) { throw PipelineError("config: " + m); };
    if (cfg.k < 1) bad("k must be >= 1");
    if (cfg.sigma_multiplier < 0.5 || cfg.sigma_multiplier > 6.0)
        bad("sigma_multiplier must lie in [0.5, 6.0]");
    if (cfg.bp_max < 0) bad("bp_max must be >= 0");
    if (cfg.n_steps < 1) bad("n_steps must be >= 1");
    if (cfg.mip_abs_gap < 0) bad("mip_abs_gap must be >= 0");
    if (cfg.mip_time_limit_s < 0) bad("mip_time_limit_s must be >= 0");
    if (cfg.weeks < 1) bad("weeks must be >= 1");
    if (cfg.week < 0 || cfg.week >= cfg.weeks) bad("week must lie in [0, weeks)");
    if (cfg.day < 0 || cfg.day > 6) bad("day must lie in [0, 6]");
    if (cfg.jobs < 1) bad("jobs must be >= 1");
    if (cfg.mc_sweep_points < 3) bad("mc_sweep_points must be >= 3");
    if (cfg.capacity_targets.empty()) bad("capacity_targets must not be empty");
    if (cfg.energy_targets.empty()) bad("energy_targets must not be empty");
    for (double t : cfg.capacity_targets)
        if (!(t > 0 && t < 1)) bad("capacity_targets must lie strictly between 0 and 1");
    for (double t : cfg.energy_targets)
        if (!(t > 0 && t < 1)) bad("energy_targets must lie strictly between 0 and 1");
}

const char* subset_name(MarketSubset subset) {
    switch (subset) {
        case MarketSubset::kDa: return "da";
        case MarketSubset::kDaId: return "da_id";
        case MarketSubset::kDaBp: return "da_bp";
        case MarketSubset::kDaIdBp: return "da_id_bp";
    }
    return "?";
}

MarketSubset parse_subset(const std::string& name) {
    if (name == "da") return MarketSubset::kDa;
    if (name == "da_id") return MarketSubset::kDaId;
    if (name == "da_bp") return MarketSubset::kDaBp;
    if (name == "da_id_bp") return MarketSubset::kDaIdBp;
    throw PipelineError("unknown market subset \"" + name +
                        "\" (expected da, da_id, da_bp or da_id_bp)");
}

EnergySystem load_units(const std::string& path) {
    json j = parse_json_file(path);
    if (!j.is_object()) throw PipelineError(path + ": units file must be a JSON object");
    EnergySystem sys;
    bool have_units = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "gas_price") {
            sys.gas_price = as_number(value, path + ": \"gas_price\"");
        } else if (key == "units") {
            if (!value.is_array()) throw PipelineError(path + ": \"units\" must be an array");
            have_units = true;
            for (const auto& u : value) {
                if (!u.is_object()) throw PipelineError(path + ": unit entries must be objects");
                UnitSpec spec;
                for (const auto& [uk, uv] : u.items()) {
                    const std::string ctx = path + ": unit \"" + uk + "\"";
                    if (uk == "id") spec.id = as_string(uv, ctx);
                    else if (uk == "kind") {
                        std::string kind = as_string(uv, ctx);
                        if (kind == "boiler") spec.kind = UnitKind::kBoiler;
                        else if (kind == "electrode_boiler") spec.kind = UnitKind::kElectrodeBoiler;
                        else if (kind == "chp") spec.kind = UnitKind::kChp;
                        else if (kind == "compression_chiller") spec.kind = UnitKind::kCompressionChiller;
                        else if (kind == "absorption_chiller") spec.kind = UnitKind::kAbsorptionChiller;
                        else
                            throw PipelineError(path + ": unknown unit kind \"" + kind +
                                                "\" (expected boiler, electrode_boiler, chp, "
                                                "compression_chiller or absorption_chiller)");
                    } else if (uk == "capacity") spec.capacity = as_number(uv, ctx);
                    else if (uk == "min_part_load") spec.min_part_load = as_number(uv, ctx);
                    else if (uk == "alpha") spec.alpha = as_number(uv, ctx);
                    else if (uk == "beta") spec.beta = as_number(uv, ctx);
                    else if (uk == "heat_ratio") spec.heat_ratio = as_number(uv, ctx);
                    else throw PipelineError(path + ": unknown unit key \"" + uk + "\"");
                }
                sys.units.push_back(std::move(spec));
            }
        } else {
            throw PipelineError(path + ": unknown key \"" + key + "\"");
        }
    }
    if (!have_units || sys.units.empty())
        throw PipelineError(path + ": no units defined");
    try {
        check_system(sys);
    } catch (const std::invalid_argument& e) {
        throw PipelineError(path + ": " + e.what());
    }
    return sys;
}

Parameters prepare_parameters(const RunConfig& cfg) {
    check_run_config(cfg);
    auto forecasts = load_forecasts(cfg.forecasts);
    auto spot = load_spot(cfg.spot);
    auto auctions = load_bp_auctions(cfg.bp_auctions);
    auto demands = load_demands(cfg.demands);

    // Gaps and misaligned windows are input-file defects, not a statistics
    // problem, so they surface as PipelineError.
    std::vector<ForecastPoint> hourly, windows4;
    try {
        hourly = aggregate_forecasts(forecasts, 1);
        windows4 = aggregate_forecasts(forecasts, 4);
    } catch (const MarketDataError& e) {
        throw PipelineError(cfg.forecasts + ": " + e.what());
    }

    std::map<int64_t, double> diff_at;
    for (const auto& r : spot) diff_at[r.timestamp] = r.id1 - r.da;
    std::vector<double> diffs;
    diffs.reserve(hourly.size());
    for (const auto& p : hourly) {
        auto it = diff_at.find(p.start);
        if (it == diff_at.end())
            throw PipelineError(cfg.spot + ": no spot row for " + format_timestamp(p.start));
        diffs.push_back(it->second);
    }

    std::map<int64_t, int> window_at;
    for (size_t i = 0; i < windows4.size(); ++i)
        window_at[windows4[i].start] = static_cast<int>(i);
    for (const auto& a : auctions) {
        if (!window_at.count(a.slice_start))
            throw PipelineError(cfg.bp_auctions + ": auction window " +
                                format_timestamp(a.slice_start) +
                                " has no matching forecast window");
    }
    check_hourly_contiguous(demands, 0, demands.size(), cfg.demands);

    Parameters params;
    params.k = cfg.k;
    params.seed = cfg.seed;

    if (static_cast<int>(hourly.size()) < cfg.k)
        throw MarketDataError("only " + std::to_string(hourly.size()) +
                              " aggregated hours for k=" + std::to_string(cfg.k) +
                              " clusters");
    if (static_cast<int>(windows4.size()) < cfg.k)
        throw MarketDataError("only " + std::to_string(windows4.size()) +
                              " aggregated 4-hour windows for k=" +
                              std::to_string(cfg.k) + " clusters");

    std::vector<std::array<double, 3>> hour_feats;
    hour_feats.reserve(hourly.size());
    for (const auto& p : hourly) hour_feats.push_back(p.features);
    params.hour_model = kmeans(hour_feats, cfg.k, cfg.seed);
    params.hour_stats = fit_intraday_stats(params.hour_model, diffs);

    std::vector<std::array<double, 3>> slice_feats;
    slice_feats.reserve(windows4.size());
    for (const auto& p : windows4) slice_feats.push_back(p.features);
    params.slice_model = kmeans(slice_feats, cfg.k, cfg.seed);

    std::vector<std::array<std::vector<double>, 2>> cp(cfg.k), ep(cfg.k);
    for (const auto& a : auctions) {
        int c = params.slice_model.assignment[window_at[a.slice_start]];
        int dir = a.direction == Direction::kPos ? 0 : 1;
        cp[c][dir].push_back(a.marginal_cp);
        ep[c][dir].push_back(a.marginal_ep);
    }
    params.ladders.resize(cfg.k);
    for (int c = 0; c < cfg.k; ++c) {
        for (int dir = 0; dir < 2; ++dir) {
            if (cp[c][dir].empty())
                throw MarketDataError("cluster " + std::to_string(c) + " has no " +
                                      (dir == 0 ? "positive" : "negative") +
                                      "-direction auction results");
            ProbabilityCurve cap_curve = probability_curve(cp[c][dir]);
            ProbabilityCurve en_curve = probability_curve(ep[c][dir]);
            params.ladders[c][dir] =
                select_ladder(cap_curve, en_curve, cfg.capacity_targets, cfg.energy_targets);
        }
    }

    std::vector<std::array<double, 3>> triples;
    triples.reserve(demands.size());
    for (const auto& d : demands) triples.push_back({d.el, d.heat, d.cool});
    for (int w : typical_weeks(triples, cfg.weeks, cfg.seed))
        params.typical_week_starts.push_back(w * 168);
    return params;
}

void save_parameters(const Parameters& params, const std::string& path) {
    json j;
    j["k"] = params.k;
    j["seed"] = params.seed;
    j["hours"] = cluster_model_to_json(params.hour_model);
    json stats = json::array();
    for (const auto& s : params.hour_stats)
        stats.push_back({{"mu", s.mu}, {"sigma", s.sigma}, {"count", s.count}});
    j["hours"]["intraday"] = stats;
    j["slices"] = cluster_model_to_json(params.slice_model);
    json ladders = json::array();
    for (const auto& pair : params.ladders) {
        json entry;
        entry["pos"] = ladder_to_json(pair[0]);
        entry["neg"] = ladder_to_json(pair[1]);
        ladders.push_back(std::move(entry));
    }
    j["slices"]["ladders"] = ladders;
    j["typical_week_starts"] = params.typical_week_starts;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw PipelineError("write to " + path + " failed");
}

Parameters load_parameters(const std::string& path) {
    json j = parse_json_file(path);
    try {
        Parameters p;
        p.k = j.at("k").get<int>();
        p.seed = j.at("seed").get<std::uint64_t>();
        if (p.k < 1) throw PipelineError(path + ": k must be >= 1");
        p.hour_model = cluster_model_from_json(j.at("hours"), p.k);
        for (const auto& s : j.at("hours").at("intraday")) {
            ClusterStat st;
            st.mu = s.at("mu").get<double>();
            st.sigma = s.at("sigma").get<double>();
            st.count = s.at("count").get<int>();
            p.hour_stats.push_back(st);
        }
        p.slice_model = cluster_model_from_json(j.at("slices"), p.k);
        for (const auto& entry : j.at("slices").at("ladders"))
            p.ladders.push_back({ladder_from_json(entry.at("pos")),
                                 ladder_from_json(entry.at("neg"))});
        p.typical_week_starts = j.at("typical_week_starts").get<std::vector<int>>();
        if (static_cast<int>(p.hour_stats.size()) != p.k)
            throw PipelineError(path + ": intraday stats count differs from k");
        if (static_cast<int>(p.ladders.size()) != p.k)
            throw PipelineError(path + ": ladder count differs from k");
        return p;
    } catch (const json::exception& e) {
        throw PipelineError(path + ": " + e.what());
    }
}

DayInputs build_day_inputs(const RunConfig& cfg, const Parameters& params,
                           const EnergySystem& system, int64_t* day_start) {
    check_run_config(cfg);
    if (params.k < 1 || params.hour_stats.empty() || params.ladders.empty())
        throw PipelineError("parameters are incomplete; run prepare first");
    if (params.typical_week_starts.empty())
        throw PipelineError("parameters carry no typical weeks");
    if (cfg.week >= static_cast<int>(params.typical_week_starts.size()))
        throw PipelineError("week " + std::to_string(cfg.week) + " outside the " +
                            std::to_string(params.typical_week_starts.size()) +
                            " stored typical weeks");

    auto demands = load_demands(cfg.demands);
    size_t start = static_cast<size_t>(params.typical_week_starts[cfg.week]) +
                   24u * static_cast<size_t>(cfg.day);
    if (start + 24 > demands.size())
        throw PipelineError(cfg.demands + ": typical day extends past the demand history");
    check_hourly_contiguous(demands, start, start + 24, cfg.demands);

    auto spot = load_spot(cfg.spot);
    std::map<int64_t, double> da_at;
    for (const auto& r : spot) da_at[r.timestamp] = r.da;

    auto forecasts = load_forecasts(cfg.forecasts);
    std::vector<ForecastPoint> hourly, windows4;
    try {
        hourly = aggregate_forecasts(forecasts, 1);
        windows4 = aggregate_forecasts(forecasts, 4);
    } catch (const MarketDataError& e) {
        throw PipelineError(cfg.forecasts + ": " + e.what());
    }
    std::map<int64_t, const std::array<double, 3>*> hour_at, slice_at;
    for (const auto& p : hourly) hour_at[p.start] = &p.features;
    for (const auto& p : windows4) slice_at[p.start] = &p.features;

    DayInputs day;
    day.bp_max = cfg.bp_max;
    day.hours.reserve(24);
    for (int h = 0; h < 24; ++h) {
        const DemandRecord& rec = demands[start + h];
        HourInputs hour;
        hour.demands = Demands{rec.el, rec.heat, rec.cool};
        auto itp = da_at.find(rec.timestamp);
        if (itp == da_at.end())
            throw PipelineError(cfg.spot + ": no spot row for " +
                                format_timestamp(rec.timestamp));
        hour.da_price = itp->second;
        hour.gas_price = system.gas_price;
        auto itf = hour_at.find(rec.timestamp);
        if (itf == hour_at.end())
            throw PipelineError(cfg.forecasts + ": no forecast window at " +
                                format_timestamp(rec.timestamp));
        int c = params.hour_model.assign(*itf->second);
        if (c < 0 || c >= static_cast<int>(params.hour_stats.size()))
            throw PipelineError("parameters: hour cluster index out of range");
        const ClusterStat& st = params.hour_stats[c];

        MarginalCostFit fit;
        try {
            fit = marginal_cost(system, rec.heat, rec.cool, cfg.mc_sweep_points);
        } catch (const std::invalid_argument& e) {
            throw PipelineError(std::string("marginal cost: ") + e.what());
        }

        TradingSession session;
        session.s_ini = hour.da_price;
        session.mu = st.mu;
        session.sigma = st.sigma * cfg.sigma_multiplier;
        session.n_steps = cfg.n_steps;
        session.mc = fit.mc;
        try {
            check_session(session);
        } catch (const std::invalid_argument& e) {
            throw PipelineError("hour " + format_timestamp(rec.timestamp) +
                                ": unusable trading session (" + e.what() + ")");
        }
        hour.session = session;
        hour.quote = option_values(session);
        day.hours.push_back(std::move(hour));
    }

    for (int s = 0; s < 6; ++s) {
        int64_t ts = demands[start + 4u * s].timestamp;
        auto it = slice_at.find(ts);
        if (it == slice_at.end())
            throw PipelineError(cfg.forecasts + ": no 4-hour forecast window at " +
                                format_timestamp(ts) +
                                " (the day must start on a 4-hour boundary)");
        int c = params.slice_model.assign(*it->second);
        if (c < 0 || c >= static_cast<int>(params.ladders.size()))
            throw PipelineError("parameters: slice cluster index out of range");
        day.combinations[s] = build_combinations(params.ladders[c][0], params.ladders[c][1]);
    }
    if (day_start) *day_start = demands[start].timestamp;
    return day;
}

std::string schedule_to_json(const BidSchedule& schedule, const RunConfig& cfg,
                             int64_t day_start) {
    json j;
    j["format"] = "flexbid-schedule/1";
    json run;
    run["subset"] = subset_name(cfg.subset);
    run["sigma_multiplier"] = cfg.sigma_multiplier;
    run["n_steps"] = cfg.n_steps;
    run["bp_max"] = cfg.bp_max;
    run["seed"] = cfg.seed;
    run["week"] = cfg.week;
    run["day"] = cfg.day;
    run["day_start"] = format_timestamp(day_start);
    j["run"] = std::move(run);
    j["expected_opex_eur"] = schedule.expected_opex;
    j["breakdown"] = {{"gas_cost_eur", schedule.breakdown.gas_cost},
                      {"bp_revenue_eur", schedule.breakdown.r_bp},
                      {"da_revenue_eur", schedule.breakdown.r_da},
                      {"id_revenue_eur", schedule.breakdown.r_id}};
    json slices = json::array();
    for (const auto& s : schedule.slices) {
        json js;
        js["slice"] = s.slice;
        js["combination_index"] = s.combination_index;
        js["prices"] = {{"cp_plus", s.combination.cp_plus},
                        {"ep_plus", s.combination.ep_plus},
                        {"cp_minus", s.combination.cp_minus},
                        {"ep_minus", s.combination.ep_minus}};
        js["probabilities"] = {{"acc_plus", s.combination.acc_prob_plus},
                               {"acc_minus", s.combination.acc_prob_minus},
                               {"req_plus", s.combination.req_prob_plus},
                               {"req_minus", s.combination.req_prob_minus}};
        js["bp_plus_mw"] = s.bp_plus;
        js["bp_minus_mw"] = s.bp_minus;
        js["expected_opex_eur"] = s.expected_opex;
        js["breakdown"] = {{"gas_cost_eur", s.breakdown.gas_cost},
                           {"bp_revenue_eur", s.breakdown.r_bp},
                           {"da_revenue_eur", s.breakdown.r_da},
                           {"id_revenue_eur", s.breakdown.r_id}};
        json hours = json::array();
        for (int h = 0; h < 4; ++h) {
            json jh;
            jh["hour"] = s.slice * 4 + h;
            json branches = json::array();
            for (int b = 0; b < 4; ++b) {
                const BranchVolumes& v = s.volumes[h][b];
                json jb;
                jb["branch"] = b;
                jb["bp_plus_accepted"] = (b >> 1) == 1;
                jb["bp_minus_accepted"] = (b & 1) == 1;
                jb["da_side"] = v.lambda_da == 1 ? "sell" : "buy";
                jb["da_sell_mwh"] = v.da_sell;
                jb["da_buy_mwh"] = v.da_buy;
                jb["id_sell_mwh"] = v.id_sell;
                jb["id_buy_mwh"] = v.id_buy;
                branches.push_back(std::move(jb));
            }
            jh["branches"] = std::move(branches);
            hours.push_back(std::move(jh));
        }
        js["hours"] = std::move(hours);
        slices.push_back(std::move(js));
    }
    j["slices"] = std::move(slices);
    return j.dump(2) + "\n";
}

int cmd_prepare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        Parameters params = prepare_parameters(cfg);
        save_parameters(params, cfg.parameters);
        out << "hour clusters (k=" << params.k << "):\n";
        for (size_t c = 0; c < params.hour_stats.size(); ++c) {
            const ClusterStat& s = params.hour_stats[c];
            out << "  cluster " << c << ": " << s.count << " hours, mu "
                << num(s.mu) << ", sigma " << num(s.sigma) << " EUR/MWh\n";
        }
        out << "slice ladders:\n";
        for (size_t c = 0; c < params.ladders.size(); ++c) {
            for (int dir = 0; dir < 2; ++dir) {
                const PriceLadder& l = params.ladders[c][dir];
                out << "  cluster " << c << (dir == 0 ? " pos" : " neg") << ": cp";
                for (const auto& e : l.capacity) out << " " << num(e.price);
                out << ", ep";
                for (const auto& e : l.energy) out << " " << num(e.price);
                out << "\n";
            }
        }
        out << "typical weeks (start hours):";
        for (int w : params.typical_week_starts) out << " " << w;
        out << "\n";
        out << "parameters written to " << cfg.parameters << "\n";
        return kExitOk;
    } catch (const CsvError& e) {
        err << e.what() << "\n";
        return kExitSchema;
    } catch (const PipelineError& e) {
        err << e.what() << "\n";
        return kExitSchema;
    } catch (const MarketDataError& e) {
        err << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kExitSchema;
    }
}

int cmd_optimize(const RunConfig& cfg, bool compare_subsets, std::ostream& out,
                 std::ostream& err) {
    try {
        check_run_config(cfg);
        Parameters params = load_parameters(cfg.parameters);
        EnergySystem system = load_units(cfg.units);
        int64_t day_start = 0;
        DayInputs day = build_day_inputs(cfg, params, system, &day_start);

        SolveSettings settings;
        settings.subset = cfg.subset;
        settings.mip.abs_gap = cfg.mip_abs_gap;
        settings.mip.time_limit_s =
            cfg.mip_time_limit_s > 0 ? cfg.mip_time_limit_s : opt::kInf;

        BidSchedule schedule;
        bool have_schedule = false;
        if (compare_subsets) {
            out << "subset     expected OPEX [EUR]\n";
            for (MarketSubset sub : {MarketSubset::kDa, MarketSubset::kDaBp,
                                     MarketSubset::kDaId, MarketSubset::kDaIdBp}) {
                SolveSettings s2 = settings;
                s2.subset = sub;
                BidSchedule b = optimize_day(day, system, s2);
                char line[96];
                std::snprintf(line, sizeof line, "%-10s %20.6f\n", subset_name(sub),
                              b.expected_opex);
                out << line;
                if (sub == cfg.subset) {
                    schedule = std::move(b);
                    have_schedule = true;
                }
            }
        }
        if (!have_schedule) schedule = optimize_day(day, system, settings);

        EvaluationReport report = evaluate_schedule(schedule, day, system);
        if (!report.feasible || !report.consistent) {
            err << "schedule self-check failed: " << report.message << "\n";
            return kExitInfeasible;
        }

        std::string text = schedule_to_json(schedule, cfg, day_start);
        std::ofstream f(cfg.schedule, std::ios::binary);
        if (!f) {
            err << "cannot write " << cfg.schedule << "\n";
            return kExitSchema;
        }
        f << text;
        f.close();

        out << "day " << format_date(day_start) << ", markets " << subset_name(cfg.subset)
            << "\n";
        for (const auto& s : schedule.slices) {
            char line[160];
            std::snprintf(line, sizeof line,
                          "slice %d (hours %02d-%02d): bp+ %d MW, bp- %d MW, "
                          "combination %d, opex %.2f EUR\n",
                          s.slice, 4 * s.slice, 4 * s.slice + 3, s.bp_plus, s.bp_minus,
                          s.combination_index, s.expected_opex);
            out << line;
        }
        char total[200];
        std::snprintf(total, sizeof total,
                      "expected OPEX %.2f EUR (gas %.2f, bp revenue %.2f, "
                      "da revenue %.2f, id revenue %.2f)\n",
                      schedule.expected_opex, schedule.breakdown.gas_cost,
                      schedule.breakdown.r_bp, schedule.breakdown.r_da,
                      schedule.breakdown.r_id);
        out << total;
        out << "schedule written to " << cfg.schedule << "\n";
        return kExitOk;
    } catch (const CsvError& e) {
        err << e.what() << "\n";
        return kExitSchema;
    } catch (const PipelineError& e) {
        err << e.what() << "\n";
        return kExitSchema;
    } catch (const MarketDataError& e) {
        err << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const DispatchError& e) {
        err << e.what() << "\n";
        return kExitInfeasible;
    } catch (const MultimarketError& e) {
        err << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kExitSchema;
    }
}

namespace {

struct LatticeBest {
    bool feasible = false;
    double objective = 0;
};

// Brute-force optimum over the integer lattice of a small all-integer model.
LatticeBest lattice_optimum(const opt::Model& m) {
    int nv = m.num_vars();
    std::vector<int> lo(nv), hi(nv), x(nv);
    for (int v = 0; v < nv; ++v) {
        lo[v] = static_cast<int>(std::lround(m.vars()[v].lb));
        hi[v] = static_cast<int>(std::lround(m.vars()[v].ub));
        x[v] = lo[v];
    }
    LatticeBest best;
    while (true) {
        bool ok = true;
        for (const auto& row : m.rows()) {
            double lhs = 0;
            for (const auto& t : row.terms) lhs += t.coef * x[t.var];
            if (row.sense == opt::Sense::kLe && lhs > row.rhs + 1e-9) ok = false;
            if (row.sense == opt::Sense::kGe && lhs < row.rhs - 1e-9) ok = false;
            if (row.sense == opt::Sense::kEq && std::fabs(lhs - row.rhs) > 1e-9) ok = false;
            if (!ok) break;
        }
        if (ok) {
            double obj = m.objective_constant();
            for (const auto& t : m.objective()) obj += t.coef * x[t.var];
            if (!best.feasible || obj < best.objective) {
                best.feasible = true;
                best.objective = obj;
            }
        }
        int v = 0;
        while (v < nv && ++x[v] > hi[v]) {
            x[v] = lo[v];
            ++v;
        }
        if (v == nv) break;
    }
    return best;
}

// xorshift-style mixer; avoids distribution implementations that vary
// between standard libraries.
struct SplitMix {
    std::uint64_t state;
    explicit SplitMix(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
    int range(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

}  // namespace

int cmd_validate(const RunConfig& cfg, const ValidateOptions& options,
                 std::ostream& out, std::ostream& err) {
    try {
        if (cfg.n_steps < 1) {
            err << "n_steps must be >= 1\n";
            return kExitSchema;
        }
        if (options.exhaustive && cfg.n_steps > 16) {
            err << "exhaustive replay walks 2^n_steps paths; n_steps " << cfg.n_steps
                << " exceeds the supported maximum of 16\n";
            return kExitSchema;
        }
        if (options.sessions < 1) {
            err << "sessions must be >= 1\n";
            return kExitSchema;
        }
        if (!options.exhaustive && options.samples < 1) {
            err << "samples must be >= 1\n";
            return kExitSchema;
        }

        SplitMix rng(cfg.seed);
        auto random_session = [&]() {
            TradingSession s;
            s.s_ini = 20 + 60 * rng.uniform();
            s.sigma = 2 + 18 * rng.uniform();
            s.n_steps = cfg.n_steps;
            // half the drift cap keeps the lattice probability interior
            s.mu = (2 * rng.uniform() - 1) * 0.5 * s.sigma *
                   std::sqrt(static_cast<double>(s.n_steps));
            s.mc = 30 + 40 * rng.uniform();
            return s;
        };

        bool all_ok = true;

        double max_rep = 0;
        for (int i = 0; i < options.sessions; ++i) {
            TradingSession s = random_session();
            double e = validate_replication(
                s,
                options.exhaustive ? ReplicationMode::kExhaustive
                                   : ReplicationMode::kSampled,
                options.samples, cfg.seed + static_cast<std::uint64_t>(i));
            if (options.inject_hedge_error) {
                HedgeTree tree = build_hedge_tree(s, OptionSide::kSell);
                tree.ratios[0][0] += tree.ratios[0][0] < 0.5 ? 0.25 : -0.25;
                for (int p = 0; p < 8; ++p) {
                    std::vector<bool> path(s.n_steps);
                    for (size_t b = 0; b < path.size(); ++b) path[b] = rng.uniform() < 0.5;
                    PathResult r = replay_path(tree, s, path);
                    e = std::max(e, std::fabs(tree.values[0][0] + r.trading_pnl - r.payoff));
                }
            }
            max_rep = std::max(max_rep, e);
        }
        bool rep_ok = max_rep <= 1e-9;
        all_ok = all_ok && rep_ok;
        {
            char line[160];
            std::snprintf(line, sizeof line,
                          "replication (%s, %d sessions, n_steps %d): max error %.3e  %s\n",
                          options.exhaustive ? "exhaustive" : "sampled", options.sessions,
                          cfg.n_steps, max_rep, rep_ok ? "PASS" : "FAIL");
            out << line;
        }

        // Normalization p_sell + p_buy = 1 and the lattice identity
        // opt_sell - opt_buy = s_ini - mc (zero-drift pricing measure).
        double max_par = 0;
        for (int i = 0; i < options.sessions; ++i) {
            TradingSession s = random_session();
            OptionQuote q = option_values(s);
            double norm = std::fabs(q.p_sell + q.p_buy - 1.0);
            double parity = std::fabs((q.opt_sell - q.opt_buy) - (s.s_ini - s.mc));
            max_par = std::max({max_par, norm, parity});
        }
        bool par_ok = max_par <= 1e-9;
        all_ok = all_ok && par_ok;
        {
            char line[160];
            std::snprintf(line, sizeof line,
                          "option oracle (%d sessions): max parity/normalization "
                          "deviation %.3e  %s\n",
                          options.sessions, max_par, par_ok ? "PASS" : "FAIL");
            out << line;
        }

        int n_models = 30;
        double max_gap = 0;
        bool milp_ok = true;
        for (int i = 0; i < n_models; ++i) {
            opt::Model m;
            int nv = 2 + rng.range(3);
            for (int v = 0; v < nv; ++v)
                m.add_var("x" + std::to_string(v), 0, 1 + rng.range(3),
                          opt::VarKind::kInteger);
            int nr = 1 + rng.range(4);
            for (int r = 0; r < nr; ++r) {
                std::vector<opt::Term> terms;
                for (int v = 0; v < nv; ++v) {
                    double coef = rng.range(9) - 4;
                    if (coef != 0) terms.push_back({v, coef});
                }
                if (terms.empty()) terms.push_back({0, 1.0});
                m.add_constraint(std::move(terms), opt::Sense::kLe, rng.range(13) - 2);
            }
            std::vector<opt::Term> obj;
            for (int v = 0; v < nv; ++v) obj.push_back({v, double(rng.range(11) - 5)});
            m.set_objective(std::move(obj));

            LatticeBest ref = lattice_optimum(m);
            opt::MipOptions mo;
            mo.abs_gap = 1e-9;
            opt::Solution sol = opt::solve_mip(m, mo);
            if (!ref.feasible) {
                if (sol.status != opt::SolveStatus::kInfeasible) milp_ok = false;
            } else if (sol.status != opt::SolveStatus::kOptimal) {
                milp_ok = false;
            } else {
                double gap = std::fabs(sol.objective - ref.objective);
                max_gap = std::max(max_gap, gap);
                if (gap > 1e-6 || opt::max_violation(m, sol.values) > 1e-6)
                    milp_ok = false;
            }
        }
        all_ok = all_ok && milp_ok;
        {
            char line[160];
            std::snprintf(line, sizeof line,
                          "milp oracle (%d instances): max objective gap %.3e  %s\n",
                          n_models, max_gap, milp_ok ? "PASS" : "FAIL");
            out << line;
        }

        out << (all_ok ? "validation passed\n" : "validation failed\n");
        return all_ok ? kExitOk : kExitValidation;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kExitSchema;
    }
}

int cmd_price_options(const TradingSession& session, std::ostream& out,
                      std::ostream& err) {
    try {
        check_session(session);
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kExitSchema;
    }
    OptionQuote q = option_values(session);
    BachelierLimit lim = bachelier_limit(session);
    out << "session: s_ini " << num(session.s_ini) << ", mu " << num(session.mu)
        << ", sigma " << num(session.sigma) << ", n_steps " << session.n_steps
        << ", mc " << num(session.mc) << "\n";
    out << "opt_sell " << num(q.opt_sell, "%.6f") << " EUR/MWh, opt_buy "
        << num(q.opt_buy, "%.6f") << " EUR/MWh\n";
    out << "p_sell " << num(q.p_sell, "%.6f") << ", p_buy " << num(q.p_buy, "%.6f")
        << "\n";
    out << "closed-form limit: sell " << num(lim.sell_limit, "%.6f") << ", buy "
        << num(lim.buy_limit, "%.6f") << " EUR/MWh\n";
    return kExitOk;
}

int cmd_estimate_mc(const RunConfig& cfg, double heat_demand, double cool_demand,
                    std::ostream& out, std::ostream& err) {
    try {
        EnergySystem system = load_units(cfg.units);
        MarginalCostFit fit =
            marginal_cost(system, heat_demand, cool_demand, cfg.mc_sweep_points);
        out << "marginal cost " << num(fit.mc, "%.9f") << " EUR/MWh\n";
        out << "intercept " << num(fit.intercept, "%.6f") << " EUR/h, r2 "
            << num(fit.r2, "%.9f") << "\n";
        out << "sweep (el demand MW -> cost EUR/h):\n";
        for (const auto& [d, c] : fit.sweep)
            out << "  " << num(d, "%.4f") << " -> " << num(c, "%.6f") << "\n";
        return kExitOk;
    } catch (const PipelineError& e) {
        err << e.what() << "\n";
        return kExitSchema;
    } catch (const DispatchError& e) {
        err << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kExitSchema;
    }
}

int cmd_report(const std::string& schedule_path, const std::string& csv_path,
               std::ostream& out, std::ostream& err) {
    try {
        json j = parse_json_file(schedule_path);
        const json& run = j.at("run");
        out << "schedule " << schedule_path << "\n";
        out << "day " << run.at("day_start").get<std::string>() << ", markets "
            << run.at("subset").get<std::string>() << ", sigma multiplier "
            << num(run.at("sigma_multiplier").get<double>()) << "\n";
        char total[200];
        const json& bd = j.at("breakdown");
        std::snprintf(total, sizeof total,
                      "expected OPEX %.2f EUR (gas %.2f, bp revenue %.2f, "
                      "da revenue %.2f, id revenue %.2f)\n",
                      j.at("expected_opex_eur").get<double>(),
                      bd.at("gas_cost_eur").get<double>(),
                      bd.at("bp_revenue_eur").get<double>(),
                      bd.at("da_revenue_eur").get<double>(),
                      bd.at("id_revenue_eur").get<double>());
        out << total;
        for (const auto& s : j.at("slices")) {
            char line[200];
            std::snprintf(line, sizeof line,
                          "slice %d (hours %02d-%02d): combination %d, bp+ %g MW @ cp "
                          "%g, bp- %g MW @ cp %g, opex %.2f EUR\n",
                          s.at("slice").get<int>(), s.at("slice").get<int>() * 4,
                          s.at("slice").get<int>() * 4 + 3,
                          s.at("combination_index").get<int>(),
                          s.at("bp_plus_mw").get<double>(),
                          s.at("prices").at("cp_plus").get<double>(),
                          s.at("bp_minus_mw").get<double>(),
                          s.at("prices").at("cp_minus").get<double>(),
                          s.at("expected_opex_eur").get<double>());
            out << line;
        }
        if (!csv_path.empty()) {
            std::ofstream csv(csv_path, std::ios::binary);
            if (!csv) {
                err << "cannot write " << csv_path << "\n";
                return kExitSchema;
            }
            csv << "slice,hour,branch,bp_plus_mw,bp_minus_mw,da_side,da_sell_mwh,"
                   "da_buy_mwh,id_sell_mwh,id_buy_mwh\n";
            for (const auto& s : j.at("slices")) {
                for (const auto& h : s.at("hours")) {
                    for (const auto& b : h.at("branches")) {
                        char row[240];
                        std::snprintf(row, sizeof row,
                                      "%d,%d,%d,%.10g,%.10g,%s,%.10g,%.10g,%.10g,%.10g\n",
                                      s.at("slice").get<int>(), h.at("hour").get<int>(),
                                      b.at("branch").get<int>(),
                                      s.at("bp_plus_mw").get<double>(),
                                      s.at("bp_minus_mw").get<double>(),
                                      b.at("da_side").get<std::string>().c_str(),
                                      b.at("da_sell_mwh").get<double>(),
                                      b.at("da_buy_mwh").get<double>(),
                                      b.at("id_sell_mwh").get<double>(),
                                      b.at("id_buy_mwh").get<double>());
                        csv << row;
                    }
                }
            }
            out << "rows written to " << csv_path << "\n";
        }
        return kExitOk;
    } catch (const PipelineError& e) {
        err << e.what() << "\n";
        return kExitSchema;
    } catch (const json::exception& e) {
        err << schedule_path << ": " << e.what() << "\n";
        return kExitSchema;
    }
}

}  // namespace flexbid
