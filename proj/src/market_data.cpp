#include "flexbid/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "flexbid/csv.hpp"
#include "flexbid/stats.hpp"
#include "flexbid/time_util.hpp"

namespace flexbid {

namespace {

constexpr int64_t kQuarter = 900;

int64_t parse_ts_cell(const CsvTable& t, size_t row, int col) {
    try {
        return parse_timestamp(t.rows[row][col]);
    } catch (const std::invalid_argument& e) {
        throw CsvError(t.path, static_cast<int>(row) + 2, e.what());
    }
}

void require_increasing(const CsvTable& t, int64_t prev, int64_t cur,
                        size_t row) {
    if (cur <= prev)
        throw CsvError(t.path, static_cast<int>(row) + 2,
                       "timestamps must be strictly increasing");
}

double nonneg_cell(const CsvTable& t, size_t row, int col) {
    const double v = parse_double_cell(t, row, col);
    if (v < 0)
        throw CsvError(t.path, static_cast<int>(row) + 2,
                       "column '" + t.header[col] + "' must be nonnegative");
    return v;
}

// Uniform double in [0,1) from raw engine output; avoids the
// implementation-defined std::distributions for reproducibility.
double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sq_dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0;
    for (int f = 0; f < 3; ++f) {
        const double d = a[f] - b[f];
        s += d * d;
    }
    return s;
}

}  // namespace

std::vector<ForecastRecord> load_forecasts(const std::string& path) {
    CsvTable t = read_csv(path);
    require_columns(t, {"timestamp", "wind_mw", "pv_mw", "load_mw"});
    std::vector<ForecastRecord> out;
    int64_t prev = std::numeric_limits<int64_t>::min();
    for (size_t r = 0; r < t.rows.size(); ++r) {
        ForecastRecord rec;
        rec.timestamp = parse_ts_cell(t, r, 0);
        require_increasing(t, prev, rec.timestamp, r);
        prev = rec.timestamp;
        rec.wind = nonneg_cell(t, r, 1);
        rec.pv = nonneg_cell(t, r, 2);
        rec.load = nonneg_cell(t, r, 3);
        out.push_back(rec);
    }
    return out;
}

std::vector<SpotRecord> load_spot(const std::string& path) {
    CsvTable t = read_csv(path);
    require_columns(t, {"timestamp", "da_price_eur_mwh", "id1_price_eur_mwh"});
    std::vector<SpotRecord> out;
    int64_t prev = std::numeric_limits<int64_t>::min();
    for (size_t r = 0; r < t.rows.size(); ++r) {
        SpotRecord rec;
        rec.timestamp = parse_ts_cell(t, r, 0);
        require_increasing(t, prev, rec.timestamp, r);
        prev = rec.timestamp;
        rec.da = parse_double_cell(t, r, 1);
        rec.id1 = parse_double_cell(t, r, 2);
        out.push_back(rec);
    }
    return out;
}

std::vector<BpAuctionRecord> load_bp_auctions(const std::string& path) {
    CsvTable t = read_csv(path);
    require_columns(t, {"slice_start", "direction", "marginal_cp_eur_mw_h",
                        "marginal_ep_eur_mwh"});
    std::vector<BpAuctionRecord> out;
    int64_t prev_pos = std::numeric_limits<int64_t>::min();
    int64_t prev_neg = std::numeric_limits<int64_t>::min();
    for (size_t r = 0; r < t.rows.size(); ++r) {
        BpAuctionRecord rec;
        rec.slice_start = parse_ts_cell(t, r, 0);
        const std::string& dir = t.rows[r][1];
        if (dir == "pos") {
            rec.direction = Direction::kPos;
            require_increasing(t, prev_pos, rec.slice_start, r);
            prev_pos = rec.slice_start;
        } else if (dir == "neg") {
            rec.direction = Direction::kNeg;
            require_increasing(t, prev_neg, rec.slice_start, r);
            prev_neg = rec.slice_start;
        } else {
            throw CsvError(t.path, static_cast<int>(r) + 2,
                           "direction must be 'pos' or 'neg', got '" + dir + "'");
        }
        rec.marginal_cp = parse_double_cell(t, r, 2);
        rec.marginal_ep = parse_double_cell(t, r, 3);
        out.push_back(rec);
    }
    return out;
}

std::vector<DemandRecord> load_demands(const std::string& path) {
    CsvTable t = read_csv(path);
    require_columns(t, {"timestamp", "el_mw", "heat_mw", "cool_mw"});
    std::vector<DemandRecord> out;
    int64_t prev = std::numeric_limits<int64_t>::min();
    for (size_t r = 0; r < t.rows.size(); ++r) {
        DemandRecord rec;
        rec.timestamp = parse_ts_cell(t, r, 0);
        require_increasing(t, prev, rec.timestamp, r);
        prev = rec.timestamp;
        rec.el = nonneg_cell(t, r, 1);
        rec.heat = nonneg_cell(t, r, 2);
        rec.cool = nonneg_cell(t, r, 3);
        out.push_back(rec);
    }
    return out;
}

std::vector<ForecastPoint> aggregate_forecasts(
    const std::vector<ForecastRecord>& records, int window_hours) {
    if (window_hours != 1 && window_hours != 4)
        throw std::invalid_argument("aggregate_forecasts: window must be 1h or 4h");
    if (records.empty())
        throw MarketDataError("aggregate_forecasts: no records");
    const int64_t window = window_hours * 3600;
    if (records.front().timestamp % window != 0)
        throw MarketDataError("aggregate_forecasts: series must start on a " +
                              std::to_string(window_hours) + "h boundary, got " +
                              format_timestamp(records.front().timestamp));
    for (size_t i = 1; i < records.size(); ++i) {
        const int64_t expected = records[i - 1].timestamp + kQuarter;
        if (records[i].timestamp != expected)
            throw MarketDataError("aggregate_forecasts: missing interval at " +
                                  format_timestamp(expected));
    }
    const int per_window = window_hours * 4;
    if (records.size() % per_window != 0)
        throw MarketDataError(
            "aggregate_forecasts: series does not cover whole windows");

    std::vector<ForecastPoint> out;
    for (size_t i = 0; i < records.size(); i += per_window) {
        ForecastPoint p;
        p.start = records[i].timestamp;
        for (int j = 0; j < per_window; ++j) {
            p.features[0] += records[i + j].wind;
            p.features[1] += records[i + j].pv;
            p.features[2] += records[i + j].load;
        }
        for (double& f : p.features) f /= per_window;
        out.push_back(p);
    }
    return out;
}

int ClusterModel::assign(const std::array<double, 3>& raw_point) const {
    std::array<double, 3> z;
    for (int f = 0; f < 3; ++f)
        z[f] = (raw_point[f] - feat_mean[f]) / feat_scale[f];
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
        const double d = sq_dist(z, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

ClusterModel kmeans(const std::vector<std::array<double, 3>>& points, int k,
                    uint64_t seed, int max_iter) {
    const int n = static_cast<int>(points.size());
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (n < k) throw std::invalid_argument("kmeans: fewer points than clusters");

    ClusterModel model;
    model.k = k;
    for (int f = 0; f < 3; ++f) {
        double sum = 0;
        for (const auto& p : points) sum += p[f];
        model.feat_mean[f] = sum / n;
        double ss = 0;
        for (const auto& p : points) {
            const double d = p[f] - model.feat_mean[f];
            ss += d * d;
        }
        const double sd = n >= 2 ? std::sqrt(ss / (n - 1)) : 0.0;
        model.feat_scale[f] = sd > 1e-12 ? sd : 1.0;
    }
    std::vector<std::array<double, 3>> z(n);
    for (int i = 0; i < n; ++i)
        for (int f = 0; f < 3; ++f)
            z[i][f] = (points[i][f] - model.feat_mean[f]) / model.feat_scale[f];

    // k-means++ style seeding
    std::mt19937_64 rng(seed);
    std::vector<int> centers;
    centers.push_back(static_cast<int>(rng() % n));
    std::vector<double> min_d(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int c : centers) best = std::min(best, sq_dist(z[i], z[c]));
            min_d[i] = best;
            total += best;
        }
        int pick = -1;
        if (total <= 0) {
            // all remaining mass on duplicates: take the lowest unused index
            for (int i = 0; i < n && pick < 0; ++i)
                if (std::find(centers.begin(), centers.end(), i) == centers.end())
                    pick = i;
        } else {
            const double target = unit_draw(rng) * total;
            double acc = 0;
            for (int i = 0; i < n; ++i) {
                if (min_d[i] <= 0) continue;
                acc += min_d[i];
                pick = i;
                if (acc >= target) break;
            }
        }
        centers.push_back(pick);
    }
    model.centroids.resize(k);
    for (int c = 0; c < k; ++c) model.centroids[c] = z[centers[c]];

    // Lloyd iterations
    model.assignment.assign(n, -1);
    for (int iter = 0; iter <= max_iter; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(z[i], model.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (best != model.assignment[i]) {
                model.assignment[i] = best;
                changed = true;
            }
        }
        if (!changed || iter == max_iter) break;

        std::vector<std::array<double, 3>> sums(k, {0, 0, 0});
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            for (int f = 0; f < 3; ++f) sums[model.assignment[i]][f] += z[i][f];
            ++counts[model.assignment[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // relocate to the point farthest from its centroid
                int far = 0;
                double far_d = -1;
                for (int i = 0; i < n; ++i) {
                    const double d = sq_dist(z[i], model.centroids[model.assignment[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                model.centroids[c] = z[far];
            } else {
                for (int f = 0; f < 3; ++f)
                    model.centroids[c][f] = sums[c][f] / counts[c];
            }
        }
    }

    model.inertia = 0;
    for (int i = 0; i < n; ++i)
        model.inertia += sq_dist(z[i], model.centroids[model.assignment[i]]);
    return model;
}

std::vector<ClusterStat> fit_intraday_stats(const ClusterModel& model,
                                            const std::vector<double>& price_diffs) {
    if (price_diffs.size() != model.assignment.size())
        throw std::invalid_argument(
            "fit_intraday_stats: one price diff per clustered point required");
    std::vector<std::vector<double>> buckets(model.k);
    for (size_t i = 0; i < price_diffs.size(); ++i)
        buckets[model.assignment[i]].push_back(price_diffs[i]);

    std::vector<ClusterStat> stats(model.k);
    for (int c = 0; c < model.k; ++c) {
        stats[c].count = static_cast<int>(buckets[c].size());
        if (stats[c].count < 2)
            throw MarketDataError("cluster " + std::to_string(c) + " has " +
                                  std::to_string(stats[c].count) +
                                  " samples; at least 2 needed to fit");
        stats[c].mu = sample_mean(buckets[c]);
        stats[c].sigma = sample_std(buckets[c]);
    }
    return stats;
}

double ProbabilityCurve::probability(double price) const {
    const auto it = std::upper_bound(sorted_marginals.begin(),
                                     sorted_marginals.end(), price);
    return static_cast<double>(sorted_marginals.end() - it) /
           static_cast<double>(sorted_marginals.size());
}

ProbabilityCurve probability_curve(const std::vector<double>& marginals) {
    if (marginals.empty())
        throw MarketDataError("probability_curve: no auction observations");
    ProbabilityCurve curve;
    curve.sorted_marginals = marginals;
    std::sort(curve.sorted_marginals.begin(), curve.sorted_marginals.end());
    for (size_t i = 0; i < curve.sorted_marginals.size(); ++i) {
        const double p = curve.sorted_marginals[i];
        if (i + 1 < curve.sorted_marginals.size() &&
            curve.sorted_marginals[i + 1] == p)
            continue;  // keep the last of a run of duplicates
        curve.points.emplace_back(p, curve.probability(p));
    }
    return curve;
}

namespace {

std::vector<LadderEntry> pick_rungs(const ProbabilityCurve& curve,
                                    const std::vector<double>& targets,
                                    const char* kind) {
    for (double t : targets)
        if (!(t > 0 && t < 1))
            throw std::invalid_argument(std::string("select_ladder: ") + kind +
                                        " target outside (0,1)");
    std::vector<double> sorted_targets = targets;
    std::sort(sorted_targets.begin(), sorted_targets.end(),
              std::greater<double>());

    std::vector<LadderEntry> rungs;
    for (double t : sorted_targets) {
        bool found = false;
        LadderEntry best{};
        for (const auto& [price, prob] : curve.points) {
            if (prob >= t) {
                best = {price, prob};
                found = true;
            }
        }
        if (!found) continue;  // target unreachable; shortfall caught below
        if (rungs.empty() || rungs.back().price != best.price)
            rungs.push_back(best);
    }
    if (rungs.size() < targets.size())
        throw MarketDataError(std::string("select_ladder: not enough distinct ") +
                              kind + " prices for the requested targets");
    return rungs;
}

}  // namespace

PriceLadder select_ladder(const ProbabilityCurve& capacity,
                          const ProbabilityCurve& energy,
                          const std::vector<double>& capacity_targets,
                          const std::vector<double>& energy_targets) {
    PriceLadder ladder;
    ladder.capacity = pick_rungs(capacity, capacity_targets, "capacity");
    ladder.energy = pick_rungs(energy, energy_targets, "energy");
    return ladder;
}

std::vector<PriceCombination> build_combinations(const PriceLadder& pos,
                                                 const PriceLadder& neg) {
    std::vector<PriceCombination> combos;
    for (const LadderEntry& cp : pos.capacity)
        for (const LadderEntry& ep : pos.energy)
            for (const LadderEntry& cn : neg.capacity)
                for (const LadderEntry& en : neg.energy) {
                    PriceCombination c;
                    c.cp_plus = cp.price;
                    c.acc_prob_plus = cp.probability;
                    c.ep_plus = ep.price;
                    c.req_prob_plus = ep.probability;
                    c.cp_minus = cn.price;
                    c.acc_prob_minus = cn.probability;
                    c.ep_minus = en.price;
                    c.req_prob_minus = en.probability;
                    combos.push_back(c);
                }
    return combos;
}

std::vector<int> typical_weeks(
    const std::vector<std::array<double, 3>>& hourly_demands, int k,
    uint64_t seed) {
    (void)seed;
    constexpr int kWeek = 168;
    if (hourly_demands.empty() || hourly_demands.size() % kWeek != 0)
        throw MarketDataError(
            "typical_weeks: series must cover whole 168-hour weeks");
    const int weeks = static_cast<int>(hourly_demands.size()) / kWeek;
    if (k < 1) throw std::invalid_argument("typical_weeks: k must be >= 1");
    if (weeks < k)
        throw MarketDataError("typical_weeks: only " + std::to_string(weeks) +
                              " whole weeks for k=" + std::to_string(k));

    // pairwise Euclidean distances between week vectors
    std::vector<std::vector<double>> dist(weeks, std::vector<double>(weeks, 0));
    for (int a = 0; a < weeks; ++a)
        for (int b = a + 1; b < weeks; ++b) {
            double s = 0;
            for (int h = 0; h < kWeek; ++h)
                s += sq_dist(hourly_demands[a * kWeek + h],
                             hourly_demands[b * kWeek + h]);
            dist[a][b] = dist[b][a] = std::sqrt(s);
        }

    auto total_cost = [&](const std::vector<int>& medoids) {
        double cost = 0;
        for (int w = 0; w < weeks; ++w) {
            double best = std::numeric_limits<double>::infinity();
            for (int m : medoids) best = std::min(best, dist[w][m]);
            cost += best;
        }
        return cost;
    };

    // greedy build
    std::vector<int> medoids;
    for (int round = 0; round < k; ++round) {
        int best_w = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int w = 0; w < weeks; ++w) {
            if (std::find(medoids.begin(), medoids.end(), w) != medoids.end())
                continue;
            medoids.push_back(w);
            const double c = total_cost(medoids);
            medoids.pop_back();
            if (c < best_cost - 1e-12) {
                best_cost = c;
                best_w = w;
            }
        }
        medoids.push_back(best_w);
    }

    // swap phase: best strict improvement per round
    double current = total_cost(medoids);
    bool improved = true;
    while (improved) {
        improved = false;
        int swap_m = -1, swap_w = -1;
        double best_cost = current;
        for (size_t mi = 0; mi < medoids.size(); ++mi) {
            for (int w = 0; w < weeks; ++w) {
                if (std::find(medoids.begin(), medoids.end(), w) != medoids.end())
                    continue;
                const int saved = medoids[mi];
                medoids[mi] = w;
                const double c = total_cost(medoids);
                medoids[mi] = saved;
                if (c < best_cost - 1e-12) {
                    best_cost = c;
                    swap_m = static_cast<int>(mi);
                    swap_w = w;
                }
            }
        }
        if (swap_m >= 0) {
            medoids[swap_m] = swap_w;
            current = best_cost;
            improved = true;
        }
    }
    std::sort(medoids.begin(), medoids.end());
    return medoids;
}

}  // namespace flexbid
