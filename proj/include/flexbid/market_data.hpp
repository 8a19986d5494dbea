#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flexbid {

// Raised when inputs are structurally fine but statistically unusable
// (gaps, too few samples, not enough distinct prices, incomplete weeks).
class MarketDataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Input records (CSV loaders validate schema, ordering and sign conventions
// and raise CsvError with file/row context on violations).

struct ForecastRecord {
    int64_t timestamp = 0;  // quarter-hourly
    double wind = 0, pv = 0, load = 0;  // MW, nonnegative
};

struct SpotRecord {
    int64_t timestamp = 0;  // hourly
    double da = 0, id1 = 0;  // EUR/MWh
};

enum class Direction { kPos, kNeg };

struct BpAuctionRecord {
    int64_t slice_start = 0;  // 4-hourly
    Direction direction = Direction::kPos;
    double marginal_cp = 0;  // EUR per MW and hour
    double marginal_ep = 0;  // EUR/MWh
};

struct DemandRecord {
    int64_t timestamp = 0;  // hourly
    double el = 0, heat = 0, cool = 0;  // MW, nonnegative
};

std::vector<ForecastRecord> load_forecasts(const std::string& path);
std::vector<SpotRecord> load_spot(const std::string& path);
std::vector<BpAuctionRecord> load_bp_auctions(const std::string& path);
std::vector<DemandRecord> load_demands(const std::string& path);

// ---------------------------------------------------------------------------
// Forecast aggregation and clustering.

struct ForecastPoint {
    int64_t start = 0;
    std::array<double, 3> features{};  // mean wind, pv, load over the window
};

// Means over aligned whole windows of 1 or 4 hours. Requires exact
// quarter-hour spacing (gaps raise MarketDataError naming the missing
// interval), window-aligned start, and a whole number of windows.
std::vector<ForecastPoint> aggregate_forecasts(
    const std::vector<ForecastRecord>& records, int window_hours);

struct ClusterModel {
    int k = 0;
    std::array<double, 3> feat_mean{};
    std::array<double, 3> feat_scale{};           // z-score denominators
    std::vector<std::array<double, 3>> centroids;  // in normalized space
    std::vector<int> assignment;                   // per input point
    double inertia = 0;  // sum of squared normalized distances

    // Nearest centroid for a raw feature triple (ties: lowest index).
    int assign(const std::array<double, 3>& raw_point) const;
};

// Lloyd's algorithm over z-scored features, seeded k-means++ style from the
// given seed; deterministic for a fixed seed. Stops when assignments are
// stable or after max_iter rounds.
ClusterModel kmeans(const std::vector<std::array<double, 3>>& points, int k,
                    uint64_t seed, int max_iter = 100);

// ---------------------------------------------------------------------------
// Cluster-conditional intraday statistics.

struct ClusterStat {
    double mu = 0;     // EUR/MWh
    double sigma = 0;  // EUR/MWh, unbiased (n-1)
    int count = 0;
};

// price_diffs[i] belongs to the point behind model.assignment[i]
// (ID1 minus day-ahead for that hour). Every cluster needs >= 2 samples.
std::vector<ClusterStat> fit_intraday_stats(const ClusterModel& model,
                                            const std::vector<double>& price_diffs);

// ---------------------------------------------------------------------------
// Empirical exceedance curves and bid ladders.

// P(marginal price > query) with strict inequality; right-continuous,
// non-increasing step function built from observed auction marginals.
struct ProbabilityCurve {
    std::vector<double> sorted_marginals;               // ascending
    std::vector<std::pair<double, double>> points;      // distinct price, prob
    double probability(double price) const;
};

ProbabilityCurve probability_curve(const std::vector<double>& marginals);

struct LadderEntry {
    double price = 0;
    double probability = 0;  // curve value at the price
};

// capacity entries paired with acceptance probabilities, energy entries with
// request probabilities; prices ascending, probabilities strictly decreasing.
struct PriceLadder {
    std::vector<LadderEntry> capacity;
    std::vector<LadderEntry> energy;
};

// For each target probability picks the largest observed price whose curve
// probability still reaches the target. Targets must lie in (0,1); ladders
// with fewer distinct prices than targets raise MarketDataError.
PriceLadder select_ladder(const ProbabilityCurve& capacity,
                          const ProbabilityCurve& energy,
                          const std::vector<double>& capacity_targets,
                          const std::vector<double>& energy_targets);

// One candidate bid pair for both directions with its probabilities.
struct PriceCombination {
    double cp_plus = 0, ep_plus = 0;
    double cp_minus = 0, ep_minus = 0;
    double acc_prob_plus = 0, acc_prob_minus = 0;
    double req_prob_plus = 0, req_prob_minus = 0;
};

// Cross product of both ladders (cp+ x ep+ x cp- x ep-, inner loops last),
// 3*4*3*4 = 144 entries for full ladders.
std::vector<PriceCombination> build_combinations(const PriceLadder& pos,
                                                 const PriceLadder& neg);

// ---------------------------------------------------------------------------
// Typical demand weeks.

// Partitioning-around-medoids over whole weeks of hourly (el, heat, cool)
// triples with Euclidean distance; returns sorted medoid week indices.
// The algorithm (greedy build + best-improvement swap, ties to the lowest
// index) is deterministic; the seed parameter is accepted for interface
// stability and does not alter the result.
std::vector<int> typical_weeks(
    const std::vector<std::array<double, 3>>& hourly_demands, int k,
    uint64_t seed);

}  // namespace flexbid
