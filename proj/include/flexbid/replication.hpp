#pragma once

#include <cstdint>
#include <vector>

#include "flexbid/binomial.hpp"

namespace flexbid {

enum class OptionSide { kSell, kBuy };

// Backward-induction tree over the price lattice. values[i][k] is the option
// value at step i after k up moves; ratios[i][k] is the share of flexible
// capacity held against the option between steps i and i+1 (the delta of the
// additive model: value spread over price spread), always inside [0,1].
struct HedgeTree {
    OptionSide side = OptionSide::kSell;
    std::vector<std::vector<double>> values;  // i = 0..n_steps, k = 0..i
    std::vector<std::vector<double>> ratios;  // i = 0..n_steps-1, k = 0..i
};

// Replay of one concrete price path against the hedge.
struct PathResult {
    double payoff = 0;        // terminal option payoff, EUR/MWh
    double trading_pnl = 0;   // accumulated rebalancing gains, EUR/MWh
    int final_position = 0;   // 1 when capacity is delivered (payoff > 0)
};

HedgeTree build_hedge_tree(const TradingSession& session, OptionSide side);

// path[i] is true for an up move at step i; length must equal n_steps.
// Sell side earns ratio * move per step, buy side earns the negative.
// Market completeness makes values[0][0] + trading_pnl == payoff exactly.
PathResult replay_path(const HedgeTree& tree, const TradingSession& session,
                       const std::vector<bool>& path);

enum class ReplicationMode { kExhaustive, kSampled };

// Maximum |values[0][0] + trading_pnl - payoff| over replayed paths, both
// option sides. Exhaustive mode walks all 2^n_steps paths and requires
// n_steps <= 16; sampled mode draws n_samples paths from the given seed.
double validate_replication(const TradingSession& session, ReplicationMode mode,
                            int n_samples = 0, uint64_t seed = 0);

}  // namespace flexbid
