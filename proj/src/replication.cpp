#include "flexbid/replication.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace flexbid {

HedgeTree build_hedge_tree(const TradingSession& session, OptionSide side) {
    const StepMoves m = step_moves(session);
    const int n = session.n_steps;
    const double q = -m.d / (m.u - m.d);
    const double spread = m.u - m.d;

    HedgeTree tree;
    tree.side = side;
    tree.values.resize(n + 1);
    tree.ratios.resize(n);
    for (int i = 0; i <= n; ++i) tree.values[i].resize(i + 1);
    for (int i = 0; i < n; ++i) tree.ratios[i].resize(i + 1);

    for (int k = 0; k <= n; ++k) {
        const double price = session.s_ini + k * m.u + (n - k) * m.d;
        tree.values[n][k] = side == OptionSide::kSell
                                ? std::max(price - session.mc, 0.0)
                                : std::max(session.mc - price, 0.0);
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int k = 0; k <= i; ++k) {
            const double up = tree.values[i + 1][k + 1];
            const double down = tree.values[i + 1][k];
            tree.values[i][k] = q * up + (1.0 - q) * down;
            tree.ratios[i][k] =
                (side == OptionSide::kSell ? up - down : down - up) / spread;
        }
    }
    return tree;
}

PathResult replay_path(const HedgeTree& tree, const TradingSession& session,
                       const std::vector<bool>& path) {
    const int n = session.n_steps;
    if (static_cast<int>(path.size()) != n)
        throw std::invalid_argument("replay_path: path length != n_steps");
    const StepMoves m = step_moves(session);
    const double sign = tree.side == OptionSide::kSell ? 1.0 : -1.0;

    PathResult result;
    int k = 0;
    for (int i = 0; i < n; ++i) {
        const double move = path[i] ? m.u : m.d;
        result.trading_pnl += sign * tree.ratios[i][k] * move;
        if (path[i]) ++k;
    }
    const double price = session.s_ini + k * m.u + (n - k) * m.d;
    result.payoff = tree.side == OptionSide::kSell
                        ? std::max(price - session.mc, 0.0)
                        : std::max(session.mc - price, 0.0);
    result.final_position = result.payoff > 0.0 ? 1 : 0;
    return result;
}

double validate_replication(const TradingSession& session, ReplicationMode mode,
                            int n_samples, uint64_t seed) {
    const int n = session.n_steps;
    if (mode == ReplicationMode::kExhaustive && n > 16)
        throw std::invalid_argument(
            "validate_replication: exhaustive mode requires n_steps <= 16");

    double worst = 0.0;
    std::vector<bool> path(n);
    for (OptionSide side : {OptionSide::kSell, OptionSide::kBuy}) {
        const HedgeTree tree = build_hedge_tree(session, side);
        const double root = tree.values[0][0];
        auto replay = [&] {
            const PathResult r = replay_path(tree, session, path);
            const double err = std::fabs(root + r.trading_pnl - r.payoff);
            if (err > worst) worst = err;
        };
        if (mode == ReplicationMode::kExhaustive) {
            for (uint64_t bits = 0; bits < (uint64_t(1) << n); ++bits) {
                for (int i = 0; i < n; ++i) path[i] = (bits >> i) & 1;
                replay();
            }
        } else {
            std::mt19937_64 rng(seed);
            for (int s = 0; s < n_samples; ++s) {
                for (int i = 0; i < n; ++i) path[i] = rng() & 1;
                replay();
            }
        }
    }
    return worst;
}

}  // namespace flexbid
