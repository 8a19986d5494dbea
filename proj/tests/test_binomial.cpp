#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "flexbid/binomial.hpp"
#include "flexbid/replication.hpp"

using namespace flexbid;

namespace {

TradingSession session(double s_ini, double mu, double sigma, int n_steps,
                       double mc) {
    TradingSession s;
    s.s_ini = s_ini;
    s.mu = mu;
    s.sigma = sigma;
    s.n_steps = n_steps;
    s.mc = mc;
    return s;
}

TradingSession random_session(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> price(10.0, 120.0);
    std::uniform_real_distribution<double> vol(0.5, 25.0);
    std::uniform_int_distribution<int> steps(1, 40);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    TradingSession s;
    s.s_ini = price(rng);
    s.sigma = vol(rng);
    s.n_steps = steps(rng);
    s.mu = unit(rng) * s.sigma * std::sqrt(double(s.n_steps));
    s.mc = price(rng);
    return s;
}

}  // namespace

TEST_CASE("step moves at the pinned points") {
    StepMoves m = step_moves(session(0, 0, 10, 2, 0));
    CHECK(m.u == doctest::Approx(7.0710678).epsilon(1e-6));
    CHECK(m.d == doctest::Approx(-7.0710678).epsilon(1e-6));

    m = step_moves(session(0, 2, 10, 1, 0));
    CHECK(m.u == doctest::Approx(12.0));
    CHECK(m.d == doctest::Approx(-8.0));

    m = step_moves(session(0, 0, 5, 1, 0));
    CHECK(m.u == doctest::Approx(5.0));
    CHECK(m.d == doctest::Approx(-5.0));
}

TEST_CASE("step moves bracket zero for any valid session") {
    std::mt19937_64 rng(101);
    for (int it = 0; it < 200; ++it) {
        TradingSession s = random_session(rng);
        StepMoves m = step_moves(s);
        CHECK(m.u >= -1e-12);
        CHECK(m.d <= 1e-12);
        CHECK(m.u - m.d ==
              doctest::Approx(2 * s.sigma / std::sqrt(double(s.n_steps))));
    }
}

TEST_CASE("invalid sessions are rejected") {
    CHECK_THROWS_AS(step_moves(session(50, 0, 0, 2, 50)), std::invalid_argument);
    CHECK_THROWS_AS(step_moves(session(50, 0, -1, 2, 50)), std::invalid_argument);
    CHECK_THROWS_AS(step_moves(session(50, 0, 10, 0, 50)), std::invalid_argument);
    CHECK_THROWS_AS(step_moves(session(50, 15, 10, 2, 50)),
                    std::invalid_argument);  // |mu| > sigma*sqrt(2)
    // the boundary |mu| = sigma*sqrt(n) is allowed
    CHECK_NOTHROW(step_moves(session(50, 10 * std::sqrt(2.0), 10, 2, 50)));
}

TEST_CASE("terminal prices at the pinned points") {
    auto p = terminal_prices(session(50, 0, 10, 2, 0));
    REQUIRE(p.size() == 3);
    CHECK(p[0] == doctest::Approx(35.8579).epsilon(1e-5));
    CHECK(p[1] == doctest::Approx(50.0));
    CHECK(p[2] == doctest::Approx(64.1421).epsilon(1e-5));

    p = terminal_prices(session(50, 2, 10, 1, 0));
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(42.0));
    CHECK(p[1] == doctest::Approx(62.0));
}

TEST_CASE("terminal price span telescopes to 2*sigma*sqrt(n)") {
    std::mt19937_64 rng(102);
    for (int it = 0; it < 200; ++it) {
        TradingSession s = random_session(rng);
        auto p = terminal_prices(s);
        REQUIRE(p.size() == size_t(s.n_steps + 1));
        for (size_t k = 1; k < p.size(); ++k) CHECK(p[k] > p[k - 1]);
        CHECK(p.back() - p.front() ==
              doctest::Approx(2 * s.sigma * std::sqrt(double(s.n_steps)))
                  .epsilon(1e-9));
    }
}

TEST_CASE("option values at the pinned points") {
    OptionQuote q = option_values(session(50, 0, 10, 2, 50));
    CHECK(q.opt_sell == doctest::Approx(3.5355339).epsilon(1e-6));
    CHECK(q.opt_buy == doctest::Approx(3.5355339).epsilon(1e-6));
    CHECK(q.p_sell == doctest::Approx(0.5).epsilon(1e-12));

    q = option_values(session(50, 2, 10, 1, 50));
    CHECK(q.opt_sell == doctest::Approx(4.8).epsilon(1e-9));
    CHECK(q.opt_buy == doctest::Approx(4.8).epsilon(1e-9));

    q = option_values(session(50, 0, 1, 4, 0));
    CHECK(q.opt_sell == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(q.opt_buy == doctest::Approx(0.0));
}

TEST_CASE("parity and normalization over random sessions") {
    std::mt19937_64 rng(103);
    for (int it = 0; it < 300; ++it) {
        TradingSession s = random_session(rng);
        OptionQuote q = option_values(s);
        CHECK(std::fabs(q.opt_sell - q.opt_buy - (s.s_ini - s.mc)) <= 1e-9);
        CHECK(q.p_sell + q.p_buy == 1.0);  // exact complement
        CHECK(q.p_sell >= 0.0);
        CHECK(q.p_sell <= 1.0);
        CHECK(q.opt_sell >= std::max(s.s_ini - s.mc, 0.0) - 1e-9);
        CHECK(q.opt_buy >= std::max(s.mc - s.s_ini, 0.0) - 1e-9);
    }
}

TEST_CASE("drift boundary collapses to a point mass") {
    // mu = sigma*sqrt(n): the risk-neutral weight sits on one lattice node.
    const double sigma = 10.0;
    TradingSession s = session(50, sigma * std::sqrt(4.0), sigma, 4, 55);
    OptionQuote q = option_values(s);
    // q = 0: mass on the all-down node, whose price is s_ini exactly
    CHECK(q.opt_sell == doctest::Approx(0.0));
    CHECK(q.opt_buy == doctest::Approx(5.0));
    CHECK(std::fabs(q.opt_sell - q.opt_buy - (s.s_ini - s.mc)) <= 1e-9);

    s.mu = -s.mu;
    q = option_values(s);
    CHECK(q.opt_sell == doctest::Approx(0.0));
    CHECK(q.opt_buy == doctest::Approx(5.0));
}

TEST_CASE("sell value is monotone in sigma and mc at zero drift") {
    double prev = -1.0;
    for (double sigma : {1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) {
        OptionQuote q = option_values(session(50, 0, sigma, 16, 55));
        CHECK(q.opt_sell >= prev - 1e-12);
        prev = q.opt_sell;
    }
    prev = 1e300;
    for (double mc : {20.0, 35.0, 50.0, 65.0, 80.0}) {
        OptionQuote q = option_values(session(50, 0, 10, 16, mc));
        CHECK(q.opt_sell <= prev + 1e-12);
        prev = q.opt_sell;
    }
    prev = -1.0;
    for (double mc : {20.0, 35.0, 50.0, 65.0, 80.0}) {
        OptionQuote q = option_values(session(50, 0, 10, 16, mc));
        CHECK(q.opt_buy >= prev - 1e-12);
        prev = q.opt_buy;
    }
}

TEST_CASE("bachelier limit at the pinned points") {
    BachelierLimit b = bachelier_limit(session(50, 0, 10, 1, 55));
    CHECK(b.sell_limit == doctest::Approx(1.9780).epsilon(1e-4));
    b = bachelier_limit(session(50, 0, 10, 1, 50));
    CHECK(b.sell_limit == doctest::Approx(3.9894228).epsilon(1e-6));
    // intrinsic-value limit far in the money
    b = bachelier_limit(session(50, 0, 10, 1, -1e5));
    CHECK(b.sell_limit == doctest::Approx(50.0 + 1e5).epsilon(1e-12));
    CHECK_THROWS_AS(bachelier_limit(session(50, 0, 0, 1, 50)),
                    std::invalid_argument);
}

TEST_CASE("binomial values converge to the bachelier limit") {
    for (double mc : {40.0, 50.0, 55.0, 62.0}) {
        TradingSession s = session(50, 0, 10, 2000, mc);
        OptionQuote q = option_values(s);
        BachelierLimit b = bachelier_limit(s);
        CHECK(std::fabs(q.opt_sell - b.sell_limit) <= 1e-3 * s.sigma);
        CHECK(std::fabs(q.opt_buy - b.buy_limit) <= 1e-3 * s.sigma);
    }
}

TEST_CASE("hedge tree matches the hand-computed example") {
    TradingSession s = session(50, 0, 10, 2, 50);
    HedgeTree t = build_hedge_tree(s, OptionSide::kSell);
    CHECK(t.values[0][0] == doctest::Approx(3.5355339).epsilon(1e-6));
    CHECK(t.ratios[0][0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.ratios[1][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.ratios[1][0] == doctest::Approx(0.0));

    PathResult up_up = replay_path(t, s, {true, true});
    CHECK(up_up.payoff == doctest::Approx(14.1421356).epsilon(1e-6));
    CHECK(up_up.trading_pnl == doctest::Approx(10.6066017).epsilon(1e-6));
    CHECK(up_up.final_position == 1);

    PathResult up_down = replay_path(t, s, {true, false});
    CHECK(up_down.payoff == doctest::Approx(0.0));
    CHECK(up_down.trading_pnl == doctest::Approx(-3.5355339).epsilon(1e-6));
    CHECK(up_down.final_position == 0);
}

TEST_CASE("hedge saturates deep in and out of the money") {
    TradingSession s = session(50, 0, 10, 4, 0);  // every node in the money
    HedgeTree t = build_hedge_tree(s, OptionSide::kSell);
    for (const auto& level : t.ratios)
        for (double y : level) CHECK(y == doctest::Approx(1.0).epsilon(1e-12));

    s.mc = 1e4;  // unreachable strike
    t = build_hedge_tree(s, OptionSide::kSell);
    CHECK(t.values[0][0] == 0.0);
    for (const auto& level : t.ratios)
        for (double y : level) CHECK(y == 0.0);
}

TEST_CASE("tree roots equal option values on both sides") {
    std::mt19937_64 rng(104);
    for (int it = 0; it < 100; ++it) {
        TradingSession s = random_session(rng);
        OptionQuote q = option_values(s);
        CHECK(std::fabs(build_hedge_tree(s, OptionSide::kSell).values[0][0] -
                        q.opt_sell) <= 1e-9);
        CHECK(std::fabs(build_hedge_tree(s, OptionSide::kBuy).values[0][0] -
                        q.opt_buy) <= 1e-9);
    }
}

TEST_CASE("hedge ratios stay within the capacity share") {
    std::mt19937_64 rng(105);
    for (int it = 0; it < 100; ++it) {
        TradingSession s = random_session(rng);
        for (OptionSide side : {OptionSide::kSell, OptionSide::kBuy}) {
            HedgeTree t = build_hedge_tree(s, side);
            for (const auto& level : t.ratios)
                for (double y : level) {
                    CHECK(y >= -1e-12);
                    CHECK(y <= 1.0 + 1e-12);
                }
        }
    }
}

TEST_CASE("replication is exact on every path") {
    CHECK(validate_replication(session(50, 2, 10, 8, 52),
                               ReplicationMode::kExhaustive) <= 1e-9);
    std::mt19937_64 rng(106);
    for (int it = 0; it < 25; ++it) {
        TradingSession s = random_session(rng);
        s.n_steps = 1 + int(rng() % 12);
        s.mu = 0.5 * s.sigma * std::sqrt(double(s.n_steps));
        CHECK(validate_replication(s, ReplicationMode::kExhaustive) <= 1e-9);
    }
}

TEST_CASE("sampled replication is a subset of exhaustive") {
    TradingSession s = session(60, -3, 12, 10, 58);
    const double full = validate_replication(s, ReplicationMode::kExhaustive);
    const double sampled =
        validate_replication(s, ReplicationMode::kSampled, 200, 42);
    CHECK(sampled <= full + 1e-15);
}

TEST_CASE("replication harness guards its modes") {
    TradingSession s = session(50, 0, 10, 20, 50);
    CHECK_THROWS_AS(validate_replication(s, ReplicationMode::kExhaustive),
                    std::invalid_argument);
    CHECK_NOTHROW(validate_replication(s, ReplicationMode::kSampled, 50, 7));
    HedgeTree t = build_hedge_tree(session(50, 0, 10, 3, 50), OptionSide::kSell);
    CHECK_THROWS_AS(replay_path(t, session(50, 0, 10, 3, 50), {true, false}),
                    std::invalid_argument);
}
