#pragma once

#include <vector>

namespace flexbid {

// One continuous-intraday trading window for a single delivery hour. Prices
// follow an additive lattice: per step the price moves by u or d around the
// drift, ending after n_steps moves.
struct TradingSession {
    double s_ini = 0;   // initial price level, EUR/MWh
    double mu = 0;      // drift over the whole session, EUR/MWh
    double sigma = 0;   // volatility over the whole session, EUR/MWh
    int n_steps = 1;    // trading opportunities
    double mc = 0;      // marginal electricity cost, EUR/MWh
};

// Value of selling / buying one MWh of flexible capacity through the session,
// plus the probability that the terminal price clears the marginal cost.
struct OptionQuote {
    double opt_sell = 0;  // EUR/MWh
    double opt_buy = 0;   // EUR/MWh
    double p_sell = 0;    // P(terminal price >= mc) under the physical law
    double p_buy = 0;     // exactly 1 - p_sell
};

struct StepMoves {
    double u = 0;  // up move, EUR/MWh
    double d = 0;  // down move, EUR/MWh
};

// Throws std::invalid_argument unless sigma > 0, n_steps >= 1 and
// |mu| <= sigma * sqrt(n_steps). The drift cap keeps the risk-neutral
// up-probability q = -d/(u-d) inside [0,1].
void check_session(const TradingSession& session);

// u = mu/N + sigma*sqrt(1/N), d = mu/N - sigma*sqrt(1/N); u >= 0 >= d.
StepMoves step_moves(const TradingSession& session);

// S_k = s_ini + k*u + (n_steps-k)*d for k = 0..n_steps, strictly increasing.
std::vector<double> terminal_prices(const TradingSession& session);

// Risk-neutral expectation of the terminal payoffs max(S-mc,0) (sell) and
// max(mc-S,0) (buy), zero interest. Binomial weights are evaluated through
// log-gamma so large step counts do not overflow. The clearing probabilities
// use the physical terminal law Normal(s_ini + mu, sigma^2).
OptionQuote option_values(const TradingSession& session);

struct BachelierLimit {
    double sell_limit = 0;  // EUR/MWh
    double buy_limit = 0;   // EUR/MWh
};

// Closed-form limit of option_values for n_steps -> infinity: the terminal
// law becomes Normal(s_ini, sigma^2) under the risk-neutral measure, giving
// sell = (s_ini-mc)*CDF(z) + sigma*PDF(z) with z = (s_ini-mc)/sigma.
// Only sigma > 0 is required; mu and n_steps are ignored.
BachelierLimit bachelier_limit(const TradingSession& session);

}  // namespace flexbid
