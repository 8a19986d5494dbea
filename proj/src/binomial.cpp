#include "flexbid/binomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flexbid/stats.hpp"

namespace flexbid {

void check_session(const TradingSession& session) {
    if (!(session.sigma > 0))
        throw std::invalid_argument("trading session: sigma must be positive");
    if (session.n_steps < 1)
        throw std::invalid_argument("trading session: n_steps must be >= 1");
    const double cap = session.sigma * std::sqrt(static_cast<double>(session.n_steps));
    if (std::fabs(session.mu) > cap * (1.0 + 1e-12))
        throw std::invalid_argument(
            "trading session: |mu| exceeds sigma*sqrt(n_steps)");
}

StepMoves step_moves(const TradingSession& session) {
    check_session(session);
    const double n = static_cast<double>(session.n_steps);
    const double step_sigma = session.sigma * std::sqrt(1.0 / n);
    return {session.mu / n + step_sigma, session.mu / n - step_sigma};
}

std::vector<double> terminal_prices(const TradingSession& session) {
    const StepMoves m = step_moves(session);
    std::vector<double> prices(session.n_steps + 1);
    for (int k = 0; k <= session.n_steps; ++k)
        prices[k] = session.s_ini + k * m.u + (session.n_steps - k) * m.d;
    return prices;
}

OptionQuote option_values(const TradingSession& session) {
    const StepMoves m = step_moves(session);
    const int n = session.n_steps;
    const std::vector<double> prices = terminal_prices(session);
    double q = -m.d / (m.u - m.d);
    q = std::clamp(q, 0.0, 1.0);

    OptionQuote quote;
    auto add_node = [&](double weight, double price) {
        quote.opt_sell += weight * std::max(price - session.mc, 0.0);
        quote.opt_buy += weight * std::max(session.mc - price, 0.0);
    };
    if (q < 1e-15) {
        add_node(1.0, prices[0]);
    } else if (1.0 - q < 1e-15) {
        add_node(1.0, prices[n]);
    } else {
        const double log_q = std::log(q);
        const double log_1q = std::log1p(-q);
        const double log_n_fact = std::lgamma(n + 1.0);
        for (int k = 0; k <= n; ++k) {
            const double log_w = log_n_fact - std::lgamma(k + 1.0) -
                                 std::lgamma(n - k + 1.0) + k * log_q +
                                 (n - k) * log_1q;
            add_node(std::exp(log_w), prices[k]);
        }
    }
    quote.p_sell =
        1.0 - normal_cdf((session.mc - (session.s_ini + session.mu)) / session.sigma);
    quote.p_buy = 1.0 - quote.p_sell;
    return quote;
}

BachelierLimit bachelier_limit(const TradingSession& session) {
    if (!(session.sigma > 0))
        throw std::invalid_argument("trading session: sigma must be positive");
    const double z = (session.s_ini - session.mc) / session.sigma;
    const double sell = (session.s_ini - session.mc) * normal_cdf(z) +
                        session.sigma * normal_pdf(z);
    return {sell, sell - (session.s_ini - session.mc)};
}

}  // namespace flexbid
