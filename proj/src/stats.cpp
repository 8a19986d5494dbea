#include "flexbid/stats.hpp"

#include <stdexcept>

namespace flexbid {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two paired points");
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0) throw std::invalid_argument("fit_line: degenerate abscissa");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy <= 0) {
        fit.r2 = 1.0;
    } else {
        double ssr = 0;
        for (size_t i = 0; i < n; ++i) {
            const double e = y[i] - (fit.intercept + fit.slope * x[i]);
            ssr += e * e;
        }
        fit.r2 = 1.0 - ssr / syy;
        if (fit.r2 < 0) fit.r2 = 0;
        if (fit.r2 > 1) fit.r2 = 1;
    }
    return fit;
}

double sample_mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("sample_mean: empty input");
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("sample_std: need two samples");
    const double m = sample_mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace flexbid
