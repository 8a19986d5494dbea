#pragma once

#include <cmath>
#include <span>

namespace flexbid {

inline double normal_pdf(double x) {
    static const double kInvSqrt2Pi = 0.3989422804014326779;
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 1;  // 1 when the responses have zero variance
};

// Ordinary least squares of y on x. Requires at least two points with
// non-identical x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

double sample_mean(std::span<const double> v);
// Unbiased (n-1) standard deviation; requires at least two samples.
double sample_std(std::span<const double> v);

}  // namespace flexbid
