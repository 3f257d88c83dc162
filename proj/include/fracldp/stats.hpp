#pragma once

#include <cstddef>
#include <span>

namespace fracldp {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Wilson score interval for a binomial proportion; z = 1.96 gives 95 %.
Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.96);

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    Interval ci;  ///< mean +- z * std_error
};

MeanEstimate mean_estimate(std::span<const double> xs, double z = 1.96);
double sample_variance(std::span<const double> xs);
double sample_correlation(std::span<const double> a, std::span<const double> b);

/// Ordinary least squares y ~ sum_j c_j x^j for j <= degree with coefficient standard errors.
struct PolyFit {
    double coeff[3] = {0.0, 0.0, 0.0};
    double std_error[3] = {0.0, 0.0, 0.0};
    int degree = 1;
};

PolyFit poly_fit(std::span<const double> x, std::span<const double> y, int degree);

/// Standard normal cumulative distribution function.
double normal_cdf(double x);

}  // namespace fracldp
