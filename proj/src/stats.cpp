#include "fracldp/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "fracldp/errors.hpp"

namespace fracldp {

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
    if (n == 0) throw EstimationError("wilson_interval: no trials");
    if (successes > n) throw DomainError("wilson_interval: more successes than trials");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    Interval ci{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    if (successes == 0) ci.lo = 0.0;
    if (successes == n) ci.hi = 1.0;
    return ci;
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

MeanEstimate mean_estimate(std::span<const double> xs, double z) {
    MeanEstimate e;
    e.n = xs.size();
    if (xs.empty()) return e;
    for (double x : xs) e.mean += x;
    e.mean /= static_cast<double>(xs.size());
    e.std_error = std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
    e.ci = {e.mean - z * e.std_error, e.mean + z * e.std_error};
    return e;
}

double sample_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ShapeError("sample_correlation: need matching samples");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

PolyFit poly_fit(std::span<const double> x, std::span<const double> y, int degree) {
    if (degree < 1 || degree > 2) throw DomainError("poly_fit: degree must be 1 or 2");
    if (x.size() != y.size()) throw ShapeError("poly_fit: x and y lengths differ");
    const auto n = static_cast<Eigen::Index>(x.size());
    const int cols = degree + 1;
    if (n < cols) throw EstimationError("poly_fit: not enough points");
    Eigen::MatrixXd A(n, cols);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double xp = 1.0;
        for (int j = 0; j < cols; ++j) {
            A(i, j) = xp;
            xp *= x[i];
        }
        b(i) = y[i];
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    PolyFit fit;
    fit.degree = degree;
    for (int j = 0; j < cols; ++j) fit.coeff[j] = c(j);
    if (n > cols) {
        const double s2 = (A * c - b).squaredNorm() / static_cast<double>(n - cols);
        const Eigen::MatrixXd cov = s2 * (A.transpose() * A).inverse();
        for (int j = 0; j < cols; ++j) fit.std_error[j] = std::sqrt(std::max(0.0, cov(j, j)));
    }
    return fit;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace fracldp
