#include "fracldp/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "fracldp/errors.hpp"

namespace fracldp {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* op) {
    if (!(a == b)) throw ShapeError(std::string(op) + ": fields live on different grids");
}

void require_finite(const Field& f, const char* op) {
    if (!f.all_finite()) throw DomainError(std::string(op) + ": non-finite input");
}

// FFTW planning is not thread-safe; execution on caller-owned arrays is. Plans are created
// once per (dim, n, sign) under a lock and executed with the new-array interface.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int dim, int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(dim, n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::size_t total = 1;
        for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(n);
        std::vector<spectral::Complex> a(total), b(total);
        int dims[3] = {n, n, n};
        fftw_plan plan = fftw_plan_dft(dim, dims, reinterpret_cast<fftw_complex*>(a.data()),
                                       reinterpret_cast<fftw_complex*>(b.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

std::vector<spectral::Complex>& scratch() {
    thread_local std::vector<spectral::Complex> buffer;
    return buffer;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// GridSpec

void GridSpec::validate() const {
    if (dim < 1 || dim > 3) throw DomainError("grid: dim must be 1, 2 or 3");
    if (!(half_length > 0.0) || !std::isfinite(half_length))
        throw DomainError("grid: half_length must be positive");
    if (points_per_dim < 4 || !is_power_of_two(points_per_dim))
        throw DomainError("grid: points_per_dim must be a power of two >= 4");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("grid: alpha must lie in (0,1]");
}

std::size_t GridSpec::size() const {
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(points_per_dim);
    return total;
}

double GridSpec::cell_volume() const { return std::pow(spacing(), dim); }

double GridSpec::volume() const { return std::pow(2.0 * half_length, dim); }

std::array<double, 3> GridSpec::position(std::size_t flat) const {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    const auto n = static_cast<std::size_t>(points_per_dim);
    for (int d = dim - 1; d >= 0; --d) {
        x[d] = coordinate(static_cast<int>(flat % n));
        flat /= n;
    }
    return x;
}

// ---------------------------------------------------------------------------------------------
// Field

Field::Field(const GridSpec& grid) : grid_(grid), values_(grid.size(), 0.0) { grid_.validate(); }

Field::Field(const GridSpec& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    if (values_.size() != grid_.size())
        throw ShapeError("field: value count " + std::to_string(values_.size()) +
                         " does not match grid size " + std::to_string(grid_.size()));
    if (!all_finite()) throw DomainError("field: non-finite value on construction");
}

Field Field::constant(const GridSpec& grid, double c) {
    return Field(grid, std::vector<double>(grid.size(), c));
}

Field Field::from_function(const GridSpec& grid,
                           const std::function<double(const std::array<double, 3>&)>& fn) {
    grid.validate();
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.position(i));
    return Field(grid, std::move(v));
}

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

double Field::max_abs() const {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::abs(x));
    return m;
}

Field& Field::operator+=(const Field& other) {
    require_same_grid(grid_, other.grid_, "field +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    require_same_grid(grid_, other.grid_, "field -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& x : values_) x *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

// ---------------------------------------------------------------------------------------------
// SpectralSymbol

SpectralSymbol::SpectralSymbol(const GridSpec& grid) : SpectralSymbol(grid, grid.alpha) {}

SpectralSymbol::SpectralSymbol(const GridSpec& grid, double alpha) : grid_(grid), alpha_(alpha) {
    grid_.validate();
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("symbol: alpha must lie in (0,1]");
    multipliers_.resize(grid_.size());
    for (std::size_t i = 0; i < multipliers_.size(); ++i) {
        const double k = wavenumber(i);
        multipliers_[i] = (k == 0.0) ? 0.0 : std::pow(k, 2.0 * alpha_);
    }
}

double SpectralSymbol::wavenumber(std::size_t flat) const {
    const auto n = static_cast<std::size_t>(grid_.points_per_dim);
    const double base = std::numbers::pi / grid_.half_length;
    double sq = 0.0;
    for (int d = 0; d < grid_.dim; ++d) {
        const auto j = static_cast<long>(flat % n);
        flat /= n;
        const long signed_j = (j <= static_cast<long>(n / 2)) ? j : j - static_cast<long>(n);
        const double xi = base * static_cast<double>(signed_j);
        sq += xi * xi;
    }
    return std::sqrt(sq);
}

std::size_t SpectralSymbol::negated_index(std::size_t flat) const {
    const auto n = static_cast<std::size_t>(grid_.points_per_dim);
    std::size_t out = 0, stride = 1;
    for (int d = 0; d < grid_.dim; ++d) {
        const std::size_t j = flat % n;
        flat /= n;
        out += ((n - j) % n) * stride;
        stride *= n;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Low-level spectral helpers

namespace spectral {

void forward(const GridSpec& grid, std::span<const double> in, std::vector<Complex>& out) {
    auto& buf = scratch();
    buf.assign(in.begin(), in.end());
    out.resize(in.size());
    fftw_plan plan = PlanCache::instance().get(grid.dim, grid.points_per_dim, FFTW_FORWARD);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

void inverse(const GridSpec& grid, std::vector<Complex>& spectrum, std::span<double> out) {
    auto& buf = scratch();
    buf.resize(spectrum.size());
    fftw_plan plan = PlanCache::instance().get(grid.dim, grid.points_per_dim, FFTW_BACKWARD);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(spectrum.data()),
                     reinterpret_cast<fftw_complex*>(buf.data()));
    const double scale = 1.0 / static_cast<double>(spectrum.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = buf[i].real() * scale;
}

double weighted_energy(const GridSpec& grid, std::span<const Complex> spectrum,
                       std::span<const double> multipliers) {
    double s = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) s += multipliers[i] * std::norm(spectrum[i]);
    return s * grid.cell_volume() / static_cast<double>(spectrum.size());
}

double l2_sq(const GridSpec& grid, std::span<const double> values) {
    double s = 0.0;
    for (double x : values) s += x * x;
    return s * grid.cell_volume();
}

double lp_pow(const GridSpec& grid, std::span<const double> values, double p) {
    double s = 0.0;
    if (p == 2.0) {
        for (double x : values) s += x * x;
    } else if (p == 4.0) {
        for (double x : values) s += (x * x) * (x * x);
    } else {
        for (double x : values) s += std::pow(std::abs(x), p);
    }
    return s * grid.cell_volume();
}

}  // namespace spectral

// ---------------------------------------------------------------------------------------------
// Operators and norms

Field frac_laplacian(const Field& f, const SpectralSymbol& symbol) {
    require_same_grid(f.grid(), symbol.grid(), "frac_laplacian");
    require_finite(f, "frac_laplacian");
    std::vector<spectral::Complex> spec;
    spectral::forward(f.grid(), f.values(), spec);
    const auto mult = symbol.multipliers();
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= mult[i];
    std::vector<double> out(f.size());
    spectral::inverse(f.grid(), spec, out);
    return Field(f.grid(), std::move(out));
}

double spectral_seminorm(const Field& f, const SpectralSymbol& symbol) {
    require_same_grid(f.grid(), symbol.grid(), "spectral_seminorm");
    require_finite(f, "spectral_seminorm");
    std::vector<spectral::Complex> spec;
    spectral::forward(f.grid(), f.values(), spec);
    return std::sqrt(spectral::weighted_energy(f.grid(), spec, symbol.multipliers()));
}

double h_alpha_norm(const Field& f, const SpectralSymbol& symbol) {
    const double semi = spectral_seminorm(f, symbol);
    return std::sqrt(spectral::l2_sq(f.grid(), f.values()) + semi * semi);
}

double gagliardo_constant(int n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("gagliardo_constant: alpha must lie in (0,1)");
    return alpha * std::pow(4.0, alpha) * std::tgamma((n + 2.0 * alpha) / 2.0) /
           (std::pow(std::numbers::pi, n / 2.0) * std::tgamma(1.0 - alpha));
}

double gagliardo_seminorm(const Field& f) {
    const GridSpec& g = f.grid();
    if (g.dim != 1) throw DomainError("gagliardo_seminorm: unsupported dimension (1D only)");
    if (g.points_per_dim > 4096) throw DomainError("gagliardo_seminorm: at most 4096 points");
    require_finite(f, "gagliardo_seminorm");
    const double c = gagliardo_constant(1, g.alpha);
    const int n = g.points_per_dim;
    const double h = g.spacing();
    const auto v = f.values();
    // Group pairs by offset m: the periodic distance depends only on m.
    double total = 0.0;
    for (int m = 1; m < n; ++m) {
        const double dist = std::min(m, n - m) * h;
        const double w = 1.0 / std::pow(dist, 1.0 + 2.0 * g.alpha);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = v[i] - v[(i + m) % n];
            s += d * d;
        }
        total += w * s;
    }
    return std::sqrt(0.5 * c * total * h * h);
}

double lp_norm(const Field& f, double p) {
    if (!(p >= 1.0)) throw DomainError("lp_norm: p must be >= 1");
    require_finite(f, "lp_norm");
    return std::pow(spectral::lp_pow(f.grid(), f.values(), p), 1.0 / p);
}

double l2_norm(const Field& f) { return std::sqrt(spectral::l2_sq(f.grid(), f.values())); }

double inner_product(const Field& f, const Field& g) {
    require_same_grid(f.grid(), g.grid(), "inner_product");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
    return s * f.grid().cell_volume();
}

Field bump(const GridSpec& grid, double radius, double amplitude, double center) {
    if (!(radius > 0.0)) throw DomainError("bump: radius must be positive");
    return Field::from_function(grid, [&](const std::array<double, 3>& x) {
        double r2 = 0.0;
        for (int d = 0; d < grid.dim; ++d) {
            const double dx = x[d] - (d == 0 ? center : 0.0);
            r2 += dx * dx;
        }
        const double s = r2 / (radius * radius);
        return s < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
    });
}

Field sine_mode(const GridSpec& grid, int k, double amplitude) {
    return Field::from_function(grid, [&](const std::array<double, 3>& x) {
        return amplitude * std::sin(k * std::numbers::pi * x[0] / grid.half_length);
    });
}

}  // namespace fracldp
