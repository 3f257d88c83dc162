#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fracldp {

/// Periodic box [-L, L)^dim sampled with points_per_dim points per axis.
struct GridSpec {
    int dim = 1;
    double half_length = 16.0;
    int points_per_dim = 128;
    double alpha = 0.75;

    /// Throws DomainError when any invariant is broken.
    void validate() const;

    double spacing() const { return 2.0 * half_length / points_per_dim; }
    std::size_t size() const;
    double cell_volume() const;
    double volume() const;
    /// Coordinate of index i along any axis.
    double coordinate(int i) const { return -half_length + i * spacing(); }
    /// Physical position of the flat (row-major) index; unused trailing entries are 0.
    std::array<double, 3> position(std::size_t flat) const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Real-valued samples on a GridSpec. Values are finite on construction.
class Field {
public:
    Field() = default;
    explicit Field(const GridSpec& grid);
    Field(const GridSpec& grid, std::vector<double> values);

    static Field constant(const GridSpec& grid, double c);
    static Field from_function(const GridSpec& grid,
                               const std::function<double(const std::array<double, 3>&)>& fn);

    const GridSpec& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    /// Unchecked mutable access; callers restore finiteness themselves.
    std::vector<double>& mutable_values() { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    bool all_finite() const;
    double max_abs() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);

private:
    GridSpec grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Fourier multiplier |xi|^{2 alpha} for every mode of the full (complex) spectrum,
/// in FFT index order.
class SpectralSymbol {
public:
    explicit SpectralSymbol(const GridSpec& grid);
    SpectralSymbol(const GridSpec& grid, double alpha);

    const GridSpec& grid() const { return grid_; }
    double alpha() const { return alpha_; }
    std::span<const double> multipliers() const { return multipliers_; }

    /// Wavenumber magnitude |xi| of the given flat spectral index.
    double wavenumber(std::size_t flat) const;
    /// Flat index of the mode with negated frequency vector.
    std::size_t negated_index(std::size_t flat) const;

private:
    GridSpec grid_;
    double alpha_;
    std::vector<double> multipliers_;
};

Field frac_laplacian(const Field& f, const SpectralSymbol& symbol);

/// sqrt(||f||^2 + ||(-Delta)^{alpha/2} f||^2) with quadrature weight h^dim.
double h_alpha_norm(const Field& f, const SpectralSymbol& symbol);

/// ||(-Delta)^{alpha/2} f||, the spectral seminorm.
double spectral_seminorm(const Field& f, const SpectralSymbol& symbol);

/// Gagliardo double-sum form of the seminorm, periodic minimal-image distance.
/// Only 1D grids up to 4096 points with alpha < 1.
double gagliardo_seminorm(const Field& f);

/// C(n, alpha) = alpha 4^alpha Gamma((n + 2 alpha)/2) / (pi^{n/2} Gamma(1 - alpha)).
double gagliardo_constant(int n, double alpha);

double lp_norm(const Field& f, double p);
double l2_norm(const Field& f);
double inner_product(const Field& f, const Field& g);

/// Smooth compactly supported bump amplitude * exp(1 - 1/(1 - r^2/radius^2)); peak value = amplitude.
Field bump(const GridSpec& grid, double radius, double amplitude = 1.0, double center = 0.0);

/// sin(k pi x_0 / L) along the first axis.
Field sine_mode(const GridSpec& grid, int k, double amplitude = 1.0);

namespace spectral {

using Complex = std::complex<double>;

/// Forward unnormalized DFT of real data into the full complex spectrum.
void forward(const GridSpec& grid, std::span<const double> in, std::vector<Complex>& out);
/// Inverse DFT (normalized by the point count), keeping the real part.
void inverse(const GridSpec& grid, std::vector<Complex>& spectrum, std::span<double> out);

/// Sum of multiplier * |f_hat|^2 * h^dim / M, i.e. the quadrature of the weighted spectrum.
double weighted_energy(const GridSpec& grid, std::span<const Complex> spectrum,
                       std::span<const double> multipliers);

/// h^dim sum |f|^2.
double l2_sq(const GridSpec& grid, std::span<const double> values);
/// h^dim sum |f|^p.
double lp_pow(const GridSpec& grid, std::span<const double> values, double p);

}  // namespace spectral

}  // namespace fracldp
