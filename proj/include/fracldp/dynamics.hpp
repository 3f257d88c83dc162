#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "fracldp/model.hpp"
#include "fracldp/spectral.hpp"

namespace fracldp {

struct TimeGrid {
    double T = 1.0;
    int n_steps = 128;

    double dt() const { return T / n_steps; }
    double time(int n) const { return T * static_cast<double>(n) / n_steps; }
    void validate() const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Piecewise-constant l^2 control: row n holds v_k on [t_n, t_{n+1}).
class Control {
public:
    Control() = default;
    Control(const TimeGrid& tg, int n_modes);
    Control(const TimeGrid& tg, int n_modes, std::vector<double> values,
            std::optional<double> ball_radius = std::nullopt);

    /// v_k(t) = c on the whole horizon for mode k, zero elsewhere.
    static Control constant_mode(const TimeGrid& tg, int n_modes, int k, double c);

    const TimeGrid& timegrid() const { return tg_; }
    int n_modes() const { return n_modes_; }
    std::span<const double> at(int step) const;
    std::span<double> at(int step);
    std::span<const double> values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }

    /// ||v||_{L^2(0,T;l^2)} = sqrt(sum v^2 dt).
    double l2_time_norm() const;
    std::optional<double> ball_radius() const { return ball_radius_; }
    void set_ball_radius(std::optional<double> r);
    bool in_ball() const;

    Control& operator+=(const Control& other);
    Control& operator*=(double s);

private:
    TimeGrid tg_;
    int n_modes_ = 0;
    std::vector<double> values_;
    std::optional<double> ball_radius_;
};

Control operator+(Control a, const Control& b);
Control operator-(Control a, const Control& b);
Control operator*(double s, Control a);

using Trajectory = std::vector<Field>;

struct StepDiagnostics {
    double t = 0.0;
    double l2_sq = 0.0;
    double halpha_semi_sq = 0.0;
    double lp_pow = 0.0;
};

inline constexpr double default_linf_guard = 1e6;

/// One step of the tamed IMEX scheme
///   w = u + dt (-F(u)/(1 + dt|F(u)|) + g(t)) + sum_k sigma_k(t, u) (dt v_k + scale dW_k)
///   u' = exp(-dt |xi|^{2 alpha}) w   (per Fourier mode)
/// sigma is frozen at the start-of-step state.
class Integrator {
public:
    Integrator(const ModelSpec& model, const TimeGrid& tg, double linf_guard = default_linf_guard);

    /// Advances u from step n to n + 1 in place. control / increments may be empty.
    /// Throws BlowUpError naming step n + 1 when the guard is breached.
    void step(int n, std::vector<double>& u, std::span<const double> control, std::span<const double> increments,
              double noise_scale);

    /// Diagnostics of a state; uses the spectrum of the last step when `after_step` is set.
    StepDiagnostics diagnose(double t, std::span<const double> u, bool after_step = false);

    const ModelSpec& model() const { return model_; }
    const TimeGrid& timegrid() const { return tg_; }
    const SpectralSymbol& symbol() const { return symbol_; }
    std::span<const double> decay() const { return decay_; }
    /// Spectrum of the state produced by the last step (or passed to the last diagnose()).
    std::span<const std::complex<double>> spectrum() const { return spectrum_; }

private:
    ModelSpec model_;
    TimeGrid tg_;
    double guard_;
    SpectralSymbol symbol_;
    std::vector<double> decay_;
    std::vector<double> forcing_;
    std::vector<double> work_;
    std::vector<double> coeff_;
    std::vector<double> s2_;
    std::vector<std::complex<double>> spectrum_;
};

enum class PathNorm {
    full,        ///< sup_t ||.|| + (int ||.||_V^2)^{1/2} + (int ||.||_p^p)^{1/p}
    sup_h,       ///< sup_t ||.||
    endpoint_h,  ///< ||.(T)||
};

/// Squared / p-th power parts of a path difference with trapezoid time quadrature.
struct PathEnergy {
    double sup_l2_sq = 0.0;
    double int_v_sq = 0.0;
    double int_lp_pow = 0.0;
    double terminal_l2_sq = 0.0;

    double total() const { return sup_l2_sq + int_v_sq + int_lp_pow; }
    double norm(PathNorm kind, double p) const;
};

/// Streams the per-step differences u_n - phi_n and accumulates the PathEnergy.
class PathAccumulator {
public:
    PathAccumulator(const GridSpec& grid, const TimeGrid& tg, double p, bool need_spectral = true);
    void add(int n, std::span<const double> diff);
    void add(int n, std::span<const double> u, std::span<const double> ref);
    const PathEnergy& energy() const { return energy_; }

private:
    GridSpec grid_;
    TimeGrid tg_;
    double p_;
    bool need_spectral_;
    SpectralSymbol symbol_;
    std::vector<double> diff_;
    std::vector<std::complex<double>> spectrum_;
    PathEnergy energy_;
};

PathEnergy path_energy(const Trajectory& a, const Trajectory& b, const TimeGrid& tg, double p);
double path_distance(const Trajectory& a, const Trajectory& b, const TimeGrid& tg, double p,
                     PathNorm kind = PathNorm::full);
/// Trapezoid weight of time node n.
double trapezoid_weight(const TimeGrid& tg, int n);

}  // namespace fracldp
