#include "fracldp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fracldp/errors.hpp"

namespace fracldp {

void TimeGrid::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("timegrid: T must be positive");
    if (n_steps < 2) throw DomainError("timegrid: n_steps must be >= 2");
}

// ---------------------------------------------------------------------------------------------
// Control

Control::Control(const TimeGrid& tg, int n_modes)
    : tg_(tg), n_modes_(n_modes), values_(static_cast<std::size_t>(tg.n_steps) * n_modes, 0.0) {
    tg_.validate();
    if (n_modes < 1) throw DomainError("control: n_modes must be positive");
}

Control::Control(const TimeGrid& tg, int n_modes, std::vector<double> values, std::optional<double> ball_radius)
    : tg_(tg), n_modes_(n_modes), values_(std::move(values)) {
    tg_.validate();
    if (n_modes < 1) throw DomainError("control: n_modes must be positive");
    if (values_.size() != static_cast<std::size_t>(tg.n_steps) * n_modes)
        throw ShapeError("control: expected n_steps x n_modes values");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("control: non-finite value");
    set_ball_radius(ball_radius);
}

Control Control::constant_mode(const TimeGrid& tg, int n_modes, int k, double c) {
    Control v(tg, n_modes);
    if (k < 0 || k >= n_modes) throw DomainError("control: mode index out of range");
    for (int n = 0; n < tg.n_steps; ++n) v.at(n)[k] = c;
    return v;
}

std::span<const double> Control::at(int step) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(step) * n_modes_, n_modes_);
}

std::span<double> Control::at(int step) {
    return std::span<double>(values_).subspan(static_cast<std::size_t>(step) * n_modes_, n_modes_);
}

double Control::l2_time_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s * tg_.dt());
}

void Control::set_ball_radius(std::optional<double> r) {
    if (r && !(*r >= 0.0)) throw DomainError("control: ball radius must be non-negative");
    ball_radius_ = r;
    if (r && !in_ball())
        throw DomainError("control: L^2(0,T;l^2) norm " + std::to_string(l2_time_norm()) +
                          " exceeds declared ball radius " + std::to_string(*r));
}

bool Control::in_ball() const {
    if (!ball_radius_) return true;
    const double n = l2_time_norm();
    return n * n <= (*ball_radius_) * (*ball_radius_) + 1e-9;
}

Control& Control::operator+=(const Control& other) {
    if (!(tg_ == other.tg_) || n_modes_ != other.n_modes_) throw ShapeError("control: shape mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    ball_radius_.reset();
    return *this;
}

Control& Control::operator*=(double s) {
    for (double& v : values_) v *= s;
    ball_radius_.reset();
    return *this;
}

Control operator+(Control a, const Control& b) { return a += b; }
Control operator-(Control a, const Control& b) { return a += (-1.0) * b; }
Control operator*(double s, Control a) { return a *= s; }

// ---------------------------------------------------------------------------------------------
// Integrator

Integrator::Integrator(const ModelSpec& model, const TimeGrid& tg, double linf_guard)
    : model_(model), tg_(tg), guard_(linf_guard), symbol_(model.grid) {
    tg_.validate();
    if (!(linf_guard > 0.0)) throw DomainError("integrator: guard must be positive");
    const double dt = tg_.dt();
    const auto mult = symbol_.multipliers();
    decay_.resize(mult.size());
    for (std::size_t i = 0; i < mult.size(); ++i) decay_[i] = std::exp(-mult[i] * dt);
    forcing_.assign(model_.forcing.profile.values().begin(), model_.forcing.profile.values().end());
    work_.resize(model_.grid.size());
    coeff_.resize(static_cast<std::size_t>(model_.noise.n_modes));
}

void Integrator::step(int n, std::vector<double>& u, std::span<const double> control,
                      std::span<const double> increments, double noise_scale) {
    const double dt = tg_.dt();
    const double t = tg_.time(n);
    const std::size_t size = u.size();
    const DriftSpec& drift = model_.drift;
    const NoiseSpec& noise = model_.noise;
    const double gfac = model_.forcing.factor(t);

    for (std::size_t i = 0; i < size; ++i) {
        const double f = drift.value(t, u[i]);
        work_[i] = u[i] + dt * (-f / (1.0 + dt * std::abs(f)) + gfac * forcing_[i]);
    }

    bool any = false;
    for (int k = 0; k < noise.n_modes; ++k) {
        double c = 0.0;
        if (!control.empty()) c += dt * control[k];
        if (!increments.empty()) c += noise_scale * increments[k];
        coeff_[k] = c;
        any = any || c != 0.0;
    }
    if (any) {
        const double theta = noise.sigma1_factor(t);
        const auto kap = noise.kappa.values();
        if (noise.shape != NoiseShape::custom) {
            // sigma2_k = amplitude_k s(u): collapse the mode sum before touching the shape.
            double s2_weight = 0.0;
            for (int k = 0; k < noise.n_modes; ++k) s2_weight += noise.amplitude[k] * coeff_[k];
            for (std::size_t i = 0; i < size; ++i) {
                if (kap[i] != 0.0 && s2_weight != 0.0) work_[i] += kap[i] * noise.shape_value(u[i]) * s2_weight;
            }
        } else {
            for (int k = 0; k < noise.n_modes; ++k) {
                if (coeff_[k] == 0.0) continue;
                for (std::size_t i = 0; i < size; ++i)
                    if (kap[i] != 0.0) work_[i] += kap[i] * noise.custom(t, k, u[i]) * coeff_[k];
            }
        }
        for (int k = 0; k < noise.n_modes; ++k) {
            if (coeff_[k] == 0.0) continue;
            const auto s1 = noise.sigma1[k].values();
            const double w = theta * coeff_[k];
            for (std::size_t i = 0; i < size; ++i) work_[i] += s1[i] * w;
        }
    }

    spectral::forward(model_.grid, work_, spectrum_);
    for (std::size_t i = 0; i < spectrum_.size(); ++i) spectrum_[i] *= decay_[i];
    // Out-of-place c2c transforms preserve their input, so spectrum_ stays valid for diagnose().
    spectral::inverse(model_.grid, spectrum_, u);

    double sup = 0.0;
    for (double x : u) {
        if (!std::isfinite(x)) {
            sup = std::numeric_limits<double>::infinity();
            break;
        }
        sup = std::max(sup, std::abs(x));
    }
    if (sup > guard_)
        throw BlowUpError("integrator: sup-norm guard breached at step " + std::to_string(n + 1), n + 1);
}

StepDiagnostics Integrator::diagnose(double t, std::span<const double> u, bool after_step) {
    StepDiagnostics d;
    d.t = t;
    d.l2_sq = spectral::l2_sq(model_.grid, u);
    d.lp_pow = spectral::lp_pow(model_.grid, u, model_.drift.p);
    if (!after_step) spectral::forward(model_.grid, u, spectrum_);
    d.halpha_semi_sq = spectral::weighted_energy(model_.grid, spectrum_, symbol_.multipliers());
    return d;
}

// ---------------------------------------------------------------------------------------------
// Path metrics

double PathEnergy::norm(PathNorm kind, double p) const {
    switch (kind) {
        case PathNorm::full:
            return std::sqrt(sup_l2_sq) + std::sqrt(int_v_sq) + std::pow(int_lp_pow, 1.0 / p);
        case PathNorm::sup_h:
            return std::sqrt(sup_l2_sq);
        case PathNorm::endpoint_h:
            return std::sqrt(terminal_l2_sq);
    }
    return 0.0;
}

double trapezoid_weight(const TimeGrid& tg, int n) {
    return (n == 0 || n == tg.n_steps) ? 0.5 * tg.dt() : tg.dt();
}

PathAccumulator::PathAccumulator(const GridSpec& grid, const TimeGrid& tg, double p, bool need_spectral)
    : grid_(grid), tg_(tg), p_(p), need_spectral_(need_spectral), symbol_(grid) {}

void PathAccumulator::add(int n, std::span<const double> diff) {
    const double l2 = spectral::l2_sq(grid_, diff);
    energy_.sup_l2_sq = std::max(energy_.sup_l2_sq, l2);
    if (n == tg_.n_steps) energy_.terminal_l2_sq = l2;
    const double w = trapezoid_weight(tg_, n);
    if (need_spectral_) {
        spectral::forward(grid_, diff, spectrum_);
        const double semi = spectral::weighted_energy(grid_, spectrum_, symbol_.multipliers());
        energy_.int_v_sq += w * (l2 + semi);
        energy_.int_lp_pow += w * spectral::lp_pow(grid_, diff, p_);
    }
}

void PathAccumulator::add(int n, std::span<const double> u, std::span<const double> ref) {
    diff_.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) diff_[i] = u[i] - ref[i];
    add(n, diff_);
}

PathEnergy path_energy(const Trajectory& a, const Trajectory& b, const TimeGrid& tg, double p) {
    if (a.size() != b.size() || a.size() != static_cast<std::size_t>(tg.n_steps) + 1)
        throw ShapeError("path_energy: trajectories must have n_steps + 1 snapshots");
    PathAccumulator acc(a.front().grid(), tg, p);
    for (int n = 0; n <= tg.n_steps; ++n) {
        if (!(a[n].grid() == b[n].grid())) throw ShapeError("path_energy: grid mismatch");
        acc.add(n, a[n].values(), b[n].values());
    }
    return acc.energy();
}

double path_distance(const Trajectory& a, const Trajectory& b, const TimeGrid& tg, double p, PathNorm kind) {
    return path_energy(a, b, tg, p).norm(kind, p);
}

}  // namespace fracldp
