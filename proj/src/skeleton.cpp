#include "fracldp/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fracldp/errors.hpp"

namespace fracldp {

SkeletonSolution solve_skeleton(const ModelSpec& model, const Field& u0, const Control& v, const TimeGrid& tg,
                                double linf_guard) {
    if (!(u0.grid() == model.grid)) throw ShapeError("solve_skeleton: u0 lives on a different grid");
    if (!(v.timegrid() == tg)) throw ShapeError("solve_skeleton: control defined on a different time grid");
    if (v.n_modes() != model.noise.n_modes) throw ShapeError("solve_skeleton: control mode count mismatch");

    Integrator integ(model, tg, linf_guard);
    SkeletonSolution sol;
    sol.grid = model.grid;
    sol.timegrid = tg;
    sol.p = model.drift.p;
    sol.trajectory.reserve(tg.n_steps + 1);
    sol.diagnostics.reserve(tg.n_steps + 1);
    sol.trajectory.push_back(u0);
    std::vector<double> u(u0.values().begin(), u0.values().end());
    sol.diagnostics.push_back(integ.diagnose(0.0, u));
    for (int n = 0; n < tg.n_steps; ++n) {
        integ.step(n, u, v.at(n), {}, 0.0);
        sol.diagnostics.push_back(integ.diagnose(tg.time(n + 1), u, true));
        sol.trajectory.emplace_back(model.grid, u);
    }
    return sol;
}

BoundReport apriori_bound_report(const SkeletonSolution& sol, const ModelSpec& model, const Field& u0,
                                 const Control& v) {
    const TimeGrid& tg = sol.timegrid;
    const double T = tg.T;
    const double dt = tg.dt();
    const double lambda1 = model.drift.lambda1;
    BoundReport r;

    double int_l2 = 0.0, int_semi = 0.0, int_lp = 0.0, sup_l2 = 0.0;
    for (int n = 0; n <= tg.n_steps; ++n) {
        const auto& d = sol.diagnostics[n];
        if (n > 0) {
            const auto& prev = sol.diagnostics[n - 1];
            int_l2 += 0.5 * dt * (prev.l2_sq + d.l2_sq);
            int_semi += 0.5 * dt * (prev.halpha_semi_sq + d.halpha_semi_sq);
            int_lp += 0.5 * dt * (prev.lp_pow + d.lp_pow);
        }
        sup_l2 = std::max(sup_l2, d.l2_sq);
        r.energy_functional = std::max(r.energy_functional, d.l2_sq + 2.0 * int_semi + lambda1 * int_lp);
    }
    r.observed = sup_l2 + int_l2 + int_semi + int_lp;

    const double u0_sq = spectral::l2_sq(u0.grid(), u0.values());
    const double v_norm = v.l2_time_norm();
    r.R = std::max(std::sqrt(u0_sq), v_norm);
    r.c1 = hs_growth_constant(model.noise, model.grid, model.drift.p, lambda1);

    // ||sigma1||^2_{L^2(0,T;L^2(l^2))} by midpoint quadrature on the solver grid.
    double sigma1_sq = 0.0;
    for (int n = 0; n < tg.n_steps; ++n) sigma1_sq += model.noise.sigma1_norm_sq(tg.time(n) + 0.5 * dt) * dt;
    const double g_sq = model.forcing.l2_time_sq(T, tg.n_steps);
    const double psi1_l1 = model.drift.psi1 * model.grid.volume() * T;

    r.gronwall_bound = std::exp(T + r.R * r.R) * (u0_sq + r.c1 * T + g_sq + 2.0 * sigma1_sq + 2.0 * psi1_l1);
    r.observed_bound = r.gronwall_bound * (1.0 + T) + 0.5 * r.gronwall_bound + r.gronwall_bound / lambda1;
    r.pass = r.energy_functional <= r.gronwall_bound && r.observed <= r.observed_bound;
    return r;
}

LipschitzReport lipschitz_experiment(const ModelSpec& model, const Field& u01, const Field& u02, const Control& v1,
                                     const Control& v2, const TimeGrid& tg) {
    const SkeletonSolution s1 = solve_skeleton(model, u01, v1, tg);
    const SkeletonSolution s2 = solve_skeleton(model, u02, v2, tg);
    LipschitzReport r;
    r.d_out = path_energy(s1.trajectory, s2.trajectory, tg, model.drift.p).total();
    const double dv = (v1 - v2).l2_time_norm();
    r.d_in = spectral::l2_sq(model.grid, (u01 - u02).values()) + dv * dv;
    if (r.d_in > 0.0) r.ratio = r.d_out / r.d_in;
    else if (r.d_out > 0.0) r.ratio = std::numeric_limits<double>::infinity();
    return r;
}

bool TailCurve::non_increasing() const {
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[i - 1]) return false;
    return true;
}

TailCurve tail_mass_scan(const SkeletonSolution& sol, const std::vector<double>& radii) {
    const GridSpec& g = sol.grid;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || radii[i] >= g.half_length)
            throw DomainError("tail_mass_scan: radius " + std::to_string(radii[i]) + " outside (0, L)");
        if (i > 0 && radii[i] <= radii[i - 1]) throw DomainError("tail_mass_scan: radii must be increasing");
    }
    std::vector<double> dist(g.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const auto x = g.position(i);
        dist[i] = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    }
    const double h = g.cell_volume();
    TailCurve curve;
    curve.radii = radii;
    for (double m : radii) {
        double sup_l2 = 0.0, int_lp = 0.0;
        for (int n = 0; n <= sol.timegrid.n_steps; ++n) {
            const auto u = sol.trajectory[n].values();
            double l2 = 0.0, lp = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                if (dist[i] < m) continue;
                l2 += u[i] * u[i];
                lp += std::pow(std::abs(u[i]), sol.p);
            }
            sup_l2 = std::max(sup_l2, l2 * h);
            int_lp += trapezoid_weight(sol.timegrid, n) * lp * h;
        }
        curve.values.push_back(sup_l2 + int_lp);
    }
    return curve;
}

ConvergenceCurve weak_continuity_experiment(const ModelSpec& model, const Field& u0, const Control& v, int mode_k,
                                            const std::vector<int>& freqs, const TimeGrid& tg, double amplitude,
                                            PerturbationKind kind) {
    if (mode_k < 0 || mode_k >= model.noise.n_modes) throw DomainError("weak_continuity: mode index out of range");
    for (int f : freqs)
        if (f < 1 || 2 * f > tg.n_steps)
            throw DomainError("weak_continuity: frequency " + std::to_string(f) + " exceeds the Nyquist limit " +
                              std::to_string(tg.n_steps / 2) + " (aliasing)");
    const SkeletonSolution base = solve_skeleton(model, u0, v, tg);
    ConvergenceCurve curve;
    const double dt = tg.dt();
    for (int f : freqs) {
        Control vn = v;
        for (int j = 0; j < tg.n_steps; ++j) {
            double bump = 1.0;
            if (kind == PerturbationKind::oscillatory) {
                const double w = 2.0 * std::numbers::pi * f / tg.T;
                bump = (std::cos(w * tg.time(j)) - std::cos(w * tg.time(j + 1))) / (w * dt);
            }
            vn.at(j)[mode_k] += amplitude * bump;
        }
        const SkeletonSolution sn = solve_skeleton(model, u0, vn, tg);
        curve.freqs.push_back(f);
        curve.errors.push_back(path_energy(sn.trajectory, base.trajectory, tg, model.drift.p).norm(PathNorm::full, model.drift.p));
    }
    return curve;
}

}  // namespace fracldp
