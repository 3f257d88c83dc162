#pragma once

#include <optional>
#include <vector>

#include "fracldp/dynamics.hpp"
#include "fracldp/model.hpp"

namespace fracldp {

struct SkeletonSolution {
    GridSpec grid;
    TimeGrid timegrid;
    double p = 4.0;
    Trajectory trajectory;
    std::vector<StepDiagnostics> diagnostics;
};

/// Deterministic controlled equation du/dt = -(-Delta)^alpha u - F(u) + g + sigma(u) v.
SkeletonSolution solve_skeleton(const ModelSpec& model, const Field& u0, const Control& v, const TimeGrid& tg,
                                double linf_guard = default_linf_guard);

struct BoundReport {
    /// sup_t ||u||^2 + int ||u||_V^2 + int ||u||_p^p.
    double observed = 0.0;
    /// Bound on `observed` implied by the energy bound: B (1 + T) + B/2 + B/lambda1.
    double observed_bound = 0.0;
    /// sup_t [ ||u(t)||^2 + 2 int_0^t ||(-Delta)^{alpha/2} u||^2 + lambda1 int_0^t ||u||_p^p ].
    double energy_functional = 0.0;
    /// B = e^{T + int ||v||^2} (||u0||^2 + c1 T + ||g||^2 + 2 ||sigma1||^2 + 2 ||psi1||_{L^1}).
    double gronwall_bound = 0.0;
    double c1 = 0.0;
    double R = 0.0;
    bool pass = false;
};

BoundReport apriori_bound_report(const SkeletonSolution& sol, const ModelSpec& model, const Field& u0,
                                 const Control& v);

struct LipschitzReport {
    double d_out = 0.0;
    double d_in = 0.0;
    /// Empty when both distances vanish (the 0/0 case).
    std::optional<double> ratio;
};

LipschitzReport lipschitz_experiment(const ModelSpec& model, const Field& u01, const Field& u02, const Control& v1,
                                     const Control& v2, const TimeGrid& tg);

struct TailCurve {
    std::vector<double> radii;
    std::vector<double> values;
    bool non_increasing() const;
};

/// For each radius m: sup_t int_{|x|>=m} |u|^2 + int_0^T int_{|x|>=m} |u|^p.
TailCurve tail_mass_scan(const SkeletonSolution& sol, const std::vector<double>& radii);

enum class PerturbationKind { oscillatory, constant_shift };

struct ConvergenceCurve {
    std::vector<int> freqs;
    std::vector<double> errors;
};

/// e_n = ||u_{v_n} - u_v|| in C([0,T],H) + L^2(0,T;V) + L^p(0,T;L^p) for
/// v_n = v + amplitude sin(2 pi n t / T) e_k (cell-averaged), or v + amplitude e_k for the
/// constant-shift negative control.
ConvergenceCurve weak_continuity_experiment(const ModelSpec& model, const Field& u0, const Control& v, int mode_k,
                                            const std::vector<int>& freqs, const TimeGrid& tg,
                                            double amplitude = 1.0,
                                            PerturbationKind kind = PerturbationKind::oscillatory);

}  // namespace fracldp
