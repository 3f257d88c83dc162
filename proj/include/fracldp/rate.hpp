#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fracldp/dynamics.hpp"
#include "fracldp/model.hpp"

namespace fracldp {

/// 1/2 int_0^T ||v(t)||_{l^2}^2 dt, exact for piecewise-constant controls.
double action(const Control& v);

/// Trajectory of the controlled equation; the same code path as solve_skeleton.
Trajectory g0_map(const ModelSpec& model, const Field& u0, const Control& v, const TimeGrid& tg);

enum class TargetKind { path, endpoint };

/// inside: reach dist(u_v, target) <= tolerance. outside: stay at dist >= tolerance (closed
/// complement-of-ball sets).
enum class Constraint { inside, outside };

enum class GradientMode { automatic, adjoint, finite_difference };

struct OptimizerSettings {
    int max_iters = 200;
    double gradient_tol = 1e-9;
    int memory = 8;
    double penalty0 = 10.0;
    int max_continuations = 24;
    /// Allowed excess of the achieved distance over the tolerance.
    double residual_tol = 1e-6;
    GradientMode gradient = GradientMode::automatic;
};

struct RateQuery {
    Field u0;
    TargetKind kind = TargetKind::path;
    Trajectory path;
    Field endpoint;
    double tolerance = 0.0;
    Constraint constraint = Constraint::inside;
    /// Distance for path targets; endpoint targets always use ||u(T) - endpoint||.
    PathNorm metric = PathNorm::full;
    /// Optional radius of the admissible ball ||v||_{L^2(0,T;l^2)} <= N.
    std::optional<double> ball_radius;
    /// Starting control; zero when absent (a small constant on mode 0 for outside constraints).
    std::optional<Control> initial;
    OptimizerSettings optimizer;

    void validate(const ModelSpec& model, const TimeGrid& tg) const;
};

struct RateResult {
    /// Action of the returned control: an upper bound on the discretized rate when converged.
    double value = std::numeric_limits<double>::infinity();
    std::optional<Control> minimizer;
    /// Achieved distance between u_{v*} and the target in the query's metric.
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    int continuations = 0;
    double penalty = 0.0;

    /// value when converged, +infinity otherwise (the inf over the empty set).
    double rate() const { return converged ? value : std::numeric_limits<double>::infinity(); }
};

/// Minimizes action(v) + penalty * hinge(dist)^2 with L-BFGS (projected onto the ball when a radius
/// is declared) and doubles the penalty until the constraint is met. Throws OptimizationError
/// when the objective grows over 10 consecutive accepted steps or turns non-finite.
RateResult minimize_rate(const ModelSpec& model, const RateQuery& query, const TimeGrid& tg);

/// Distance between a trajectory and the query target in the query's metric.
double target_distance(const ModelSpec& model, const RateQuery& query, const TimeGrid& tg, const Trajectory& traj);

/// Penalized objective and its gradient with respect to the control entries.
struct ObjectiveValue {
    double value = 0.0;
    double action = 0.0;
    double distance = 0.0;
    std::vector<double> gradient;
};

ObjectiveValue rate_objective(const ModelSpec& model, const RateQuery& query, const TimeGrid& tg, const Control& v,
                              double penalty, GradientMode mode);

struct LevelSetMember {
    Control control;
    Trajectory trajectory;
};

struct LevelSet {
    Field u0;
    double s = 0.0;
    double p = 4.0;
    TimeGrid timegrid;
    std::vector<LevelSetMember> members;
};

/// Controls drawn uniformly from {action(v) <= s}: Gaussian direction, radius sqrt(2 s) U^{1/D}
/// with D = n_steps * K. s = 0 gives the single member v = 0.
std::vector<Control> sample_action_ball(int n_modes, double s, std::size_t n_samples, const TimeGrid& tg,
                                        std::uint64_t seed);

LevelSet sample_level_set(const ModelSpec& model, const Field& u0, double s, std::size_t n_samples,
                          const TimeGrid& tg, std::uint64_t seed, int workers = 1);

/// Level set built from given controls (each must satisfy action <= s + 1e-9).
LevelSet level_set_from_controls(const ModelSpec& model, const Field& u0, double s, const std::vector<Control>& controls,
                                 const TimeGrid& tg, int workers = 1);

double hausdorff_distance(const LevelSet& a, const LevelSet& b, PathNorm norm = PathNorm::full);

/// Distance from a trajectory to the nearest member of a level set.
double distance_to_set(const Trajectory& x, const LevelSet& set, PathNorm norm = PathNorm::full);

/// Largest pairwise distance between members.
double level_set_diameter(const LevelSet& set, PathNorm norm = PathNorm::full);

struct ContinuityCurve {
    std::vector<double> deltas;
    std::vector<double> distances;
    /// c1 of distance <= c1 (d + d^{p/2}) with d = ||delta u0||, fitted as the smallest valid constant.
    double bound_constant = 0.0;

    bool monotone_decreasing() const;
};

/// Hausdorff distances between the level sets of u0 and u0 + delta * bump_unit with shared controls.
ContinuityCurve level_set_continuity_experiment(const ModelSpec& model, const Field& u0,
                                                const std::vector<double>& deltas, double s, const TimeGrid& tg,
                                                std::size_t n_samples, std::uint64_t seed, int workers = 1);

}  // namespace fracldp
