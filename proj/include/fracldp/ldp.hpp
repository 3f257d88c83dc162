#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracldp/rate.hpp"
#include "fracldp/stats.hpp"
#include "fracldp/stochastic.hpp"

namespace fracldp {

struct BallEstimate {
    double p_hat = 0.0;
    Interval ci;
    std::size_t successes = 0;
    /// Paths that finished without breaching the guard; blown-up paths are left out of p_hat.
    std::size_t n_used = 0;
    std::size_t n_blow_up = 0;
};

/// Fraction of n_paths SDE samples with rho(u^eps, phi) < delta in the chosen path norm. Stream i
/// of base_seed drives path i. Throws EstimationError when every path blows up.
BallEstimate estimate_ball_probability(const ModelSpec& model, const Field& u0, const Trajectory& phi, double delta,
                                       double epsilon, const TimeGrid& tg, std::size_t n_paths, std::uint64_t base_seed,
                                       PathNorm norm = PathNorm::full, int workers = 1);

/// Same for the endpoint ball ||u^eps(T) - y|| < delta.
BallEstimate estimate_endpoint_probability(const ModelSpec& model, const Field& u0, const Field& y, double delta,
                                           double epsilon, const TimeGrid& tg, std::size_t n_paths,
                                           std::uint64_t base_seed, int workers = 1);

/// Distances of n_paths samples to phi (nullopt for blown-up paths); p_hat for several radii from
/// one sample set.
std::vector<std::optional<double>> sample_path_distances(const ModelSpec& model, const Field& u0,
                                                         const Trajectory& phi, double epsilon, const TimeGrid& tg,
                                                         std::size_t n_paths, std::uint64_t base_seed, PathNorm norm,
                                                         int workers = 1);

/// Ball estimate from precomputed distances: success when distance < delta.
BallEstimate ball_estimate(const std::vector<std::optional<double>>& distances, double delta);

enum class InitialDataKind { bounded_ball, compact_set };

struct LdpExperimentPlan {
    ModelSpec model;
    TimeGrid timegrid;
    std::vector<Field> initial_data;
    InitialDataKind data_kind = InitialDataKind::bounded_ball;
    /// Declared radius of the initial-data ball; every datum must lie inside it.
    std::optional<double> data_radius;
    std::vector<double> eps_list;
    double delta = 0.1;
    std::vector<double> s_levels;
    std::size_t n_paths = 1000;
    PathNorm path_norm = PathNorm::full;
    /// Finite-eps allowance on every margin; policy, not theory.
    double slack = 0.5;
    std::uint64_t seed = 0;
    int workers = 1;

    void validate() const;
};

/// A path phi started at initial_data[u0_index] with its rate from minimize_rate.
struct FwTarget {
    std::string label;
    std::size_t u0_index = 0;
    Trajectory phi;
    std::optional<RateResult> rate;
};

/// Sampled level set I^s_{u0} for initial_data[u0_index] and s = level_set.s.
struct FwLevelSet {
    std::size_t u0_index = 0;
    std::optional<LevelSet> level_set;
};

struct FwInputs {
    std::vector<FwTarget> targets;
    std::vector<FwLevelSet> level_sets;
};

enum class Verdict { pass, fail, indeterminate };
const char* to_string(Verdict v);

struct MarginRecord {
    std::string probe;  ///< fw_lower, fw_upper, dz_open, dz_closed
    std::string target;
    std::size_t u0_index = 0;
    double epsilon = 0.0;
    BallEstimate estimate;
    /// p_hat = 0: eps ln p_hat is replaced by eps ln(ci.hi).
    bool censored = false;
    double eps_log_p = 0.0;
    /// eps ln of the Wilson bounds (-inf when ci.lo = 0).
    double eps_log_lo = 0.0;
    double eps_log_hi = 0.0;
    /// I_{u0}(phi), s, or the rate infimum over the set.
    double rate = 0.0;
    double margin = 0.0;
    double margin_lo = 0.0;
    double margin_hi = 0.0;
};

/// Data-set aggregate of one probe and target along eps_list.
struct TrendRecord {
    std::string probe;
    std::string target;
    std::vector<double> margin;
    std::vector<double> margin_lo;
    std::vector<double> margin_hi;
    Verdict verdict = Verdict::indeterminate;
    std::string detail;
};

struct LdpReport {
    std::vector<double> eps_list;
    double delta = 0.0;
    double slack = 0.0;
    std::size_t n_paths = 0;
    std::vector<MarginRecord> records;
    std::vector<TrendRecord> trends;
    std::vector<std::string> notes;

    bool all_pass() const;
    std::size_t total_blow_ups() const;
};

/// Lower probe m(eps) = eps ln p(rho(u^eps, phi) < delta) + I_{u0}(phi), aggregated by the minimum
/// over initial data; upper probe M(eps) = eps ln p(dist(u^eps, I^s_{u0}) >= delta) + s,
/// aggregated by the maximum. Throws DependencyError when a target lacks a converged rate or a
/// level set is missing for some (u0, s).
LdpReport fw_bounds_experiment(const LdpExperimentPlan& plan, const FwInputs& inputs);

enum class SetShape { whole_space, path_ball, endpoint_ball };

/// G = {dist < radius} for open sets, F = {dist >= radius} for closed ones.
struct SetSpec {
    std::string label;
    SetShape shape = SetShape::path_ball;
    /// Ball centre per initial datum: a path for path balls, its final state for endpoint balls.
    std::vector<Trajectory> centres;
    double radius = 0.0;
    /// inf of I_{u0} over the set, one entry per initial datum.
    std::vector<std::optional<double>> rates;
};

/// Rate infimum over the set (whole space: 0) with the constrained optimizer.
RateResult set_rate(const ModelSpec& model, const Field& u0, const SetSpec& set, std::size_t u0_index, bool closed,
                    const TimeGrid& tg, PathNorm norm, const OptimizerSettings& settings = {});

/// Open sets: eps ln p(G) + sup_{u0} inf_G I >= -slack. Closed sets: eps ln p(F) + inf_{u0} inf_F I <= slack.
LdpReport dz_bounds_experiment(const LdpExperimentPlan& plan, const std::vector<SetSpec>& open_sets,
                               const std::vector<SetSpec>& closed_sets);

struct UniformityRow {
    std::string probe;
    std::string target;
    /// max - min of the per-datum margins at each eps.
    std::vector<double> spread;
    bool bounded = false;
};

struct UniformityReport {
    std::vector<double> eps_list;
    std::vector<UniformityRow> rows;
    std::vector<std::string> warnings;
    LdpReport source;

    bool all_bounded() const;
};

/// Spread across initial data of every margin; bounded when finite and the spread at the
/// smallest eps stays within twice max(spread at the largest eps, slack).
UniformityReport uniformity_sweep(const LdpReport& report, std::size_t n_initial_data);
UniformityReport uniformity_sweep(const LdpExperimentPlan& plan, const FwInputs& inputs);

/// One-mode linear reduction: F = 0, kappa = 0, no forcing, sigma1 = the L2-unit sine mode k.
/// The coordinate X = <u, e> is a discrete Ornstein-Uhlenbeck chain
///   X_{n+1} = exp(-theta dt) (X_n + dt v_n + sqrt(eps) dW_n),  theta = (k pi / L)^{2 alpha}.
struct ScalarReduction {
    ModelSpec model;
    Field mode;
    double theta = 0.0;

    Field embed(double x) const;
    double coordinate(const Field& u) const;
    double endpoint_mean(double x0, const TimeGrid& tg) const;
    /// sum_{j=1}^{N} exp(-2 theta j dt) dt: variance of X_N per unit eps, and the controllability
    /// Gramian of the endpoint map.
    double endpoint_variance(const TimeGrid& tg) const;
    /// P(|X_N - y| < r) under eps.
    double endpoint_ball_probability(double x0, double y, double r, double eps, const TimeGrid& tg) const;
    /// inf of the action over controls with |X_N - y| <= r.
    double endpoint_ball_rate(double x0, double y, double r, const TimeGrid& tg) const;
    /// Control of least action moving the endpoint by shift.
    Control optimal_endpoint_control(double shift, const TimeGrid& tg) const;
};

ScalarReduction scalar_reduction(const GridSpec& grid, int k = 1);

}  // namespace fracldp
