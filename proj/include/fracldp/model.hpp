#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracldp/spectral.hpp"

namespace fracldp {

enum class DriftForm { cubic_minus_linear, pure_power, custom };

/// Reaction term F(t, x, u) with its growth order p and the constants that certify the
/// dissipativity, growth and monotonicity conditions. psi bounds are sup-norms over the
/// space-time box; psi1 is treated as a spatially constant density when integrated.
struct DriftSpec {
    DriftForm form = DriftForm::cubic_minus_linear;
    double p = 4.0;
    double lambda1 = 0.5;
    double lambda2 = 1.0;
    double psi1 = 0.5;
    double psi2 = 1.0;
    double psi3 = 0.5;
    double psi4 = 1.0;
    std::function<double(double t, double u)> custom;
    /// dF/du for custom drifts; when absent the rate optimizer falls back to finite differences.
    std::function<double(double t, double u)> custom_derivative;

    /// F(u) = u^3 - u with certificates lambda1 = 1/2, psi1 = 1/2.
    static DriftSpec cubic_minus_linear();
    /// F(u) = |u|^{p-2} u.
    static DriftSpec pure_power(double p);

    double value(double t, double u) const;
    std::optional<double> derivative(double t, double u) const;
    bool has_derivative() const { return form != DriftForm::custom || static_cast<bool>(custom_derivative); }
    void validate() const;
};

enum class NoiseShape { smooth_power, saturated_power, custom };

/// sigma_k(t, x, u) = sigma1_k(x) theta(t) + kappa(x) sigma2_k(t, x, u), k < n_modes, with
/// sigma2_k = amplitude_k * s(u). Built-in shapes satisfy |s(u)|^2 <= c (1 + |u|^q):
///   smooth_power:    s(u) = u (1 + u^2)^{(q-2)/4}
///   saturated_power: s(u) = tanh(u) |u|^{q/2}
/// coeff_alpha/beta/gamma are the declared Lipschitz and growth constants per mode.
struct NoiseSpec {
    int n_modes = 0;
    double q = 2.0;
    NoiseShape shape = NoiseShape::smooth_power;
    Field kappa;
    std::vector<Field> sigma1;
    std::vector<double> amplitude;
    std::vector<double> coeff_alpha;
    std::vector<double> coeff_beta;
    std::vector<double> coeff_gamma;
    /// Declared bound on sum_k (alpha_k + beta_k + gamma_k) of the discarded series tail.
    double tail_bound = 0.0;
    /// Optional time profile theta(t) multiplying sigma1; identity when empty.
    std::function<double(double t)> sigma1_time_factor;
    std::function<double(double t, int k, double u)> custom;
    std::function<double(double t, int k, double u)> custom_derivative;

    double shape_value(double u) const;
    double shape_derivative(double u) const;
    double sigma2(double t, int k, double u) const;
    std::optional<double> sigma2_derivative(double t, int k, double u) const;
    bool has_derivative() const { return shape != NoiseShape::custom || static_cast<bool>(custom_derivative); }
    double sigma1_factor(double t) const { return sigma1_time_factor ? sigma1_time_factor(t) : 1.0; }

    /// Fills coeff_alpha/beta/gamma with the analytic constants of the built-in shape.
    void derive_coefficients();
    /// sum_k ||sigma1_k(t)||^2.
    double sigma1_norm_sq(double t) const;
    void validate(const GridSpec& grid, double p) const;
};

/// g(t, x) = time_factor(t) * profile(x).
struct ForcingSpec {
    Field profile;
    std::function<double(double t)> time_factor;

    double factor(double t) const { return time_factor ? time_factor(t) : 1.0; }
    Field at(double t) const;
    /// ||g||^2_{L^2(0,T;H)} by midpoint quadrature over n intervals.
    double l2_time_sq(double T, int n = 256) const;
};

struct ModelSpec {
    GridSpec grid;
    DriftSpec drift;
    NoiseSpec noise;
    ForcingSpec forcing;

    void validate() const;
    /// False when any component relies on a callback that cannot be written to a config.
    bool serializable() const;
};

/// 1D grid on [-16, 16) with 128 points and alpha = 0.75; all default data live in [-L/2, L/2].
GridSpec default_grid();
/// Data (kappa, sigma1, forcing) live in |x| <= support; support defaults to 0.375 L.
ModelSpec default_model(const GridSpec& grid = default_grid(), std::optional<double> support = std::nullopt);
/// sigma1_k = bump(support, scale / (k + 1)) * cos(k pi x / support), k < n_modes.
std::vector<Field> default_sigma1(const GridSpec& grid, double support, int n_modes, double scale);
/// Deterministic model with every noise coefficient zero (sigma == 0).
ModelSpec noiseless_model(const GridSpec& grid = default_grid());
/// Built-in models exercised by the validators and the rate recovery suite.
std::vector<std::pair<std::string, ModelSpec>> model_zoo(const GridSpec& grid = default_grid());

Field drift_eval(const DriftSpec& spec, double t, const Field& u);

/// Sum_k (sigma1_k + kappa sigma2_k(u)) v_k.
Field sigma_apply(const NoiseSpec& spec, double t, const Field& u, std::span<const double> v);

/// ||sigma(t, u)||^2 in L_2(l^2, H).
double hs_norm_sq(const NoiseSpec& spec, double t, const Field& u);

struct ElementaryMargins {
    double margin1;
    double margin2;
};

/// Margins of the two monotonicity inequalities of |u|^{p-2} u (left side minus right side).
ElementaryMargins elementary_inequalities(double u1, double u2, double p);

struct SamplingPlan {
    double u_max = 1e3;
    double u_min = 1e-6;
    std::size_t n_scalar = 100000;
    std::size_t n_pairs = 100000;
    std::size_t n_fields = 2000;
    double t_max = 1.0;
    std::uint64_t seed = 7;
};

struct Witness {
    double t = 0.0;
    double x = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
    int mode = -1;
};

/// One structural condition: worst normalized margin (lhs - rhs)/max(1, |lhs| + |rhs|) over
/// all samples. pass iff worst_margin >= -validation_slack.
struct ConditionResult {
    std::string name;
    double worst_margin = 0.0;
    bool pass = true;
    std::size_t samples = 0;
    Witness witness;
};

struct ValidationReport {
    std::vector<ConditionResult> conditions;
    std::optional<double> lambda1_certificate;
    std::optional<double> lambda2_certificate;
    /// Constants computed by the noise validator.
    std::vector<std::pair<std::string, double>> constants;

    bool all_pass() const;
    const ConditionResult* find(const std::string& name) const;
};

inline constexpr double validation_slack = 1e-9;

ValidationReport validate_drift(const DriftSpec& spec, const SamplingPlan& plan);
ValidationReport validate_noise(const NoiseSpec& spec, const DriftSpec& drift, const GridSpec& grid,
                                const SamplingPlan& plan);
/// elity1/elity2 sweep over random pairs for the given exponent.
ConditionResult validate_elementary(double p, std::size_t n_pairs, std::uint64_t seed);

/// C(eps) of the HS growth bound ||sigma||^2 <= eps ||u||_p^p + 2 ||sigma1||^2 + C(eps), computed as
/// 2 sum beta ||kappa||^2 + the pointwise Young maximum of 2 sum gamma kappa^2 |u|^q - eps |u|^p.
double hs_growth_constant(const NoiseSpec& spec, const GridSpec& grid, double p, double eps);
/// C of ||sigma||^2 <= 2||sigma1||^2 + 2 sum beta ||kappa||^2 + C (1 + ||u||_p^{p/2}) ||u||.
double hs_weighted_constant(const NoiseSpec& spec, const GridSpec& grid, double p);
/// C of ||sigma(u1) - sigma(u2)||^2 <= C (1 + ||u1||_p^{p/2} + ||u2||_p^{p/2}) ||u1 - u2||.
double hs_difference_constant(const NoiseSpec& spec, const GridSpec& grid, double p);

}  // namespace fracldp
