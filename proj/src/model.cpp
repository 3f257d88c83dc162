#include "fracldp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fracldp/errors.hpp"

namespace fracldp {

namespace {

double signed_power(double u, double p) {
    // |u|^{p-2} u
    const double a = std::abs(u);
    if (p == 4.0) return u * u * u;
    if (p == 3.0) return a * u;
    return std::pow(a, p - 2.0) * u;
}

double normalized_margin(double lhs, double rhs) {
    return (lhs - rhs) / std::max(1.0, std::abs(lhs) + std::abs(rhs));
}

class MarginTracker {
public:
    explicit MarginTracker(std::string name) { result_.name = std::move(name); result_.worst_margin = std::numeric_limits<double>::infinity(); }

    void add(double lhs, double rhs, const Witness& w) {
        const double m = normalized_margin(lhs, rhs);
        ++result_.samples;
        if (m < result_.worst_margin || std::isnan(m)) {
            result_.worst_margin = std::isnan(m) ? -std::numeric_limits<double>::infinity() : m;
            result_.witness = w;
        }
    }

    ConditionResult finish() {
        if (result_.samples == 0) result_.worst_margin = 0.0;
        result_.pass = result_.worst_margin >= -validation_slack;
        return result_;
    }

private:
    ConditionResult result_;
};

// Scalar sample set: 0, the unit points and log-spaced magnitudes of both signs.
std::vector<double> scalar_samples(const SamplingPlan& plan) {
    std::vector<double> out{0.0, 1.0, -1.0};
    const std::size_t half = std::max<std::size_t>(plan.n_scalar / 2, 1);
    const double lo = std::log(plan.u_min), hi = std::log(plan.u_max);
    for (std::size_t i = 0; i < half; ++i) {
        const double m = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(half - 1 == 0 ? 1 : half - 1));
        out.push_back(m);
        out.push_back(-m);
    }
    return out;
}

double random_magnitude(std::mt19937_64& rng, const SamplingPlan& plan) {
    std::uniform_real_distribution<double> unif(std::log(plan.u_min), std::log(plan.u_max));
    return std::exp(unif(rng));
}

std::pair<double, double> random_pair(std::mt19937_64& rng, const SamplingPlan& plan) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const double u1 = (coin(rng) ? 1.0 : -1.0) * random_magnitude(rng, plan);
    // Half the pairs are independent, half are close neighbours at a random relative scale.
    if (coin(rng)) return {u1, (coin(rng) ? 1.0 : -1.0) * random_magnitude(rng, plan)};
    std::uniform_real_distribution<double> lscale(-12.0, 0.0);
    return {u1, u1 + unit(rng) * std::pow(10.0, lscale(rng)) * std::max(1.0, std::abs(u1))};
}

Field random_field(std::mt19937_64& rng, const GridSpec& grid, const SamplingPlan& plan) {
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double amp = random_magnitude(rng, plan);
    std::vector<double> v(grid.size());
    switch (kind(rng)) {
        case 0:
            for (double& x : v) x = amp * unit(rng);
            break;
        case 1: {
            const double c = 0.5 * grid.half_length * unit(rng);
            const double r = grid.half_length * (0.05 + 0.45 * std::abs(unit(rng)));
            return bump(grid, r, amp * (unit(rng) < 0 ? -1.0 : 1.0), c);
        }
        default:
            std::fill(v.begin(), v.end(), amp * unit(rng));
    }
    return Field(grid, std::move(v));
}

double kappa_lr_norm_sq(const Field& kappa, double r) {
    // ||kappa||_{L^r}^2, r = +inf gives the sup norm.
    if (std::isinf(r)) return kappa.max_abs() * kappa.max_abs();
    return std::pow(spectral::lp_pow(kappa.grid(), kappa.values(), r), 2.0 / r);
}

template <class Fn>
double sum_over_modes(const NoiseSpec& spec, Fn fn) {
    double s = 0.0;
    for (int k = 0; k < spec.n_modes; ++k) s += fn(k);
    return s;
}

// sigma2 for all grid points and modes, reusing one shape evaluation per point for built-ins.
void evaluate_sigma2(const NoiseSpec& spec, double t, std::span<const double> u, std::vector<double>& out) {
    const std::size_t n = u.size();
    out.resize(n * static_cast<std::size_t>(spec.n_modes));
    if (spec.shape != NoiseShape::custom) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = spec.shape_value(u[i]);
            for (int k = 0; k < spec.n_modes; ++k) out[k * n + i] = spec.amplitude[k] * s;
        }
    } else {
        for (int k = 0; k < spec.n_modes; ++k)
            for (std::size_t i = 0; i < n; ++i) out[k * n + i] = spec.custom(t, k, u[i]);
    }
}

double hs_norm_sq_raw(const NoiseSpec& spec, double t, const GridSpec& grid, std::span<const double> u) {
    thread_local std::vector<double> s2;
    evaluate_sigma2(spec, t, u, s2);
    const double theta = spec.sigma1_factor(t);
    const std::size_t n = u.size();
    const auto kap = spec.kappa.values();
    double total = 0.0;
    for (int k = 0; k < spec.n_modes; ++k) {
        const auto s1 = spec.sigma1[k].values();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = theta * s1[i] + kap[i] * s2[k * n + i];
            total += v * v;
        }
    }
    return total * grid.cell_volume();
}

double hs_difference_sq_raw(const NoiseSpec& spec, double t, const GridSpec& grid, std::span<const double> u1,
                            std::span<const double> u2) {
    thread_local std::vector<double> a, b;
    evaluate_sigma2(spec, t, u1, a);
    evaluate_sigma2(spec, t, u2, b);
    const auto kap = spec.kappa.values();
    const std::size_t n = u1.size();
    double total = 0.0;
    for (int k = 0; k < spec.n_modes; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const double d = kap[i] * (a[k * n + i] - b[k * n + i]);
            total += d * d;
        }
    return total * grid.cell_volume();
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// DriftSpec

DriftSpec DriftSpec::cubic_minus_linear() { return DriftSpec{}; }

DriftSpec DriftSpec::pure_power(double p) {
    DriftSpec d;
    d.form = DriftForm::pure_power;
    d.p = p;
    d.lambda1 = 1.0;
    d.lambda2 = 1.0;
    d.psi1 = 0.0;
    d.psi2 = 1.0;
    d.psi3 = 0.0;
    d.psi4 = 0.0;
    return d;
}

double DriftSpec::value(double t, double u) const {
    switch (form) {
        case DriftForm::cubic_minus_linear:
            return u * u * u - u;
        case DriftForm::pure_power:
            return signed_power(u, p);
        case DriftForm::custom:
            return custom(t, u);
    }
    return 0.0;
}

std::optional<double> DriftSpec::derivative(double t, double u) const {
    switch (form) {
        case DriftForm::cubic_minus_linear:
            return 3.0 * u * u - 1.0;
        case DriftForm::pure_power:
            return (p - 1.0) * std::pow(std::abs(u), p - 2.0);
        case DriftForm::custom:
            if (custom_derivative) return custom_derivative(t, u);
            return std::nullopt;
    }
    return std::nullopt;
}

void DriftSpec::validate() const {
    if (!(p > 2.0)) throw DomainError("drift: p must exceed 2");
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw DomainError("drift: lambda1 and lambda2 must be positive");
    if (psi1 < 0 || psi2 < 0 || psi3 < 0 || psi4 < 0) throw DomainError("drift: psi bounds must be non-negative");
    if (form == DriftForm::cubic_minus_linear && p != 4.0)
        throw DomainError("drift: cubic_minus_linear has growth order p = 4");
    if (form == DriftForm::custom && !custom) throw DomainError("drift: custom form without callback");
}

// ---------------------------------------------------------------------------------------------
// NoiseSpec

double NoiseSpec::shape_value(double u) const {
    switch (shape) {
        case NoiseShape::smooth_power:
            if (q == 2.0) return u;
            return u * std::pow(1.0 + u * u, (q - 2.0) / 4.0);
        case NoiseShape::saturated_power:
            return std::tanh(u) * std::pow(std::abs(u), q / 2.0);
        case NoiseShape::custom:
            break;
    }
    throw DomainError("noise: shape_value called on a custom shape");
}

double NoiseSpec::shape_derivative(double u) const {
    switch (shape) {
        case NoiseShape::smooth_power: {
            if (q == 2.0) return 1.0;
            const double r = (q - 2.0) / 2.0;
            const double w = 1.0 + u * u;
            return std::pow(w, r / 2.0 - 1.0) * (w + r * u * u);
        }
        case NoiseShape::saturated_power: {
            const double a = std::abs(u);
            const double th = std::tanh(u);
            const double sech2 = 1.0 - th * th;
            const double lead = sech2 * std::pow(a, q / 2.0);
            const double tail = (a == 0.0) ? 0.0 : (q / 2.0) * std::abs(th) * std::pow(a, q / 2.0 - 1.0);
            return lead + tail;
        }
        case NoiseShape::custom:
            break;
    }
    throw DomainError("noise: shape_derivative called on a custom shape");
}

double NoiseSpec::sigma2(double t, int k, double u) const {
    if (shape == NoiseShape::custom) return custom(t, k, u);
    return amplitude[k] * shape_value(u);
}

std::optional<double> NoiseSpec::sigma2_derivative(double t, int k, double u) const {
    if (shape == NoiseShape::custom) {
        if (custom_derivative) return custom_derivative(t, k, u);
        return std::nullopt;
    }
    return amplitude[k] * shape_derivative(u);
}

void NoiseSpec::derive_coefficients() {
    if (shape == NoiseShape::custom) throw DomainError("noise: cannot derive coefficients for a custom shape");
    coeff_alpha.assign(n_modes, 0.0);
    coeff_beta.assign(n_modes, 0.0);
    coeff_gamma.assign(n_modes, 0.0);
    for (int k = 0; k < n_modes; ++k) {
        const double a2 = amplitude[k] * amplitude[k];
        if (shape == NoiseShape::smooth_power) {
            // |s|^2 = u^2 (1+u^2)^r <= c_r (u^2 + |u|^q) <= c_r (1 + 2|u|^q),
            // |s'|^2 <= (1+r)^2 c_r (1 + |u|^{q-2}).
            const double r = (q - 2.0) / 2.0;
            const double cr = std::max(1.0, std::pow(2.0, r - 1.0));
            coeff_beta[k] = cr * a2;
            coeff_gamma[k] = 2.0 * cr * a2;
            coeff_alpha[k] = (1.0 + r) * (1.0 + r) * cr * a2;
        } else {
            // |s|^2 <= |u|^q; |s'| <= (q/2 + sup_x x sech^2 x) |u|^{q/2-1}, sup < 0.45.
            coeff_beta[k] = a2;
            coeff_gamma[k] = a2;
            coeff_alpha[k] = (0.5 + q / 2.0) * (0.5 + q / 2.0) * a2;
        }
    }
}

double NoiseSpec::sigma1_norm_sq(double t) const {
    const double theta = sigma1_factor(t);
    double s = 0.0;
    for (const Field& f : sigma1) s += spectral::l2_sq(f.grid(), f.values());
    return theta * theta * s;
}

void NoiseSpec::validate(const GridSpec& grid, double p) const {
    if (n_modes < 1) throw DomainError("noise: n_modes must be positive");
    if (!(q >= 2.0 && q <= 1.0 + p / 2.0))
        throw DomainError("noise: q must lie in [2, 1 + p/2] (noise growth range)");
    const auto K = static_cast<std::size_t>(n_modes);
    if (sigma1.size() != K) throw ShapeError("noise: sigma1 needs one field per mode");
    if (shape != NoiseShape::custom && amplitude.size() != K) throw ShapeError("noise: amplitude needs one entry per mode");
    if (coeff_alpha.size() != K || coeff_beta.size() != K || coeff_gamma.size() != K)
        throw ShapeError("noise: alpha/beta/gamma need one entry per mode");
    if (shape == NoiseShape::custom && !custom) throw DomainError("noise: custom shape without callback");
    if (!(kappa.grid() == grid)) throw ShapeError("noise: kappa lives on a different grid");
    for (const Field& f : sigma1)
        if (!(f.grid() == grid)) throw ShapeError("noise: sigma1 mode lives on a different grid");
    for (std::size_t k = 0; k < K; ++k)
        if (coeff_alpha[k] < 0 || coeff_beta[k] < 0 || coeff_gamma[k] < 0)
            throw DomainError("noise: alpha/beta/gamma must be non-negative");
    if (!(tail_bound >= 0.0)) throw DomainError("noise: tail_bound must be non-negative");
    // Data support inside [-L/2, L/2]^dim.
    auto outside_half_box = [&](const Field& f) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i] == 0.0) continue;
            const auto x = grid.position(i);
            for (int d = 0; d < grid.dim; ++d)
                if (std::abs(x[d]) > 0.5 * grid.half_length + 1e-12) return true;
        }
        return false;
    };
    if (outside_half_box(kappa)) throw DomainError("noise: kappa must be supported in [-L/2, L/2]^dim");
}

// ---------------------------------------------------------------------------------------------
// ForcingSpec / ModelSpec

Field ForcingSpec::at(double t) const { return factor(t) * profile; }

double ForcingSpec::l2_time_sq(double T, int n) const {
    const double base = spectral::l2_sq(profile.grid(), profile.values());
    if (!time_factor) return base * T;
    double s = 0.0;
    const double dt = T / n;
    for (int i = 0; i < n; ++i) {
        const double f = time_factor((i + 0.5) * dt);
        s += f * f * dt;
    }
    return base * s;
}

void ModelSpec::validate() const {
    grid.validate();
    drift.validate();
    noise.validate(grid, drift.p);
    if (!(forcing.profile.grid() == grid)) throw ShapeError("forcing: profile lives on a different grid");
}

bool ModelSpec::serializable() const {
    return drift.form != DriftForm::custom && noise.shape != NoiseShape::custom && !noise.sigma1_time_factor &&
           !forcing.time_factor;
}

GridSpec default_grid() { return GridSpec{1, 16.0, 128, 0.75}; }

std::vector<Field> default_sigma1(const GridSpec& grid, double support, int n_modes, double scale) {
    std::vector<Field> out;
    for (int k = 0; k < n_modes; ++k) {
        Field envelope = bump(grid, support, scale / (k + 1));
        auto& v = envelope.mutable_values();
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] *= std::cos(k * std::numbers::pi * grid.position(i)[0] / support);
        out.push_back(std::move(envelope));
    }
    return out;
}

ModelSpec default_model(const GridSpec& grid, std::optional<double> support_radius) {
    grid.validate();
    if (support_radius && !(*support_radius > 0.0 && *support_radius <= 0.5 * grid.half_length))
        throw DomainError("default_model: support must lie in (0, L/2]");
    ModelSpec m;
    m.grid = grid;
    m.drift = DriftSpec::cubic_minus_linear();
    const double support = support_radius.value_or(0.375 * grid.half_length);
    NoiseSpec& n = m.noise;
    n.n_modes = 4;
    n.q = 3.0;
    n.shape = NoiseShape::smooth_power;
    n.kappa = bump(grid, support);
    n.sigma1 = default_sigma1(grid, support, n.n_modes, 0.2);
    for (int k = 0; k < n.n_modes; ++k) n.amplitude.push_back(0.3 / (k + 1));
    n.derive_coefficients();
    n.tail_bound = 0.0;
    m.forcing.profile = bump(grid, support / 3.0, 0.2);
    return m;
}

ModelSpec noiseless_model(const GridSpec& grid) {
    ModelSpec m = default_model(grid);
    for (auto& f : m.noise.sigma1) f = Field(grid);
    std::fill(m.noise.amplitude.begin(), m.noise.amplitude.end(), 0.0);
    m.noise.derive_coefficients();
    return m;
}

std::vector<std::pair<std::string, ModelSpec>> model_zoo(const GridSpec& grid) {
    std::vector<std::pair<std::string, ModelSpec>> zoo;
    zoo.emplace_back("cubic_smooth_q3", default_model(grid));

    ModelSpec sat = default_model(grid);
    sat.drift = DriftSpec::pure_power(4.0);
    sat.noise.shape = NoiseShape::saturated_power;
    sat.noise.q = 3.0;
    sat.noise.derive_coefficients();
    zoo.emplace_back("power4_saturated_q3", sat);

    ModelSpec lin = default_model(grid);
    lin.drift = DriftSpec::pure_power(3.0);
    lin.noise.q = 2.0;
    lin.noise.derive_coefficients();
    zoo.emplace_back("power3_smooth_q2", lin);
    return zoo;
}

// ---------------------------------------------------------------------------------------------
// Evaluators

Field drift_eval(const DriftSpec& spec, double t, const Field& u) {
    if (!u.all_finite()) throw DomainError("drift_eval: non-finite input");
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double growth = std::pow(std::abs(u[i]), spec.p - 1.0);
        const double f = spec.value(t, u[i]);
        if (!std::isfinite(growth) || !std::isfinite(f))
            throw SaturationError("drift_eval: |u|^{p-1} overflows at index " + std::to_string(i), i);
        out[i] = f;
    }
    return Field(u.grid(), std::move(out));
}

Field sigma_apply(const NoiseSpec& spec, double t, const Field& u, std::span<const double> v) {
    if (v.size() != static_cast<std::size_t>(spec.n_modes))
        throw ShapeError("sigma_apply: control has " + std::to_string(v.size()) + " entries, expected " +
                         std::to_string(spec.n_modes));
    if (!(u.grid() == spec.kappa.grid())) throw ShapeError("sigma_apply: field lives on a different grid");
    thread_local std::vector<double> s2;
    evaluate_sigma2(spec, t, u.values(), s2);
    const std::size_t n = u.size();
    const double theta = spec.sigma1_factor(t);
    const auto kap = spec.kappa.values();
    std::vector<double> out(n, 0.0);
    for (int k = 0; k < spec.n_modes; ++k) {
        if (v[k] == 0.0) continue;
        const auto s1 = spec.sigma1[k].values();
        for (std::size_t i = 0; i < n; ++i) out[i] += (theta * s1[i] + kap[i] * s2[k * n + i]) * v[k];
    }
    return Field(u.grid(), std::move(out));
}

double hs_norm_sq(const NoiseSpec& spec, double t, const Field& u) {
    if (!(u.grid() == spec.kappa.grid())) throw ShapeError("hs_norm_sq: field lives on a different grid");
    return hs_norm_sq_raw(spec, t, u.grid(), u.values());
}

ElementaryMargins elementary_inequalities(double u1, double u2, double p) {
    const double d = u1 - u2;
    const double lhs = (signed_power(u1, p) - signed_power(u2, p)) * d;
    const double r1 = std::pow(2.0, 1.0 - p) * std::pow(std::abs(d), p);
    const double r2 = 0.5 * (std::pow(std::abs(u1), p - 2.0) + std::pow(std::abs(u2), p - 2.0)) * d * d;
    return {lhs - r1, lhs - r2};
}

// ---------------------------------------------------------------------------------------------
// Validators

bool ValidationReport::all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) { return c.pass; });
}

const ConditionResult* ValidationReport::find(const std::string& name) const {
    for (const auto& c : conditions)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

ConditionResult check_f1(const DriftSpec& spec, double lambda1, std::span<const double> us, std::span<const double> ts) {
    MarginTracker tr("f1");
    for (std::size_t i = 0; i < us.size(); ++i) {
        const double u = us[i], t = ts[i % ts.size()];
        tr.add(spec.value(t, u) * u, lambda1 * std::pow(std::abs(u), spec.p) - spec.psi1, {t, 0.0, u, 0.0});
    }
    return tr.finish();
}

ConditionResult check_f3(const DriftSpec& spec, double lambda2, std::span<const std::pair<double, double>> pairs,
                         std::span<const double> ts) {
    MarginTracker tr("f3");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [u1, u2] = pairs[i];
        const double t = ts[i % ts.size()];
        const double d = u1 - u2;
        const double lhs = (spec.value(t, u1) - spec.value(t, u2)) * d;
        const double rhs = lambda2 * (signed_power(u1, spec.p) - signed_power(u2, spec.p)) * d - spec.psi4 * d * d;
        tr.add(lhs, rhs, {t, 0.0, u1, u2});
    }
    return tr.finish();
}

// Largest lambda in [0, hi] keeping the condition within slack; condition must pass at 0.
template <class Check>
std::optional<double> bisect_certificate(Check check) {
    if (!check(0.0).pass) return std::nullopt;
    double lo = 0.0, hi = 1.0;
    int grow = 0;
    while (check(hi).pass && grow < 40) {
        lo = hi;
        hi *= 2.0;
        ++grow;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (check(mid).pass ? lo : hi) = mid;
    }
    return lo;
}

std::vector<double> time_samples(const SamplingPlan& plan, std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> unif(0.0, plan.t_max);
    std::vector<double> ts(n);
    for (double& t : ts) t = unif(rng);
    return ts;
}

}  // namespace

ValidationReport validate_drift(const DriftSpec& spec, const SamplingPlan& plan) {
    ValidationReport report;
    std::mt19937_64 rng(plan.seed);
    const std::vector<double> us = scalar_samples(plan);
    const std::vector<double> ts = time_samples(plan, rng, 97);
    std::vector<std::pair<double, double>> pairs(plan.n_pairs);
    for (auto& pr : pairs) pr = random_pair(rng, plan);

    report.conditions.push_back(check_f1(spec, spec.lambda1, us, ts));

    MarginTracker f2("f2");
    for (std::size_t i = 0; i < us.size(); ++i) {
        const double u = us[i], t = ts[i % ts.size()];
        f2.add(spec.psi2 * std::pow(std::abs(u), spec.p - 1.0) + spec.psi3, std::abs(spec.value(t, u)), {t, 0.0, u, 0.0});
    }
    report.conditions.push_back(f2.finish());

    report.conditions.push_back(check_f3(spec, spec.lambda2, pairs, ts));

    // Bisection runs on a thinned copy of the samples; the stored certificates are checked in full above.
    std::vector<double> thin_u;
    for (std::size_t i = 0; i < us.size(); i += std::max<std::size_t>(1, us.size() / 20000)) thin_u.push_back(us[i]);
    thin_u.push_back(1.0);
    thin_u.push_back(-1.0);
    std::vector<std::pair<double, double>> thin_pairs(pairs.begin(), pairs.begin() + std::min<std::size_t>(pairs.size(), 20000));
    report.lambda1_certificate = bisect_certificate([&](double l) { return check_f1(spec, l, thin_u, ts); });
    report.lambda2_certificate = bisect_certificate([&](double l) { return check_f3(spec, l, thin_pairs, ts); });
    return report;
}

double hs_growth_constant(const NoiseSpec& spec, const GridSpec& grid, double p, double eps) {
    const double q = spec.q;
    const double sum_beta = sum_over_modes(spec, [&](int k) { return spec.coeff_beta[k]; });
    const double sum_gamma = sum_over_modes(spec, [&](int k) { return spec.coeff_gamma[k]; });
    const double kappa_sq = spectral::l2_sq(grid, spec.kappa.values());
    // max_s (A s^q - eps s^p) = (1 - q/p) A^{p/(p-q)} (q/(p eps))^{q/(p-q)}
    const double e1 = p / (p - q), e2 = q / (p - q);
    const double factor = (1.0 - q / p) * std::pow(q / (p * eps), e2);
    double young = 0.0;
    for (double k : spec.kappa.values()) {
        const double A = 2.0 * sum_gamma * k * k;
        if (A > 0.0) young += factor * std::pow(A, e1);
    }
    return 2.0 * sum_beta * kappa_sq + young * grid.cell_volume();
}

double hs_weighted_constant(const NoiseSpec& spec, const GridSpec& grid, double p) {
    (void)grid;
    const double q = spec.q;
    const double sum_gamma = sum_over_modes(spec, [&](int k) { return spec.coeff_gamma[k]; });
    const double denom = p - 2.0 * (q - 1.0);
    const double r = denom > 0.0 ? 4.0 * p / denom : std::numeric_limits<double>::infinity();
    const double k2 = kappa_lr_norm_sq(spec.kappa, r);
    return 2.0 * sum_gamma * k2 * std::max(denom / p, 2.0 * (q - 1.0) / p);
}

double hs_difference_constant(const NoiseSpec& spec, const GridSpec& grid, double p) {
    (void)grid;
    const double q = spec.q;
    const double sum_alpha = sum_over_modes(spec, [&](int k) { return spec.coeff_alpha[k]; });
    const double denom = p - 2.0 * (q - 1.0);
    const double r2 = denom > 0.0 ? 4.0 * p / denom : std::numeric_limits<double>::infinity();
    const double k1 = kappa_lr_norm_sq(spec.kappa, 4.0 * p / (p - 2.0));
    const double k2 = kappa_lr_norm_sq(spec.kappa, r2);
    return (2.0 / p) * sum_alpha * k1 * std::max(p - 2.0, 1.0) +
           (4.0 / p) * sum_alpha * k2 * std::max(denom, q - 1.0);
}

ValidationReport validate_noise(const NoiseSpec& spec, const DriftSpec& drift, const GridSpec& grid,
                                const SamplingPlan& plan) {
    spec.validate(grid, drift.p);
    ValidationReport report;
    const double p = drift.p, q = spec.q;
    std::mt19937_64 rng(plan.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::vector<double> ts = time_samples(plan, rng, 97);
    const std::vector<double> us = scalar_samples(plan);

    MarginTracker sig2("sig2"), sig3("sig3");
    for (std::size_t i = 0; i < plan.n_pairs; ++i) {
        const auto [u1, u2] = random_pair(rng, plan);
        const double t = ts[i % ts.size()];
        const int k = static_cast<int>(i % static_cast<std::size_t>(spec.n_modes));
        const double d = spec.sigma2(t, k, u1) - spec.sigma2(t, k, u2);
        const double lhs = spec.coeff_alpha[k] *
                           (1.0 + std::pow(std::abs(u1), q - 2.0) + std::pow(std::abs(u2), q - 2.0)) * (u1 - u2) * (u1 - u2);
        sig2.add(lhs, d * d, {t, 0.0, u1, u2, k});
    }
    for (std::size_t i = 0; i < us.size(); ++i)
        for (int k = 0; k < spec.n_modes; ++k) {
            const double t = ts[(i + k) % ts.size()];
            const double s = spec.sigma2(t, k, us[i]);
            sig3.add(spec.coeff_beta[k] + spec.coeff_gamma[k] * std::pow(std::abs(us[i]), q), s * s,
                     {t, 0.0, us[i], 0.0, k});
        }
    report.conditions.push_back(sig2.finish());
    report.conditions.push_back(sig3.finish());

    const double sum_beta = sum_over_modes(spec, [&](int k) { return spec.coeff_beta[k]; });
    const double kappa_sq = spectral::l2_sq(grid, spec.kappa.values());
    const double c6_01 = hs_growth_constant(spec, grid, p, 0.1);
    const double c6_1 = hs_growth_constant(spec, grid, p, 1.0);
    const double c8 = hs_weighted_constant(spec, grid, p);
    const double c9 = hs_difference_constant(spec, grid, p);
    report.constants = {{"C_sig6(0.1)", c6_01}, {"C_sig6(1)", c6_1}, {"C_sig8", c8}, {"C_sig9", c9}};

    MarginTracker sig6a("sig6(eps=0.1)"), sig6b("sig6(eps=1)"), sig8("sig8"), sig9("sig9");
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> lscale(-8.0, 0.0);
    for (std::size_t i = 0; i < plan.n_fields; ++i) {
        const double t = ts[i % ts.size()];
        const Field u = random_field(rng, grid, plan);
        const double hs = hs_norm_sq_raw(spec, t, grid, u.values());
        const double lpp = spectral::lp_pow(grid, u.values(), p);
        const double l2 = std::sqrt(spectral::l2_sq(grid, u.values()));
        const double s1 = spec.sigma1_norm_sq(t);
        const Witness w{t, 0.0, u.max_abs(), 0.0};
        sig6a.add(0.1 * lpp + 2.0 * s1 + c6_01, hs, w);
        sig6b.add(1.0 * lpp + 2.0 * s1 + c6_1, hs, w);
        sig8.add(2.0 * s1 + 2.0 * sum_beta * kappa_sq + c8 * (1.0 + std::sqrt(lpp)) * l2, hs, w);

        Field u2 = random_field(rng, grid, plan);
        if (i % 2 == 0) {
            // Nearby pair: perturbation at a random relative scale.
            u2 *= std::pow(10.0, lscale(rng)) * std::max(1.0, u.max_abs()) / std::max(1e-300, u2.max_abs());
            u2 += u;
        }
        const double diff_hs = hs_difference_sq_raw(spec, t, grid, u.values(), u2.values());
        const double lpp2 = spectral::lp_pow(grid, u2.values(), p);
        const double dist = l2_norm(u - u2);
        sig9.add(c9 * (1.0 + std::sqrt(lpp) + std::sqrt(lpp2)) * dist, diff_hs, {t, 0.0, u.max_abs(), u2.max_abs()});
    }
    report.conditions.push_back(sig6a.finish());
    report.conditions.push_back(sig6b.finish());
    report.conditions.push_back(sig8.finish());
    report.conditions.push_back(sig9.finish());
    return report;
}

ConditionResult validate_elementary(double p, std::size_t n_pairs, std::uint64_t seed) {
    MarginTracker e1("elity1"), e2("elity2");
    std::mt19937_64 rng(seed);
    SamplingPlan plan;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const auto [u1, u2] = random_pair(rng, plan);
        const auto m = elementary_inequalities(u1, u2, p);
        const double d = u1 - u2;
        const double lhs = (signed_power(u1, p) - signed_power(u2, p)) * d;
        // Re-express margins as lhs/rhs pairs so the tracker normalizes by scale.
        e1.add(lhs, lhs - m.margin1, {0, 0, u1, u2});
        e2.add(lhs, lhs - m.margin2, {0, 0, u1, u2});
    }
    ConditionResult a = e1.finish(), b = e2.finish();
    ConditionResult out = a.worst_margin <= b.worst_margin ? a : b;
    out.name = "elity1+elity2";
    out.samples = a.samples;
    out.pass = a.worst_margin >= -1e-12 && b.worst_margin >= -1e-12;
    return out;
}

}  // namespace fracldp
