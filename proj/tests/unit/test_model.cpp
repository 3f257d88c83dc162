#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fracldp/errors.hpp"
#include "fracldp/model.hpp"

using namespace fracldp;

namespace {

SamplingPlan small_plan() {
    SamplingPlan plan;
    plan.n_scalar = 20000;
    plan.n_pairs = 20000;
    plan.n_fields = 300;
    return plan;
}

Field random_field(const GridSpec& g, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<double> v(g.size());
    for (double& x : v) x = nd(rng);
    return Field(g, v);
}

}  // namespace

TEST(DriftEval, Examples) {
    const GridSpec g = default_grid();
    const DriftSpec cubic = DriftSpec::cubic_minus_linear();
    EXPECT_EQ(drift_eval(cubic, 0.0, Field(g)).max_abs(), 0.0);
    const Field six = drift_eval(cubic, 0.0, Field::constant(g, 2.0));
    for (std::size_t i = 0; i < six.size(); ++i) EXPECT_EQ(six[i], 6.0);
    // |u|^{p-2} u at u = -1 is -1.
    const Field neg = drift_eval(DriftSpec::pure_power(4.0), 0.0, Field::constant(g, -1.0));
    for (std::size_t i = 0; i < neg.size(); ++i) EXPECT_EQ(neg[i], -1.0);
}

TEST(DriftEval, OverflowNamesIndex) {
    const GridSpec g = default_grid();
    Field u(g);
    u.mutable_values()[17] = 1e120;
    try {
        drift_eval(DriftSpec::cubic_minus_linear(), 0.0, u);
        FAIL() << "expected SaturationError";
    } catch (const SaturationError& e) {
        EXPECT_EQ(e.index(), 17u);
    }
}

TEST(DriftSpec, Validation) {
    DriftSpec d = DriftSpec::pure_power(2.0);
    EXPECT_THROW(d.validate(), DomainError);
    d = DriftSpec::cubic_minus_linear();
    d.lambda1 = 0.0;
    EXPECT_THROW(d.validate(), DomainError);
}

TEST(ValidateDrift, CubicPassesWithHalfCertificate) {
    const auto rep = validate_drift(DriftSpec::cubic_minus_linear(), small_plan());
    EXPECT_TRUE(rep.all_pass());
    ASSERT_TRUE(rep.lambda1_certificate);
    // u^4 - u^2 >= l u^4 - 1/2 is tight at u = 1 exactly when l = 1/2.
    EXPECT_NEAR(*rep.lambda1_certificate, 0.5, 1e-6);
    ASSERT_TRUE(rep.lambda2_certificate);
    EXPECT_GE(*rep.lambda2_certificate, 1.0 - 1e-6);
}

TEST(ValidateDrift, PurePowerPasses) {
    for (double p : {3.0, 4.0, 6.0}) {
        const auto rep = validate_drift(DriftSpec::pure_power(p), small_plan());
        EXPECT_TRUE(rep.all_pass()) << p;
        EXPECT_GE(rep.find("f3")->worst_margin, -validation_slack);
    }
}

TEST(ValidateDrift, SignReversalFailsF1) {
    DriftSpec d;
    d.form = DriftForm::custom;
    d.custom = [](double, double u) { return -u * u * u; };
    const auto rep = validate_drift(d, small_plan());
    const auto* f1 = rep.find("f1");
    ASSERT_NE(f1, nullptr);
    EXPECT_FALSE(f1->pass);
    EXPECT_LT(f1->worst_margin, -0.5);
    EXPECT_FALSE(rep.lambda1_certificate);
}

TEST(Elementary, Examples) {
    const auto same = elementary_inequalities(3.0, 3.0, 5.0);
    EXPECT_EQ(same.margin1, 0.0);
    EXPECT_EQ(same.margin2, 0.0);
    const auto m = elementary_inequalities(1.0, -1.0, 4.0);
    EXPECT_DOUBLE_EQ(m.margin1, 2.0);
    EXPECT_DOUBLE_EQ(m.margin2, 0.0);
}

TEST(Elementary, RandomSweep) {
    for (double p : {3.0, 4.0, 6.0}) {
        const auto r = validate_elementary(p, 1000000, 42);
        EXPECT_TRUE(r.pass) << "p=" << p << " worst " << r.worst_margin;
        EXPECT_EQ(r.samples, 1000000u);
    }
}

TEST(SigmaApply, ZeroControlAndSingleModeIdentity) {
    const GridSpec g = default_grid();
    const ModelSpec m = default_model(g);
    const Field u = random_field(g, 1, 1.0);
    std::vector<double> zero(m.noise.n_modes, 0.0);
    EXPECT_EQ(sigma_apply(m.noise, 0.0, u, zero).max_abs(), 0.0);

    NoiseSpec n;
    n.n_modes = 1;
    n.shape = NoiseShape::custom;
    n.custom = [](double, int, double x) { return x; };
    n.kappa = Field::constant(g, 1.0);
    n.sigma1 = {Field(g)};
    const double e1[] = {1.0};
    const Field out = sigma_apply(n, 0.0, u, e1);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(out[i], u[i]);
}

TEST(SigmaApply, AdditiveInControlAndShapeChecked) {
    const GridSpec g = default_grid();
    const ModelSpec m = default_model(g);
    const Field u = random_field(g, 2, 1.5);
    std::vector<double> v1{0.3, -1.0, 2.0, 0.1}, v2{-0.7, 0.4, 0.0, 1.3}, v12(4);
    for (int k = 0; k < 4; ++k) v12[k] = v1[k] + v2[k];
    const Field a = sigma_apply(m.noise, 0.2, u, v12);
    const Field b = sigma_apply(m.noise, 0.2, u, v1) + sigma_apply(m.noise, 0.2, u, v2);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * (1 + std::abs(a[i])));
    std::vector<double> short_v(3, 0.0);
    EXPECT_THROW(sigma_apply(m.noise, 0.0, u, short_v), ShapeError);
}

TEST(HsNorm, AdditiveSplitAndPerModeOracle) {
    const GridSpec g = default_grid();
    ModelSpec m = noiseless_model(g);
    m.noise.sigma1 = default_model(g).noise.sigma1;
    const Field u = random_field(g, 3, 1.0);
    EXPECT_NEAR(hs_norm_sq(m.noise, 0.0, u), m.noise.sigma1_norm_sq(0.0), 1e-14);

    // Eight modes against the brute-force sum of sigma applied to each basis vector.
    NoiseSpec n = default_model(g).noise;
    n.n_modes = 8;
    for (int k = 4; k < 8; ++k) {
        n.sigma1.push_back((1.0 / (k + 1)) * n.sigma1[k - 4]);
        n.amplitude.push_back(0.1 / (k + 1));
    }
    n.derive_coefficients();
    double brute = 0.0;
    for (int k = 0; k < 8; ++k) {
        std::vector<double> e(8, 0.0);
        e[k] = 1.0;
        brute += std::pow(l2_norm(sigma_apply(n, 0.0, u, e)), 2);
    }
    EXPECT_NEAR(hs_norm_sq(n, 0.0, u), brute, 1e-10 * brute);
}

TEST(HsNorm, ZeroStateWithoutSigma1) {
    const GridSpec g = default_grid();
    ModelSpec m = default_model(g);
    for (auto& f : m.noise.sigma1) f = Field(g);
    EXPECT_EQ(hs_norm_sq(m.noise, 0.0, Field(g)), 0.0);
}

TEST(ValidateNoise, ZooPasses) {
    for (const auto& [name, m] : model_zoo()) {
        const auto rep = validate_noise(m.noise, m.drift, m.grid, small_plan());
        for (const auto& c : rep.conditions) EXPECT_TRUE(c.pass) << name << " " << c.name << " " << c.worst_margin;
        EXPECT_TRUE(validate_drift(m.drift, small_plan()).all_pass()) << name;
    }
}

TEST(ValidateNoise, LinearGrowthCasePasses) {
    ModelSpec m = default_model();
    m.noise.q = 2.0;
    m.noise.derive_coefficients();
    EXPECT_TRUE(validate_noise(m.noise, m.drift, m.grid, small_plan()).all_pass());
}

TEST(ValidateNoise, SaturatedAtUpperQ) {
    ModelSpec m = default_model();
    m.noise.shape = NoiseShape::saturated_power;
    m.noise.q = 3.0;
    m.noise.derive_coefficients();
    const auto rep = validate_noise(m.noise, m.drift, m.grid, small_plan());
    EXPECT_GE(rep.find("sig3")->worst_margin, 0.0);
    EXPECT_TRUE(rep.all_pass());
}

TEST(ValidateNoise, UndersizedGammaFailsWithWitness) {
    ModelSpec m = default_model();
    for (double& gmm : m.noise.coeff_gamma) gmm *= 0.1;
    const auto rep = validate_noise(m.noise, m.drift, m.grid, small_plan());
    const auto* s3 = rep.find("sig3");
    ASSERT_NE(s3, nullptr);
    EXPECT_FALSE(s3->pass);
    EXPECT_GE(s3->witness.mode, 0);
    EXPECT_GT(std::abs(s3->witness.u1), 1.0);
}

TEST(ValidateNoise, RejectsQOutsideRange) {
    ModelSpec m = default_model();
    m.noise.q = 3.1;
    EXPECT_THROW(m.validate(), DomainError);
}

TEST(NoiseBounds, GrowthAndDifferencePropertiesOnRandomFields) {
    const ModelSpec m = default_model();
    const double p = m.drift.p;
    const double s1 = m.noise.sigma1_norm_sq(0.0);
    const double c9 = hs_difference_constant(m.noise, m.grid, p);
    for (double eps : {0.1, 1.0}) {
        const double c = hs_growth_constant(m.noise, m.grid, p, eps);
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const Field u = random_field(m.grid, seed, 0.1 * (seed + 1));
            EXPECT_LE(hs_norm_sq(m.noise, 0.0, u), eps * std::pow(lp_norm(u, p), p) + 2 * s1 + c);
        }
    }
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Field u1 = random_field(m.grid, seed, 0.2 * (seed + 1));
        const Field u2 = u1 + random_field(m.grid, seed + 1000, 0.05);
        // sigma1 cancels in the difference.
        std::vector<double> d(m.noise.n_modes);
        double diff_hs = 0.0;
        for (int k = 0; k < m.noise.n_modes; ++k) {
            std::vector<double> e(m.noise.n_modes, 0.0);
            e[k] = 1.0;
            diff_hs += std::pow(l2_norm(sigma_apply(m.noise, 0.0, u1, e) - sigma_apply(m.noise, 0.0, u2, e)), 2);
        }
        const double bound = c9 * (1 + std::pow(lp_norm(u1, p), p / 2) + std::pow(lp_norm(u2, p), p / 2)) * l2_norm(u1 - u2);
        EXPECT_LE(diff_hs, bound);
    }
}

TEST(Models, DefaultModelValidatesAndSupportOverride) {
    EXPECT_NO_THROW(default_model().validate());
    const GridSpec g{1, 16.0, 256, 0.75};
    const ModelSpec m = default_model(g, 2.0);
    m.validate();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(g.position(i)[0]) >= 2.0) EXPECT_EQ(m.noise.kappa[i], 0.0);
    EXPECT_THROW(default_model(g, 9.0), DomainError);
}
