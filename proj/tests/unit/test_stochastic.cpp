#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracldp/errors.hpp"
#include "fracldp/skeleton.hpp"
#include "fracldp/stochastic.hpp"

using namespace fracldp;

namespace {

Field unit_bump(const GridSpec& g) {
    Field b = bump(g, 3.0);
    return (1.0 / l2_norm(b)) * b;
}

// One constant mode with constant kappa: every grid point follows the same scalar recursion.
ModelSpec constant_reduction(const GridSpec& g) {
    ModelSpec m = default_model(g);
    m.noise.n_modes = 1;
    m.noise.sigma1 = {Field::constant(g, 0.3)};
    m.noise.amplitude = {0.4};
    m.noise.kappa = Field::constant(g, 0.8);
    m.noise.derive_coefficients();
    m.forcing.profile = Field::constant(g, 0.1);
    return m;
}

// Additive noise along one sine mode with no drift.
ModelSpec linear_additive(const GridSpec& g, int k) {
    ModelSpec m = noiseless_model(g);
    m.drift.form = DriftForm::custom;
    m.drift.custom = [](double, double) { return 0.0; };
    m.drift.custom_derivative = [](double, double) { return 0.0; };
    m.forcing.profile = Field(g);
    m.noise.n_modes = 1;
    m.noise.sigma1 = {sine_mode(g, k, 1.0 / std::sqrt(g.half_length))};
    m.noise.amplitude = {0.0};
    m.noise.derive_coefficients();
    return m;
}

}  // namespace

TEST(WienerDriver, ReproducibleAndStreamDependent) {
    const TimeGrid tg{1.0, 64};
    const WienerDriver a(3, 42, 7), b(3, 42, 7), c(3, 42, 8), d(3, 43, 7);
    EXPECT_EQ(a.increments(tg), b.increments(tg));
    EXPECT_NE(a.increments(tg), c.increments(tg));
    EXPECT_NE(a.increments(tg), d.increments(tg));
}

TEST(WienerDriver, IncrementStatistics) {
    const TimeGrid tg{2.0, 1 << 15};
    const auto dw = WienerDriver(4, 1, 0).increments(tg);
    ASSERT_EQ(dw.size(), 4u << 15);
    for (int k = 0; k < 4; ++k) {
        std::vector<double> xs;
        for (std::size_t i = k; i < dw.size(); i += 4) xs.push_back(dw[i]);
        const auto e = mean_estimate(xs);
        const double sd = std::sqrt(tg.dt());
        EXPECT_LT(std::abs(e.mean), 4 * sd / std::sqrt(double(xs.size())));
        EXPECT_NEAR(sample_variance(xs) / tg.dt(), 1.0, 0.05);
    }
}

TEST(Stats, WilsonAndRegression) {
    const auto ci = wilson_interval(0, 100);
    EXPECT_EQ(ci.lo, 0.0);
    EXPECT_NEAR(ci.hi, 0.0370, 1e-3);
    const auto mid = wilson_interval(50, 100);
    EXPECT_NEAR(mid.lo, 0.4038, 1e-3);
    EXPECT_NEAR(mid.hi, 0.5962, 1e-3);
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto fit = poly_fit(x, y, 1);
    EXPECT_NEAR(fit.coeff[0], 1.0, 1e-12);
    EXPECT_NEAR(fit.coeff[1], 2.0, 1e-12);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
}

TEST(Simulate, TinyEpsilonDegeneratesToSkeleton) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 64};
    const Field u0 = unit_bump(m.grid);
    const SdeConfig cfg{1e-30, Scheme::tamed_imex_em, tg};
    const WienerDriver drv(m.noise.n_modes, 3, 0);
    const Control v0(tg, m.noise.n_modes);
    const Control v = Control::constant_mode(tg, m.noise.n_modes, 2, 0.8);
    const auto a = simulate_sde(m, u0, cfg, drv);
    const auto sa = solve_skeleton(m, u0, v0, tg);
    const auto b = simulate_shifted(m, u0, cfg, v, drv);
    const auto sb = solve_skeleton(m, u0, v, tg);
    for (int n = 0; n <= tg.n_steps; ++n)
        for (std::size_t i = 0; i < m.grid.size(); ++i) {
            ASSERT_NEAR(a.trajectory[n][i], sa.trajectory[n][i], 1e-12);
            ASSERT_NEAR(b.trajectory[n][i], sb.trajectory[n][i], 1e-12);
        }
}

TEST(Simulate, ZeroShiftMatchesUnshifted) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 32};
    const SdeConfig cfg{0.5, Scheme::tamed_imex_em, tg};
    const WienerDriver drv(m.noise.n_modes, 9, 4);
    const auto a = simulate_sde(m, unit_bump(m.grid), cfg, drv);
    const auto b = simulate_shifted(m, unit_bump(m.grid), cfg, Control(tg, m.noise.n_modes), drv);
    for (int n = 0; n <= tg.n_steps; ++n)
        for (std::size_t i = 0; i < m.grid.size(); ++i) ASSERT_EQ(a.trajectory[n][i], b.trajectory[n][i]);
    EXPECT_EQ(a.stream_id, 4u);
}

TEST(Simulate, ConstantReductionMatchesScalarTamedEm) {
    const GridSpec g{1, 4.0, 16, 0.75};
    const ModelSpec m = constant_reduction(g);
    const TimeGrid tg{1.0, 128};
    const double eps = 0.7;
    const SdeConfig cfg{eps, Scheme::tamed_imex_em, tg};
    for (std::uint64_t stream = 0; stream < 5; ++stream) {
        const WienerDriver drv(1, 11, stream);
        const auto path = simulate_sde(m, Field::constant(g, 0.6), cfg, drv);
        const auto dw = drv.increments(tg);
        double u = 0.6;
        for (int n = 0; n < tg.n_steps; ++n) {
            const double f = u * u * u - u;
            const double s = u * std::pow(1 + u * u, 0.25);
            u = u + tg.dt() * (-f / (1 + tg.dt() * std::abs(f)) + 0.1) + (0.3 + 0.8 * 0.4 * s) * std::sqrt(eps) * dw[n];
            for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(path.trajectory[n + 1][i], u, 1e-10);
        }
    }
}

TEST(Simulate, LinearAdditiveMeanMatchesDecay) {
    const GridSpec g{1, 8.0, 64, 0.75};
    const int k = 2;
    const ModelSpec m = linear_additive(g, k);
    const TimeGrid tg{1.0, 32};
    const Field phi = sine_mode(g, k, 1.0 / std::sqrt(g.half_length));
    BatchRequest req;
    req.u0 = 2.0 * phi;
    req.cfg = SdeConfig{1.0, Scheme::tamed_imex_em, tg};
    req.probes = {phi};
    req.base_seed = 5;
    req.n_paths = 2000;
    const auto recs = run_batch(m, req);
    std::vector<double> xs;
    for (const auto& r : recs) xs.push_back(r.terminal_probes[0]);
    const auto e = mean_estimate(xs);
    const double lam = std::pow(k * std::numbers::pi / g.half_length, 2 * g.alpha);
    EXPECT_LT(std::abs(e.mean - 2.0 * std::exp(-lam * tg.T)), 3 * e.std_error);
}

TEST(Simulate, FluctuationVarianceScalesWithEpsilon) {
    const GridSpec g{1, 8.0, 64, 0.75};
    const ModelSpec m = linear_additive(g, 1);
    const Field phi = sine_mode(g, 1, 1.0 / std::sqrt(g.half_length));
    std::vector<double> logv, loge;
    for (double eps : {1.0, 0.1, 0.01}) {
        BatchRequest req;
        req.u0 = phi;
        req.cfg = SdeConfig{eps, Scheme::tamed_imex_em, TimeGrid{1.0, 16}};
        req.probes = {phi};
        req.base_seed = 8;
        req.n_paths = 500;
        std::vector<double> xs;
        for (const auto& r : run_batch(m, req)) xs.push_back(r.terminal_probes[0]);
        logv.push_back(std::log(sample_variance(xs)));
        loge.push_back(std::log(eps));
    }
    EXPECT_NEAR(poly_fit(loge, logv, 1).coeff[1], 1.0, 0.1);
}

TEST(Batch, IndependentOfWorkerCountAndStreamsUncorrelated) {
    const ModelSpec m = default_model();
    BatchRequest req;
    req.u0 = unit_bump(m.grid);
    req.cfg = SdeConfig{1.0, Scheme::tamed_imex_em, TimeGrid{1.0, 16}};
    req.base_seed = 77;
    req.n_paths = 2000;
    const auto one = run_batch(m, req);
    req.workers = 3;
    const auto three = run_batch(m, req);
    ASSERT_EQ(one.size(), three.size());
    for (std::size_t i = 0; i < one.size(); ++i) ASSERT_EQ(one[i].own.terminal_l2_sq, three[i].own.terminal_l2_sq);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < 1000; ++i) {
        a.push_back(one[i].own.terminal_l2_sq);
        b.push_back(one[i + 1000].own.terminal_l2_sq);
    }
    EXPECT_LT(std::abs(sample_correlation(a, b)), 3.0 / std::sqrt(1000.0));
}

TEST(Batch, BlowUpsRecordedNotThrown) {
    const ModelSpec m = default_model();
    BatchRequest req;
    req.u0 = unit_bump(m.grid);
    req.cfg = SdeConfig{1.0, Scheme::tamed_imex_em, TimeGrid{1.0, 16}, 1e-6};
    req.n_paths = 10;
    const auto recs = run_batch(m, req);
    EXPECT_EQ(count_blow_ups(recs), 10u);
    EXPECT_EQ(recs[0].blow_up_step, 1);
}

TEST(Batch, DefaultSettingsRarelyBlowUp) {
    const ModelSpec m = default_model();
    BatchRequest req;
    req.u0 = unit_bump(m.grid);
    req.cfg = SdeConfig{1.0, Scheme::tamed_imex_em, TimeGrid{1.0, 128}};
    req.n_paths = 1000;
    EXPECT_LT(static_cast<double>(count_blow_ups(run_batch(m, req))) / 1000.0, 1e-3);
}

TEST(EnergyEstimate, RestStateAndInsufficientSamples) {
    const GridSpec g = default_grid();
    ModelSpec m = default_model(g);
    m.forcing.profile = Field(g);
    for (auto& f : m.noise.sigma1) f = Field(g);
    BatchRequest req;
    req.u0 = Field(g);
    req.cfg = SdeConfig{1.0, Scheme::tamed_imex_em, TimeGrid{1.0, 16}};
    req.n_paths = 100;
    const auto e = energy_estimate_check(run_batch(m, req));
    EXPECT_EQ(e.estimate.mean, 0.0);
    req.n_paths = 99;
    EXPECT_THROW(energy_estimate_check(run_batch(m, req)), EstimationError);
}

TEST(EnergyEstimate, AffineInInitialEnergy) {
    const ModelSpec m = default_model();
    const SdeConfig cfg{1.0, Scheme::tamed_imex_em, TimeGrid{1.0, 64}};
    const auto rep = energy_affine_sweep(m, bump(m.grid, 3.0), {0.0, 1.0, 2.0, 4.0}, cfg, 300, 21);
    EXPECT_TRUE(rep.pass) << rep.affine.coeff[0] << " " << rep.affine.coeff[1] << " " << rep.quadratic.coeff[2];
    // Smaller noise never raises the estimate beyond CI overlap.
    SdeConfig small = cfg;
    small.epsilon = 0.1;
    BatchRequest req;
    req.u0 = unit_bump(m.grid);
    req.n_paths = 300;
    req.base_seed = 2;
    req.cfg = cfg;
    const auto big = energy_estimate_check(run_batch(m, req));
    req.cfg = small;
    const auto little = energy_estimate_check(run_batch(m, req));
    EXPECT_LE(little.estimate.ci.lo, big.estimate.ci.hi);
}

TEST(UniformConvergence, DegenerateCases) {
    const GridSpec g = default_grid();
    const TimeGrid tg{1.0, 32};
    const ModelSpec quiet = noiseless_model(g);
    const std::vector<Field> u0s{unit_bump(g)};
    const std::vector<Control> vs{Control::constant_mode(tg, quiet.noise.n_modes, 0, 1.0)};
    const auto t0 = uniform_convergence_experiment(quiet, u0s, vs, {1.0, 0.1}, 1e-12, 100, 1);
    for (const auto& r : t0.rows) EXPECT_EQ(r.p_hat, 0.0);

    const ModelSpec m = default_model(g);
    const auto t1 = uniform_convergence_experiment(m, u0s, vs, {1.0, 0.1}, 1e6, 100, 1);
    for (const auto& r : t1.rows) EXPECT_EQ(r.p_hat, 0.0);
    EXPECT_THROW(uniform_convergence_experiment(m, {}, vs, {1.0}, 1.0, 10, 1), DomainError);
}
