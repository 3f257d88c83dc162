#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracldp/errors.hpp"
#include "fracldp/skeleton.hpp"

using namespace fracldp;

namespace {

ModelSpec quiet_model(const GridSpec& g, DriftSpec drift) {
    ModelSpec m = noiseless_model(g);
    m.drift = std::move(drift);
    m.forcing.profile = Field(g);
    return m;
}

DriftSpec zero_drift() {
    DriftSpec d = DriftSpec::pure_power(4.0);
    d.form = DriftForm::custom;
    d.custom = [](double, double) { return 0.0; };
    d.custom_derivative = [](double, double) { return 0.0; };
    return d;
}

Field unit_bump(const GridSpec& g) {
    Field b = bump(g, 3.0);
    return (1.0 / l2_norm(b)) * b;
}

// Classical RK4 for u' = -(u^3 - u).
double rk4_cubic(double u, double T, int n) {
    const double h = T / n;
    auto f = [](double x) { return -(x * x * x - x); };
    for (int i = 0; i < n; ++i) {
        const double k1 = f(u), k2 = f(u + 0.5 * h * k1), k3 = f(u + 0.5 * h * k2), k4 = f(u + h * k3);
        u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return u;
}

}  // namespace

TEST(Control, BallAndNorms) {
    const TimeGrid tg{2.0, 16};
    const Control c = Control::constant_mode(tg, 3, 1, 1.5);
    EXPECT_NEAR(c.l2_time_norm(), 1.5 * std::sqrt(2.0), 1e-14);
    EXPECT_THROW(Control(tg, 3, std::vector<double>(48, 1.0), 1.0), DomainError);
    EXPECT_NO_THROW(Control(tg, 3, std::vector<double>(48, 1.0), std::sqrt(6.0)));
    EXPECT_THROW(Control(tg, 3, std::vector<double>(47, 1.0)), ShapeError);
    EXPECT_THROW((TimeGrid{1.0, 1}).validate(), DomainError);
}

TEST(Skeleton, LinearFlowIsExact) {
    const GridSpec g{1, 8.0, 64, 0.6};
    const ModelSpec m = quiet_model(g, zero_drift());
    const TimeGrid tg{1.0, 32};
    const Field u0 = sine_mode(g, 3);
    const auto sol = solve_skeleton(m, u0, Control(tg, m.noise.n_modes), tg);
    const double lam = std::pow(3 * std::numbers::pi / g.half_length, 2 * g.alpha);
    for (int n = 0; n <= tg.n_steps; ++n) {
        const double f = std::exp(-lam * tg.time(n));
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(sol.trajectory[n][i], f * u0[i], 1e-10);
    }
}

TEST(Skeleton, RestStateStaysZero) {
    const GridSpec g = default_grid();
    ModelSpec m = default_model(g);
    m.forcing.profile = Field(g);
    const TimeGrid tg{1.0, 16};
    const auto sol = solve_skeleton(m, Field(g), Control(tg, m.noise.n_modes), tg);
    for (const auto& f : sol.trajectory) EXPECT_EQ(f.max_abs(), 0.0);
}

TEST(Skeleton, SpatiallyConstantMatchesScalarOde) {
    const GridSpec g{1, 4.0, 8, 0.75};
    const ModelSpec m = quiet_model(g, DriftSpec::cubic_minus_linear());
    const TimeGrid tg{1.0, 1 << 20};
    const auto sol = solve_skeleton(m, Field::constant(g, 1.7), Control(tg, m.noise.n_modes), tg);
    const double oracle = rk4_cubic(1.7, 1.0, 20000);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(sol.trajectory.back()[i], oracle, 1e-6);
}

TEST(Skeleton, DeterministicReplay) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 64};
    const Control v = Control::constant_mode(tg, m.noise.n_modes, 0, 0.7);
    const auto a = solve_skeleton(m, unit_bump(m.grid), v, tg);
    const auto b = solve_skeleton(m, unit_bump(m.grid), v, tg);
    for (int n = 0; n <= tg.n_steps; ++n)
        for (std::size_t i = 0; i < m.grid.size(); ++i) ASSERT_EQ(a.trajectory[n][i], b.trajectory[n][i]);
}

TEST(Skeleton, GuardBreachNamesStep) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 8};
    try {
        solve_skeleton(m, 3.0 * unit_bump(m.grid), Control(tg, m.noise.n_modes), tg, 1e-3);
        FAIL() << "expected BlowUpError";
    } catch (const BlowUpError& e) {
        EXPECT_EQ(e.step(), 1);
    }
}

TEST(Skeleton, EnergyDissipatesWithoutSources) {
    const GridSpec g = default_grid();
    const ModelSpec m = quiet_model(g, DriftSpec::pure_power(4.0));
    const TimeGrid tg{1.0, 128};
    const auto sol = solve_skeleton(m, 2.0 * unit_bump(g), Control(tg, m.noise.n_modes), tg);
    for (int n = 1; n <= tg.n_steps; ++n) EXPECT_LE(sol.diagnostics[n].l2_sq, sol.diagnostics[n - 1].l2_sq * (1 + 1e-12));
}

TEST(Skeleton, StepHalvingIsFirstOrder) {
    const ModelSpec m = default_model();
    const Field u0 = unit_bump(m.grid);
    auto run = [&](int n) {
        const TimeGrid tg{1.0, n};
        return solve_skeleton(m, u0, Control::constant_mode(tg, m.noise.n_modes, 0, 1.0), tg).trajectory;
    };
    const auto a = run(256), b = run(512), c = run(1024);
    auto gap = [&](const Trajectory& coarse, const Trajectory& fine) {
        double worst = 0.0;
        for (std::size_t n = 0; n < coarse.size(); ++n) worst = std::max(worst, l2_norm(coarse[n] - fine[2 * n]));
        return worst;
    };
    EXPECT_GE(gap(a, b) / gap(b, c), 1.8);
}

TEST(AprioriBound, ZeroDataAndDefault) {
    const GridSpec g = default_grid();
    ModelSpec zero = quiet_model(g, DriftSpec::pure_power(4.0));
    const TimeGrid tg{1.0, 64};
    const Control v0(tg, zero.noise.n_modes);
    const auto r0 = apriori_bound_report(solve_skeleton(zero, Field(g), v0, tg), zero, Field(g), v0);
    EXPECT_EQ(r0.observed, 0.0);
    EXPECT_TRUE(r0.pass);

    const ModelSpec m = default_model(g);
    const Field u0 = unit_bump(g);
    for (double amp : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const Control v = Control::constant_mode(tg, m.noise.n_modes, 1, amp);
        const auto r = apriori_bound_report(solve_skeleton(m, u0, v, tg), m, u0, v);
        EXPECT_TRUE(r.pass) << amp;
        EXPECT_LT(r.energy_functional, r.gronwall_bound);
        EXPECT_NEAR(r.R, std::max(1.0, amp), 1e-12);
    }
}

TEST(Lipschitz, IdenticalInputsGiveSentinel) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 32};
    const Control v(tg, m.noise.n_modes);
    const auto r = lipschitz_experiment(m, unit_bump(m.grid), unit_bump(m.grid), v, v, tg);
    EXPECT_EQ(r.d_out, 0.0);
    EXPECT_EQ(r.d_in, 0.0);
    EXPECT_FALSE(r.ratio);
}

TEST(Lipschitz, RatiosStayBoundedUnderShrinkingPerturbations) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 64};
    const Field u0 = unit_bump(m.grid);
    const Control v = Control::constant_mode(tg, m.noise.n_modes, 0, 0.5);
    std::vector<double> init, ctrl;
    for (double d : {1e-1, 1e-2, 1e-3}) {
        init.push_back(*lipschitz_experiment(m, u0, u0 + d * bump(m.grid, 3.0), v, v, tg).ratio);
        ctrl.push_back(*lipschitz_experiment(m, u0, u0, v, v + Control::constant_mode(tg, m.noise.n_modes, 0, d), tg).ratio);
    }
    for (const auto* s : {&init, &ctrl}) {
        const auto [lo, hi] = std::minmax_element(s->begin(), s->end());
        EXPECT_LE(*hi / *lo, 10.0);
    }
}

TEST(TailScan, InitialSupportAndErrors) {
    const GridSpec g{1, 16.0, 256, 0.75};
    SkeletonSolution sol;
    sol.grid = g;
    sol.timegrid = TimeGrid{1.0, 2};
    sol.p = 4.0;
    sol.trajectory.assign(3, bump(g, 2.0));
    const auto curve = tail_mass_scan(sol, {1.0, 2.5, 8.0});
    EXPECT_GT(curve.values[0], 0.0);
    EXPECT_EQ(curve.values[1], 0.0);
    EXPECT_EQ(curve.values[2], 0.0);
    EXPECT_TRUE(curve.non_increasing());
    EXPECT_THROW(tail_mass_scan(sol, {16.0}), DomainError);
    EXPECT_THROW(tail_mass_scan(sol, {3.0, 2.0}), DomainError);
}

TEST(TailScan, DefaultModelCurveIsNonIncreasing) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 128};
    const auto sol = solve_skeleton(m, unit_bump(m.grid), Control(tg, m.noise.n_modes), tg);
    const double L = m.grid.half_length;
    const auto curve = tail_mass_scan(sol, {L / 4, 3 * L / 8, L / 2, 3 * L / 4});
    EXPECT_TRUE(curve.non_increasing());
}

TEST(WeakContinuity, ZeroAmplitudeAndAliasing) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 64};
    const Control v(tg, m.noise.n_modes);
    const auto c = weak_continuity_experiment(m, unit_bump(m.grid), v, 0, {1, 4}, tg, 0.0);
    for (double e : c.errors) EXPECT_EQ(e, 0.0);
    EXPECT_THROW(weak_continuity_experiment(m, unit_bump(m.grid), v, 0, {33}, tg), DomainError);
}

TEST(WeakContinuity, OscillationDecaysShiftDoesNot) {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 256};
    const Field u0 = unit_bump(m.grid);
    const Control v(tg, m.noise.n_modes);
    const std::vector<int> freqs{1, 2, 4, 8, 16, 32};
    const auto osc = weak_continuity_experiment(m, u0, v, 0, freqs, tg);
    EXPECT_LT(osc.errors.back(), 0.5 * osc.errors.front());
    const auto shift = weak_continuity_experiment(m, u0, v, 0, freqs, tg, 1.0, PerturbationKind::constant_shift);
    EXPECT_GT(shift.errors.back(), 0.9 * shift.errors.front());
}
