// Acceptance suite: one line per criterion, "C<nn> PASS|FAIL <name> | <detail> | <seconds>".
// With no arguments every criterion runs; otherwise only the listed numbers. Exit status is
// non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracldp/cli.hpp"
#include "fracldp/ldp.hpp"
#include "fracldp/rate.hpp"
#include "fracldp/skeleton.hpp"
#include "fracldp/stochastic.hpp"

using namespace fracldp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double time_limit;
    std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... xs) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

Field unit_bump(const GridSpec& g, double radius = 3.0) {
    Field b = bump(g, radius);
    return (1.0 / l2_norm(b)) * b;
}

DriftSpec zero_drift() {
    DriftSpec d = DriftSpec::pure_power(4.0);
    d.form = DriftForm::custom;
    d.custom = [](double, double) { return 0.0; };
    d.custom_derivative = [](double, double) { return 0.0; };
    return d;
}

Outcome spectral_eigenvalues() {
    double worst = 0.0;
    for (double a : {0.25, 0.5, 0.75, 1.0}) {
        const GridSpec g{1, 8.0, 64, a};
        const SpectralSymbol sym(g);
        for (int k : {1, 2, 5}) {
            const Field f = sine_mode(g, k);
            const Field lf = frac_laplacian(f, sym);
            const double lam = std::pow(k * std::numbers::pi / g.half_length, 2 * a);
            double err = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                err = std::max(err, std::abs(lf[i] - lam * f[i]));
                scale = std::max(scale, std::abs(lam * f[i]));
            }
            worst = std::max(worst, err / scale);
        }
    }
    return {worst <= 1e-10, fmt("max relative eigenvalue error %.2e (tol 1e-10)", worst)};
}

Outcome norm_equivalence() {
    std::vector<double> rel;
    const GridSpec d = default_grid();
    for (int n : {256, 512, 1024}) {
        const GridSpec g{1, d.half_length, n, d.alpha};
        const Field f = bump(g, 2.0);
        const double s = spectral_seminorm(f, SpectralSymbol(g));
        rel.push_back(std::abs(gagliardo_seminorm(f) - s) / s);
    }
    const bool improving = rel[1] < rel[0] && rel[2] < rel[1];
    return {improving && rel[2] <= 0.1,
            fmt("relative gap N=256/512/1024: %.4f %.4f %.4f (finest tol 0.10, must decrease)", rel[0], rel[1], rel[2])};
}

Outcome structural_conditions() {
    SamplingPlan plan;
    plan.n_fields = 100000;
    double worst = 1e300;
    std::size_t fewest = ~std::size_t{0}, n_cond = 0;
    std::string worst_name;
    bool all = true;
    for (const auto& [name, m] : model_zoo()) {
        std::vector<ConditionResult> c = validate_drift(m.drift, plan).conditions;
        const auto n = validate_noise(m.noise, m.drift, m.grid, plan).conditions;
        c.insert(c.end(), n.begin(), n.end());
        c.push_back(validate_elementary(m.drift.p, plan.n_pairs, plan.seed));
        for (const auto& r : c) {
            ++n_cond;
            all = all && r.pass && r.worst_margin >= -1e-9;
            fewest = std::min(fewest, r.samples);
            if (r.worst_margin < worst) {
                worst = r.worst_margin;
                worst_name = name + ":" + r.name;
            }
        }
    }
    return {all && fewest >= 100000,
            fmt("%zu conditions on the zoo, worst margin %.3e at %s, fewest samples %zu (need >= 1e5, margin >= -1e-9)",
                n_cond, worst, worst_name.c_str(), fewest)};
}

Outcome skeleton_convergence() {
    const ModelSpec m = default_model();
    const Field u0 = unit_bump(m.grid);
    auto run = [&](int n) {
        const TimeGrid tg{1.0, n};
        return solve_skeleton(m, u0, Control::constant_mode(tg, m.noise.n_modes, 0, 1.0), tg).trajectory;
    };
    const auto a = run(256), b = run(512), c = run(1024);
    auto gap = [](const Trajectory& coarse, const Trajectory& fine) {
        double worst = 0.0;
        for (std::size_t n = 0; n < coarse.size(); ++n) worst = std::max(worst, l2_norm(coarse[n] - fine[2 * n]));
        return worst;
    };
    const double ratio = gap(a, b) / gap(b, c);

    const GridSpec g{1, 8.0, 64, 0.6};
    ModelSpec lin = noiseless_model(g);
    lin.drift = zero_drift();
    lin.forcing.profile = Field(g);
    const TimeGrid tg{1.0, 32};
    const Field s = sine_mode(g, 3);
    const auto sol = solve_skeleton(lin, s, Control(tg, lin.noise.n_modes), tg);
    const double lam = std::pow(3 * std::numbers::pi / g.half_length, 2 * g.alpha);
    double err = 0.0;
    for (int n = 0; n <= tg.n_steps; ++n)
        for (std::size_t i = 0; i < g.size(); ++i)
            err = std::max(err, std::abs(sol.trajectory[n][i] - std::exp(-lam * tg.time(n)) * s[i]));
    return {ratio >= 1.8 && err <= 1e-10,
            fmt("step-halving ratio %.3f (>= 1.8), linear-flow max error %.2e (<= 1e-10)", ratio, err)};
}

Outcome lipschitz_shadow() {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 64};
    const Field u0 = unit_bump(m.grid);
    const int K = m.noise.n_modes;
    const Control v = Control::constant_mode(tg, K, 0, 0.5);
    std::vector<double> init, ctrl;
    bool bound_ok = true;
    for (double d : {1e-1, 1e-2, 1e-3}) {
        const Field u1 = u0 + d * bump(m.grid, 3.0);
        const Control v1 = v + Control::constant_mode(tg, K, 0, d);
        init.push_back(*lipschitz_experiment(m, u0, u1, v, v, tg).ratio);
        ctrl.push_back(*lipschitz_experiment(m, u0, u0, v, v1, tg).ratio);
        bound_ok = bound_ok && apriori_bound_report(solve_skeleton(m, u1, v, tg), m, u1, v).pass &&
                   apriori_bound_report(solve_skeleton(m, u0, v1, tg), m, u0, v1).pass;
    }
    bound_ok = bound_ok && apriori_bound_report(solve_skeleton(m, u0, v, tg), m, u0, v).pass;
    auto spread = [](const std::vector<double>& s) {
        const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
        return *hi / *lo;
    };
    const double si = spread(init), sc = spread(ctrl);
    return {si <= 10.0 && sc <= 10.0 && bound_ok,
            fmt("ratio spread initial-data %.3f, control %.3f (<= 10); a priori bound %s on 7 runs", si, sc,
                bound_ok ? "held" : "VIOLATED")};
}

Outcome tail_shadow() {
    const GridSpec g = default_grid();
    const double support = g.half_length / 8.0;
    const ModelSpec m = default_model(g, support);
    const TimeGrid tg{1.0, 128};
    const auto sol = solve_skeleton(m, bump(g, support), Control(tg, m.noise.n_modes), tg);
    const double L = g.half_length;
    const TailCurve c = tail_mass_scan(sol, {L / 4, 3 * L / 4});
    const double ratio = c.values[1] / c.values[0];
    return {ratio < 1e-6, fmt("tail(3L/4) / tail(L/4) = %.3e (need < 1e-6), alpha %.2f, L = 8 x support", ratio,
                              g.alpha)};
}

Outcome weak_continuity_shadow() {
    const ModelSpec m = default_model();
    const TimeGrid tg{1.0, 256};
    const Field u0 = unit_bump(m.grid);
    const Control v(tg, m.noise.n_modes);
    const std::vector<int> freqs{1, 2, 4, 8, 16, 32};
    const auto osc = weak_continuity_experiment(m, u0, v, 0, freqs, tg);
    const auto shift = weak_continuity_experiment(m, u0, v, 0, freqs, tg, 1.0, PerturbationKind::constant_shift);
    const double ro = osc.errors.front() / osc.errors.back();
    const double rs = shift.errors.front() / shift.errors.back();
    return {ro >= 2.0 && rs < 2.0,
            fmt("oscillatory e_1/e_32 = %.2f (>= 2), constant-shift e_1/e_32 = %.2f (< 2)", ro, rs)};
}

Outcome sde_oracles() {
    // Spatially constant reduction against a scalar tamed Euler-Maruyama recursion.
    const GridSpec g{1, 4.0, 16, 0.75};
    ModelSpec m = default_model(g);
    m.noise.n_modes = 1;
    m.noise.sigma1 = {Field::constant(g, 0.3)};
    m.noise.amplitude = {0.4};
    m.noise.kappa = Field::constant(g, 0.8);
    m.noise.derive_coefficients();
    m.forcing.profile = Field::constant(g, 0.1);
    const TimeGrid tg{1.0, 128};
    const double eps = 0.7;
    double path_err = 0.0;
    for (std::uint64_t stream = 0; stream < 20; ++stream) {
        const WienerDriver drv(1, 11, stream);
        const auto path = simulate_sde(m, Field::constant(g, 0.6), SdeConfig{eps, Scheme::tamed_imex_em, tg}, drv);
        const auto dw = drv.increments(tg);
        double u = 0.6;
        for (int n = 0; n < tg.n_steps; ++n) {
            const double f = u * u * u - u;
            const double s = u * std::pow(1 + u * u, 0.25);
            u += tg.dt() * (-f / (1 + tg.dt() * std::abs(f)) + 0.1) + (0.3 + 0.32 * s) * std::sqrt(eps) * dw[n];
            for (std::size_t i = 0; i < g.size(); ++i)
                path_err = std::max(path_err, std::abs(path.trajectory[n + 1][i] - u));
        }
    }

    // Linear additive noise on one sine mode: the mean decays like exp(-lambda_k t).
    const GridSpec g2{1, 8.0, 64, 0.75};
    const int k = 2;
    ModelSpec lin = noiseless_model(g2);
    lin.drift = zero_drift();
    lin.forcing.profile = Field(g2);
    const Field phi = sine_mode(g2, k, 1.0 / std::sqrt(g2.half_length));
    lin.noise.n_modes = 1;
    lin.noise.sigma1 = {phi};
    lin.noise.amplitude = {0.0};
    lin.noise.derive_coefficients();
    BatchRequest req;
    req.u0 = 2.0 * phi;
    req.cfg = SdeConfig{1.0, Scheme::tamed_imex_em, TimeGrid{1.0, 32}};
    req.probes = {phi};
    req.base_seed = 5;
    req.n_paths = 10000;
    std::vector<double> xs;
    for (const auto& r : run_batch(lin, req)) xs.push_back(r.terminal_probes[0]);
    const auto e = mean_estimate(xs);
    const double exact = 2.0 * std::exp(-std::pow(k * std::numbers::pi / g2.half_length, 2 * g2.alpha));
    const double z = std::abs(e.mean - exact) / e.std_error;
    return {path_err <= 1e-10 && z <= 3.0,
            fmt("scalar oracle max error %.2e (<= 1e-10) over 20 paths; linear mean %.5f vs exact %.5f, %.2f SE (<= 3)",
                path_err, e.mean, exact, z)};
}

Outcome cvs_shadow() {
    const RunConfig cfg = parse_config(R"({"experiment":"cvs-sweep","seed":3,"params":{"eps_list":[1,0.3,0.1,0.03],
        "n_paths":400,"n_u0":3,"n_controls":3}})");
    const ExperimentOutput out = run_experiment(cfg);
    const auto& rows = out.tables.front().second;
    const Json& first = rows.front();
    const Json& last = rows[rows.size() - 2];
    const Json& summary = rows.back();
    const bool sep = summary["endpoints_separated"].get<bool>();
    return {sep, fmt("p_hat(eps=1) = %.4f [%.4f, %.4f], p_hat(eps=0.03) = %.4f [%.4f, %.4f], eta %.3f, 3x3 cells x 400 paths",
                     first["p_hat"].get<double>(), first["ci_lo"].get<double>(), first["ci_hi"].get<double>(),
                     last["p_hat"].get<double>(), last["ci_lo"].get<double>(), last["ci_hi"].get<double>(),
                     summary["eta"].get<double>())};
}

Outcome rate_recovery() {
    const GridSpec g{1, 8.0, 32, 0.75};
    const TimeGrid tg{0.5, 8};
    const Field u0 = bump(g, 2.0, 0.5);
    bool ok = true;
    double worst_ratio = 0.0, worst_free = 0.0;
    for (const auto& [name, m] : model_zoo(g)) {
        std::mt19937_64 rng(21);
        std::normal_distribution<double> nd(0.0, 0.5);
        std::vector<double> vals(static_cast<std::size_t>(tg.n_steps) * m.noise.n_modes);
        for (double& x : vals) x = nd(rng);
        const Control planted(tg, m.noise.n_modes, std::move(vals));
        RateQuery q;
        q.u0 = u0;
        q.kind = TargetKind::path;
        q.path = g0_map(m, u0, planted, tg);
        q.tolerance = 1e-3;
        const RateResult r = minimize_rate(m, q, tg);
        q.path = g0_map(m, u0, Control(tg, m.noise.n_modes), tg);
        q.tolerance = 1e-8;
        const RateResult f = minimize_rate(m, q, tg);
        const double ratio = r.value / action(planted);
        worst_ratio = std::max(worst_ratio, ratio);
        worst_free = std::max(worst_free, f.value);
        ok = ok && r.converged && f.converged && ratio <= 1.0 + 1e-3 && f.value <= 1e-6;
    }
    return {ok, fmt("worst recovered/planted %.6f (<= 1.001), worst noise-free rate %.2e (<= 1e-6) over the zoo",
                    worst_ratio, worst_free)};
}

Outcome level_set_continuity() {
    const GridSpec g{1, 8.0, 32, 0.75};
    const ModelSpec m = default_model(g);
    const TimeGrid tg{0.5, 16};
    const ContinuityCurve c =
        level_set_continuity_experiment(m, bump(g, 2.0, 0.5), {0.4, 0.2, 0.1, 0.0}, 0.3, tg, 64, 8);
    std::ostringstream os;
    for (std::size_t i = 0; i < c.distances.size(); ++i)
        os << (i ? ", " : "") << fmt("d(%.2f)=%.4g", c.deltas[i], c.distances[i]);
    return {c.monotone_decreasing() && c.distances.back() == 0.0, "Hausdorff " + os.str()};
}

Outcome fw_dz_trend() {
    const ScalarReduction red = scalar_reduction(GridSpec{1, 4.0, 16, 0.75});
    const TimeGrid tg{1.0, 16};
    LdpExperimentPlan plan;
    plan.model = red.model;
    plan.timegrid = tg;
    plan.initial_data = {red.embed(0.0)};
    plan.eps_list = {0.5, 0.2, 0.1, 0.05};
    plan.delta = 0.6;
    plan.s_levels = {0.5};
    plan.n_paths = 10000;
    plan.slack = 0.25;
    plan.seed = 1;
    const double G = red.endpoint_variance(tg);
    const double A = 0.5;
    const Control v = red.optimal_endpoint_control(std::sqrt(2 * A * G), tg);
    FwInputs in;
    in.level_sets.push_back({0, sample_level_set(red.model, plan.initial_data[0], 0.5, 128, tg, 3)});
    FwTarget t;
    t.label = "planted";
    t.phi = g0_map(red.model, plan.initial_data[0], v, tg);
    RateResult r;
    r.value = action(v);
    r.converged = true;
    r.residual = 0.0;
    t.rate = r;
    in.targets.push_back(std::move(t));
    const LdpReport rep = fw_bounds_experiment(plan, in);
    bool probes = rep.trends.size() == 2;
    for (const auto& tr : rep.trends) probes = probes && tr.verdict == Verdict::pass;

    // Endpoint ball with closed-form rate.
    const double y = std::sqrt(0.4 * G) + 0.1, radius = 0.1;
    const double I = red.endpoint_ball_rate(0.0, y, radius, tg);
    std::vector<double> err;
    for (double eps : {0.5, 0.05}) {
        const BallEstimate e =
            estimate_endpoint_probability(red.model, plan.initial_data[0], red.embed(y), radius, eps, tg, 10000, 7);
        err.push_back(e.p_hat > 0.0 ? std::abs(eps * std::log(e.p_hat) + I) : INFINITY);
    }
    return {probes && err[1] < err[0],
            fmt("|eps ln p + I| at eps=0.5: %.3f, at eps=0.05: %.3f (I = %.3f); FW lower %s, upper %s at slack 0.25",
                err[0], err[1], I, to_string(rep.trends[0].verdict), to_string(rep.trends[1].verdict))};
}

Outcome reproducibility() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("fracldp_acceptance_" + std::to_string(::getpid()));
    const std::string common = R"("grid":{"points_per_dim":64},"timegrid":{"T":0.5,"n_steps":16},)";
    const std::vector<std::pair<std::string, std::string>> runs{
        {"simulate", R"({"n_paths":64})"},
        {"skeleton", R"({"control":{"kind":"constant_mode","mode":0,"value":0.5}})"},
        {"rate-min", R"({"target":{"kind":"planted","control":{"kind":"random","scale":0.3,"seed":4}}})"},
        {"level-set", R"({"n_samples":16,"deltas":[0.2,0.1,0.0]})"},
        {"mc-ldp", R"({"n_paths":200,"level_set_samples":16,"eps_list":[0.5,0.2]})"},
        {"validate-model", R"({"n_scalar":2000,"n_pairs":2000,"n_fields":100})"},
        {"tail-scan", "{}"},
        {"cvs-sweep", R"({"n_paths":100,"n_u0":2,"n_controls":2,"eps_list":[1,0.1]})"},
    };
    std::size_t compared = 0;
    std::string mismatch;
    for (const auto& [name, params] : runs) {
        std::vector<Json> outputs;
        for (int rep = 0; rep < 2; ++rep) {
            RunConfig cfg = parse_config(R"({"experiment":")" + name + R"(","seed":9,)" + common +
                                         R"("params":)" + params + "}");
            cfg.output_dir = (root / (name + std::to_string(rep))).string();
            cfg.workers = rep + 1;
            const RunOutcome r = run(cfg);
            if (r.exit_code != exit_ok) mismatch += name + "(exit " + std::to_string(r.exit_code) + ") ";
            outputs.push_back(r.manifest.to_json()["outputs"]);
        }
        ++compared;
        if (outputs[0] != outputs[1] || outputs[0].empty()) mismatch += name + " ";
    }
    fs::remove_all(root);
    return {mismatch.empty() && compared == experiment_names().size(),
            mismatch.empty() ? fmt("%zu experiments re-run (1 and 2 workers), all output SHA-256 identical", compared)
                             : "differing: " + mismatch};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "spectral correctness", 1.0, spectral_eigenvalues},
        {2, "norm equivalence", 30.0, norm_equivalence},
        {3, "structural conditions", 60.0, structural_conditions},
        {4, "skeleton convergence", 1e9, skeleton_convergence},
        {5, "lipschitz shadow", 60.0, lipschitz_shadow},
        {6, "tail shadow", 30.0, tail_shadow},
        {7, "weak continuity shadow", 120.0, weak_continuity_shadow},
        {8, "sde oracle agreement", 300.0, sde_oracles},
        {9, "uniform convergence shadow", 600.0, cvs_shadow},
        {10, "rate recovery", 300.0, rate_recovery},
        {11, "level-set continuity", 300.0, level_set_continuity},
        {12, "fw/dz trend on scalar reduction", 600.0, fw_dz_trend},
        {13, "reproducibility", 1e9, reproducibility},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& c : all) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.time_limit;
        const bool pass = o.pass && in_time;
        std::string timing = fmt("%.2f s", secs);
        if (c.time_limit < 1e9) timing += fmt(" (limit %.0f s)", c.time_limit);
        if (!in_time) timing += " OVER TIME";
        std::printf("C%02d %s %s | %s | %s\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), timing.c_str());
        std::fflush(stdout);
        failures += pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
