#include "fracldp/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "fracldp/ldp.hpp"
#include "fracldp/rate.hpp"
#include "fracldp/skeleton.hpp"
#include "fracldp/stochastic.hpp"

namespace fracldp {

std::string artifact_version() { return "0.1.0"; }

namespace {

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

PathNorm norm_from(const std::string& s) {
    if (s == "sup_h") return PathNorm::sup_h;
    if (s == "endpoint_h") return PathNorm::endpoint_h;
    return PathNorm::full;
}

struct Context {
    const RunConfig& cfg;
    ModelSpec model;
    std::optional<ScalarReduction> scalar;

    explicit Context(const RunConfig& c) : cfg(c), model(build_model(c.grid, c.model)) {
        if (c.model.reduction == "scalar") scalar = scalar_reduction(c.grid, c.model.scalar_mode);
    }

    Field field(const Json& p) const {
        const std::string kind = p.at("kind");
        Field f(cfg.grid);
        if (kind == "bump") {
            f = bump(cfg.grid, p.at("radius").get<double>(), p.at("amplitude").get<double>(), p.at("center").get<double>());
        } else if (kind == "sine") {
            f = sine_mode(cfg.grid, p.at("k").get<int>(), p.at("amplitude").get<double>());
        } else if (kind == "scalar") {
            if (!scalar) throw ConfigError({{"params.*.kind", "'scalar' only with model.reduction = scalar", kind}});
            f = scalar->embed(p.at("x").get<double>());
        }
        if (!p.at("norm").is_null()) {
            const double target = p.at("norm").get<double>();
            const double n = l2_norm(f);
            if (target > 0.0 && !(n > 0.0)) throw ConfigError({{"params.*.norm", "a non-zero profile to rescale", "zero"}});
            f = n > 0.0 ? (target / n) * f : f;
        }
        return f;
    }

    Control control(const Json& c) const {
        const TimeGrid& tg = cfg.timegrid;
        const int K = model.noise.n_modes;
        const std::string kind = c.at("kind");
        Control v(tg, K);
        if (kind == "constant_mode") {
            const int mode = c.at("mode").get<int>();
            if (mode >= K)
                throw ConfigError({{"params.*.control.mode", "a mode below n_modes = " + std::to_string(K),
                                    std::to_string(mode)}});
            v = Control::constant_mode(tg, K, mode, c.at("value").get<double>());
        } else if (kind == "random") {
            std::mt19937_64 rng(c.at("seed").get<std::uint64_t>());
            std::normal_distribution<double> nd(0.0, c.at("scale").get<double>());
            for (double& x : v.mutable_values()) x = nd(rng);
        } else if (kind == "optimal_shift") {
            if (!scalar)
                throw ConfigError({{"params.*.control.kind", "'optimal_shift' only with model.reduction = scalar", kind}});
            v = scalar->optimal_endpoint_control(c.at("shift").get<double>(), tg);
        }
        if (!c.at("norm").is_null()) {
            const double target = c.at("norm").get<double>();
            const double n = v.l2_time_norm();
            if (target > 0.0 && !(n > 0.0)) throw ConfigError({{"params.*.control.norm", "a non-zero control", "zero"}});
            if (n > 0.0) v *= target / n;
        }
        return v;
    }
};

Json energy_json(const PathEnergy& e) {
    return {{"sup_l2_sq", e.sup_l2_sq}, {"int_v_sq", e.int_v_sq}, {"int_lp_pow", e.int_lp_pow},
            {"terminal_l2_sq", e.terminal_l2_sq}};
}

ExperimentOutput run_simulate(const Context& ctx) {
    const Json& p = ctx.cfg.params;
    BatchRequest req;
    req.u0 = ctx.field(p.at("u0"));
    req.cfg = SdeConfig{p.at("epsilon").get<double>(), Scheme::tamed_imex_em, ctx.cfg.timegrid,
                        p.at("linf_guard").get<double>()};
    const Control v = ctx.control(p.at("control"));
    if (p.at("control").at("kind") != "zero") req.control = v;
    req.base_seed = ctx.cfg.seed;
    req.n_paths = p.at("n_paths").get<std::size_t>();
    req.workers = ctx.cfg.workers;
    const auto records = run_batch(ctx.model, req);
    ExperimentOutput out;
    std::vector<Json> rows;
    for (const auto& r : records) {
        Json j{{"record", "path"}, {"stream_id", r.stream_id}, {"blow_up", r.blow_up}, {"blow_up_step", r.blow_up_step}};
        if (!r.blow_up) j.update(energy_json(r.own));
        rows.push_back(std::move(j));
    }
    out.blow_ups = count_blow_ups(records);
    const double frac = static_cast<double>(out.blow_ups) / static_cast<double>(records.size());
    rows.push_back({{"record", "summary"}, {"n_paths", records.size()}, {"n_blow_up", out.blow_ups},
                    {"blow_up_fraction", frac}});
    out.tables.emplace_back("simulate", std::move(rows));
    out.tolerances = {{"linf_guard", req.cfg.linf_guard}, {"blow_up_limit", p.at("blow_up_limit")}};
    if (frac > p.at("blow_up_limit").get<double>()) {
        out.exit_code = exit_blow_up_dominated;
        out.message = "blow-up dominated run: " + std::to_string(out.blow_ups) + " of " +
                      std::to_string(records.size()) + " paths breached the guard";
    }
    return out;
}

ExperimentOutput run_skeleton(const Context& ctx) {
    const Json& p = ctx.cfg.params;
    const Field u0 = ctx.field(p.at("u0"));
    const Control v = ctx.control(p.at("control"));
    const SkeletonSolution sol = solve_skeleton(ctx.model, u0, v, ctx.cfg.timegrid);
    std::vector<Json> rows;
    for (std::size_t n = 0; n < sol.diagnostics.size(); ++n) {
        const auto& d = sol.diagnostics[n];
        rows.push_back({{"record", "step"}, {"n", n}, {"t", d.t}, {"l2_sq", d.l2_sq},
                        {"halpha_semi_sq", d.halpha_semi_sq}, {"lp_pow", d.lp_pow}});
    }
    const BoundReport b = apriori_bound_report(sol, ctx.model, u0, v);
    rows.push_back({{"record", "apriori"}, {"observed", b.observed}, {"observed_bound", number_or_null(b.observed_bound)},
                    {"energy_functional", b.energy_functional}, {"gronwall_bound", number_or_null(b.gronwall_bound)},
                    {"c1", b.c1}, {"R", b.R}, {"pass", b.pass}});
    ExperimentOutput out;
    out.tables.emplace_back("skeleton", std::move(rows));
    if (!b.pass) {
        out.exit_code = exit_validation_failed;
        out.message = "a priori bound violated";
    }
    return out;
}

OptimizerSettings optimizer_from(const Json& o) {
    OptimizerSettings s;
    s.max_iters = o.at("max_iters");
    s.gradient_tol = o.at("gradient_tol");
    s.memory = o.at("memory");
    s.penalty0 = o.at("penalty0");
    s.max_continuations = o.at("max_continuations");
    s.residual_tol = o.at("residual_tol");
    const std::string g = o.at("gradient");
    s.gradient = g == "adjoint" ? GradientMode::adjoint
                 : g == "finite_difference" ? GradientMode::finite_difference
                                            : GradientMode::automatic;
    return s;
}

ExperimentOutput run_rate_min(const Context& ctx) {
    const Json& p = ctx.cfg.params;
    const Json& t = p.at("target");
    const TimeGrid& tg = ctx.cfg.timegrid;
    RateQuery q;
    q.u0 = ctx.field(p.at("u0"));
    q.tolerance = t.at("tolerance");
    q.constraint = t.at("constraint") == "outside" ? Constraint::outside : Constraint::inside;
    q.metric = norm_from(t.at("metric"));
    if (!p.at("ball_radius").is_null()) q.ball_radius = p.at("ball_radius").get<double>();
    q.optimizer = optimizer_from(p.at("optimizer"));
    const std::string kind = t.at("kind");
    const Control planted = kind == "noise_free" ? Control(tg, ctx.model.noise.n_modes) : ctx.control(t.at("control"));
    const Trajectory phi = g0_map(ctx.model, q.u0, planted, tg);
    if (kind == "endpoint") {
        q.kind = TargetKind::endpoint;
        q.endpoint = phi.back();
    } else {
        q.kind = TargetKind::path;
        q.path = phi;
    }
    const RateResult r = minimize_rate(ctx.model, q, tg);
    std::vector<Json> rows;
    rows.push_back({{"record", "rate"},
                    {"target", kind},
                    {"value", number_or_null(r.value)},
                    {"rate", number_or_null(r.rate())},
                    {"planted_action", action(planted)},
                    {"residual", number_or_null(r.residual)},
                    {"tolerance", q.tolerance},
                    {"converged", r.converged},
                    {"iterations", r.iterations},
                    {"continuations", r.continuations},
                    {"penalty", r.penalty}});
    if (r.minimizer) {
        const int K = r.minimizer->n_modes();
        for (int n = 0; n < tg.n_steps; ++n)
            for (int k = 0; k < K; ++k)
                rows.push_back({{"record", "control"}, {"step", n}, {"mode", k}, {"value", r.minimizer->at(n)[k]}});
    }
    ExperimentOutput out;
    out.tables.emplace_back("rate-min", std::move(rows));
    out.tolerances = {{"tolerance", q.tolerance}, {"residual_tol", q.optimizer.residual_tol},
                      {"gradient_tol", q.optimizer.gradient_tol}};
    if (!r.converged) {
        out.exit_code = exit_not_converged;
        out.message = "optimizer did not reach the target tolerance";
    }
    return out;
}

ExperimentOutput run_level_set(const Context& ctx) {
    const Json& p = ctx.cfg.params;
    const TimeGrid& tg = ctx.cfg.timegrid;
    const Field u0 = ctx.field(p.at("u0"));
    const double s = p.at("s");
    const std::size_t n = p.at("n_samples");
    const PathNorm norm = norm_from(p.at("norm"));
    const LevelSet set = sample_level_set(ctx.model, u0, s, n, tg, ctx.cfg.seed, ctx.cfg.workers);
    std::vector<Json> rows;
    for (std::size_t i = 0; i < set.members.size(); ++i) {
        const auto& m = set.members[i];
        rows.push_back({{"record", "member"}, {"index", i}, {"action", action(m.control)},
                        {"terminal_l2", l2_norm(m.trajectory.back())}});
    }
    rows.push_back({{"record", "diameter"}, {"s", s}, {"n_members", set.members.size()},
                    {"diameter", level_set_diameter(set, norm)}});
    const auto deltas = p.at("deltas").get<std::vector<double>>();
    if (!deltas.empty()) {
        const ContinuityCurve c =
            level_set_continuity_experiment(ctx.model, u0, deltas, s, tg, n, ctx.cfg.seed, ctx.cfg.workers);
        for (std::size_t i = 0; i < c.deltas.size(); ++i)
            rows.push_back({{"record", "continuity"}, {"delta", c.deltas[i]}, {"hausdorff", c.distances[i]}});
        rows.push_back({{"record", "continuity_summary"}, {"monotone_decreasing", c.monotone_decreasing()},
                        {"bound_constant", c.bound_constant}});
    }
    ExperimentOutput out;
    out.tables.emplace_back("level-set", std::move(rows));
    return out;
}

ExperimentOutput run_mc_ldp(const Context& ctx) {
    const Json& p = ctx.cfg.params;
    const TimeGrid& tg = ctx.cfg.timegrid;
    LdpExperimentPlan plan;
    plan.model = ctx.model;
    plan.timegrid = tg;
    for (const auto& f : p.at("initial_data")) plan.initial_data.push_back(ctx.field(f));
    if (!p.at("data_radius").is_null()) plan.data_radius = p.at("data_radius").get<double>();
    plan.data_kind = p.at("data_kind") == "compact_set" ? InitialDataKind::compact_set : InitialDataKind::bounded_ball;
    plan.eps_list = p.at("eps_list").get<std::vector<double>>();
    plan.delta = p.at("delta");
    plan.s_levels = p.at("s_levels").get<std::vector<double>>();
    plan.n_paths = p.at("n_paths");
    plan.slack = p.at("slack");
    plan.path_norm = norm_from(p.at("path_norm"));
    plan.seed = ctx.cfg.seed;
    plan.workers = ctx.cfg.workers;
    plan.validate();

    FwInputs in;
    const bool from_optimizer = p.at("rate_source") == "optimizer";
    for (std::size_t i = 0; i < plan.initial_data.size(); ++i) {
        for (const auto& t : p.at("targets")) {
            FwTarget target;
            target.label = t.at("label");
            target.u0_index = i;
            const Control v = ctx.control(t.at("control"));
            target.phi = g0_map(plan.model, plan.initial_data[i], v, tg);
            if (from_optimizer && action(v) > 0.0) {
                RateQuery q;
                q.u0 = plan.initial_data[i];
                q.kind = TargetKind::path;
                q.path = target.phi;
                q.metric = plan.path_norm;
                q.tolerance = p.at("rate_tolerance");
                target.rate = minimize_rate(plan.model, q, tg);
            } else {
                RateResult r;
                r.value = action(v);
                r.converged = true;
                r.residual = 0.0;
                target.rate = r;
            }
            in.targets.push_back(std::move(target));
        }
        for (double s : plan.s_levels)
            in.level_sets.push_back({i, sample_level_set(plan.model, plan.initial_data[i], s,
                                                         p.at("level_set_samples").get<std::size_t>(), tg,
                                                         ctx.cfg.seed + 1, plan.workers)});
    }
    const UniformityReport uni = uniformity_sweep(fw_bounds_experiment(plan, in), plan.initial_data.size());
    const LdpReport& rep = uni.source;

    std::vector<Json> rows;
    for (const auto& r : rep.records)
        rows.push_back({{"record", "cell"},
                        {"probe", r.probe},
                        {"target", r.target},
                        {"u0_index", r.u0_index},
                        {"epsilon", r.epsilon},
                        {"successes", r.estimate.successes},
                        {"n_used", r.estimate.n_used},
                        {"n_blow_up", r.estimate.n_blow_up},
                        {"p_hat", r.estimate.p_hat},
                        {"ci_lo", r.estimate.ci.lo},
                        {"ci_hi", r.estimate.ci.hi},
                        {"censored", r.censored},
                        {"eps_log_p", number_or_null(r.eps_log_p)},
                        {"rate", r.rate},
                        {"margin", number_or_null(r.margin)},
                        {"margin_lo", number_or_null(r.margin_lo)},
                        {"margin_hi", number_or_null(r.margin_hi)}});
    for (const auto& t : rep.trends)
        rows.push_back({{"record", "trend"}, {"probe", t.probe}, {"target", t.target},
                        {"verdict", to_string(t.verdict)}, {"detail", t.detail}, {"slack", rep.slack}});
    for (const auto& u : uni.rows) {
        Json spread = Json::array();
        for (double s : u.spread) spread.push_back(number_or_null(s));
        rows.push_back({{"record", "uniformity"}, {"probe", u.probe}, {"target", u.target},
                        {"spread", spread.dump()}, {"bounded", u.bounded}});
    }
    for (const auto& w : uni.warnings) rows.push_back({{"record", "warning"}, {"text", w}});
    for (const auto& note : rep.notes) rows.push_back({{"record", "note"}, {"text", note}});

    // Summary matrix: rows eps, columns probe:target (aggregated margins).
    std::ostringstream csv;
    csv << "epsilon";
    for (const auto& t : rep.trends) csv << "," << t.probe << ":" << t.target;
    csv << "\n";
    for (std::size_t e = 0; e < rep.eps_list.size(); ++e) {
        csv << Json(rep.eps_list[e]).dump();
        for (const auto& t : rep.trends) csv << "," << number_or_null(t.margin[e]).dump();
        csv << "\n";
    }
    ExperimentOutput out;
    out.tables.emplace_back("mc-ldp", std::move(rows));
    out.extra_files.emplace_back("mc-ldp_summary.csv", csv.str());
    out.blow_ups = rep.total_blow_ups();
    out.tolerances = {{"slack", rep.slack}, {"delta", rep.delta}, {"eps_list", rep.eps_list},
                      {"rate_tolerance", p.at("rate_tolerance")}};
    std::size_t used = 0;
    for (const auto& r : rep.records) used += r.estimate.n_used;
    if (out.blow_ups > used) {
        out.exit_code = exit_blow_up_dominated;
        out.message = "blow-up dominated run";
    }
    return out;
}

ExperimentOutput run_validate_model(const Context& ctx) {
    const Json& p = ctx.cfg.params;
    SamplingPlan plan;
    plan.n_scalar = p.at("n_scalar");
    plan.n_pairs = p.at("n_pairs");
    plan.n_fields = p.at("n_fields");
    plan.u_max = p.at("u_max");
    plan.t_max = ctx.cfg.timegrid.T;
    plan.seed = ctx.cfg.seed;
    std::vector<std::pair<std::string, ModelSpec>> models;
    if (p.at("zoo").get<bool>())
        models = model_zoo(ctx.cfg.grid);
    else
        models.emplace_back("configured", ctx.model);
    std::vector<Json> rows;
    bool all = true;
    for (const auto& [name, m] : models) {
        std::vector<ConditionResult> conds;
        const ValidationReport d = validate_drift(m.drift, plan);
        const ValidationReport n = validate_noise(m.noise, m.drift, m.grid, plan);
        conds.insert(conds.end(), d.conditions.begin(), d.conditions.end());
        conds.insert(conds.end(), n.conditions.begin(), n.conditions.end());
        conds.push_back(validate_elementary(m.drift.p, plan.n_pairs, plan.seed));
        for (const auto& c : conds) {
            all = all && c.pass;
            rows.push_back({{"record", "condition"},
                            {"model", name},
                            {"condition", c.name},
                            {"pass", c.pass},
                            {"worst_margin", c.worst_margin},
                            {"samples", c.samples},
                            {"witness_t", c.witness.t},
                            {"witness_x", c.witness.x},
                            {"witness_u1", c.witness.u1},
                            {"witness_u2", c.witness.u2},
                            {"witness_mode", c.witness.mode}});
        }
        if (d.lambda1_certificate)
            rows.push_back({{"record", "certificate"}, {"model", name}, {"name", "lambda1"}, {"value", *d.lambda1_certificate}});
        if (d.lambda2_certificate)
            rows.push_back({{"record", "certificate"}, {"model", name}, {"name", "lambda2"}, {"value", *d.lambda2_certificate}});
        for (const auto& [cn, cv] : n.constants)
            rows.push_back({{"record", "constant"}, {"model", name}, {"name", cn}, {"value", number_or_null(cv)}});
    }
    ExperimentOutput out;
    out.tables.emplace_back("validate-model", std::move(rows));
    out.tolerances = {{"validation_slack", validation_slack}};
    if (!all) {
        out.exit_code = exit_validation_failed;
        out.message = "model validation failed";
    }
    return out;
}

ExperimentOutput run_tail_scan(const Context& ctx) {
    const Json& p = ctx.cfg.params;
    const Field u0 = ctx.field(p.at("u0"));
    const Control v = ctx.control(p.at("control"));
    auto radii = p.at("radii").get<std::vector<double>>();
    const double L = ctx.cfg.grid.half_length;
    if (radii.empty()) radii = {L / 4, 3 * L / 8, L / 2, 3 * L / 4};
    const SkeletonSolution sol = solve_skeleton(ctx.model, u0, v, ctx.cfg.timegrid);
    const TailCurve c = tail_mass_scan(sol, radii);
    std::vector<Json> rows;
    for (std::size_t i = 0; i < c.radii.size(); ++i)
        rows.push_back({{"record", "tail"}, {"radius", c.radii[i]}, {"mass", c.values[i]}});
    rows.push_back({{"record", "summary"}, {"non_increasing", c.non_increasing()},
                    {"last_over_first", number_or_null(c.values.back() / c.values.front())}});
    ExperimentOutput out;
    out.tables.emplace_back("tail-scan", std::move(rows));
    return out;
}

ExperimentOutput run_cvs_sweep(const Context& ctx) {
    const Json& p = ctx.cfg.params;
    const TimeGrid& tg = ctx.cfg.timegrid;
    const GridSpec& g = ctx.cfg.grid;
    const int K = ctx.model.noise.n_modes;
    const double R = p.at("u0_norm"), N = p.at("control_norm");
    std::vector<Field> u0s;
    const int n_u0 = p.at("n_u0"), n_v = p.at("n_controls");
    for (int i = 0; i < n_u0; ++i) {
        const Field b = bump(g, 0.125 * g.half_length, 1.0, (i - (n_u0 - 1) / 2.0) * 0.0625 * g.half_length);
        u0s.push_back((R / l2_norm(b)) * b);
    }
    std::vector<Control> vs;
    for (int j = 0; j < n_v; ++j) {
        Control c = Control::constant_mode(tg, K, j % K, 1.0);
        if (N > 0.0) c *= N / c.l2_time_norm(); else c *= 0.0;
        vs.push_back(c);
    }
    double eta = 0.0;
    if (!p.at("eta").is_null()) {
        eta = p.at("eta");
    } else {
        double typical = 0.0;
        for (const auto& u : u0s)
            for (const auto& v : vs) {
                const Trajectory zero(static_cast<std::size_t>(tg.n_steps) + 1, Field(g));
                typical += path_distance(g0_map(ctx.model, u, v, tg), zero, tg, ctx.model.drift.p);
            }
        eta = 0.25 * typical / static_cast<double>(u0s.size() * vs.size());
        if (!(eta > 0.0)) eta = 0.25;
    }
    const ConvergenceTable table = uniform_convergence_experiment(
        ctx.model, u0s, vs, p.at("eps_list").get<std::vector<double>>(), eta, p.at("n_paths"), ctx.cfg.seed,
        ctx.cfg.workers);
    std::vector<Json> rows;
    ExperimentOutput out;
    for (const auto& r : table.rows) {
        rows.push_back({{"record", "row"}, {"epsilon", r.epsilon}, {"p_hat", r.p_hat}, {"ci_lo", r.ci.lo},
                        {"ci_hi", r.ci.hi}, {"worst_u0", r.worst_u0}, {"worst_control", r.worst_control},
                        {"n_used", r.n_used}, {"n_blow_up", r.n_blow_up}});
        out.blow_ups += r.n_blow_up;
    }
    rows.push_back({{"record", "summary"}, {"eta", eta}, {"monotone_within_ci", table.monotone_within_ci()},
                    {"endpoints_separated", table.endpoints_separated()}});
    out.tables.emplace_back("cvs-sweep", std::move(rows));
    out.tolerances = {{"eta", eta}};
    return out;
}

}  // namespace

ExperimentOutput run_experiment(const RunConfig& cfg) {
    const Context ctx(cfg);
    const std::string& e = cfg.experiment;
    if (e == "simulate") return run_simulate(ctx);
    if (e == "skeleton") return run_skeleton(ctx);
    if (e == "rate-min") return run_rate_min(ctx);
    if (e == "level-set") return run_level_set(ctx);
    if (e == "mc-ldp") return run_mc_ldp(ctx);
    if (e == "validate-model") return run_validate_model(ctx);
    if (e == "tail-scan") return run_tail_scan(ctx);
    if (e == "cvs-sweep") return run_cvs_sweep(ctx);
    throw ConfigError({{"experiment", "a known experiment", e}});
}

RunOutcome run(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    RunOutcome res;
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentOutput out;
    try {
        out = run_experiment(cfg);
    } catch (const ConfigError& e) {
        res.exit_code = exit_config_invalid;
        res.message = e.what();
        return res;
    } catch (const OptimizationError& e) {
        res.exit_code = exit_not_converged;
        res.message = e.what();
        return res;
    } catch (const EstimationError& e) {
        res.exit_code = exit_blow_up_dominated;
        res.message = e.what();
        return res;
    } catch (const BlowUpError& e) {
        res.exit_code = exit_blow_up_dominated;
        res.message = e.what();
        return res;
    } catch (const std::exception& e) {
        res.exit_code = exit_failure;
        res.message = e.what();
        return res;
    }
    const fs::path dir = cfg.output_dir;
    RunManifest& man = res.manifest;
    const Json echoed = config_to_json(cfg);
    man.config = echoed;
    man.config_hash = sha256_hex(echoed.dump());
    man.version = artifact_version();
    man.blow_ups = out.blow_ups;
    man.tolerances = out.tolerances;
    man.exit_code = out.exit_code;
    auto emit = [&](const std::string& name, const std::string& content) {
        atomic_write(dir / name, content);
        man.outputs.push_back({name, sha256_hex(content), content.size()});
        res.files.push_back(dir / name);
    };
    try {
        for (const auto& [stem, records] : out.tables) {
            if (cfg.format == OutputFormat::csv)
                emit(stem + ".csv", to_csv(records));
            else
                emit(stem + ".ndjson", to_ndjson(records));
        }
        for (const auto& [name, content] : out.extra_files) emit(name, content);
        man.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        atomic_write(dir / "manifest.json", man.to_json().dump(2) + "\n");
        res.files.push_back(dir / "manifest.json");
    } catch (const std::exception& e) {
        res.exit_code = exit_failure;
        res.message = e.what();
        return res;
    }
    res.exit_code = out.exit_code;
    res.message = out.message;
    return res;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Fractional stochastic reaction-diffusion experiments"};
    app.require_subcommand(1);
    std::string config_path, out_dir, format;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    for (const auto& name : experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out_dir, "override the output directory");
        sub->add_option("--workers", workers, "override the worker count")->check(CLI::PositiveNumber);
        sub->add_option("--format", format, "ndjson or csv")->check(CLI::IsMember({"ndjson", "csv"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config_invalid;
    }
    const std::string experiment = app.get_subcommands().front()->get_name();

    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "cannot read config " << config_path << "\n";
        return exit_config_invalid;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg;
    try {
        Json j = Json::parse(buf.str());
        if (!j.is_object()) throw ConfigError({{"<document>", "a JSON object", j.dump()}});
        if (j.contains("experiment") && j["experiment"] != experiment)
            throw ConfigError({{"experiment", "'" + experiment + "' to match the subcommand", j["experiment"].dump()}});
        j["experiment"] = experiment;
        if (seed) j["seed"] = *seed;
        if (!out_dir.empty()) j["output_dir"] = out_dir;
        if (workers) j["workers"] = *workers;
        if (!format.empty()) j["format"] = format;
        cfg = parse_config(j.dump());
    } catch (const Json::parse_error& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return exit_config_invalid;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return exit_config_invalid;
    }
    const RunOutcome r = run(cfg);
    for (const auto& f : r.files) std::cout << f.string() << "\n";
    if (!r.message.empty()) std::cerr << r.message << "\n";
    return r.exit_code;
}

}  // namespace fracldp
