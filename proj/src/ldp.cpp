#include "fracldp/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "fracldp/errors.hpp"

namespace fracldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SdeConfig sde_config(double eps, const TimeGrid& tg) { return SdeConfig{eps, Scheme::tamed_imex_em, tg, default_linf_guard}; }

std::vector<PathRecord> sample(const ModelSpec& model, const Field& u0, double eps, const TimeGrid& tg,
                               std::shared_ptr<const ReferenceSet> refs, std::size_t n_paths, std::uint64_t seed,
                               int workers) {
    BatchRequest req;
    req.u0 = u0;
    req.cfg = sde_config(eps, tg);
    req.references = std::move(refs);
    req.base_seed = seed;
    req.n_paths = n_paths;
    req.workers = workers;
    return run_batch(model, req);
}

std::string format_number(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

std::vector<std::optional<double>> sample_path_distances(const ModelSpec& model, const Field& u0,
                                                         const Trajectory& phi, double epsilon, const TimeGrid& tg,
                                                         std::size_t n_paths, std::uint64_t base_seed, PathNorm norm,
                                                         int workers) {
    if (phi.size() != static_cast<std::size_t>(tg.n_steps) + 1) throw ShapeError("ball probability: phi length mismatch");
    for (const Field& f : phi)
        if (!(f.grid() == model.grid)) throw ShapeError("ball probability: phi lives on a different grid");
    auto refs = std::make_shared<const ReferenceSet>(model.grid, tg, model.drift.p, std::vector<Trajectory>{phi});
    const auto records = sample(model, u0, epsilon, tg, refs, n_paths, base_seed, workers);
    std::vector<std::optional<double>> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        if (!records[i].blow_up) out[i] = records[i].to_reference[0].norm(norm, model.drift.p);
    return out;
}

BallEstimate ball_estimate(const std::vector<std::optional<double>>& distances, double delta) {
    BallEstimate e;
    for (const auto& d : distances) {
        if (!d) {
            ++e.n_blow_up;
            continue;
        }
        ++e.n_used;
        if (*d < delta) ++e.successes;
    }
    if (e.n_used == 0) throw EstimationError("ball probability: every path blew up");
    e.p_hat = static_cast<double>(e.successes) / static_cast<double>(e.n_used);
    e.ci = wilson_interval(e.successes, e.n_used);
    return e;
}

BallEstimate estimate_ball_probability(const ModelSpec& model, const Field& u0, const Trajectory& phi, double delta,
                                       double epsilon, const TimeGrid& tg, std::size_t n_paths, std::uint64_t base_seed,
                                       PathNorm norm, int workers) {
    if (!(delta >= 0.0)) throw DomainError("ball probability: delta must be >= 0");
    return ball_estimate(sample_path_distances(model, u0, phi, epsilon, tg, n_paths, base_seed, norm, workers), delta);
}

BallEstimate estimate_endpoint_probability(const ModelSpec& model, const Field& u0, const Field& y, double delta,
                                           double epsilon, const TimeGrid& tg, std::size_t n_paths,
                                           std::uint64_t base_seed, int workers) {
    if (!(y.grid() == model.grid)) throw ShapeError("endpoint probability: y lives on a different grid");
    const Trajectory flat(static_cast<std::size_t>(tg.n_steps) + 1, y);
    return estimate_ball_probability(model, u0, flat, delta, epsilon, tg, n_paths, base_seed, PathNorm::endpoint_h,
                                     workers);
}

void LdpExperimentPlan::validate() const {
    model.validate();
    timegrid.validate();
    if (initial_data.empty()) throw DomainError("ldp plan: initial_data is empty");
    for (const Field& f : initial_data)
        if (!(f.grid() == model.grid)) throw ShapeError("ldp plan: initial datum on a different grid");
    if (data_radius) {
        if (!(*data_radius > 0.0)) throw DomainError("ldp plan: data_radius must be positive");
        for (std::size_t i = 0; i < initial_data.size(); ++i) {
            const double n = l2_norm(initial_data[i]);
            if (n > *data_radius * (1.0 + 1e-12))
                throw DomainError("ldp plan: initial datum " + std::to_string(i) + " has norm " + format_number(n) +
                                  " outside the declared ball of radius " + format_number(*data_radius));
        }
    }
    if (eps_list.empty()) throw DomainError("ldp plan: eps_list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0 && eps_list[i] <= 1.0)) throw DomainError("ldp plan: eps values must lie in (0, 1]");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw DomainError("ldp plan: eps_list must strictly decrease");
    }
    if (!(delta > 0.0)) throw DomainError("ldp plan: delta must be positive");
    for (double s : s_levels)
        if (!(s >= 0.0)) throw DomainError("ldp plan: s levels must be >= 0");
    if (n_paths < 100) throw DomainError("ldp plan: n_paths must be at least 100");
    if (!(slack >= 0.0)) throw DomainError("ldp plan: slack must be >= 0");
    if (workers < 1) throw DomainError("ldp plan: workers must be >= 1");
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::indeterminate: return "indeterminate";
    }
    return "?";
}

bool LdpReport::all_pass() const {
    return !trends.empty() &&
           std::all_of(trends.begin(), trends.end(), [](const TrendRecord& t) { return t.verdict == Verdict::pass; });
}

std::size_t LdpReport::total_blow_ups() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.estimate.n_blow_up;
    return n;
}

namespace {

MarginRecord make_record(std::string probe, std::string target, std::size_t u0_index, double eps,
                         const BallEstimate& est, double rate) {
    MarginRecord r;
    r.probe = std::move(probe);
    r.target = std::move(target);
    r.u0_index = u0_index;
    r.epsilon = eps;
    r.estimate = est;
    r.rate = rate;
    r.censored = est.successes == 0;
    r.eps_log_hi = eps * std::log(est.ci.hi);
    r.eps_log_lo = est.ci.lo > 0.0 ? eps * std::log(est.ci.lo) : -kInf;
    r.eps_log_p = r.censored ? r.eps_log_hi : eps * std::log(est.p_hat);
    r.margin = r.eps_log_p + rate;
    r.margin_lo = r.eps_log_lo + rate;
    r.margin_hi = r.eps_log_hi + rate;
    return r;
}

BallEstimate count(const std::vector<PathRecord>& records, auto&& hit) {
    BallEstimate e;
    for (const auto& r : records) {
        if (r.blow_up) {
            ++e.n_blow_up;
            continue;
        }
        ++e.n_used;
        if (hit(r)) ++e.successes;
    }
    if (e.n_used == 0) throw EstimationError("ldp experiment: every path blew up");
    e.p_hat = static_cast<double>(e.successes) / static_cast<double>(e.n_used);
    e.ci = wilson_interval(e.successes, e.n_used);
    return e;
}

// A lower-type probe should end at or above -slack without a significant decline along eps_list.
Verdict lower_verdict(const TrendRecord& t, double slack, std::string& detail) {
    const std::size_t L = t.margin.size() - 1;
    const bool declined = t.margin_hi[L] < t.margin_lo[0];
    if (t.margin[L] >= -slack && !declined) {
        detail = "final margin above -slack with no significant decline";
        return Verdict::pass;
    }
    if (t.margin_hi[L] < -slack && declined) {
        detail = "final margin confidently below -slack and declining";
        return Verdict::fail;
    }
    detail = "confidence intervals admit both verdicts";
    return Verdict::indeterminate;
}

// An upper-type probe should end at or below slack without a significant rise along eps_list.
Verdict upper_verdict(const TrendRecord& t, double slack, std::string& detail) {
    const std::size_t L = t.margin.size() - 1;
    const bool rose = t.margin_lo[L] > t.margin_hi[0];
    if (t.margin[L] <= slack && !rose) {
        detail = "final margin below slack with no significant rise";
        return Verdict::pass;
    }
    if (t.margin_lo[L] > slack && rose) {
        detail = "final margin confidently above slack and rising";
        return Verdict::fail;
    }
    detail = "confidence intervals admit both verdicts";
    return Verdict::indeterminate;
}

struct Aggregate {
    std::vector<double> log_p, log_lo, log_hi, rate;
};

// Collects per-eps data for (probe, target): aggregated over initial data by `pick`.
TrendRecord trend_from(const LdpReport& rep, const std::string& probe, const std::string& target, bool lower,
                       bool dz) {
    TrendRecord t;
    t.probe = probe;
    t.target = target;
    for (double eps : rep.eps_list) {
        double m = lower ? kInf : -kInf, lo = m, hi = m;
        double lp = lower ? kInf : -kInf, lpl = lp, lph = lp;
        double rate_max = -kInf, rate_min = kInf;
        for (const auto& r : rep.records) {
            if (r.probe != probe || r.target != target || r.epsilon != eps) continue;
            if (lower) {
                m = std::min(m, r.margin);
                lo = std::min(lo, r.margin_lo);
                hi = std::min(hi, r.margin_hi);
                lp = std::min(lp, r.eps_log_p);
                lpl = std::min(lpl, r.eps_log_lo);
                lph = std::min(lph, r.eps_log_hi);
            } else {
                m = std::max(m, r.margin);
                lo = std::max(lo, r.margin_lo);
                hi = std::max(hi, r.margin_hi);
                lp = std::max(lp, r.eps_log_p);
                lpl = std::max(lpl, r.eps_log_lo);
                lph = std::max(lph, r.eps_log_hi);
            }
            rate_max = std::max(rate_max, r.rate);
            rate_min = std::min(rate_min, r.rate);
        }
        if (dz) {
            // DZ compares the extreme probability against the extreme rate over the data set.
            const double rate = lower ? rate_max : rate_min;
            m = lp + rate;
            lo = lpl + rate;
            hi = lph + rate;
        }
        t.margin.push_back(m);
        t.margin_lo.push_back(lo);
        t.margin_hi.push_back(hi);
    }
    t.verdict = lower ? lower_verdict(t, rep.slack, t.detail) : upper_verdict(t, rep.slack, t.detail);
    return t;
}

std::string s_label(double s) { return "s=" + format_number(s); }

}  // namespace

LdpReport fw_bounds_experiment(const LdpExperimentPlan& plan, const FwInputs& inputs) {
    plan.validate();
    const std::size_t n_data = plan.initial_data.size();
    const double p = plan.model.drift.p;
    const TimeGrid& tg = plan.timegrid;

    for (const auto& t : inputs.targets) {
        if (t.u0_index >= n_data) throw DomainError("fw_bounds: target '" + t.label + "' names a missing initial datum");
        if (!t.rate) throw DependencyError("fw_bounds: target '" + t.label + "' has no rate computation");
        if (!t.rate->converged)
            throw DependencyError("fw_bounds: rate computation for target '" + t.label + "' did not converge");
        if (t.phi.size() != static_cast<std::size_t>(tg.n_steps) + 1)
            throw ShapeError("fw_bounds: target '" + t.label + "' has the wrong number of snapshots");
    }
    // level set index per (u0, s)
    std::vector<std::vector<const LevelSet*>> sets(n_data, std::vector<const LevelSet*>(plan.s_levels.size(), nullptr));
    for (const auto& ls : inputs.level_sets) {
        if (ls.u0_index >= n_data) throw DomainError("fw_bounds: level set names a missing initial datum");
        if (!ls.level_set) continue;
        for (std::size_t j = 0; j < plan.s_levels.size(); ++j)
            if (std::abs(ls.level_set->s - plan.s_levels[j]) <= 1e-12) sets[ls.u0_index][j] = &*ls.level_set;
    }
    for (std::size_t i = 0; i < n_data; ++i)
        for (std::size_t j = 0; j < plan.s_levels.size(); ++j) {
            if (!sets[i][j])
                throw DependencyError("fw_bounds: no sampled level set for initial datum " + std::to_string(i) + " at " +
                                      s_label(plan.s_levels[j]));
            if (!(sets[i][j]->timegrid == tg) || sets[i][j]->members.empty())
                throw ShapeError("fw_bounds: level set does not match the plan time grid");
        }

    LdpReport rep;
    rep.eps_list = plan.eps_list;
    rep.delta = plan.delta;
    rep.slack = plan.slack;
    rep.n_paths = plan.n_paths;
    rep.notes.push_back("slack " + format_number(plan.slack) + " is a finite-eps allowance chosen by policy");
    if (!plan.s_levels.empty())
        rep.notes.push_back(
            "level-set distances use finite samples and overestimate the true distance; p(dist >= delta) and the "
            "upper margin are biased upward (conservative)");

    for (std::size_t i = 0; i < n_data; ++i) {
        std::vector<Trajectory> paths;
        std::vector<std::size_t> target_ids;
        for (std::size_t k = 0; k < inputs.targets.size(); ++k)
            if (inputs.targets[k].u0_index == i) {
                target_ids.push_back(k);
                paths.push_back(inputs.targets[k].phi);
            }
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        for (std::size_t j = 0; j < plan.s_levels.size(); ++j) {
            const std::size_t first = paths.size();
            for (const auto& m : sets[i][j]->members) paths.push_back(m.trajectory);
            ranges.emplace_back(first, paths.size());
        }
        if (paths.empty()) continue;
        auto refs = std::make_shared<const ReferenceSet>(plan.model.grid, tg, p, std::move(paths));
        for (double eps : plan.eps_list) {
            // Common random numbers: every (eps, u0) cell reuses streams 0..n_paths-1.
            const auto records = sample(plan.model, plan.initial_data[i], eps, tg, refs, plan.n_paths, plan.seed,
                                        plan.workers);
            for (std::size_t a = 0; a < target_ids.size(); ++a) {
                const FwTarget& t = inputs.targets[target_ids[a]];
                const BallEstimate est = count(records, [&](const PathRecord& r) {
                    return r.to_reference[a].norm(plan.path_norm, p) < plan.delta;
                });
                rep.records.push_back(make_record("fw_lower", t.label, i, eps, est, t.rate->value));
            }
            for (std::size_t j = 0; j < plan.s_levels.size(); ++j) {
                const auto [lo, hi] = ranges[j];
                const BallEstimate est = count(records, [&](const PathRecord& r) {
                    double d = kInf;
                    for (std::size_t m = lo; m < hi; ++m) d = std::min(d, r.to_reference[m].norm(plan.path_norm, p));
                    return d >= plan.delta;
                });
                rep.records.push_back(make_record("fw_upper", s_label(plan.s_levels[j]), i, eps, est, plan.s_levels[j]));
            }
        }
    }

    std::vector<std::string> labels;
    for (const auto& t : inputs.targets)
        if (std::find(labels.begin(), labels.end(), t.label) == labels.end()) labels.push_back(t.label);
    for (const auto& l : labels) rep.trends.push_back(trend_from(rep, "fw_lower", l, true, false));
    for (double s : plan.s_levels) rep.trends.push_back(trend_from(rep, "fw_upper", s_label(s), false, false));
    return rep;
}

RateResult set_rate(const ModelSpec& model, const Field& u0, const SetSpec& set, std::size_t u0_index, bool closed,
                    const TimeGrid& tg, PathNorm norm, const OptimizerSettings& settings) {
    if (set.shape == SetShape::whole_space) {
        RateResult r;
        r.value = closed ? kInf : 0.0;
        r.converged = !closed;
        r.residual = 0.0;
        r.minimizer = Control(tg, model.noise.n_modes);
        return r;
    }
    if (u0_index >= set.centres.size()) throw DependencyError("set_rate: set '" + set.label + "' lacks a centre");
    RateQuery q;
    q.u0 = u0;
    q.tolerance = set.radius;
    q.constraint = closed ? Constraint::outside : Constraint::inside;
    q.optimizer = settings;
    if (set.shape == SetShape::path_ball) {
        q.kind = TargetKind::path;
        q.path = set.centres[u0_index];
        q.metric = norm;
    } else {
        q.kind = TargetKind::endpoint;
        q.endpoint = set.centres[u0_index].back();
    }
    return minimize_rate(model, q, tg);
}

LdpReport dz_bounds_experiment(const LdpExperimentPlan& plan, const std::vector<SetSpec>& open_sets,
                               const std::vector<SetSpec>& closed_sets) {
    plan.validate();
    const std::size_t n_data = plan.initial_data.size();
    const double p = plan.model.drift.p;
    const TimeGrid& tg = plan.timegrid;

    struct Entry {
        const SetSpec* set;
        bool closed;
    };
    std::vector<Entry> entries;
    for (const auto& s : open_sets) entries.push_back({&s, false});
    for (const auto& s : closed_sets) entries.push_back({&s, true});
    for (const auto& [s, closed] : entries) {
        if (s->shape == SetShape::whole_space) {
            if (!closed) continue;
            throw DomainError("dz_bounds: the complement of the whole space is empty");
        }
        if (!(s->radius > 0.0)) throw DomainError("dz_bounds: set '" + s->label + "' needs a positive radius");
        if (s->centres.size() != n_data) throw ShapeError("dz_bounds: set '" + s->label + "' needs one centre per datum");
        for (const auto& c : s->centres)
            if (c.size() != static_cast<std::size_t>(tg.n_steps) + 1)
                throw ShapeError("dz_bounds: set '" + s->label + "' centre has the wrong length");
        if (s->rates.size() != n_data || std::any_of(s->rates.begin(), s->rates.end(), [](auto& r) { return !r; }))
            throw DependencyError("dz_bounds: set '" + s->label + "' lacks a rate infimum for some initial datum");
    }

    LdpReport rep;
    rep.eps_list = plan.eps_list;
    rep.delta = plan.delta;
    rep.slack = plan.slack;
    rep.n_paths = plan.n_paths;
    rep.notes.push_back("slack " + format_number(plan.slack) + " is a finite-eps allowance chosen by policy");

    for (std::size_t i = 0; i < n_data; ++i) {
        std::vector<Trajectory> paths;
        std::vector<std::ptrdiff_t> ref_of(entries.size(), -1);
        for (std::size_t e = 0; e < entries.size(); ++e) {
            if (entries[e].set->shape == SetShape::whole_space) continue;
            ref_of[e] = static_cast<std::ptrdiff_t>(paths.size());
            paths.push_back(entries[e].set->centres[i]);
        }
        std::shared_ptr<const ReferenceSet> refs;
        if (!paths.empty()) refs = std::make_shared<const ReferenceSet>(plan.model.grid, tg, p, std::move(paths));
        for (double eps : plan.eps_list) {
            const auto records = sample(plan.model, plan.initial_data[i], eps, tg, refs, plan.n_paths, plan.seed,
                                        plan.workers);
            for (std::size_t e = 0; e < entries.size(); ++e) {
                const SetSpec& s = *entries[e].set;
                const bool closed = entries[e].closed;
                const PathNorm norm = s.shape == SetShape::endpoint_ball ? PathNorm::endpoint_h : plan.path_norm;
                const BallEstimate est = count(records, [&](const PathRecord& r) {
                    if (ref_of[e] < 0) return true;
                    const double d = r.to_reference[static_cast<std::size_t>(ref_of[e])].norm(norm, p);
                    return closed ? d >= s.radius : d < s.radius;
                });
                const double rate = s.shape == SetShape::whole_space ? 0.0 : *s.rates[i];
                rep.records.push_back(make_record(closed ? "dz_closed" : "dz_open", s.label, i, eps, est, rate));
            }
        }
    }
    for (const auto& [s, closed] : entries)
        rep.trends.push_back(trend_from(rep, closed ? "dz_closed" : "dz_open", s->label, !closed, true));
    return rep;
}

bool UniformityReport::all_bounded() const {
    return std::all_of(rows.begin(), rows.end(), [](const UniformityRow& r) { return r.bounded; });
}

UniformityReport uniformity_sweep(const LdpReport& report, std::size_t n_initial_data) {
    UniformityReport out;
    out.eps_list = report.eps_list;
    out.source = report;
    if (n_initial_data <= 1)
        out.warnings.push_back("singleton initial-data set: uniformity over the set is vacuous");
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& r : report.records) {
        const auto key = std::make_pair(r.probe, r.target);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& [probe, target] : keys) {
        UniformityRow row;
        row.probe = probe;
        row.target = target;
        bool finite = true;
        for (double eps : report.eps_list) {
            double lo = kInf, hi = -kInf;
            for (const auto& r : report.records) {
                if (r.probe != probe || r.target != target || r.epsilon != eps) continue;
                lo = std::min(lo, r.margin);
                hi = std::max(hi, r.margin);
            }
            const double spread = hi >= lo ? hi - lo : 0.0;
            finite = finite && std::isfinite(spread);
            row.spread.push_back(spread);
        }
        row.bounded = finite && !row.spread.empty() &&
                      row.spread.back() <= 2.0 * std::max(row.spread.front(), report.slack);
        out.rows.push_back(std::move(row));
    }
    return out;
}

UniformityReport uniformity_sweep(const LdpExperimentPlan& plan, const FwInputs& inputs) {
    return uniformity_sweep(fw_bounds_experiment(plan, inputs), plan.initial_data.size());
}

// ---------------------------------------------------------------------------------------------
// Scalar reduction

ScalarReduction scalar_reduction(const GridSpec& grid, int k) {
    grid.validate();
    if (k < 1 || 2 * k >= grid.points_per_dim) throw DomainError("scalar_reduction: mode index out of range");
    ScalarReduction r;
    const Field s = sine_mode(grid, k);
    r.mode = (1.0 / l2_norm(s)) * s;
    r.theta = std::pow(k * std::numbers::pi / grid.half_length, 2.0 * grid.alpha);
    ModelSpec m = default_model(grid);
    m.drift.form = DriftForm::custom;
    m.drift.custom = [](double, double) { return 0.0; };
    m.drift.custom_derivative = [](double, double) { return 0.0; };
    m.noise.n_modes = 1;
    m.noise.q = 2.0;
    m.noise.shape = NoiseShape::smooth_power;
    m.noise.kappa = Field(grid);
    m.noise.sigma1 = {r.mode};
    m.noise.amplitude = {0.0};
    m.noise.tail_bound = 0.0;
    m.noise.derive_coefficients();
    m.forcing.profile = Field(grid);
    r.model = std::move(m);
    return r;
}

Field ScalarReduction::embed(double x) const { return x * mode; }

double ScalarReduction::coordinate(const Field& u) const { return inner_product(u, mode); }

double ScalarReduction::endpoint_mean(double x0, const TimeGrid& tg) const { return std::exp(-theta * tg.T) * x0; }

double ScalarReduction::endpoint_variance(const TimeGrid& tg) const {
    double s = 0.0;
    for (int j = 1; j <= tg.n_steps; ++j) s += std::exp(-2.0 * theta * j * tg.dt()) * tg.dt();
    return s;
}

double ScalarReduction::endpoint_ball_probability(double x0, double y, double r, double eps, const TimeGrid& tg) const {
    const double m = endpoint_mean(x0, tg);
    const double sd = std::sqrt(eps * endpoint_variance(tg));
    return normal_cdf((y + r - m) / sd) - normal_cdf((y - r - m) / sd);
}

double ScalarReduction::endpoint_ball_rate(double x0, double y, double r, const TimeGrid& tg) const {
    const double gap = std::max(0.0, std::abs(y - endpoint_mean(x0, tg)) - r);
    return gap * gap / (2.0 * endpoint_variance(tg));
}

Control ScalarReduction::optimal_endpoint_control(double shift, const TimeGrid& tg) const {
    const double G = endpoint_variance(tg);
    std::vector<double> v(tg.n_steps);
    for (int n = 0; n < tg.n_steps; ++n) v[n] = shift * std::exp(-theta * (tg.n_steps - n) * tg.dt()) / G;
    return Control(tg, 1, std::move(v));
}

}  // namespace fracldp
