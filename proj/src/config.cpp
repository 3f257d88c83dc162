#include "fracldp/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fracldp/ldp.hpp"

namespace fracldp {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    os << "invalid config:";
    for (const auto& i : issues) os << "\n  " << i.key << ": expected " << i.expected << ", found " << i.found;
    return os.str();
}

struct Range {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_open = false;
    bool hi_open = false;

    bool contains(double x) const {
        if (!std::isfinite(x)) return false;
        if (lo_open ? !(x > lo) : !(x >= lo)) return false;
        if (hi_open ? !(x < hi) : !(x <= hi)) return false;
        return true;
    }
    std::string text() const {
        auto num = [](double v) {
            if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
            std::ostringstream os;
            os << v;
            return os.str();
        };
        return std::string(lo_open ? "(" : "[") + num(lo) + ", " + num(hi) + (hi_open ? ")" : "]");
    }
};

constexpr double kInf = std::numeric_limits<double>::infinity();
const Range kAny{};
const Range kPositive{0.0, kInf, true, true};
const Range kNonNegative{0.0, kInf, false, true};
const Range kUnit{0.0, 1.0, true, false};
const Range kProbability{0.0, 1.0, false, false};

// Reads keys of one JSON object, records issues, and builds the normalized echo in key order.
class Reader {
public:
    Reader(const Json* src, std::string path, std::vector<ConfigIssue>& issues)
        : src_(src), path_(std::move(path)), issues_(issues) {
        if (src_ && !src_->is_object()) {
            issue("", "an object", src_->dump());
            src_ = nullptr;
        }
    }

    void issue(const std::string& key, const std::string& expected, const std::string& found) {
        issues_.push_back({key.empty() ? path_ : path_ + key, expected, found});
    }

    const Json* get(const std::string& key) {
        seen_.insert(key);
        if (!src_) return nullptr;
        auto it = src_->find(key);
        return it == src_->end() ? nullptr : &*it;
    }

    bool has(const std::string& key) const { return src_ && src_->contains(key); }

    double number(const std::string& key, double def, const Range& r = kAny) {
        const Json* v = get(key);
        double x = def;
        if (v) {
            if (!v->is_number()) {
                issue(key, "a number in " + r.text(), v->dump());
            } else if (!r.contains(v->get<double>())) {
                issue(key, "a number in " + r.text(), v->dump());
            } else {
                x = v->get<double>();
            }
        }
        out_[key] = x;
        return x;
    }

    std::optional<double> optional_number(const std::string& key, std::optional<double> def, const Range& r) {
        const Json* v = get(key);
        std::optional<double> x = def;
        if (v) {
            if (v->is_null()) {
                x.reset();
            } else if (!v->is_number() || !r.contains(v->get<double>())) {
                issue(key, "null or a number in " + r.text(), v->dump());
            } else {
                x = v->get<double>();
            }
        }
        out_[key] = x ? Json(*x) : Json(nullptr);
        return x;
    }

    long long integer(const std::string& key, long long def, long long lo, long long hi) {
        const Json* v = get(key);
        long long x = def;
        if (v) {
            const std::string want = "an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
            if (!v->is_number_integer()) {
                issue(key, want, v->dump());
            } else {
                const long long y = v->is_number_unsigned() && v->get<unsigned long long>() > 9'000'000'000'000'000'000ULL
                                        ? hi + 1
                                        : v->get<long long>();
                if (y < lo || y > hi)
                    issue(key, want, v->dump());
                else
                    x = y;
            }
        }
        out_[key] = x;
        return x;
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
        const Json* v = get(key);
        std::uint64_t x = def;
        if (v) {
            if (v->is_number_unsigned())
                x = v->get<std::uint64_t>();
            else
                issue(key, "a non-negative integer", v->dump());
        }
        out_[key] = x;
        return x;
    }

    bool boolean(const std::string& key, bool def) {
        const Json* v = get(key);
        bool x = def;
        if (v) {
            if (v->is_boolean())
                x = v->get<bool>();
            else
                issue(key, "true or false", v->dump());
        }
        out_[key] = x;
        return x;
    }

    std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& options) {
        const Json* v = get(key);
        std::string x = def;
        if (v) {
            std::string want = "one of {";
            for (std::size_t i = 0; i < options.size(); ++i) want += (i ? ", " : "") + options[i];
            want += "}";
            if (!v->is_string() || std::find(options.begin(), options.end(), v->get<std::string>()) == options.end())
                issue(key, want, v->dump());
            else
                x = v->get<std::string>();
        }
        out_[key] = x;
        return x;
    }

    std::string string(const std::string& key, const std::string& def) {
        const Json* v = get(key);
        std::string x = def;
        if (v) {
            if (v->is_string() && !v->get<std::string>().empty())
                x = v->get<std::string>();
            else
                issue(key, "a non-empty string", v->dump());
        }
        out_[key] = x;
        return x;
    }

    /// Array of numbers; `order` = -1 strictly decreasing, +1 strictly increasing, 0 any.
    std::vector<double> numbers(const std::string& key, std::vector<double> def, const Range& r, std::size_t min_size,
                                int order = 0) {
        const Json* v = get(key);
        std::vector<double> x = def;
        if (v) {
            std::string want = "an array of at least " + std::to_string(min_size) + " numbers in " + r.text();
            if (order < 0) want += ", strictly decreasing";
            if (order > 0) want += ", strictly increasing";
            bool ok = v->is_array() && v->size() >= min_size;
            std::vector<double> y;
            if (ok)
                for (const auto& e : *v) {
                    if (!e.is_number() || !r.contains(e.get<double>())) {
                        ok = false;
                        break;
                    }
                    y.push_back(e.get<double>());
                }
            for (std::size_t i = 1; ok && i < y.size(); ++i) {
                if (order < 0 && !(y[i] < y[i - 1])) ok = false;
                if (order > 0 && !(y[i] > y[i - 1])) ok = false;
            }
            if (ok)
                x = y;
            else
                issue(key, want, v->dump());
        }
        out_[key] = x;
        return x;
    }

    void put(const std::string& key, Json value) {
        seen_.insert(key);
        out_[key] = std::move(value);
    }

    std::string child_path(const std::string& key) const { return path_ + key + "."; }

    Json finish() {
        if (src_)
            for (auto it = src_->begin(); it != src_->end(); ++it)
                if (!seen_.count(it.key())) issue(it.key(), "no such key (unknown keys are rejected)", it.value().dump());
        return std::move(out_);
    }

private:
    const Json* src_;
    std::string path_;
    std::vector<ConfigIssue>& issues_;
    std::set<std::string> seen_;
    Json out_ = Json::object();
};

const std::vector<std::string> kNorms{"full", "sup_h", "endpoint_h"};

Json read_profile(const Json* src, const std::string& path, std::vector<ConfigIssue>& issues, double radius) {
    Reader r(src, path, issues);
    r.choice("kind", "bump", {"bump", "sine", "zero", "scalar"});
    r.number("radius", radius, kPositive);
    r.number("amplitude", 1.0);
    r.number("center", 0.0);
    r.integer("k", 1, 1, 1 << 20);
    r.number("x", 0.0);
    r.optional_number("norm", std::nullopt, kNonNegative);
    return r.finish();
}

Json read_control(const Json* src, const std::string& path, std::vector<ConfigIssue>& issues) {
    Reader r(src, path, issues);
    r.choice("kind", "zero", {"zero", "constant_mode", "random", "optimal_shift"});
    r.integer("mode", 0, 0, 1 << 20);
    r.number("value", 0.0);
    r.number("scale", 1.0, kNonNegative);
    r.unsigned_integer("seed", 0);
    r.number("shift", 0.0);
    r.optional_number("norm", std::nullopt, kNonNegative);
    return r.finish();
}

Json read_optimizer(const Json* src, const std::string& path, std::vector<ConfigIssue>& issues) {
    Reader r(src, path, issues);
    const OptimizerSettings d;
    r.integer("max_iters", d.max_iters, 1, 1'000'000);
    r.number("gradient_tol", d.gradient_tol, kPositive);
    r.integer("memory", d.memory, 1, 100);
    r.number("penalty0", d.penalty0, kPositive);
    r.integer("max_continuations", d.max_continuations, 0, 60);
    r.number("residual_tol", d.residual_tol, kNonNegative);
    r.choice("gradient", "automatic", {"automatic", "adjoint", "finite_difference"});
    return r.finish();
}

Json read_params(const std::string& experiment, const Json* src, std::vector<ConfigIssue>& issues) {
    Reader r(src, "params.", issues);
    auto profile = [&](const std::string& key) {
        r.put(key, read_profile(r.get(key), r.child_path(key), issues, 2.0));
    };
    auto control = [&](const std::string& key) { r.put(key, read_control(r.get(key), r.child_path(key), issues)); };

    if (experiment == "simulate") {
        r.number("epsilon", 1.0, kUnit);
        r.integer("n_paths", 100, 1, 100'000'000);
        profile("u0");
        control("control");
        r.number("linf_guard", default_linf_guard, kPositive);
        r.number("blow_up_limit", 0.5, kProbability);
    } else if (experiment == "skeleton") {
        profile("u0");
        control("control");
    } else if (experiment == "rate-min") {
        profile("u0");
        {
            const Json* t = r.get("target");
            Reader tr(t, r.child_path("target"), issues);
            tr.choice("kind", "planted", {"planted", "noise_free", "endpoint"});
            tr.put("control", read_control(tr.get("control"), tr.child_path("control"), issues));
            tr.number("tolerance", 1e-3, kNonNegative);
            tr.choice("constraint", "inside", {"inside", "outside"});
            tr.choice("metric", "full", kNorms);
            r.put("target", tr.finish());
        }
        r.optional_number("ball_radius", std::nullopt, kNonNegative);
        r.put("optimizer", read_optimizer(r.get("optimizer"), r.child_path("optimizer"), issues));
    } else if (experiment == "level-set") {
        profile("u0");
        r.number("s", 0.5, kNonNegative);
        r.integer("n_samples", 64, 1, 1'000'000);
        r.numbers("deltas", {}, kNonNegative, 0, -1);
        r.choice("norm", "full", kNorms);
    } else if (experiment == "mc-ldp") {
        {
            const Json* d = r.get("initial_data");
            Json arr = Json::array();
            if (d && (!d->is_array() || d->empty())) {
                r.issue("initial_data", "a non-empty array of profiles", d->dump());
            } else if (d) {
                for (std::size_t i = 0; i < d->size(); ++i)
                    arr.push_back(read_profile(&(*d)[i], r.child_path("initial_data[" + std::to_string(i) + "]"), issues, 2.0));
            } else {
                arr.push_back(read_profile(nullptr, "", issues, 2.0));
            }
            r.put("initial_data", arr);
        }
        r.optional_number("data_radius", std::nullopt, kPositive);
        r.choice("data_kind", "bounded_ball", {"bounded_ball", "compact_set"});
        r.numbers("eps_list", {0.5, 0.2, 0.1, 0.05}, kUnit, 1, -1);
        r.number("delta", 0.6, kPositive);
        r.numbers("s_levels", {0.5}, kNonNegative, 0, 0);
        r.integer("n_paths", 1000, 100, 100'000'000);
        r.number("slack", 0.5, kNonNegative);
        r.choice("path_norm", "full", kNorms);
        r.integer("level_set_samples", 128, 1, 1'000'000);
        r.choice("rate_source", "optimizer", {"optimizer", "control_action"});
        r.number("rate_tolerance", 1e-3, kNonNegative);
        {
            const Json* t = r.get("targets");
            Json arr = Json::array();
            if (t && !t->is_array()) {
                r.issue("targets", "an array of {label, control}", t->dump());
            } else if (t) {
                for (std::size_t i = 0; i < t->size(); ++i) {
                    Reader tr(&(*t)[i], r.child_path("targets[" + std::to_string(i) + "]"), issues);
                    tr.string("label", "target" + std::to_string(i));
                    tr.put("control", read_control(tr.get("control"), tr.child_path("control"), issues));
                    arr.push_back(tr.finish());
                }
            } else {
                arr.push_back(Json{{"label", "noise_free"}, {"control", read_control(nullptr, "", issues)}});
            }
            r.put("targets", arr);
        }
    } else if (experiment == "validate-model") {
        r.boolean("zoo", true);
        const SamplingPlan d;
        r.integer("n_scalar", static_cast<long long>(d.n_scalar), 1, 100'000'000);
        r.integer("n_pairs", static_cast<long long>(d.n_pairs), 1, 100'000'000);
        r.integer("n_fields", static_cast<long long>(d.n_fields), 1, 10'000'000);
        r.number("u_max", d.u_max, kPositive);
    } else if (experiment == "tail-scan") {
        profile("u0");
        control("control");
        r.numbers("radii", {}, kPositive, 0, 1);
    } else if (experiment == "cvs-sweep") {
        r.number("u0_norm", 1.0, kNonNegative);
        r.number("control_norm", 1.0, kNonNegative);
        r.numbers("eps_list", {1.0, 0.3, 0.1, 0.03}, kUnit, 2, -1);
        r.optional_number("eta", std::nullopt, kPositive);
        r.integer("n_paths", 400, 1, 100'000'000);
        r.integer("n_u0", 3, 1, 1000);
        r.integer("n_controls", 3, 1, 1000);
    }
    return r.finish();
}

const char* form_name(DriftForm f) {
    switch (f) {
        case DriftForm::cubic_minus_linear: return "cubic_minus_linear";
        case DriftForm::pure_power: return "pure_power";
        case DriftForm::custom: return "custom";
    }
    return "?";
}

const char* shape_name(NoiseShape s) {
    switch (s) {
        case NoiseShape::smooth_power: return "smooth_power";
        case NoiseShape::saturated_power: return "saturated_power";
        case NoiseShape::custom: return "custom";
    }
    return "?";
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues) : Error(join_issues(issues)), issues_(std::move(issues)) {}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"simulate",     "skeleton",       "rate-min",  "level-set",
                                                "mc-ldp",       "validate-model", "tail-scan", "cvs-sweep"};
    return names;
}

ModelSpec build_model(const GridSpec& grid, const ModelConfig& cfg) {
    if (cfg.reduction == "scalar") return scalar_reduction(grid, cfg.scalar_mode).model;
    ModelSpec m = default_model(grid, cfg.support);
    m.drift = cfg.drift;
    const double support = cfg.support.value_or(0.375 * grid.half_length);
    NoiseSpec& n = m.noise;
    n.n_modes = cfg.n_modes;
    n.q = cfg.q;
    n.shape = cfg.shape;
    n.sigma1 = default_sigma1(grid, support, cfg.n_modes, cfg.sigma1_scale);
    n.amplitude.clear();
    for (int k = 0; k < cfg.n_modes; ++k) n.amplitude.push_back(cfg.noise_amplitude / (k + 1));
    n.derive_coefficients();
    n.tail_bound = cfg.tail_bound;
    m.forcing.profile = bump(grid, support / 3.0, cfg.forcing_amplitude);
    m.validate();
    return m;
}

RunConfig parse_config(std::string_view text) {
    Json root;
    try {
        root = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw ConfigError({{"<document>", "valid JSON", e.what()}});
    }
    std::vector<ConfigIssue> issues;
    RunConfig cfg;
    Reader top(&root, "", issues);

    const Json* exp = top.get("experiment");
    if (!exp) {
        top.issue("experiment", "one of the experiment names (required key)", "missing");
    } else {
        cfg.experiment = top.choice("experiment", "", experiment_names());
    }
    cfg.seed = top.unsigned_integer("seed", 0);
    cfg.output_dir = top.string("output_dir", "out");
    cfg.format = top.choice("format", "ndjson", {"ndjson", "csv"}) == "csv" ? OutputFormat::csv : OutputFormat::ndjson;
    cfg.workers = static_cast<int>(top.integer("workers", 1, 1, 1024));

    {
        Reader g(top.get("grid"), "grid.", issues);
        const GridSpec d = default_grid();
        cfg.grid.dim = static_cast<int>(g.integer("dim", d.dim, 1, 3));
        cfg.grid.half_length = g.number("half_length", d.half_length, kPositive);
        cfg.grid.points_per_dim = static_cast<int>(g.integer("points_per_dim", d.points_per_dim, 2, 1 << 16));
        if (cfg.grid.points_per_dim & (cfg.grid.points_per_dim - 1))
            g.issue("points_per_dim", "a power of two", std::to_string(cfg.grid.points_per_dim));
        cfg.grid.alpha = g.number("alpha", d.alpha, kUnit);
        top.put("grid", g.finish());
    }
    {
        Reader t(top.get("timegrid"), "timegrid.", issues);
        cfg.timegrid.T = t.number("T", 1.0, kPositive);
        cfg.timegrid.n_steps = static_cast<int>(t.integer("n_steps", 128, 1, 10'000'000));
        top.put("timegrid", t.finish());
    }
    {
        Reader m(top.get("model"), "model.", issues);
        ModelConfig& mc = cfg.model;
        mc.reduction = m.choice("reduction", "none", {"none", "scalar"});
        mc.scalar_mode = static_cast<int>(m.integer("scalar_mode", 1, 1, 1 << 20));
        if (mc.reduction == "scalar" && 2 * mc.scalar_mode >= cfg.grid.points_per_dim)
            m.issue("scalar_mode", "a mode below points_per_dim / 2", std::to_string(mc.scalar_mode));
        mc.support = m.optional_number("support", std::nullopt, kPositive);
        if (mc.support && *mc.support > 0.5 * cfg.grid.half_length)
            m.issue("support", "a radius in (0, half_length / 2]", std::to_string(*mc.support));
        {
            Reader d(m.get("drift"), m.child_path("drift"), issues);
            const std::string form = d.choice("form", "cubic_minus_linear", {"cubic_minus_linear", "pure_power"});
            const double p = d.number("p", 4.0, Range{2.0, kInf, true, true});
            DriftSpec base = form == "pure_power" ? DriftSpec::pure_power(p) : DriftSpec::cubic_minus_linear();
            if (form == "cubic_minus_linear" && p != 4.0) d.issue("p", "4 for cubic_minus_linear", std::to_string(p));
            base.lambda1 = d.number("lambda1", base.lambda1, kPositive);
            base.lambda2 = d.number("lambda2", base.lambda2, kPositive);
            base.psi1 = d.number("psi1", base.psi1, kNonNegative);
            base.psi2 = d.number("psi2", base.psi2, kNonNegative);
            base.psi3 = d.number("psi3", base.psi3, kNonNegative);
            base.psi4 = d.number("psi4", base.psi4, kNonNegative);
            mc.drift = base;
            m.put("drift", d.finish());
        }
        {
            Reader n(m.get("noise"), m.child_path("noise"), issues);
            mc.n_modes = static_cast<int>(n.integer("n_modes", 4, 1, 4096));
            mc.q = n.number("q", 3.0, Range{2.0, kInf, false, true});
            const double qmax = 1.0 + mc.drift.p / 2.0;
            if (mc.q > qmax) {
                std::ostringstream os;
                os << "q in the noise growth range [2, 1 + p/2] = [2, " << qmax << "] for p = " << mc.drift.p;
                n.issue("q", os.str(), std::to_string(mc.q));
            }
            mc.shape = n.choice("shape", "smooth_power", {"smooth_power", "saturated_power"}) == "saturated_power"
                           ? NoiseShape::saturated_power
                           : NoiseShape::smooth_power;
            mc.sigma1_scale = n.number("sigma1_scale", 0.2, kAny);
            mc.noise_amplitude = n.number("amplitude", 0.3, kAny);
            mc.tail_bound = n.number("tail_bound", 0.0, kNonNegative);
            m.put("noise", n.finish());
        }
        {
            Reader f(m.get("forcing"), m.child_path("forcing"), issues);
            mc.forcing_amplitude = f.number("amplitude", 0.2, kAny);
            m.put("forcing", f.finish());
        }
        top.put("model", m.finish());
    }
    cfg.params = read_params(cfg.experiment, top.get("params"), issues);
    top.finish();
    if (!issues.empty()) throw ConfigError(std::move(issues));
    try {
        build_model(cfg.grid, cfg.model);
    } catch (const Error& e) {
        throw ConfigError({{"model", "a valid model", e.what()}});
    }
    return cfg;
}

Json config_to_json(const RunConfig& cfg) {
    Json j;
    j["experiment"] = cfg.experiment;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["format"] = cfg.format == OutputFormat::csv ? "csv" : "ndjson";
    j["workers"] = cfg.workers;
    j["grid"] = {{"dim", cfg.grid.dim},
                 {"half_length", cfg.grid.half_length},
                 {"points_per_dim", cfg.grid.points_per_dim},
                 {"alpha", cfg.grid.alpha}};
    j["timegrid"] = {{"T", cfg.timegrid.T}, {"n_steps", cfg.timegrid.n_steps}};
    const ModelConfig& m = cfg.model;
    const DriftSpec& d = m.drift;
    j["model"] = {
        {"reduction", m.reduction},
        {"scalar_mode", m.scalar_mode},
        {"support", m.support ? Json(*m.support) : Json(nullptr)},
        {"drift",
         {{"form", form_name(d.form)},
          {"p", d.p},
          {"lambda1", d.lambda1},
          {"lambda2", d.lambda2},
          {"psi1", d.psi1},
          {"psi2", d.psi2},
          {"psi3", d.psi3},
          {"psi4", d.psi4}}},
        {"noise",
         {{"n_modes", m.n_modes},
          {"q", m.q},
          {"shape", shape_name(m.shape)},
          {"sigma1_scale", m.sigma1_scale},
          {"amplitude", m.noise_amplitude},
          {"tail_bound", m.tail_bound}}},
        {"forcing", {{"amplitude", m.forcing_amplitude}}},
    };
    j["params"] = cfg.params;
    return j;
}

std::string serialize_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

bool operator==(const RunConfig& a, const RunConfig& b) { return config_to_json(a) == config_to_json(b); }

}  // namespace fracldp
