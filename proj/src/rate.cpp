#include "fracldp/rate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <string>

#include "fracldp/errors.hpp"
#include "fracldp/parallel.hpp"
#include "fracldp/skeleton.hpp"
#include "fracldp/stochastic.hpp"

namespace fracldp {

double action(const Control& v) {
    double s = 0.0;
    for (double x : v.values()) s += x * x;
    return 0.5 * s * v.timegrid().dt();
}

Trajectory g0_map(const ModelSpec& model, const Field& u0, const Control& v, const TimeGrid& tg) {
    return solve_skeleton(model, u0, v, tg).trajectory;
}

void RateQuery::validate(const ModelSpec& model, const TimeGrid& tg) const {
    tg.validate();
    if (!(u0.grid() == model.grid)) throw ShapeError("rate query: u0 lives on a different grid");
    if (!(tolerance >= 0.0) || !std::isfinite(tolerance)) throw DomainError("rate query: tolerance must be >= 0");
    if (kind == TargetKind::path) {
        if (path.size() != static_cast<std::size_t>(tg.n_steps) + 1)
            throw ShapeError("rate query: target path needs n_steps + 1 snapshots");
        for (const Field& f : path)
            if (!(f.grid() == model.grid)) throw ShapeError("rate query: target path on a different grid");
        for (std::size_t i = 0; i < u0.size(); ++i)
            if (std::abs(path[0][i] - u0[i]) > 1e-9) throw DomainError("rate query: target path must start at u0");
    } else if (!(endpoint.grid() == model.grid)) {
        throw ShapeError("rate query: endpoint on a different grid");
    }
    if (ball_radius && !(*ball_radius >= 0.0)) throw DomainError("rate query: ball radius must be >= 0");
    if (initial) {
        if (!(initial->timegrid() == tg) || initial->n_modes() != model.noise.n_modes)
            throw ShapeError("rate query: initial control shape mismatch");
    }
    if (optimizer.max_iters < 1 || optimizer.memory < 1 || optimizer.max_continuations < 0 ||
        !(optimizer.penalty0 > 0.0))
        throw DomainError("rate query: invalid optimizer settings");
}

namespace {

// Exponent of the smooth stand-in for the sup over time nodes.
constexpr double kSupPower = 32.0;

struct ForwardPass {
    std::vector<double> states;  // (n_steps + 1) x M
    bool blow_up = false;
};

ForwardPass forward_pass(Integrator& integ, const Field& u0, const Control& v) {
    const TimeGrid& tg = integ.timegrid();
    const std::size_t M = u0.size();
    ForwardPass fp;
    fp.states.resize((static_cast<std::size_t>(tg.n_steps) + 1) * M);
    std::copy(u0.values().begin(), u0.values().end(), fp.states.begin());
    std::vector<double> u(u0.values().begin(), u0.values().end());
    try {
        for (int n = 0; n < tg.n_steps; ++n) {
            integ.step(n, u, v.at(n), {}, 0.0);
            std::copy(u.begin(), u.end(), fp.states.begin() + static_cast<std::ptrdiff_t>((n + 1) * M));
        }
    } catch (const BlowUpError&) {
        fp.blow_up = true;
    }
    return fp;
}

// Real symmetric Fourier multiplier applied in place.
void apply_multiplier(const GridSpec& grid, std::span<const double> mult, std::span<double> x,
                      std::vector<std::complex<double>>& buf) {
    spectral::forward(grid, x, buf);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= mult[i];
    spectral::inverse(grid, buf, x);
}

// Smooth distance used inside the objective. Fills d(dist)/d(u_n) when grad is non-null.
double smooth_distance(const GridSpec& grid, const TimeGrid& tg, double p, const RateQuery& q,
                       std::span<const double> states, const SpectralSymbol& sym, std::vector<double>* grad) {
    const std::size_t M = grid.size();
    const int N = tg.n_steps;
    const double h = grid.cell_volume();
    if (grad) grad->assign(states.size(), 0.0);
    auto delta = [&](int n, std::vector<double>& out) {
        out.resize(M);
        const auto u = states.subspan(static_cast<std::size_t>(n) * M, M);
        const auto ref = q.kind == TargetKind::endpoint ? q.endpoint.values() : q.path[n].values();
        for (std::size_t i = 0; i < M; ++i) out[i] = u[i] - ref[i];
    };
    std::vector<double> d;
    if (q.kind == TargetKind::endpoint || q.metric == PathNorm::endpoint_h) {
        delta(N, d);
        const double dist = std::sqrt(spectral::l2_sq(grid, d));
        if (grad && dist > 0.0)
            for (std::size_t i = 0; i < M; ++i) (*grad)[static_cast<std::size_t>(N) * M + i] = h * d[i] / dist;
        return dist;
    }

    std::vector<std::vector<double>> deltas(N + 1);
    std::vector<double> norms(N + 1);
    double amax = 0.0;
    for (int n = 0; n <= N; ++n) {
        delta(n, deltas[n]);
        norms[n] = std::sqrt(spectral::l2_sq(grid, deltas[n]));
        amax = std::max(amax, norms[n]);
    }
    double s1 = 0.0;
    if (amax > 0.0) {
        double acc = 0.0;
        for (double a : norms) acc += std::pow(a / amax, kSupPower);
        s1 = amax * std::pow(acc, 1.0 / kSupPower);
        if (grad)
            for (int n = 0; n <= N; ++n) {
                if (norms[n] == 0.0) continue;
                const double c = std::pow(norms[n] / s1, kSupPower - 2.0) * h / s1;
                for (std::size_t i = 0; i < M; ++i) (*grad)[static_cast<std::size_t>(n) * M + i] += c * deltas[n][i];
            }
    }
    if (q.metric == PathNorm::sup_h) return s1;

    // (int ||.||_V^2)^{1/2} and (int ||.||_p^p)^{1/p}.
    std::vector<std::complex<double>> buf;
    std::vector<std::vector<double>> lap(N + 1);
    double v2 = 0.0, lpp = 0.0;
    for (int n = 0; n <= N; ++n) {
        const double w = trapezoid_weight(tg, n);
        lap[n] = deltas[n];
        apply_multiplier(grid, sym.multipliers(), lap[n], buf);
        double semi = 0.0;
        for (std::size_t i = 0; i < M; ++i) semi += deltas[n][i] * lap[n][i];
        v2 += w * (norms[n] * norms[n] + semi * h);
        lpp += w * spectral::lp_pow(grid, deltas[n], p);
    }
    const double s2 = std::sqrt(std::max(0.0, v2));
    const double s3 = std::pow(lpp, 1.0 / p);
    if (grad) {
        for (int n = 0; n <= N; ++n) {
            const double w = trapezoid_weight(tg, n);
            double* g = grad->data() + static_cast<std::size_t>(n) * M;
            for (std::size_t i = 0; i < M; ++i) {
                const double x = deltas[n][i];
                if (s2 > 0.0) g[i] += w * h * (x + lap[n][i]) / s2;
                if (s3 > 0.0) g[i] += std::pow(s3, 1.0 - p) * w * h * std::pow(std::abs(x), p - 2.0) * x;
            }
        }
    }
    return s1 + s2 + s3;
}

double hinge(const RateQuery& q, double dist) {
    return q.constraint == Constraint::inside ? std::max(0.0, dist - q.tolerance) : std::max(0.0, q.tolerance - dist);
}

bool feasible(const RateQuery& q, double residual) {
    const double tol = q.optimizer.residual_tol;
    return q.constraint == Constraint::inside ? residual <= q.tolerance + tol : residual >= q.tolerance - tol;
}

bool use_adjoint(const ModelSpec& model, GradientMode mode) {
    const bool available = model.drift.has_derivative() && model.noise.has_derivative();
    if (mode == GradientMode::adjoint && !available)
        throw DomainError("rate: adjoint gradient requested for a model without derivative callbacks");
    return mode == GradientMode::adjoint || (mode == GradientMode::automatic && available);
}

class Objective {
public:
    Objective(const ModelSpec& model, const RateQuery& q, const TimeGrid& tg)
        : model_(model), q_(q), tg_(tg), integ_(model, tg), sym_(model.grid) {}

    // Value only; +inf when the forward solve blows up.
    double value(const Control& v, double penalty, double* dist_out = nullptr) {
        const ForwardPass fp = forward_pass(integ_, q_.u0, v);
        if (fp.blow_up) return std::numeric_limits<double>::infinity();
        const double dist = smooth_distance(model_.grid, tg_, model_.drift.p, q_, fp.states, sym_, nullptr);
        if (dist_out) *dist_out = dist;
        const double hg = hinge(q_, dist);
        return action(v) + penalty * hg * hg;
    }

    ObjectiveValue evaluate(const Control& v, double penalty, bool adjoint) {
        ObjectiveValue out;
        out.action = action(v);
        const ForwardPass fp = forward_pass(integ_, q_.u0, v);
        if (fp.blow_up) {
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        std::vector<double> dgrad;
        out.distance = smooth_distance(model_.grid, tg_, model_.drift.p, q_, fp.states, sym_, adjoint ? &dgrad : nullptr);
        const double hg = hinge(q_, out.distance);
        out.value = out.action + penalty * hg * hg;
        if (adjoint) {
            const double sign = q_.constraint == Constraint::inside ? 1.0 : -1.0;
            for (double& x : dgrad) x *= 2.0 * penalty * hg * sign;
            out.gradient = adjoint_gradient(v, fp.states, dgrad);
        } else {
            out.gradient = fd_gradient(v, penalty);
        }
        return out;
    }

private:
    std::vector<double> adjoint_gradient(const Control& v, std::span<const double> states,
                                         std::span<const double> dpen) {
        const GridSpec& grid = model_.grid;
        const std::size_t M = grid.size();
        const int N = tg_.n_steps;
        const int K = model_.noise.n_modes;
        const double dt = tg_.dt();
        const DriftSpec& drift = model_.drift;
        const NoiseSpec& noise = model_.noise;
        const auto kap = noise.kappa.values();
        const auto decay = integ_.decay();

        std::vector<double> grad(v.values().begin(), v.values().end());
        for (double& g : grad) g *= dt;

        std::vector<double> lambda(dpen.begin() + static_cast<std::ptrdiff_t>(N) * static_cast<std::ptrdiff_t>(M), dpen.end());
        std::vector<double> mu(M), s2(M * K), ds2(M * K);
        std::vector<std::complex<double>> buf;
        for (int n = N - 1; n >= 0; --n) {
            const double t = tg_.time(n);
            const auto u = states.subspan(static_cast<std::size_t>(n) * M, M);
            mu = lambda;
            apply_multiplier(grid, decay, mu, buf);

            const double theta = noise.sigma1_factor(t);
            const auto vn = v.at(n);
            for (int k = 0; k < K; ++k) {
                const auto s1 = noise.sigma1[k].values();
                double acc = 0.0;
                for (std::size_t i = 0; i < M; ++i) {
                    double sk = theta * s1[i];
                    if (kap[i] != 0.0) sk += kap[i] * noise.sigma2(t, k, u[i]);
                    acc += mu[i] * sk;
                }
                grad[static_cast<std::size_t>(n) * K + k] += dt * acc;
            }
            for (std::size_t i = 0; i < M; ++i) {
                const double f = drift.value(t, u[i]);
                const double denom = 1.0 + dt * std::abs(f);
                double jac = 1.0 - dt * *drift.derivative(t, u[i]) / (denom * denom);
                if (kap[i] != 0.0)
                    for (int k = 0; k < K; ++k)
                        if (vn[k] != 0.0) jac += kap[i] * *noise.sigma2_derivative(t, k, u[i]) * dt * vn[k];
                lambda[i] = dpen[static_cast<std::size_t>(n) * M + i] + mu[i] * jac;
            }
        }
        return grad;
    }

    std::vector<double> fd_gradient(const Control& v, double penalty) {
        Control work = v;
        auto& x = work.mutable_values();
        std::vector<double> grad(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double x0 = x[i];
            const double step = 1e-5 * std::max(1.0, std::abs(x0));
            x[i] = x0 + step;
            const double fp = value(work, penalty);
            x[i] = x0 - step;
            const double fm = value(work, penalty);
            x[i] = x0;
            grad[i] = (fp - fm) / (2.0 * step);
        }
        return grad;
    }

    const ModelSpec& model_;
    const RateQuery& q_;
    TimeGrid tg_;
    Integrator integ_;
    SpectralSymbol sym_;
};

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void project(Control& v, const std::optional<double>& radius) {
    if (!radius) return;
    const double n = v.l2_time_norm();
    if (n > *radius && n > 0.0) v *= *radius / n;
}

struct InnerResult {
    Control x;
    int iterations = 0;
};

// L-BFGS with Armijo backtracking for a fixed penalty; iterates are projected onto the ball.
InnerResult lbfgs(Objective& obj, Control x, double penalty, const RateQuery& q, bool adjoint) {
    const OptimizerSettings& opt = q.optimizer;
    project(x, q.ball_radius);
    ObjectiveValue cur = obj.evaluate(x, penalty, adjoint);
    if (!std::isfinite(cur.value)) throw OptimizationError("minimize_rate: starting control blows up the forward solve");
    std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;
    int rising = 0;
    InnerResult res{x, 0};
    for (int it = 0; it < opt.max_iters; ++it) {
        const auto& g = cur.gradient;
        double gmax = 0.0;
        for (double gi : g) gmax = std::max(gmax, std::abs(gi));
        if (gmax <= opt.gradient_tol * std::max(1.0, std::abs(cur.value))) break;

        // Two-loop recursion.
        std::vector<double> d(g.begin(), g.end());
        std::vector<double> alphas(memory.size());
        for (std::size_t j = memory.size(); j-- > 0;) {
            const auto& [s, y] = memory[j];
            alphas[j] = dot(s, d) / dot(y, s);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alphas[j] * y[i];
        }
        if (!memory.empty()) {
            const auto& [s, y] = memory.back();
            const double gamma = dot(s, y) / dot(y, y);
            for (double& di : d) di *= gamma;
        } else {
            const double gn = std::sqrt(dot(g, g));
            for (double& di : d) di /= std::max(gn, 1.0);
        }
        for (std::size_t j = 0; j < memory.size(); ++j) {
            const auto& [s, y] = memory[j];
            const double beta = dot(y, d) / dot(y, s);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i] * (alphas[j] - beta);
        }
        for (double& di : d) di = -di;

        bool accepted = false;
        ObjectiveValue next;
        Control trial = x;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                memory.clear();
                const double gn = std::sqrt(dot(g, g));
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i] / std::max(gn, 1.0);
            }
            double step = 1.0;
            for (int bt = 0; bt < 50; ++bt, step *= 0.5) {
                trial = x;
                auto& tv = trial.mutable_values();
                for (std::size_t i = 0; i < tv.size(); ++i) tv[i] += step * d[i];
                project(trial, q.ball_radius);
                std::vector<double> moved(tv.size());
                for (std::size_t i = 0; i < tv.size(); ++i) moved[i] = tv[i] - x.values()[i];
                const double slope = dot(g, moved);
                if (slope >= 0.0) continue;
                const double f = obj.value(trial, penalty);
                if (std::isfinite(f) && f <= cur.value + 1e-4 * slope) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) break;
        next = obj.evaluate(trial, penalty, adjoint);
        if (!std::isfinite(next.value)) throw OptimizationError("minimize_rate: objective turned non-finite");
        rising = next.value > cur.value ? rising + 1 : 0;
        if (rising >= 10) throw OptimizationError("minimize_rate: objective increased over 10 consecutive steps");

        std::vector<double> s(trial.values().begin(), trial.values().end()), y(next.gradient);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] -= x.values()[i];
            y[i] -= g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-16 * std::sqrt(dot(s, s) * dot(y, y))) {
            memory.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(memory.size()) > opt.memory) memory.pop_front();
        }
        const double decrease = cur.value - next.value;
        x = trial;
        cur = std::move(next);
        res.iterations = it + 1;
        if (decrease <= 1e-15 * std::max(1.0, std::abs(cur.value))) break;
    }
    res.x = x;
    return res;
}

}  // namespace

double target_distance(const ModelSpec& model, const RateQuery& q, const TimeGrid& tg, const Trajectory& traj) {
    if (traj.size() != static_cast<std::size_t>(tg.n_steps) + 1) throw ShapeError("target_distance: bad trajectory length");
    if (q.kind == TargetKind::endpoint) return l2_norm(traj.back() - q.endpoint);
    return path_distance(traj, q.path, tg, model.drift.p, q.metric);
}

ObjectiveValue rate_objective(const ModelSpec& model, const RateQuery& query, const TimeGrid& tg, const Control& v,
                              double penalty, GradientMode mode) {
    query.validate(model, tg);
    Objective obj(model, query, tg);
    return obj.evaluate(v, penalty, use_adjoint(model, mode));
}

RateResult minimize_rate(const ModelSpec& model, const RateQuery& query, const TimeGrid& tg) {
    query.validate(model, tg);
    const bool adjoint = use_adjoint(model, query.optimizer.gradient);
    const int K = model.noise.n_modes;
    Control x = query.initial ? *query.initial : Control(tg, K);
    if (!query.initial && query.constraint == Constraint::outside) x = Control::constant_mode(tg, K, 0, 0.1);
    x.set_ball_radius(std::nullopt);
    project(x, query.ball_radius);

    Objective obj(model, query, tg);
    RateResult best;
    RateResult last;
    auto consider = [&](const Control& c, int iterations, int cont, double penalty) {
        Trajectory traj;
        try {
            traj = g0_map(model, query.u0, c, tg);
        } catch (const BlowUpError&) {
            return;
        }
        RateResult r;
        r.value = action(c);
        r.minimizer = c;
        r.residual = target_distance(model, query, tg, traj);
        r.converged = feasible(query, r.residual);
        r.iterations = iterations;
        r.continuations = cont;
        r.penalty = penalty;
        last = r;
        if (r.converged && (!best.converged || r.value < best.value)) best = r;
    };

    double penalty = query.optimizer.penalty0;
    int total_iters = 0;
    consider(x, 0, 0, penalty);
    for (int c = 0; c <= query.optimizer.max_continuations; ++c) {
        InnerResult inner = lbfgs(obj, x, penalty, query, adjoint);
        total_iters += inner.iterations;
        x = inner.x;
        consider(x, total_iters, c, penalty);
        if (last.converged) break;
        penalty *= 2.0;
    }
    RateResult out = best.converged ? best : last;
    out.iterations = total_iters;
    if (out.minimizer && query.ball_radius) out.minimizer->set_ball_radius(*query.ball_radius + 1e-12);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Level sets

std::vector<Control> sample_action_ball(int n_modes, double s, std::size_t n_samples, const TimeGrid& tg,
                                        std::uint64_t seed) {
    if (!(s >= 0.0)) throw DomainError("sample_level_set: s must be >= 0");
    if (s == 0.0) return {Control(tg, n_modes)};
    const std::size_t D = static_cast<std::size_t>(tg.n_steps) * n_modes;
    const double R = std::sqrt(2.0 * s);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x1e7e1u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Control> out;
    out.reserve(n_samples);
    for (std::size_t j = 0; j < n_samples; ++j) {
        std::vector<double> z(D);
        double zz = 0.0;
        for (double& x : z) {
            x = nd(rng);
            zz += x * x;
        }
        const double r = R * std::pow(unif(rng), 1.0 / static_cast<double>(D));
        const double scale = r / (std::sqrt(zz) * std::sqrt(tg.dt()));
        for (double& x : z) x *= scale;
        out.emplace_back(tg, n_modes, std::move(z));
    }
    return out;
}

LevelSet level_set_from_controls(const ModelSpec& model, const Field& u0, double s, const std::vector<Control>& controls,
                                 const TimeGrid& tg, int workers) {
    LevelSet set;
    set.u0 = u0;
    set.s = s;
    set.p = model.drift.p;
    set.timegrid = tg;
    set.members.resize(controls.size());
    for (const Control& c : controls)
        if (action(c) > s + 1e-9) throw DomainError("level set: control action exceeds s");
    parallel_for(controls.size(), workers, [&](std::size_t i) {
        set.members[i] = LevelSetMember{controls[i], g0_map(model, u0, controls[i], tg)};
    });
    return set;
}

LevelSet sample_level_set(const ModelSpec& model, const Field& u0, double s, std::size_t n_samples,
                          const TimeGrid& tg, std::uint64_t seed, int workers) {
    return level_set_from_controls(model, u0, s, sample_action_ball(model.noise.n_modes, s, n_samples, tg, seed), tg,
                                   workers);
}

namespace {

ReferenceSet cache(const LevelSet& set) {
    if (set.members.empty()) throw DomainError("level set: empty set");
    std::vector<Trajectory> paths;
    paths.reserve(set.members.size());
    for (const auto& m : set.members) paths.push_back(m.trajectory);
    const GridSpec grid = paths.front().front().grid();
    return ReferenceSet(grid, set.timegrid, set.p, std::move(paths));
}

double cached_distance(const ReferenceSet& a, std::size_t i, const ReferenceSet& b, std::size_t j, PathNorm norm,
                       std::span<const double> mult, std::vector<double>& diff) {
    const GridSpec& grid = a.grid();
    const TimeGrid& tg = a.timegrid();
    const double p = a.p();
    const double spec_w = grid.cell_volume() / static_cast<double>(grid.size());
    PathEnergy e;
    const int first = norm == PathNorm::endpoint_h ? tg.n_steps : 0;
    for (int n = first; n <= tg.n_steps; ++n) {
        const auto x = a.path(i)[n].values(), y = b.path(j)[n].values();
        diff.resize(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) diff[k] = x[k] - y[k];
        const double l2 = spectral::l2_sq(grid, diff);
        e.sup_l2_sq = std::max(e.sup_l2_sq, l2);
        if (n == tg.n_steps) e.terminal_l2_sq = l2;
        if (norm == PathNorm::full) {
            const auto xa = a.spectrum(i, n), yb = b.spectrum(j, n);
            double semi = 0.0;
            for (std::size_t k = 0; k < mult.size(); ++k) semi += mult[k] * std::norm(xa[k] - yb[k]);
            const double w = trapezoid_weight(tg, n);
            e.int_v_sq += w * (l2 + semi * spec_w);
            e.int_lp_pow += w * spectral::lp_pow(grid, diff, p);
        }
    }
    return e.norm(norm, p);
}

void check_compatible(const LevelSet& a, const LevelSet& b) {
    if (a.members.empty() || b.members.empty()) throw DomainError("hausdorff_distance: empty set");
    if (!(a.timegrid == b.timegrid) || !(a.members.front().trajectory.front().grid() ==
                                         b.members.front().trajectory.front().grid()))
        throw ShapeError("hausdorff_distance: sets live on different grids");
}

}  // namespace

double hausdorff_distance(const LevelSet& a, const LevelSet& b, PathNorm norm) {
    check_compatible(a, b);
    const ReferenceSet ca = cache(a), cb = cache(b);
    const SpectralSymbol sym(ca.grid());
    std::vector<double> diff;
    std::vector<double> d(a.members.size() * b.members.size());
    for (std::size_t i = 0; i < a.members.size(); ++i)
        for (std::size_t j = 0; j < b.members.size(); ++j)
            d[i * b.members.size() + j] = cached_distance(ca, i, cb, j, norm, sym.multipliers(), diff);
    double h = 0.0;
    for (std::size_t i = 0; i < a.members.size(); ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < b.members.size(); ++j) m = std::min(m, d[i * b.members.size() + j]);
        h = std::max(h, m);
    }
    for (std::size_t j = 0; j < b.members.size(); ++j) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.members.size(); ++i) m = std::min(m, d[i * b.members.size() + j]);
        h = std::max(h, m);
    }
    return h;
}

double distance_to_set(const Trajectory& x, const LevelSet& set, PathNorm norm) {
    if (set.members.empty()) throw DomainError("distance_to_set: empty set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : set.members) best = std::min(best, path_distance(x, m.trajectory, set.timegrid, set.p, norm));
    return best;
}

double level_set_diameter(const LevelSet& set, PathNorm norm) {
    const ReferenceSet c = cache(set);
    const SpectralSymbol sym(c.grid());
    std::vector<double> diff;
    double d = 0.0;
    for (std::size_t i = 0; i < set.members.size(); ++i)
        for (std::size_t j = i + 1; j < set.members.size(); ++j)
            d = std::max(d, cached_distance(c, i, c, j, norm, sym.multipliers(), diff));
    return d;
}

bool ContinuityCurve::monotone_decreasing() const {
    for (std::size_t i = 1; i < distances.size(); ++i)
        if (!(distances[i] < distances[i - 1] || (distances[i] == 0.0 && distances[i - 1] == 0.0))) return false;
    return true;
}

ContinuityCurve level_set_continuity_experiment(const ModelSpec& model, const Field& u0,
                                                const std::vector<double>& deltas, double s, const TimeGrid& tg,
                                                std::size_t n_samples, std::uint64_t seed, int workers) {
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (!(deltas[i] < deltas[i - 1])) throw DomainError("level_set_continuity: deltas must decrease");
    const auto controls = sample_action_ball(model.noise.n_modes, s, n_samples, tg, seed);
    const LevelSet base = level_set_from_controls(model, u0, s, controls, tg, workers);
    const Field b = bump(model.grid, 0.125 * model.grid.half_length);
    const Field unit = (1.0 / l2_norm(b)) * b;
    const double p = model.drift.p;
    ContinuityCurve curve;
    for (double delta : deltas) {
        const LevelSet moved = level_set_from_controls(model, u0 + delta * unit, s, controls, tg, workers);
        const double d = hausdorff_distance(base, moved);
        curve.deltas.push_back(delta);
        curve.distances.push_back(d);
        if (delta > 0.0) curve.bound_constant = std::max(curve.bound_constant, d / (delta + std::pow(delta, p / 2.0)));
    }
    return curve;
}

}  // namespace fracldp
