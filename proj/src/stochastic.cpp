#include "fracldp/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fracldp/errors.hpp"
#include "fracldp/parallel.hpp"
#include "fracldp/skeleton.hpp"

namespace fracldp {

WienerDriver::WienerDriver(int n_modes, std::uint64_t seed, std::uint64_t stream_id)
    : n_modes_(n_modes), seed_(seed), stream_id_(stream_id) {
    if (n_modes < 1) throw DomainError("wiener driver: n_modes must be positive");
}

std::vector<double> WienerDriver::increments(const TimeGrid& tg) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> nd(0.0, std::sqrt(tg.dt()));
    std::vector<double> out(static_cast<std::size_t>(tg.n_steps) * n_modes_);
    for (double& x : out) x = nd(rng);
    return out;
}

void SdeConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("sde config: epsilon must lie in (0, 1]");
    if (!(linf_guard > 0.0)) throw DomainError("sde config: guard must be positive");
    timegrid.validate();
}

namespace {

void check_inputs(const ModelSpec& model, const Field& u0, const SdeConfig& cfg, const Control* v,
                  const WienerDriver& driver) {
    cfg.validate();
    if (!(u0.grid() == model.grid)) throw ShapeError("simulate: u0 lives on a different grid");
    if (driver.n_modes() != model.noise.n_modes) throw ShapeError("simulate: driver mode count mismatch");
    if (v) {
        if (!(v->timegrid() == cfg.timegrid)) throw ShapeError("simulate: control on a different time grid");
        if (v->n_modes() != model.noise.n_modes) throw ShapeError("simulate: control mode count mismatch");
    }
}

// Runs one path, calling visit(n, u, integrator, spectrum_ready) for n = 0..n_steps.
template <class Visit>
void integrate_path(Integrator& integ, const Field& u0, const SdeConfig& cfg, const Control* v,
                    const WienerDriver& driver, Visit&& visit) {
    const TimeGrid& tg = cfg.timegrid;
    const int K = driver.n_modes();
    const std::vector<double> dw = driver.increments(tg);
    const std::span<const double> dws(dw);
    const double scale = std::sqrt(cfg.epsilon);
    std::vector<double> u(u0.values().begin(), u0.values().end());
    visit(0, u, false);
    for (int n = 0; n < tg.n_steps; ++n) {
        integ.step(n, u, v ? v->at(n) : std::span<const double>{}, dws.subspan(static_cast<std::size_t>(n) * K, K),
                   scale);
        visit(n + 1, u, true);
    }
}

PathSample simulate_impl(const ModelSpec& model, const Field& u0, const SdeConfig& cfg, const Control* v,
                         const WienerDriver& driver) {
    check_inputs(model, u0, cfg, v, driver);
    Integrator integ(model, cfg.timegrid, cfg.linf_guard);
    PathSample out;
    out.seed = driver.seed();
    out.stream_id = driver.stream_id();
    out.trajectory.reserve(cfg.timegrid.n_steps + 1);
    out.diagnostics.reserve(cfg.timegrid.n_steps + 1);
    integrate_path(integ, u0, cfg, v, driver, [&](int n, const std::vector<double>& u, bool ready) {
        out.diagnostics.push_back(integ.diagnose(cfg.timegrid.time(n), u, ready));
        out.trajectory.emplace_back(model.grid, u);
    });
    return out;
}

}  // namespace

PathSample simulate_sde(const ModelSpec& model, const Field& u0, const SdeConfig& cfg, const WienerDriver& driver) {
    return simulate_impl(model, u0, cfg, nullptr, driver);
}

PathSample simulate_shifted(const ModelSpec& model, const Field& u0, const SdeConfig& cfg, const Control& v,
                            const WienerDriver& driver) {
    return simulate_impl(model, u0, cfg, &v, driver);
}

// ---------------------------------------------------------------------------------------------
// Batches

ReferenceSet::ReferenceSet(const GridSpec& grid, const TimeGrid& tg, double p, std::vector<Trajectory> paths)
    : grid_(grid), tg_(tg), p_(p), paths_(std::move(paths)) {
    const std::size_t M = grid.size();
    const std::size_t steps = static_cast<std::size_t>(tg.n_steps) + 1;
    spectra_.resize(paths_.size() * steps * M);
    std::vector<std::complex<double>> buf;
    for (std::size_t j = 0; j < paths_.size(); ++j) {
        if (paths_[j].size() != steps) throw ShapeError("reference set: trajectory length does not match time grid");
        for (std::size_t n = 0; n < steps; ++n) {
            if (!(paths_[j][n].grid() == grid)) throw ShapeError("reference set: grid mismatch");
            spectral::forward(grid, paths_[j][n].values(), buf);
            std::copy(buf.begin(), buf.end(), spectra_.begin() + static_cast<std::ptrdiff_t>((j * steps + n) * M));
        }
    }
}

std::span<const std::complex<double>> ReferenceSet::spectrum(std::size_t i, int step) const {
    const std::size_t M = grid_.size();
    const std::size_t steps = static_cast<std::size_t>(tg_.n_steps) + 1;
    return std::span<const std::complex<double>>(spectra_).subspan((i * steps + static_cast<std::size_t>(step)) * M, M);
}

namespace {

void accumulate(PathEnergy& e, double w, bool terminal, double l2, double semi, double lp) {
    e.sup_l2_sq = std::max(e.sup_l2_sq, l2);
    e.int_v_sq += w * (l2 + semi);
    e.int_lp_pow += w * lp;
    if (terminal) e.terminal_l2_sq = l2;
}

PathRecord run_one(const ModelSpec& model, const BatchRequest& req, std::size_t index) {
    const TimeGrid& tg = req.cfg.timegrid;
    const GridSpec& grid = model.grid;
    const double p = model.drift.p;
    const double h = grid.cell_volume();
    const double spec_w = h / static_cast<double>(grid.size());
    PathRecord rec;
    rec.stream_id = req.first_stream + index;
    const WienerDriver driver(model.noise.n_modes, req.base_seed, rec.stream_id);
    const Control* v = req.control ? &*req.control : nullptr;
    const ReferenceSet* refs = req.references.get();
    const std::size_t n_refs = refs ? refs->size() : 0;
    rec.to_reference.assign(n_refs, PathEnergy{});

    Integrator integ(model, tg, req.cfg.linf_guard);
    const auto mult = integ.symbol().multipliers();
    std::vector<double> diff(grid.size());
    try {
        integrate_path(integ, req.u0, req.cfg, v, driver, [&](int n, const std::vector<double>& u, bool ready) {
            const StepDiagnostics d = integ.diagnose(tg.time(n), u, ready);
            const double w = trapezoid_weight(tg, n);
            const bool terminal = n == tg.n_steps;
            accumulate(rec.own, w, terminal, d.l2_sq, d.halpha_semi_sq, d.lp_pow);
            const auto uhat = integ.spectrum();
            for (std::size_t j = 0; j < n_refs; ++j) {
                const auto ref = refs->path(j)[n].values();
                for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = u[i] - ref[i];
                const auto rhat = refs->spectrum(j, n);
                double semi = 0.0;
                for (std::size_t i = 0; i < mult.size(); ++i) semi += mult[i] * std::norm(uhat[i] - rhat[i]);
                accumulate(rec.to_reference[j], w, terminal, spectral::l2_sq(grid, diff), semi * spec_w,
                           spectral::lp_pow(grid, diff, p));
            }
            if (terminal)
                for (const Field& probe : req.probes) {
                    double s = 0.0;
                    const auto pv = probe.values();
                    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * pv[i];
                    rec.terminal_probes.push_back(s * h);
                }
        });
    } catch (const BlowUpError& e) {
        rec.blow_up = true;
        rec.blow_up_step = e.step();
        rec.terminal_probes.clear();
    }
    return rec;
}

}  // namespace

std::vector<PathRecord> run_batch(const ModelSpec& model, const BatchRequest& req) {
    const WienerDriver probe_driver(model.noise.n_modes, req.base_seed, req.first_stream);
    check_inputs(model, req.u0, req.cfg, req.control ? &*req.control : nullptr, probe_driver);
    if (req.references) {
        if (!(req.references->grid() == model.grid) || !(req.references->timegrid() == req.cfg.timegrid))
            throw ShapeError("run_batch: reference set does not match the model grid and time grid");
    }
    for (const Field& f : req.probes)
        if (!(f.grid() == model.grid)) throw ShapeError("run_batch: probe lives on a different grid");
    std::vector<PathRecord> out(req.n_paths);
    parallel_for(req.n_paths, req.workers, [&](std::size_t i) { out[i] = run_one(model, req, i); });
    return out;
}

std::size_t count_blow_ups(const std::vector<PathRecord>& records) {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const PathRecord& r) { return r.blow_up; }));
}

EnergyEstimate energy_estimate_check(const std::vector<PathRecord>& records) {
    std::vector<double> xs;
    xs.reserve(records.size());
    for (const auto& r : records)
        if (!r.blow_up) xs.push_back(r.own.total());
    if (xs.size() < 100)
        throw EstimationError("energy_estimate_check: insufficient samples (" + std::to_string(xs.size()) +
                              " usable paths, need 100)");
    EnergyEstimate e;
    e.estimate = mean_estimate(xs);
    e.n_blow_up = records.size() - xs.size();
    return e;
}

AffineGrowthReport energy_affine_sweep(const ModelSpec& model, const Field& shape, const std::vector<double>& norms,
                                       const SdeConfig& cfg, std::size_t n_paths, std::uint64_t seed, int workers) {
    if (norms.size() < 4) throw DomainError("energy_affine_sweep: need at least 4 initial-data norms");
    const double s = l2_norm(shape);
    if (!(s > 0.0)) throw DomainError("energy_affine_sweep: shape must be non-zero");
    AffineGrowthReport rep;
    std::vector<double> ys;
    for (double r : norms) {
        BatchRequest req;
        req.u0 = (r / s) * shape;
        req.cfg = cfg;
        req.base_seed = seed;
        req.n_paths = n_paths;
        req.workers = workers;
        rep.estimates.push_back(energy_estimate_check(run_batch(model, req)));
        rep.u0_norm_sq.push_back(r * r);
        ys.push_back(rep.estimates.back().estimate.mean);
    }
    rep.affine = poly_fit(rep.u0_norm_sq, ys, 1);
    rep.quadratic = poly_fit(rep.u0_norm_sq, ys, 2);
    const bool slope_ok = rep.affine.coeff[1] + 2.0 * rep.affine.std_error[1] >= 0.0;
    const bool intercept_ok = rep.affine.coeff[0] + 2.0 * rep.affine.std_error[0] >= 0.0;
    const bool curvature_ok = rep.quadratic.coeff[2] - 1.96 * rep.quadratic.std_error[2] <= 0.0;
    rep.pass = slope_ok && intercept_ok && curvature_ok;
    return rep;
}

bool ConvergenceTable::monotone_within_ci() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].ci.lo > rows[i - 1].ci.hi) return false;
    return true;
}

bool ConvergenceTable::endpoints_separated() const {
    if (rows.size() < 2) return false;
    return rows.back().ci.hi < rows.front().ci.lo;
}

ConvergenceTable uniform_convergence_experiment(const ModelSpec& model, const std::vector<Field>& u0_set,
                                                const std::vector<Control>& v_set, const std::vector<double>& eps_list,
                                                double eta, std::size_t n_paths, std::uint64_t seed, int workers) {
    if (u0_set.empty() || v_set.empty() || eps_list.empty())
        throw DomainError("uniform_convergence_experiment: empty initial-data, control or epsilon set");
    if (!(eta > 0.0)) throw DomainError("uniform_convergence_experiment: eta must be positive");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw DomainError("uniform_convergence_experiment: eps_list must decrease");
    const TimeGrid tg = v_set.front().timegrid();
    const double p = model.drift.p;

    // Skeleton references u_v for every cell.
    const std::size_t cells = u0_set.size() * v_set.size();
    std::vector<std::shared_ptr<const ReferenceSet>> refs(cells);
    parallel_for(cells, workers, [&](std::size_t c) {
        const std::size_t i = c / v_set.size(), j = c % v_set.size();
        auto sol = solve_skeleton(model, u0_set[i], v_set[j], tg);
        refs[c] = std::make_shared<ReferenceSet>(model.grid, tg, p, std::vector<Trajectory>{std::move(sol.trajectory)});
    });

    ConvergenceTable table;
    table.eta = eta;
    for (double eps : eps_list) {
        ConvergenceRow row;
        row.epsilon = eps;
        double worst = -1.0;
        for (std::size_t c = 0; c < cells; ++c) {
            BatchRequest req;
            req.u0 = u0_set[c / v_set.size()];
            req.cfg = SdeConfig{eps, Scheme::tamed_imex_em, tg, default_linf_guard};
            req.control = v_set[c % v_set.size()];
            req.references = refs[c];
            req.base_seed = seed;
            req.first_stream = c * n_paths;
            req.n_paths = n_paths;
            req.workers = workers;
            const auto records = run_batch(model, req);
            std::size_t hits = 0, used = 0;
            for (const auto& r : records) {
                if (r.blow_up) continue;
                ++used;
                if (r.to_reference[0].norm(PathNorm::full, p) > eta) ++hits;
            }
            row.n_blow_up += records.size() - used;
            if (used == 0) throw EstimationError("uniform_convergence_experiment: every path blew up");
            const double ph = static_cast<double>(hits) / static_cast<double>(used);
            if (ph > worst) {
                worst = ph;
                row.p_hat = ph;
                row.ci = wilson_interval(hits, used);
                row.worst_u0 = c / v_set.size();
                row.worst_control = c % v_set.size();
                row.n_used = used;
            }
        }
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace fracldp
