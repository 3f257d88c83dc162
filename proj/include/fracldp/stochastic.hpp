#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fracldp/dynamics.hpp"
#include "fracldp/model.hpp"
#include "fracldp/stats.hpp"

namespace fracldp {

/// K independent Brownian motions sampled on a TimeGrid. The stream is a pure function of
/// (seed, stream_id): an mt19937_64 seeded through std::seed_seq with both words of each.
class WienerDriver {
public:
    WienerDriver(int n_modes, std::uint64_t seed, std::uint64_t stream_id);

    int n_modes() const { return n_modes_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// n_steps x K increments, N(0, dt) each, row n covering [t_n, t_{n+1}).
    std::vector<double> increments(const TimeGrid& tg) const;

private:
    int n_modes_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

enum class Scheme { tamed_imex_em };

struct SdeConfig {
    double epsilon = 1.0;
    Scheme scheme = Scheme::tamed_imex_em;
    TimeGrid timegrid;
    double linf_guard = default_linf_guard;

    void validate() const;
};

struct PathSample {
    Trajectory trajectory;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    std::vector<StepDiagnostics> diagnostics;
};

/// du = [-(-Delta)^alpha u - F(u) + g] dt + sqrt(eps) sigma(t, u) dW.
PathSample simulate_sde(const ModelSpec& model, const Field& u0, const SdeConfig& cfg, const WienerDriver& driver);

/// du = [-(-Delta)^alpha u - F(u) + g + sigma(t, u) v] dt + sqrt(eps) sigma(t, u) dW.
PathSample simulate_shifted(const ModelSpec& model, const Field& u0, const SdeConfig& cfg, const Control& v,
                            const WienerDriver& driver);

/// Fixed trajectories with cached spectra, used to measure path distances of many samples.
class ReferenceSet {
public:
    ReferenceSet(const GridSpec& grid, const TimeGrid& tg, double p, std::vector<Trajectory> paths);

    std::size_t size() const { return paths_.size(); }
    const Trajectory& path(std::size_t i) const { return paths_[i]; }
    const GridSpec& grid() const { return grid_; }
    const TimeGrid& timegrid() const { return tg_; }
    double p() const { return p_; }
    std::span<const std::complex<double>> spectrum(std::size_t i, int step) const;

private:
    GridSpec grid_;
    TimeGrid tg_;
    double p_;
    std::vector<Trajectory> paths_;
    std::vector<std::complex<double>> spectra_;
};

/// Summary of one simulated path.
struct PathRecord {
    std::uint64_t stream_id = 0;
    bool blow_up = false;
    int blow_up_step = -1;
    /// sup ||u||^2, int ||u||_V^2, int ||u||_p^p and ||u(T)||^2 of the path itself.
    PathEnergy own;
    /// Distances u - reference_j, one entry per reference path.
    std::vector<PathEnergy> to_reference;
    /// <u(T), probe_j> for each requested probe.
    std::vector<double> terminal_probes;
};

struct BatchRequest {
    Field u0;
    SdeConfig cfg;
    std::optional<Control> control;
    std::shared_ptr<const ReferenceSet> references;
    std::vector<Field> probes;
    std::uint64_t base_seed = 0;
    std::uint64_t first_stream = 0;
    std::size_t n_paths = 0;
    int workers = 1;
};

/// Path i uses stream_id first_stream + i. Blow-ups are recorded, not thrown. Records are
/// returned in stream order regardless of the worker count.
std::vector<PathRecord> run_batch(const ModelSpec& model, const BatchRequest& request);

std::size_t count_blow_ups(const std::vector<PathRecord>& records);

struct EnergyEstimate {
    /// Batch mean of sup ||u||^2 + int ||u||_V^2 + int ||u||_p^p over paths without blow-up.
    MeanEstimate estimate;
    std::size_t n_blow_up = 0;
};

/// Throws EstimationError when fewer than 100 usable paths remain.
EnergyEstimate energy_estimate_check(const std::vector<PathRecord>& records);

struct AffineGrowthReport {
    std::vector<double> u0_norm_sq;
    std::vector<EnergyEstimate> estimates;
    PolyFit affine;
    PolyFit quadratic;
    bool pass = false;
};

/// Energy estimates for u0 = r * shape / ||shape|| over the given norms r, regressed on r^2.
/// Passes when slope and intercept are non-negative (within two standard errors) and the
/// quadratic coefficient is not positive beyond its 95 % interval.
AffineGrowthReport energy_affine_sweep(const ModelSpec& model, const Field& shape, const std::vector<double>& norms,
                                       const SdeConfig& cfg, std::size_t n_paths, std::uint64_t seed, int workers = 1);

struct ConvergenceRow {
    double epsilon = 0.0;
    double p_hat = 0.0;
    Interval ci;
    std::size_t worst_u0 = 0;
    std::size_t worst_control = 0;
    std::size_t n_blow_up = 0;
    std::size_t n_used = 0;
};

struct ConvergenceTable {
    double eta = 0.0;
    std::vector<ConvergenceRow> rows;

    /// p_hat non-increasing along the (decreasing) eps list up to CI overlap.
    bool monotone_within_ci() const;
    /// Wilson intervals at the smallest and largest epsilon are disjoint with the smaller p_hat last.
    bool endpoints_separated() const;
};

/// For each epsilon: max over (u0, v) of the fraction of paths with ||u^eps_v - u_v|| > eta in the
/// full path norm. Cell (i, j) uses streams (i * |v_set| + j) * n_paths + k for every epsilon.
ConvergenceTable uniform_convergence_experiment(const ModelSpec& model, const std::vector<Field>& u0_set,
                                                const std::vector<Control>& v_set, const std::vector<double>& eps_list,
                                                double eta, std::size_t n_paths, std::uint64_t seed,
                                                int workers = 1);

}  // namespace fracldp
