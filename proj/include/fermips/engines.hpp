#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fermips/mpo.hpp"

namespace fermips {

// ---------------------------------------------------------------------------
// DMRG

struct SweepStage {
    long max_bond = 256;
    double noise = 0.0;
    int n_sweeps = 4;
};

struct SweepSchedule {
    std::vector<SweepStage> stages;
    double energy_tol = 1e-10;
    int max_total_sweeps = 100;
    double cutoff = 1e-20; // relative truncation cutoff per split

    void validate() const;
};

// warm-up stage at a small bond with noise, then the target bond noise-free
SweepSchedule default_schedule(long max_bond, int n_sweeps = 8);

struct SweepRecord {
    long max_bond = 0;
    double energy = 0.0;
    double max_discarded = 0.0;
};

struct DmrgResult {
    double energy = 0.0;
    MPSWavefunction psi;
    std::vector<SweepRecord> per_sweep;
};

DmrgResult dmrg(const MPOOperator &h, const MPSWavefunction &psi0,
                const SweepSchedule &schedule);

// least-squares line through (discarded_weight, energy), evaluated at zero
std::pair<double, double> extrapolate_to_zero_truncation(
    const std::vector<std::pair<double, double>> &points);

// ---------------------------------------------------------------------------
// Time evolution

enum class EvolveMethod { rk4, td_sweep };

struct EvolutionParams {
    double dt = 0.01;
    int n_steps = 1;
    EvolveMethod method = EvolveMethod::td_sweep;
    bool imaginary = false;
    // unset: defaults to `imaginary` (imaginary time renormalizes)
    std::optional<bool> normalize_each_step;
    CompressionPolicy policy{};

    void validate() const;
    bool renormalizes() const { return normalize_each_step.value_or(imaginary); }
};

struct StepRecord {
    double t = 0.0;
    double norm = 0.0;
    double energy = 0.0;
};

struct EvolveResult {
    MPSWavefunction psi;
    std::vector<StepRecord> steps;
};

EvolveResult evolve(const MPOOperator &h, const MPSWavefunction &psi,
                    const EvolutionParams &p);

// One two-site sweep step computing exp(z*H)|psi> to integrator accuracy;
// z = -i*dt for forward real time, -dt for imaginary time.
MPSWavefunction td_sweep_step(const MPOOperator &h, const MPSWavefunction &psi, cplx z,
                              const CompressionPolicy &policy);

struct AdiabaticPoint {
    double s = 0.0;
    double energy = 0.0;
    double overlap = 0.0;
};

struct AdiabaticResult {
    MPSWavefunction psi;
    std::vector<AdiabaticPoint> trajectory;
};

// H(s) = (1-s)*h0 + s*h1 with the linear schedule s = t/total_time; overlap
// column is |<reference|psi>| when a reference is supplied, else vs. psi0.
AdiabaticResult adiabatic_evolve(const MPOOperator &h0, const MPOOperator &h1,
                                 double total_time, const EvolutionParams &p,
                                 const MPSWavefunction &psi0,
                                 const MPSWavefunction *reference = nullptr);

// ---------------------------------------------------------------------------
// ADAPT-VQE

struct AdaptStopRule {
    double energy_tol = 1e-5; // cumulative change over energy_window iterations
    int energy_window = 3;
    double grad_tol = 1e-1; // stop when the pool gradient norm falls below
    int max_iters = 40;
};

struct AdaptState {
    std::vector<int> operators;
    std::vector<double> thetas;
    std::vector<double> energy_history;
    std::vector<double> gradient_norm_history;
    bool converged = false;
};

// non-redundant anti-Hermitized spin-conserving generalized singles and
// doubles pool, deterministic by index order
std::vector<FermionOperatorSum> adapt_pool(int n_sites);

// `progress`, when set, is invoked after every completed iteration.
AdaptState adapt_vqe(const MPOOperator &h, const std::vector<FermionOperatorSum> &pool,
                     const MPSWavefunction &psi_hf, const CompressionPolicy &policy,
                     const AdaptStopRule &stop,
                     const std::function<void(const AdaptState &)> &progress = {});

// ---------------------------------------------------------------------------
// Spectral norms

struct NormEstimate {
    double value = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

// A general (not necessarily Hermitian) map on states; power iteration runs
// on A^dag A, so both directions are required.
struct LinearMap {
    std::function<MPSWavefunction(const MPSWavefunction &)> apply;
    std::function<MPSWavefunction(const MPSWavefunction &)> apply_adjoint;
};

NormEstimate power_iteration_norm(const LinearMap &map, const MPSWavefunction &seed,
                                  int max_iter = 50, double tol = 1e-8);

// 2-norm of D = e^{-i(T+V)dt} - e^{-iT dt} e^{-iV dt} via power iteration;
// exponentials run through td_sweep with substeps <= dt/10.
NormEstimate trotter_error_norm(const MPOOperator &t_op, const MPOOperator &v_op, double dt,
                                const CompressionPolicy &policy, int iters = 40,
                                const MPSWavefunction *seed = nullptr);

// tau_norm = max_j sum_k |h1_jk|; nu_norm = max_j (sum of the eta largest
// |(jj|kk)| over k)
std::pair<double, double> particle_weighted_norms(const IntegralHamiltonian &h, int eta);

// ---------------------------------------------------------------------------
// Spectra

struct AutocorrPoint {
    double tau = 0.0;
    cplx c{0};
};

// C(tau) = <psi0| J e^{-i(H-E0)tau} J |psi0> on a uniform grid up to t_max
std::vector<AutocorrPoint> current_autocorrelation(const MPOOperator &h, const MPOOperator &j,
                                                   const MPSWavefunction &psi0, double e0,
                                                   const EvolutionParams &p, double t_max);

enum class SpectrumWindow { cosine, none };

// A(omega) = (1/n_sites) Re int_0^tmax dtau e^{i(omega+i gamma)tau} w(tau) C(tau),
// trapezoidal quadrature
std::vector<std::pair<double, double>> optical_spectrum(const std::vector<AutocorrPoint> &series,
                                                        double gamma, SpectrumWindow window,
                                                        const std::vector<double> &omega_grid,
                                                        int n_sites);

} // namespace fermips
