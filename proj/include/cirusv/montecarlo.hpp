#pragma once

#include "cirusv/kernel.hpp"
#include "cirusv/model.hpp"
#include "cirusv/riccati.hpp"
#include "cirusv/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace cirusv {

enum class Scheme { euler_full_truncation };

/// Simulation configuration. horizon/dt must be an integer number of
/// steps within 1e-9.
struct SimConfig {
    long n_paths = 0;
    double dt = 0;
    double horizon = 0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::euler_full_truncation;
};

/// Stored factor paths. `states[p]` holds the raw Euler iterates (they
/// may dip below zero; drift, diffusion, rates and payoffs always use
/// the positive part). integrated_rate(p, k) is the trapezoidal
/// accumulation of rho'X+ up to step k, nondecreasing along each path.
struct PathSet {
    SimConfig config;
    CirModel model;  ///< generating model, kept for provenance
    Vec x0;
    Vec times;                ///< length steps+1
    std::vector<Mat> states;  ///< n_paths matrices of shape (steps+1) x d
    Mat integrated_rate;      ///< n_paths x (steps+1)
};

struct McEstimate {
    double value = 0;
    double std_error = 0;
    long n = 0;
};

/// Number of steps implied by cfg; throws std::invalid_argument on any
/// config violation.
long validated_steps(const SimConfig& cfg);

/// Euler--Maruyama with full truncation:
///
///   X_{k+1} = X_k + (b + beta X_k+) dt + diag(sigma_i sqrt(X_{k,i}+)) sqrt(dt) xi_k.
///
/// Gaussian increments come from counter-based streams keyed by
/// (seed, path, step, component); results are bit-identical for any
/// thread count (set CIR_USV_THREADS to cap parallelism).
PathSet simulate_paths(const CirModel& model, const Vec& x0, const SimConfig& cfg);

/// Discounted-bond estimator: mean and standard error of
/// exp(-int_0^T r) across paths. T must be a grid time <= horizon.
McEstimate mc_bond_price(const PathSet& paths, double T);

/// Streaming variant: simulates on the fly without storing paths,
/// bit-identical to the PathSet route for equal (model, x0, cfg).
McEstimate mc_bond_price(const CirModel& model, const Vec& x0, const SimConfig& cfg, double T);

/// Discounted exponential claim exp(-int_0^t r + u'X_t).
McEstimate mc_exp_claim(const PathSet& paths, const Vec& u, double t);
McEstimate mc_exp_claim(const CirModel& model, const Vec& x0, const SimConfig& cfg, const Vec& u,
                        double t);

/// Analytic perturbation check along the first kernel direction xi:
/// prices the T-bond and the exponential claim exp(claim_v'Z) at
/// claim_t, at x0 and at x0 + delta xi, and returns the two absolute
/// differences (bond shift, claim shift). The bond shift must vanish
/// by construction of the kernel; the claim shift is positive exactly
/// when the model exhibits USV.
std::pair<double, double> mc_unspanned_invariance(const CirModel& model,
                                                  const KernelDecomposition& kd, const Vec& x0,
                                                  double delta, double T, const Vec& claim_v,
                                                  double claim_t);

/// Same with the default claim v = -(1,...,1), t = 1.
std::pair<double, double> mc_unspanned_invariance(const CirModel& model,
                                                  const KernelDecomposition& kd, const Vec& x0,
                                                  double delta, double T);

/// Per-step realized quadratic variation of log P(t, T) along the
/// paths, against the analytic functional B(T-t)' sigma(X)sigma(X)' B(T-t)
/// averaged over the same paths.
struct QvSeries {
    Vec times;     ///< step starts t_k, k = 0..K-1, t_K = T
    Vec realized;  ///< mean over paths of (delta log P)^2 / dt at t_k
    Vec analytic;  ///< mean over paths of B' sigma sigma' B at t_k
};

QvSeries realized_qv_log_bond(const PathSet& paths, const RiccatiSolution& sol, double T);
QvSeries realized_qv_log_bond(const CirModel& model, const Vec& x0, const SimConfig& cfg,
                              const RiccatiSolution& sol, double T);

/// Thread count used for path sweeps: CIR_USV_THREADS if set, else the
/// hardware concurrency.
int mc_threads();

}  // namespace cirusv
