#pragma once

#include "cirusv/model.hpp"
#include "cirusv/types.hpp"

#include <vector>

namespace cirusv {

/// The quadratic Riccati map H(v) = -1/2 sigma2 o v o v + beta' v + rho
/// (o is the Hadamard product).
Vec h_map(const CirModel& model, const Vec& v);

/// Integration statistics of one adaptive solve.
struct StepMeta {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
    double max_local_error = 0.0;  ///< largest accepted scaled error estimate
};

/// One accepted integration step together with its interpolation
/// polynomial (the solver's dense output), valid on [t0, t0+h].
struct DenseSegment {
    double t0 = 0;
    double h = 0;
    Mat rcont;  ///< n_state x 5 coefficient block

    Vec eval(double t) const;
    Vec deriv(double t) const;
};

/// Solution (A, B) of
///
///   dA/dtau = b' B,   A(0) = 0,
///   dB/dtau = H(B),   B(0) = 0,
///
/// sampled on a uniform tau-grid, plus the solver's dense-output
/// segments for evaluation at arbitrary tau in [0, tau_max].
class RiccatiSolution {
public:
    RiccatiSolution(Vec tau_grid, Vec A, Mat B, std::vector<DenseSegment> segments, StepMeta meta);

    const Vec& tau_grid() const { return tau_grid_; }
    const Vec& A() const { return A_; }
    const Mat& B() const { return B_; }  ///< grid-length x d, row k is B(tau_k)'
    const StepMeta& step_meta() const { return meta_; }
    double tau_max() const { return tau_grid_[tau_grid_.size() - 1]; }
    int dim() const { return static_cast<int>(B_.cols()); }

    /// A(tau) via dense output; throws std::out_of_range off [0, tau_max].
    double eval_A(double tau) const;
    /// B(tau) via dense output.
    Vec eval_B(double tau) const;
    /// dB/dtau(tau) from the interpolant (for residual checks).
    Vec eval_B_deriv(double tau) const;

private:
    const DenseSegment& segment_at(double tau) const;

    Vec tau_grid_;
    Vec A_;
    Mat B_;
    std::vector<DenseSegment> segments_;  // contiguous in t, covering [0, tau_max]
    StepMeta meta_;
};

/// Solver knobs. The defaults are the tolerances the library is
/// validated at; loosen only for exploratory work.
struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = 0.0;  ///< 0 = span/10
    long max_steps = 1000000;
};

/// Integrates the Riccati system with an adaptive embedded
/// Dormand-Prince 5(4) pair and returns (A, B) on a uniform grid of
/// n_points over [0, tau_max]. Throws NumericError on step-size
/// underflow (cannot happen from B(0)=0 under admissible parameters,
/// but guarded anyway).
RiccatiSolution solve_riccati(const CirModel& model, double tau_max, int n_points,
                              const OdeOptions& opts = {});

/// Closed-form scalar solution with theta = sqrt(beta_ii^2 + 4 rho_i):
///
///   B_i(tau) = 2 rho_i (e^{theta tau} - 1) / ((theta-beta_ii)(e^{theta tau}-1) + 2 theta),
///
/// evaluated through e^{-theta tau} so large tau cannot overflow.
/// Throws std::domain_error when beta_ii^2 + 4 rho_i <= 0.
double closed_form_scalar_b(double beta_ii, double rho_i, double tau);

/// Result of the extended affine transform started from u.
struct TransformSolution {
    double t = 0;
    Vec u;
    double phi = 0;
    Vec psi;
    bool blew_up = false;
    double blow_up_time = 0;    ///< escape time when blew_up
    double guard_bound = 0;     ///< the ||psi||_inf bound that was enforced
    StepMeta meta;
};

/// Integrates the transform system
///
///   dphi/dtau = b' psi,      phi(0) = 0,
///   dpsi/dtau = -H(-psi),    psi(0) = u,
///
/// so that phi(t,0) = -A(t), psi(t,0) = -B(t), and
/// E_x[e^{-int_0^t r} e^{u'X_t}] = e^{phi(t,u) + psi(t,u)'x} wherever
/// the left side is finite. If ||psi||_inf escapes `bound` before t the
/// result carries blew_up = true with the escape time; blow-up is data,
/// not a fault.
TransformSolution extended_transform(const CirModel& model, const Vec& u, double t,
                                     double bound = 1e8, const OdeOptions& opts = {});

}  // namespace cirusv
