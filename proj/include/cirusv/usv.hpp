#pragma once

#include "cirusv/kernel.hpp"
#include "cirusv/model.hpp"
#include "cirusv/types.hpp"

#include <vector>

namespace cirusv {

/// Exact expansion of the polynomial v -> xi' H(S'v) for one kernel
/// basis vector xi:
///
///   constant   xi' rho           (always ~0: rho lies in the row space of S)
///   linear     w = S beta xi
///   quadratic  M_jk = -1/2 sum_i xi_i sigma2_i S_ji S_ki.
struct PolyCoefficients {
    double constant = 0;
    Vec linear;     ///< length m
    Mat quadratic;  ///< m x m, symmetric
};

/// USV verdict with the explicit witnessing data: the model exhibits
/// USV iff some coefficient of some p_xi is nonzero, i.e. iff the
/// Riccati map H does not leave the row space of S invariant.
struct UsvCertificate {
    bool usv = false;
    int m = 0;
    std::vector<PolyCoefficients> coefficients;  ///< one per kernel basis vector
    double max_abs_coefficient = 0;
    double tol = 0;            ///< relative tolerance requested
    double tol_effective = 0;  ///< tol * max(1, |beta|, |sigma2|, |rho|)
    bool has_witness = false;
    Vec witness;            ///< v* maximizing ||L H(S'v)||_inf over the probe set
    double witness_value = 0;
};

/// Decides USV by expanding p_xi(v) = xi' H(S'v) exactly for every
/// kernel basis vector xi (columns of kd.U_basis) and testing the
/// coefficients against tol * max(1, |beta|_inf, |sigma2|_inf,
/// |rho|_inf). The witness point is picked from {e_j} u {e_j + e_k},
/// a determining set for quadratics.
UsvCertificate usv_certificate(const CirModel& model, const KernelDecomposition& kd,
                               double tol = 1e-8);

/// Unspanned component ||L psi(t, S'v)||_inf of the price-gradient
/// direction of the claim exp(v'Z_t): zero means the claim is
/// replicable with bonds, a positive value quantifies incompleteness.
/// Throws NumericError naming the escape time if the transform blows
/// up before t.
double replication_residual(const CirModel& model, const KernelDecomposition& kd, const Vec& v,
                            double t);

}  // namespace cirusv
