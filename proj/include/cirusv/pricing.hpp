#pragma once

#include "cirusv/kernel.hpp"
#include "cirusv/model.hpp"
#include "cirusv/riccati.hpp"
#include "cirusv/types.hpp"

namespace cirusv {

/// Zero-coupon bond price F(tau, x) = exp(-A(tau) - B(tau)'x).
double bond_price(const CirModel& model, const RiccatiSolution& sol, double tau, const Vec& x);

/// r = rho'x.
double short_rate(const CirModel& model, const Vec& x);

/// Discounted exponential moment E_x[e^{-int_0^t r} e^{u'X_t}]
/// = exp(phi(t,u) + psi(t,u)'x). Throws NumericError if the transform
/// blows up before t.
double exp_claim_price(const CirModel& model, const Vec& u, double t, const Vec& x,
                       double bound = 1e8);

/// Loadings of the instantaneous log-price quadratic variation on the
/// term-structure factors Z and the unspanned factors U:
///
///   1/2 d<log P(., t+tau)>_t / dt = z_coeffs'Z_t + u_coeffs'U_t.
struct VolDecomposition {
    double tau = 0;
    Vec z_coeffs;  ///< length m
    Vec u_coeffs;  ///< length d-m
};

/// Re-expresses the exact functional x -> 1/2 B(tau)' sigma(x)sigma(x)' B(tau)
/// = sum_i 1/2 sigma2_i B_i(tau)^2 x_i in the (Z, U) coordinates by
/// solving (S; L)'(z; u) = c. The stacked map is invertible whenever S
/// and L are complementary; a singular stack raises NumericError.
VolDecomposition vol_decomposition(const CirModel& model, const KernelDecomposition& kd,
                                   const RiccatiSolution& sol, double tau);

}  // namespace cirusv
