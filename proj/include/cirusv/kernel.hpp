#pragma once

#include "cirusv/model.hpp"
#include "cirusv/riccati.hpp"
#include "cirusv/types.hpp"

namespace cirusv {

/// Decomposition of the state space along the term-structure kernel
/// U = intersection over tau of ker B(tau)'.
///
/// m term-structure factors Z = S X, d-m unspanned factors U = L X.
/// Invariants (up to numerical tolerance): S * U_basis = 0,
/// L * S' = 0, S * Q = I_m.
struct KernelDecomposition {
    int m = 0;            ///< number of term-structure factors
    Mat U_basis;          ///< d x (d-m), orthonormal columns spanning the kernel
    Mat S;                ///< m x d, ker S = kernel
    Mat L;                ///< (d-m) x d, range of L' = kernel
    Mat Q;                ///< d x m, S'(SS')^{-1}, so B'QS = B'
    Vec singular_values;  ///< decision spectrum (empty for analytic routes)
    double rank_tol = 0;  ///< relative threshold used on the spectrum
    bool near_degenerate = false;  ///< spectrum has values within 10x of the threshold
};

/// Numerical kernel extraction: stacks B(tau_k)' for n_samples grid
/// points on [0, tau_max] and thresholds the SVD spectrum at
/// rank_tol * sigma_max. Rows of S and columns of U_basis are
/// orthonormal right singular vectors with the first nonzero component
/// made positive, so results are deterministic.
KernelDecomposition term_structure_kernel(const CirModel& model, double tau_max = 30.0,
                                          int n_samples = 200, double rank_tol = 1e-9);

/// Closed-form kernel for diagonal-drift models: indices are
/// partitioned by exact equality (tolerance 1e-12) of the pairs
/// (rho_i, beta_ii); S is the normalized class indicator and the kernel
/// is spanned by within-class difference vectors.
///
/// Requires beta diagonal, sigma_i^2 = 2 (normalize_vols first) and
/// rho_i > 0 for all i; throws std::invalid_argument otherwise.
KernelDecomposition diagonal_kernel(const CirModel& model);

/// Builds the decomposition from explicitly chosen maps S and L
/// (rows need not be orthonormal). Requires full row ranks,
/// m + (d-m) = d, and L S' = 0.
KernelDecomposition kernel_from_maps(const Mat& S, const Mat& L);

/// z = S x.
Vec reduce_state(const KernelDecomposition& kd, const Vec& x);

/// Reduced-form bond price exp(-A(tau) - B(tau)' Q z); equals the full
/// price F(tau, x) for every x with S x = z.
double reduced_bond_price(const KernelDecomposition& kd, const RiccatiSolution& sol, double tau,
                          const Vec& z);

/// Largest principal angle between the column spans of two bases with
/// equal column counts (0 for two empty bases).
double principal_angle(const Mat& basis_a, const Mat& basis_b);

}  // namespace cirusv
