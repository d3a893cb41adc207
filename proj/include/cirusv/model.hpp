#pragma once

#include "cirusv/types.hpp"

#include <utility>
#include <vector>

namespace cirusv {

/// Multi-factor CIR short-rate model
///
///   dX = (b + beta X) dt + diag(sigma_i sqrt(X_i)) dW,   r = rho' X
///
/// on the state space R^d_+. Admissibility: b >= 0, sigma2 > 0,
/// rho >= 0 with rho != 0, and beta with nonnegative off-diagonals.
struct CirModel {
    int d = 0;
    Vec b;       ///< drift constants, length d
    Mat beta;    ///< d x d drift matrix
    Vec sigma2;  ///< squared volatilities, length d
    Vec rho;     ///< short-rate loadings, length d
};

/// Free parameters of the three-factor USV family. The remaining
/// entries (beta13, beta33, rho1) are derived, see usv_family_3f.
struct UsvFamilyParams {
    double beta11 = 0;  ///< requires beta22 < beta11 < 0
    double beta22 = 0;
    double beta23 = 0;  ///< requires > 0
    double rho2 = 0;    ///< requires > 0
};

/// Constraint-check result. ok is true iff violations is empty.
struct ValidationReport {
    bool ok = true;
    std::vector<std::pair<std::string, std::string>> violations;  ///< (field path, description)

    void add(std::string field, std::string what) {
        ok = false;
        violations.emplace_back(std::move(field), std::move(what));
    }
};

/// Checks every CirModel admissibility constraint and reports all
/// violations. Violations are data, not faults: never throws.
ValidationReport validate(const CirModel& model);

/// Checks the free-parameter constraints of the three-factor family.
ValidationReport validate_family(const UsvFamilyParams& p);

/// Builds the three-factor model with sigma_i^2 = 2, upper-triangular
/// beta and the derived entries
///
///   beta13 = 8 rho2/(beta11-beta22) + beta23 - 2 beta22
///   beta33 = beta11 + beta22 - (beta13+beta23)/2
///   rho1   = (beta11-beta22)(beta13-beta23-2 beta11)/8
///   rho    = (rho1, rho2, rho1+rho2).
///
/// The parameter region guarantees beta13 > 0, beta33 < 0, rho1 > 0;
/// these are asserted on the result. Throws std::invalid_argument
/// listing the violated constraints otherwise.
CirModel usv_family_3f(const UsvFamilyParams& p, const Vec& b);

/// Same with the default demo drift b = (0.1, 0.1, 0.1).
CirModel usv_family_3f(const UsvFamilyParams& p);

/// Evaluates the pair (gamma0, gamma1) that must vanish for family
/// members: with c_i = beta_i3 + beta33 - beta_ii and the common
/// theta = sqrt(beta_ii^2 + 4 rho_i),
///
///   gamma0 = 2 c1 rho1 (theta+beta22) + 2 c2 rho2 (theta+beta11) + 8 rho1 rho2
///   gamma1 = 4 c1 rho1 beta22 + 4 c2 rho2 beta11 + 16 rho1 rho2.
///
/// Requires d = 3 and the upper-triangular pattern of the family;
/// throws std::invalid_argument if theta1 != theta2 beyond 1e-12
/// (the identities presume a common theta).
std::pair<double, double> gamma_identities(const CirModel& model);

/// Rescales factors so that sigma_i^2 = 2 for every i. With
/// D = diag(2/sigma_i^2) the transformed model is
///
///   b~ = D b,  beta~ = D beta D^{-1},  rho~_i = rho_i sigma_i^2 / 2,
///
/// and bond prices are invariant at matched states x~ = D x.
/// Idempotent; returns the input unchanged when already normalized.
CirModel normalize_vols(const CirModel& model);

/// The diagonal scaling matrix used by normalize_vols.
Vec vol_scaling(const CirModel& model);

}  // namespace cirusv
