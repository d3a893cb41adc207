#include "cirusv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace cirusv {

namespace {

// Flips v so its first component of non-negligible magnitude is positive.
void canonical_sign(Eigen::Ref<Vec> v) {
    const double scale = v.lpNorm<Eigen::Infinity>();
    if (scale == 0.0) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-10 * scale) {
            if (v[i] < 0.0) v = -v;
            return;
        }
    }
}

Mat orthonormal_columns(const Mat& a) {
    if (a.cols() == 0) return Mat(a.rows(), 0);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < q.cols(); ++j) canonical_sign(q.col(j));
    return q;
}

}  // namespace

KernelDecomposition term_structure_kernel(const CirModel& model, double tau_max, int n_samples,
                                          double rank_tol) {
    if (!(tau_max > 0.0)) throw std::invalid_argument("term_structure_kernel: tau_max must be > 0");
    if (n_samples < model.d)
        throw std::invalid_argument("term_structure_kernel: n_samples must be >= d");
    if (!(rank_tol > 0.0)) throw std::invalid_argument("term_structure_kernel: rank_tol must be > 0");

    const RiccatiSolution sol = solve_riccati(model, tau_max, n_samples);
    const int d = model.d;

    // Rows are B(tau_k)': the row space spans the kernel's orthogonal
    // complement, the null space is the kernel itself.
    Eigen::JacobiSVD<Mat> svd(sol.B(), Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    const double sigma_max = sv.size() > 0 ? sv[0] : 0.0;

    int m = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > rank_tol * sigma_max) ++m;

    KernelDecomposition kd;
    kd.m = m;
    kd.singular_values = sv;
    kd.rank_tol = rank_tol;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        const double rel = sigma_max > 0.0 ? sv[i] / sigma_max : 0.0;
        if (rel > rank_tol / 10.0 && rel < rank_tol * 10.0) kd.near_degenerate = true;
    }

    Mat v = svd.matrixV();  // d x d since n_samples >= d
    for (Eigen::Index j = 0; j < v.cols(); ++j) canonical_sign(v.col(j));
    kd.S = v.leftCols(m).transpose();
    kd.U_basis = v.rightCols(d - m);
    kd.L = kd.U_basis.transpose();
    kd.Q = kd.S.transpose();  // orthonormal rows
    return kd;
}

KernelDecomposition diagonal_kernel(const CirModel& model) {
    const ValidationReport report = validate(model);
    if (!report.ok) throw std::invalid_argument("diagonal_kernel: invalid model");
    const int d = model.d;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j && model.beta(i, j) != 0.0)
                throw std::invalid_argument("diagonal_kernel: beta must be diagonal");
    if (!(model.sigma2.array() == 2.0).all())
        throw std::invalid_argument("diagonal_kernel: model must be normalized (sigma2 = 2)");
    if (!(model.rho.array() > 0.0).all())
        throw std::invalid_argument("diagonal_kernel: requires rho_i > 0 for all i");

    // Partition indices by equality of the parameter pair (rho_i, beta_ii).
    constexpr double pair_tol = 1e-12;
    std::vector<std::vector<int>> classes;
    for (int i = 0; i < d; ++i) {
        bool placed = false;
        for (auto& cls : classes) {
            const int j = cls.front();
            if (std::abs(model.rho[i] - model.rho[j]) <= pair_tol &&
                std::abs(model.beta(i, i) - model.beta(j, j)) <= pair_tol) {
                cls.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) classes.push_back({i});
    }

    const int m = static_cast<int>(classes.size());
    KernelDecomposition kd;
    kd.m = m;
    kd.S = Mat::Zero(m, d);
    for (int k = 0; k < m; ++k) {
        const double w = 1.0 / std::sqrt(static_cast<double>(classes[k].size()));
        for (int i : classes[k]) kd.S(k, i) = w;
    }

    // Within-class difference vectors span the kernel.
    Mat diffs = Mat::Zero(d, d - m);
    int col = 0;
    for (const auto& cls : classes) {
        for (std::size_t j = 1; j < cls.size(); ++j) {
            diffs(cls[0], col) = 1.0;
            diffs(cls[j], col) = -1.0;
            ++col;
        }
    }
    kd.U_basis = orthonormal_columns(diffs);
    kd.L = kd.U_basis.transpose();
    kd.Q = kd.S.transpose();  // rows of S are orthonormal by construction
    kd.rank_tol = pair_tol;
    return kd;
}

KernelDecomposition kernel_from_maps(const Mat& S, const Mat& L) {
    const int d = static_cast<int>(S.cols());
    const int m = static_cast<int>(S.rows());
    if (L.cols() != d || L.rows() != d - m)
        throw std::invalid_argument("kernel_from_maps: S (m x d) and L ((d-m) x d) required");
    const Mat SSt = S * S.transpose();
    Eigen::FullPivLU<Mat> lu(SSt);
    if (!lu.isInvertible()) throw std::invalid_argument("kernel_from_maps: S must have full row rank");
    const double cross = L.rows() > 0 ? (L * S.transpose()).lpNorm<Eigen::Infinity>() : 0.0;
    const double scale = std::max(1.0, S.lpNorm<Eigen::Infinity>() * L.lpNorm<Eigen::Infinity>());
    if (cross > 1e-10 * scale)
        throw std::invalid_argument("kernel_from_maps: rows of L must be orthogonal to rows of S");

    KernelDecomposition kd;
    kd.m = m;
    kd.S = S;
    kd.L = L;
    kd.Q = S.transpose() * lu.inverse();
    kd.U_basis = orthonormal_columns(L.transpose());
    return kd;
}

Vec reduce_state(const KernelDecomposition& kd, const Vec& x) {
    if (x.size() != kd.S.cols()) throw std::invalid_argument("reduce_state: x must have length d");
    return kd.S * x;
}

double reduced_bond_price(const KernelDecomposition& kd, const RiccatiSolution& sol, double tau,
                          const Vec& z) {
    if (z.size() != kd.m) throw std::invalid_argument("reduced_bond_price: z must have length m");
    return std::exp(-sol.eval_A(tau) - sol.eval_B(tau).dot(kd.Q * z));
}

double principal_angle(const Mat& basis_a, const Mat& basis_b) {
    if (basis_a.cols() != basis_b.cols())
        throw std::invalid_argument("principal_angle: subspace dimensions differ");
    if (basis_a.cols() == 0) return 0.0;
    const Mat qa = orthonormal_columns(basis_a);
    const Mat qb = orthonormal_columns(basis_b);
    Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb);
    const double c = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
    return std::acos(c);
}

}  // namespace cirusv
