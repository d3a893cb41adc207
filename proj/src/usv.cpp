#include "cirusv/usv.hpp"

#include "cirusv/riccati.hpp"

#include <cmath>
#include <sstream>

namespace cirusv {

UsvCertificate usv_certificate(const CirModel& model, const KernelDecomposition& kd, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("usv_certificate: tol must be > 0");
    if (kd.S.cols() != model.d)
        throw std::invalid_argument("usv_certificate: decomposition does not match model dimension");

    UsvCertificate cert;
    cert.m = kd.m;
    cert.tol = tol;
    cert.tol_effective =
        tol * std::max({1.0, model.beta.lpNorm<Eigen::Infinity>(),
                        model.sigma2.lpNorm<Eigen::Infinity>(), model.rho.lpNorm<Eigen::Infinity>()});

    const int m = kd.m;
    const int n_kernel = model.d - m;
    for (int c = 0; c < n_kernel; ++c) {
        const Vec xi = kd.U_basis.col(c);
        PolyCoefficients pc;
        pc.constant = xi.dot(model.rho);
        pc.linear = kd.S * (model.beta * xi);
        pc.quadratic = -0.5 * kd.S * (model.sigma2.array() * xi.array()).matrix().asDiagonal() *
                       kd.S.transpose();
        double local_max = std::abs(pc.constant);
        local_max = std::max(local_max, pc.linear.lpNorm<Eigen::Infinity>());
        local_max = std::max(local_max, pc.quadratic.lpNorm<Eigen::Infinity>());
        cert.max_abs_coefficient = std::max(cert.max_abs_coefficient, local_max);
        cert.coefficients.push_back(std::move(pc));
    }
    cert.usv = cert.max_abs_coefficient > cert.tol_effective;

    if (n_kernel > 0) {
        // Probe points e_j and e_j + e_k determine a quadratic uniquely.
        std::vector<Vec> probes;
        for (int j = 0; j < m; ++j) probes.push_back(Vec::Unit(m, j));
        for (int j = 0; j < m; ++j)
            for (int k = j; k < m; ++k) probes.push_back(Vec::Unit(m, j) + Vec::Unit(m, k));
        for (const Vec& v : probes) {
            const Vec h = h_map(model, kd.S.transpose() * v);
            double val = 0.0;
            for (int c = 0; c < n_kernel; ++c) val = std::max(val, std::abs(kd.U_basis.col(c).dot(h)));
            if (!cert.has_witness || val > cert.witness_value) {
                cert.has_witness = true;
                cert.witness = v;
                cert.witness_value = val;
            }
        }
    }
    return cert;
}

double replication_residual(const CirModel& model, const KernelDecomposition& kd, const Vec& v,
                            double t) {
    if (v.size() != kd.m) throw std::invalid_argument("replication_residual: v must have length m");
    const TransformSolution ts = extended_transform(model, kd.S.transpose() * v, t);
    if (ts.blew_up) {
        std::ostringstream os;
        os << "replication_residual: transform escaped the bound " << ts.guard_bound << " at t = "
           << ts.blow_up_time << " (before t = " << t << ")";
        throw NumericError(os.str());
    }
    if (kd.L.rows() == 0) return 0.0;
    return (kd.L * ts.psi).lpNorm<Eigen::Infinity>();
}

}  // namespace cirusv
