#include "cirusv/pricing.hpp"

#include <cmath>
#include <sstream>

namespace cirusv {

namespace {

void check_state(const CirModel& model, const Vec& x, const char* context) {
    if (x.size() != model.d) throw std::invalid_argument(std::string(context) + ": x must have length d");
    if (x.size() > 0 && x.minCoeff() < 0.0)
        throw std::invalid_argument(std::string(context) + ": x must be componentwise nonnegative");
}

}  // namespace

double bond_price(const CirModel& model, const RiccatiSolution& sol, double tau, const Vec& x) {
    check_state(model, x, "bond_price");
    if (sol.dim() != model.d) throw std::invalid_argument("bond_price: solution dimension mismatch");
    return std::exp(-sol.eval_A(tau) - sol.eval_B(tau).dot(x));
}

double short_rate(const CirModel& model, const Vec& x) {
    check_state(model, x, "short_rate");
    return model.rho.dot(x);
}

double exp_claim_price(const CirModel& model, const Vec& u, double t, const Vec& x, double bound) {
    check_state(model, x, "exp_claim_price");
    const TransformSolution ts = extended_transform(model, u, t, bound);
    if (ts.blew_up) {
        std::ostringstream os;
        os << "exp_claim_price: transform escaped the bound " << ts.guard_bound << " at t = "
           << ts.blow_up_time << " (claim horizon t = " << t << ")";
        throw NumericError(os.str());
    }
    return std::exp(ts.phi + ts.psi.dot(x));
}

VolDecomposition vol_decomposition(const CirModel& model, const KernelDecomposition& kd,
                                   const RiccatiSolution& sol, double tau) {
    const int d = model.d;
    if (kd.S.cols() != d || sol.dim() != d)
        throw std::invalid_argument("vol_decomposition: dimension mismatch");

    const Vec b_tau = sol.eval_B(tau);
    const Vec c = (0.5 * model.sigma2.array() * b_tau.array().square()).matrix();

    Mat stacked(d, d);  // rows: S over L
    stacked.topRows(kd.m) = kd.S;
    stacked.bottomRows(d - kd.m) = kd.L;
    Eigen::FullPivLU<Mat> lu(stacked.transpose());
    if (!lu.isInvertible())
        throw NumericError("vol_decomposition: stacked (S; L) map is singular");
    const Vec w = lu.solve(c);

    VolDecomposition out;
    out.tau = tau;
    out.z_coeffs = w.head(kd.m);
    out.u_coeffs = w.tail(d - kd.m);
    return out;
}

}  // namespace cirusv
