#include "cirusv/model.hpp"

#include <cmath>
#include <sstream>

namespace cirusv {

namespace {

std::string idx(const char* name, int i) {
    std::ostringstream os;
    os << name << "[" << i << "]";
    return os.str();
}

std::string idx2(const char* name, int i, int j) {
    std::ostringstream os;
    os << name << "[" << i << "][" << j << "]";
    return os.str();
}

void throw_if_invalid(const ValidationReport& report, const char* context) {
    if (report.ok) return;
    std::ostringstream os;
    os << context << ":";
    for (const auto& [field, what] : report.violations) os << " " << field << ": " << what << ";";
    throw std::invalid_argument(os.str());
}

}  // namespace

ValidationReport validate(const CirModel& model) {
    ValidationReport report;
    if (model.d < 1) {
        report.add("d", "factor count must be >= 1");
        return report;  // shapes below are meaningless
    }
    const int d = model.d;
    if (model.b.size() != d) report.add("b", "length must equal d");
    if (model.sigma2.size() != d) report.add("sigma2", "length must equal d");
    if (model.rho.size() != d) report.add("rho", "length must equal d");
    if (model.beta.rows() != d || model.beta.cols() != d) report.add("beta", "shape must be d x d");
    if (!report.ok) return report;

    for (int i = 0; i < d; ++i) {
        if (!(model.b[i] >= 0.0)) report.add(idx("b", i), "must be >= 0");
        if (!(model.sigma2[i] > 0.0)) report.add(idx("sigma2", i), "must be > 0");
        if (!(model.rho[i] >= 0.0)) report.add(idx("rho", i), "must be >= 0");
        for (int j = 0; j < d; ++j) {
            if (i != j && !(model.beta(i, j) >= 0.0))
                report.add(idx2("beta", i, j), "off-diagonal must be >= 0");
        }
    }
    if (!(model.rho.maxCoeff() > 0.0)) report.add("rho", "must be nonzero");
    return report;
}

ValidationReport validate_family(const UsvFamilyParams& p) {
    ValidationReport report;
    if (!(p.beta11 < 0.0)) report.add("beta11", "must be < 0");
    if (!(p.beta22 < p.beta11)) report.add("beta22", "beta22 < beta11 required");
    if (!(p.beta23 > 0.0)) report.add("beta23", "must be > 0");
    if (!(p.rho2 > 0.0)) report.add("rho2", "must be > 0");
    return report;
}

CirModel usv_family_3f(const UsvFamilyParams& p, const Vec& b) {
    throw_if_invalid(validate_family(p), "usv_family_3f");
    if (b.size() != 3) throw std::invalid_argument("usv_family_3f: b must have length 3");
    if (!(b.minCoeff() >= 0.0)) throw std::invalid_argument("usv_family_3f: b must be >= 0");

    const double beta13 = 8.0 * p.rho2 / (p.beta11 - p.beta22) + p.beta23 - 2.0 * p.beta22;
    const double beta33 = p.beta11 + p.beta22 - 0.5 * (beta13 + p.beta23);
    const double rho1 = 0.125 * (p.beta11 - p.beta22) * (beta13 - p.beta23 - 2.0 * p.beta11);

    CirModel model;
    model.d = 3;
    model.b = b;
    model.beta = Mat::Zero(3, 3);
    model.beta(0, 0) = p.beta11;
    model.beta(0, 2) = beta13;
    model.beta(1, 1) = p.beta22;
    model.beta(1, 2) = p.beta23;
    model.beta(2, 2) = beta33;
    model.sigma2 = Vec::Constant(3, 2.0);
    model.rho = Vec(3);
    model.rho << rho1, p.rho2, rho1 + p.rho2;

    // Guaranteed by the parameter region; cheap to verify.
    if (!(beta13 > 0.0 && beta33 < 0.0 && rho1 > 0.0))
        throw std::invalid_argument("usv_family_3f: derived entries violate beta13>0, beta33<0, rho1>0");
    return model;
}

CirModel usv_family_3f(const UsvFamilyParams& p) {
    return usv_family_3f(p, Vec::Constant(3, 0.1));
}

std::pair<double, double> gamma_identities(const CirModel& model) {
    throw_if_invalid(validate(model), "gamma_identities");
    if (model.d != 3) throw std::invalid_argument("gamma_identities: requires d = 3");
    const Mat& beta = model.beta;
    if (beta(1, 0) != 0.0 || beta(2, 0) != 0.0 || beta(2, 1) != 0.0)
        throw std::invalid_argument("gamma_identities: beta must be upper-triangular");

    const double theta1 = std::sqrt(beta(0, 0) * beta(0, 0) + 4.0 * model.rho[0]);
    const double theta2 = std::sqrt(beta(1, 1) * beta(1, 1) + 4.0 * model.rho[1]);
    if (std::abs(theta1 - theta2) > 1e-12 * std::max(1.0, std::max(theta1, theta2)))
        throw std::invalid_argument("gamma_identities: theta1 != theta2, identities need a common theta");

    const double theta = theta1;
    const double c1 = beta(0, 2) + beta(2, 2) - beta(0, 0);
    const double c2 = beta(1, 2) + beta(2, 2) - beta(1, 1);
    const double rho1 = model.rho[0];
    const double rho2 = model.rho[1];
    const double gamma0 = 2.0 * c1 * rho1 * (theta + beta(1, 1)) + 2.0 * c2 * rho2 * (theta + beta(0, 0)) +
                          8.0 * rho1 * rho2;
    const double gamma1 = 4.0 * c1 * rho1 * beta(1, 1) + 4.0 * c2 * rho2 * beta(0, 0) + 16.0 * rho1 * rho2;
    return {gamma0, gamma1};
}

Vec vol_scaling(const CirModel& model) {
    return (2.0 / model.sigma2.array()).matrix();
}

CirModel normalize_vols(const CirModel& model) {
    throw_if_invalid(validate(model), "normalize_vols");
    if ((model.sigma2.array() == 2.0).all()) return model;

    const Vec scale = vol_scaling(model);  // D = diag(2/sigma_i^2)
    CirModel out = model;
    out.b = scale.asDiagonal() * model.b;
    out.beta = scale.asDiagonal() * model.beta * scale.cwiseInverse().asDiagonal();
    out.rho = model.rho.cwiseQuotient(scale);
    out.sigma2 = Vec::Constant(model.d, 2.0);
    return out;
}

}  // namespace cirusv
