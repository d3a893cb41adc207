#include "cirusv/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace cirusv {

Vec h_map(const CirModel& model, const Vec& v) {
    return (-0.5 * model.sigma2.array() * v.array() * v.array()).matrix() +
           model.beta.transpose() * v + model.rho;
}

namespace {

// Dormand-Prince 5(4) tableau, FSAL form.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights (Hairer, Norsett, Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

using Rhs = std::function<Vec(const Vec&)>;

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double rtol, double atol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double q = err[i] / sc;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step(const Rhs& f, const Vec& y0, const Vec& f0, double span, double rtol,
                    double atol) {
    double d0 = 0.0, d1n = 0.0;
    for (Eigen::Index i = 0; i < y0.size(); ++i) {
        const double sc = atol + rtol * std::abs(y0[i]);
        d0 += (y0[i] / sc) * (y0[i] / sc);
        d1n += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0);
    d1n = std::sqrt(d1n);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, span);

    const Vec y1 = y0 + h0 * f0;
    const Vec f1 = f(y1);
    double d2 = 0.0;
    for (Eigen::Index i = 0; i < y0.size(); ++i) {
        const double sc = atol + rtol * std::abs(y0[i]);
        const double q = (f1[i] - f0[i]) / sc;
        d2 += q * q;
    }
    d2 = std::sqrt(d2) / h0;

    const double dmax = std::max(d1n, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, span});
}

struct IntegrateOutcome {
    StepMeta meta;
    bool completed = false;  // reached t_end (false: stopped by callback or failure)
    bool failed = false;     // step-size underflow
    double t_reached = 0.0;
    Vec y;
};

// Integrates y' = f(y) from (0, y0) to t_end, handing every accepted
// step's dense-output segment to on_segment. on_segment returning
// false stops the integration at that step's endpoint.
IntegrateOutcome integrate_dopri5(const Rhs& f, Vec y0, double t_end, const OdeOptions& opts,
                                  const std::function<bool(const DenseSegment&)>& on_segment) {
    IntegrateOutcome out;
    const Eigen::Index n = y0.size();
    double t = 0.0;
    Vec y = std::move(y0);
    Vec k1 = f(y);
    out.meta.rhs_evals = 1;

    const double hmax = opts.max_step > 0.0 ? opts.max_step : t_end / 10.0;
    double h = std::min(initial_step(f, y, k1, t_end, opts.rtol, opts.atol), hmax);
    out.meta.rhs_evals += 1;
    const double hmin = 16.0 * std::numeric_limits<double>::epsilon() * t_end;

    bool rejected_last = false;
    while (t < t_end) {
        if (out.meta.accepted + out.meta.rejected >= opts.max_steps) {
            out.failed = true;
            break;
        }
        if (h < hmin) {
            out.failed = true;
            break;
        }
        bool last = false;
        if (t + 1.01 * h >= t_end) {
            h = t_end - t;
            last = true;
        }

        const Vec k2 = f(y + h * (a21 * k1));
        const Vec k3 = f(y + h * (a31 * k1 + a32 * k2));
        const Vec k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vec k7 = f(y1);  // FSAL
        out.meta.rhs_evals += 6;

        const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double errn = error_norm(err, y, y1, opts.rtol, opts.atol);

        if (errn <= 1.0) {
            DenseSegment seg;
            seg.t0 = t;
            seg.h = h;
            seg.rcont.resize(n, 5);
            const Vec ydiff = y1 - y;
            const Vec bspl = h * k1 - ydiff;
            seg.rcont.col(0) = y;
            seg.rcont.col(1) = ydiff;
            seg.rcont.col(2) = bspl;
            seg.rcont.col(3) = ydiff - h * k7 - bspl;
            seg.rcont.col(4) = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            out.meta.accepted += 1;
            out.meta.max_local_error = std::max(out.meta.max_local_error, errn);
            t = last ? t_end : t + h;
            y = y1;
            k1 = k7;

            const bool keep_going = on_segment(seg);

            double fac = 0.9 * std::pow(std::max(errn, 1e-16), -0.2);
            fac = std::min(rejected_last ? 1.0 : 5.0, std::max(0.2, fac));
            h = std::min(h * fac, hmax);
            rejected_last = false;

            if (!keep_going) {
                out.t_reached = t;
                out.y = y;
                return out;
            }
        } else {
            out.meta.rejected += 1;
            const double fac = std::max(0.2, 0.9 * std::pow(errn, -0.2));
            h *= fac;
            rejected_last = true;
        }
    }

    out.completed = !out.failed && t >= t_end;
    out.t_reached = t;
    out.y = y;
    return out;
}

Rhs make_riccati_rhs(const CirModel& model) {
    // State y = (A, B): A' = b'B, B' = H(B).
    return [model](const Vec& y) {
        const Eigen::Index d = model.rho.size();
        Vec dy(1 + d);
        const auto B = y.tail(d);
        dy[0] = model.b.dot(B);
        dy.tail(d) = h_map(model, B);
        return dy;
    };
}

void validate_or_throw(const CirModel& model, const char* context) {
    const ValidationReport report = validate(model);
    if (report.ok) return;
    std::ostringstream os;
    os << context << ": invalid model:";
    for (const auto& [field, what] : report.violations) os << " " << field << ": " << what << ";";
    throw std::invalid_argument(os.str());
}

}  // namespace

Vec DenseSegment::eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return rcont.col(0) +
           th * (rcont.col(1) + th1 * (rcont.col(2) + th * (rcont.col(3) + th1 * rcont.col(4))));
}

Vec DenseSegment::deriv(double t) const {
    const double th = (t - t0) / h;
    // d/dth of r1 + th r2 + th(1-th) r3 + th^2(1-th) r4 + th^2(1-th)^2 r5
    return (rcont.col(1) + (1.0 - 2.0 * th) * rcont.col(2) + th * (2.0 - 3.0 * th) * rcont.col(3) +
            2.0 * th * (1.0 - th) * (1.0 - 2.0 * th) * rcont.col(4)) /
           h;
}

RiccatiSolution::RiccatiSolution(Vec tau_grid, Vec A, Mat B, std::vector<DenseSegment> segments,
                                 StepMeta meta)
    : tau_grid_(std::move(tau_grid)),
      A_(std::move(A)),
      B_(std::move(B)),
      segments_(std::move(segments)),
      meta_(meta) {}

const DenseSegment& RiccatiSolution::segment_at(double tau) const {
    const double slack = 1e-12 * std::max(1.0, tau_max());
    if (!(tau >= -slack && tau <= tau_max() + slack))
        throw std::out_of_range("RiccatiSolution: tau outside solved range [0, " +
                                std::to_string(tau_max()) + "]");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), tau,
                               [](double v, const DenseSegment& s) { return v < s.t0; });
    if (it != segments_.begin()) --it;
    return *it;
}

double RiccatiSolution::eval_A(double tau) const {
    const DenseSegment& seg = segment_at(tau);
    return tau <= 0.0 ? 0.0 : seg.eval(tau)[0];
}

Vec RiccatiSolution::eval_B(double tau) const {
    const DenseSegment& seg = segment_at(tau);
    return tau <= 0.0 ? Vec::Zero(dim()).eval() : seg.eval(tau).tail(dim()).eval();
}

Vec RiccatiSolution::eval_B_deriv(double tau) const {
    return segment_at(std::max(tau, 0.0)).deriv(std::max(tau, 0.0)).tail(dim());
}

RiccatiSolution solve_riccati(const CirModel& model, double tau_max, int n_points,
                              const OdeOptions& opts) {
    validate_or_throw(model, "solve_riccati");
    if (!(tau_max > 0.0)) throw std::invalid_argument("solve_riccati: tau_max must be > 0");
    if (n_points < 2) throw std::invalid_argument("solve_riccati: n_points must be >= 2");

    const int d = model.d;
    std::vector<DenseSegment> segments;
    const auto outcome = integrate_dopri5(make_riccati_rhs(model), Vec::Zero(1 + d), tau_max, opts,
                                          [&](const DenseSegment& seg) {
                                              segments.push_back(seg);
                                              return true;
                                          });
    if (!outcome.completed)
        throw NumericError("solve_riccati: integration failed (step size underflow) at tau = " +
                           std::to_string(outcome.t_reached));

    Vec grid(n_points), A(n_points);
    Mat B(n_points, d);
    A[0] = 0.0;
    B.row(0).setZero();
    grid[0] = 0.0;
    std::size_t si = 0;
    for (int k = 1; k < n_points; ++k) {
        const double tau = tau_max * static_cast<double>(k) / static_cast<double>(n_points - 1);
        grid[k] = tau;
        while (si + 1 < segments.size() && segments[si].t0 + segments[si].h < tau) ++si;
        const Vec y = segments[si].eval(tau);
        A[k] = y[0];
        B.row(k) = y.tail(d).transpose();
    }
    return RiccatiSolution(std::move(grid), std::move(A), std::move(B), std::move(segments),
                           outcome.meta);
}

double closed_form_scalar_b(double beta_ii, double rho_i, double tau) {
    const double theta2 = beta_ii * beta_ii + 4.0 * rho_i;
    if (!(theta2 > 0.0)) throw std::domain_error("closed_form_scalar_b: beta^2 + 4 rho must be > 0");
    if (tau < 0.0) throw std::domain_error("closed_form_scalar_b: tau must be >= 0");
    const double theta = std::sqrt(theta2);
    // Multiply numerator and denominator by e^{-theta tau}: bounded for any tau.
    const double em = std::exp(-theta * tau);
    const double one_minus_em = -std::expm1(-theta * tau);
    return 2.0 * rho_i * one_minus_em / ((theta - beta_ii) * one_minus_em + 2.0 * theta * em);
}

TransformSolution extended_transform(const CirModel& model, const Vec& u, double t, double bound,
                                     const OdeOptions& opts) {
    validate_or_throw(model, "extended_transform");
    if (u.size() != model.d) throw std::invalid_argument("extended_transform: u must have length d");
    if (!(t >= 0.0)) throw std::invalid_argument("extended_transform: t must be >= 0");

    TransformSolution sol;
    sol.t = t;
    sol.u = u;
    sol.guard_bound = bound;
    if (t == 0.0) {
        sol.phi = 0.0;
        sol.psi = u;
        return sol;
    }

    const int d = model.d;
    // (phi, psi) = -(A, B)-flow started from -u: psi' = -H(-psi).
    const Rhs rhs = [&model, d](const Vec& y) {
        Vec dy(1 + d);
        const Vec psi = y.tail(d);
        dy[0] = model.b.dot(psi);
        dy.tail(d) = -h_map(model, -psi);
        return dy;
    };

    Vec y0(1 + d);
    y0[0] = 0.0;
    y0.tail(d) = u;
    if (u.lpNorm<Eigen::Infinity>() > bound) {
        sol.blew_up = true;
        sol.blow_up_time = 0.0;
        sol.phi = 0.0;
        sol.psi = u;
        return sol;
    }

    bool escaped = false;
    double escape_time = 0.0;
    Vec escape_state;
    const auto outcome = integrate_dopri5(rhs, y0, t, opts, [&](const DenseSegment& seg) {
        const double t_hi = seg.t0 + seg.h;
        if (seg.eval(t_hi).tail(d).lpNorm<Eigen::Infinity>() <= bound) return true;
        // Bisect the dense output for the first bound crossing.
        double lo = seg.t0, hi = t_hi;
        for (int iter = 0; iter < 80 && hi - lo > 1e-14 * std::max(1.0, hi); ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (seg.eval(mid).tail(d).lpNorm<Eigen::Infinity>() > bound)
                hi = mid;
            else
                lo = mid;
        }
        escaped = true;
        escape_time = hi;
        escape_state = seg.eval(hi);
        return false;
    });

    sol.meta = outcome.meta;
    if (escaped) {
        sol.blew_up = true;
        sol.blow_up_time = escape_time;
        sol.phi = escape_state[0];
        sol.psi = escape_state.tail(d);
        return sol;
    }
    if (!outcome.completed) {
        // Step-size underflow on a smooth quadratic field: the solution is
        // escaping faster than the guard saw. Report as blow-up at the
        // furthest reached time.
        sol.blew_up = true;
        sol.blow_up_time = outcome.t_reached;
        sol.phi = outcome.y[0];
        sol.psi = outcome.y.tail(d);
        return sol;
    }
    sol.phi = outcome.y[0];
    sol.psi = outcome.y.tail(d);
    return sol;
}

}  // namespace cirusv
