#include "cirusv/montecarlo.hpp"

#include "cirusv/pricing.hpp"
#include "cirusv/rng.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <thread>

namespace cirusv {

namespace {

// Paths are processed in fixed-size blocks and block results are
// combined in block order, so estimates do not depend on how blocks
// are distributed over threads.
constexpr long kBlockSize = 4096;

void validate_sim_inputs(const CirModel& model, const Vec& x0, const char* context) {
    const ValidationReport report = validate(model);
    if (!report.ok) throw std::invalid_argument(std::string(context) + ": invalid model");
    if (x0.size() != model.d)
        throw std::invalid_argument(std::string(context) + ": x0 must have length d");
    if (x0.size() > 0 && x0.minCoeff() < 0.0)
        throw std::invalid_argument(std::string(context) + ": x0 must be componentwise nonnegative");
}

template <class Fn>
void parallel_blocks(long n_paths, Fn&& fn) {
    const long n_blocks = (n_paths + kBlockSize - 1) / kBlockSize;
    const long n_threads = std::min<long>(mc_threads(), n_blocks);
    if (n_threads <= 1) {
        for (long b = 0; b < n_blocks; ++b)
            fn(b, b * kBlockSize, std::min(n_paths, (b + 1) * kBlockSize));
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (long t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (long b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
                fn(b, b * kBlockSize, std::min(n_paths, (b + 1) * kBlockSize));
        });
    }
    for (auto& th : pool) th.join();
}

// Runs the full-truncation Euler recursion for one path, invoking
// on_step(k, x_raw, x_pos, integrated_rate) after each step k = 1..steps.
// x, xp, drift are caller-provided scratch vectors of length d.
template <class OnStep>
void run_path(const CirModel& model, const Vec& x0, double dt, long steps, std::uint64_t seed,
              long path, Vec& x, Vec& xp, Vec& drift, OnStep&& on_step) {
    const int d = model.d;
    x = x0;
    double integ = 0.0;
    double r_prev = model.rho.dot(x0);
    for (long k = 0; k < steps; ++k) {
        xp = x.cwiseMax(0.0);
        drift.noalias() = model.beta * xp;
        drift += model.b;
        for (int i = 0; i < d; ++i) {
            const double z = rng::normal_draw(seed, static_cast<std::uint64_t>(path),
                                              static_cast<std::uint64_t>(k),
                                              static_cast<std::uint64_t>(i));
            x[i] += drift[i] * dt + std::sqrt(model.sigma2[i] * xp[i] * dt) * z;
        }
        xp = x.cwiseMax(0.0);
        const double r_new = model.rho.dot(xp);
        integ += 0.5 * (r_prev + r_new) * dt;
        r_prev = r_new;
        on_step(k + 1, x, xp, integ);
    }
}

struct BlockMoments {
    double sum = 0;
    double sumsq = 0;
};

McEstimate reduce_moments(const std::vector<BlockMoments>& blocks, long n) {
    double sum = 0.0, sumsq = 0.0;
    for (const auto& b : blocks) {
        sum += b.sum;
        sumsq += b.sumsq;
    }
    McEstimate est;
    est.n = n;
    est.value = sum / static_cast<double>(n);
    const double var =
        n > 1 ? std::max(0.0, (sumsq - static_cast<double>(n) * est.value * est.value) /
                                  static_cast<double>(n - 1))
              : 0.0;
    est.std_error = std::sqrt(var / static_cast<double>(n));
    return est;
}

long grid_index(const SimConfig& cfg, double t, const char* context) {
    const long steps = validated_steps(cfg);
    const long k = std::lround(t / cfg.dt);
    if (k < 0 || k > steps || std::abs(static_cast<double>(k) * cfg.dt - t) > 1e-9 * std::max(1.0, t))
        throw std::invalid_argument(std::string(context) +
                                    ": time must be a step-grid point within the horizon");
    return k;
}

// Estimates mean/std-error of a per-path functional given by a factory
// that binds a block range to a callable path -> double.
template <class PerPathValue>
McEstimate estimate_over_paths(long n_paths, PerPathValue&& value_of_path) {
    const long n_blocks = (n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<BlockMoments> blocks(static_cast<std::size_t>(n_blocks));
    parallel_blocks(n_paths, [&](long b, long begin, long end) {
        BlockMoments bm;
        for (long p = begin; p < end; ++p) {
            const double v = value_of_path(p);
            bm.sum += v;
            bm.sumsq += v * v;
        }
        blocks[static_cast<std::size_t>(b)] = bm;
    });
    return reduce_moments(blocks, n_paths);
}

}  // namespace

int mc_threads() {
    if (const char* env = std::getenv("CIR_USV_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(std::min<long>(v, 1024));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

long validated_steps(const SimConfig& cfg) {
    if (cfg.n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
    if (!(cfg.horizon > 0.0)) throw std::invalid_argument("SimConfig: horizon must be > 0");
    const double ratio = cfg.horizon / cfg.dt;
    const long steps = std::lround(ratio);
    if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("SimConfig: horizon must be an integer number of dt steps");
    return steps;
}

PathSet simulate_paths(const CirModel& model, const Vec& x0, const SimConfig& cfg) {
    validate_sim_inputs(model, x0, "simulate_paths");
    const long steps = validated_steps(cfg);
    const int d = model.d;
    const double storage = static_cast<double>(cfg.n_paths) * static_cast<double>(steps + 1) * d;
    if (storage > 1e9)
        throw std::invalid_argument(
            "simulate_paths: path storage would exceed 8 GB; use the streaming estimators");

    PathSet ps;
    ps.config = cfg;
    ps.model = model;
    ps.x0 = x0;
    ps.times = Vec::LinSpaced(steps + 1, 0.0, static_cast<double>(steps) * cfg.dt);
    ps.states.resize(static_cast<std::size_t>(cfg.n_paths));
    ps.integrated_rate = Mat(cfg.n_paths, steps + 1);

    parallel_blocks(cfg.n_paths, [&](long /*b*/, long begin, long end) {
        Vec x(d), xp(d), drift(d);
        for (long p = begin; p < end; ++p) {
            Mat& traj = ps.states[static_cast<std::size_t>(p)];
            traj.resize(steps + 1, d);
            traj.row(0) = x0.transpose();
            ps.integrated_rate(p, 0) = 0.0;
            run_path(model, x0, cfg.dt, steps, cfg.seed, p, x, xp, drift,
                     [&](long k, const Vec& xr, const Vec& /*xpos*/, double integ) {
                         traj.row(k) = xr.transpose();
                         ps.integrated_rate(p, k) = integ;
                     });
        }
    });
    return ps;
}

McEstimate mc_bond_price(const PathSet& paths, double T) {
    const long k = grid_index(paths.config, T, "mc_bond_price");
    return estimate_over_paths(paths.config.n_paths,
                               [&](long p) { return std::exp(-paths.integrated_rate(p, k)); });
}

McEstimate mc_bond_price(const CirModel& model, const Vec& x0, const SimConfig& cfg, double T) {
    validate_sim_inputs(model, x0, "mc_bond_price");
    const long steps = validated_steps(cfg);
    const long kT = grid_index(cfg, T, "mc_bond_price");
    const long n_blocks = (cfg.n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<BlockMoments> blocks(static_cast<std::size_t>(n_blocks));
    parallel_blocks(cfg.n_paths, [&](long b, long begin, long end) {
        Vec x(model.d), xp(model.d), drift(model.d);
        BlockMoments bm;
        for (long p = begin; p < end; ++p) {
            double discount = 1.0;  // value at kT = 0
            run_path(model, x0, cfg.dt, steps, cfg.seed, p, x, xp, drift,
                     [&](long k, const Vec&, const Vec&, double integ) {
                         if (k == kT) discount = std::exp(-integ);
                     });
            bm.sum += discount;
            bm.sumsq += discount * discount;
        }
        blocks[static_cast<std::size_t>(b)] = bm;
    });
    return reduce_moments(blocks, cfg.n_paths);
}

McEstimate mc_exp_claim(const PathSet& paths, const Vec& u, double t) {
    if (u.size() != paths.x0.size()) throw std::invalid_argument("mc_exp_claim: u must have length d");
    const long k = grid_index(paths.config, t, "mc_exp_claim");
    return estimate_over_paths(paths.config.n_paths, [&](long p) {
        const Vec xp = paths.states[static_cast<std::size_t>(p)].row(k).transpose().cwiseMax(0.0);
        return std::exp(-paths.integrated_rate(p, k) + u.dot(xp));
    });
}

McEstimate mc_exp_claim(const CirModel& model, const Vec& x0, const SimConfig& cfg, const Vec& u,
                        double t) {
    validate_sim_inputs(model, x0, "mc_exp_claim");
    if (u.size() != model.d) throw std::invalid_argument("mc_exp_claim: u must have length d");
    const long steps = validated_steps(cfg);
    const long kt = grid_index(cfg, t, "mc_exp_claim");
    const long n_blocks = (cfg.n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<BlockMoments> blocks(static_cast<std::size_t>(n_blocks));
    parallel_blocks(cfg.n_paths, [&](long b, long begin, long end) {
        Vec x(model.d), xp(model.d), drift(model.d);
        BlockMoments bm;
        for (long p = begin; p < end; ++p) {
            double payoff = std::exp(u.dot(x0.cwiseMax(0.0)));  // value at kt = 0
            run_path(model, x0, cfg.dt, steps, cfg.seed, p, x, xp, drift,
                     [&](long k, const Vec&, const Vec& xpos, double integ) {
                         if (k == kt) payoff = std::exp(-integ + u.dot(xpos));
                     });
            bm.sum += payoff;
            bm.sumsq += payoff * payoff;
        }
        blocks[static_cast<std::size_t>(b)] = bm;
    });
    return reduce_moments(blocks, cfg.n_paths);
}

std::pair<double, double> mc_unspanned_invariance(const CirModel& model,
                                                  const KernelDecomposition& kd, const Vec& x0,
                                                  double delta, double T, const Vec& claim_v,
                                                  double claim_t) {
    if (kd.U_basis.cols() == 0)
        throw std::invalid_argument("mc_unspanned_invariance: model has no kernel direction (m = d)");
    if (claim_v.size() != kd.m)
        throw std::invalid_argument("mc_unspanned_invariance: claim_v must have length m");
    const Vec xi = kd.U_basis.col(0);
    const Vec x1 = x0 + delta * xi;
    if (x0.minCoeff() < 0.0 || x1.minCoeff() < 0.0)
        throw std::invalid_argument("mc_unspanned_invariance: perturbed state leaves the state space");

    const RiccatiSolution sol = solve_riccati(model, std::max(T, claim_t), 101);
    const double price_shift =
        std::abs(bond_price(model, sol, T, x0) - bond_price(model, sol, T, x1));
    const Vec u = kd.S.transpose() * claim_v;
    const double claim_shift =
        std::abs(exp_claim_price(model, u, claim_t, x0) - exp_claim_price(model, u, claim_t, x1));
    return {price_shift, claim_shift};
}

std::pair<double, double> mc_unspanned_invariance(const CirModel& model,
                                                  const KernelDecomposition& kd, const Vec& x0,
                                                  double delta, double T) {
    return mc_unspanned_invariance(model, kd, x0, delta, T, Vec::Constant(kd.m, -1.0), 1.0);
}

namespace {

struct QvAccum {
    Vec realized;
    Vec analytic;
};

QvSeries reduce_qv(const std::vector<QvAccum>& blocks, long n_paths, long kT, double dt) {
    QvSeries qv;
    qv.times = Vec::LinSpaced(kT, 0.0, static_cast<double>(kT - 1) * dt);
    qv.realized = Vec::Zero(kT);
    qv.analytic = Vec::Zero(kT);
    for (const auto& b : blocks) {
        qv.realized += b.realized;
        qv.analytic += b.analytic;
    }
    qv.realized /= static_cast<double>(n_paths);
    qv.analytic /= static_cast<double>(n_paths);
    return qv;
}

}  // namespace

QvSeries realized_qv_log_bond(const CirModel& model, const Vec& x0, const SimConfig& cfg,
                              const RiccatiSolution& sol, double T) {
    validate_sim_inputs(model, x0, "realized_qv_log_bond");
    const long steps = validated_steps(cfg);
    const long kT = grid_index(cfg, T, "realized_qv_log_bond");
    if (kT < 1) throw std::invalid_argument("realized_qv_log_bond: T must be at least one step");
    if (sol.tau_max() < T - 1e-12)
        throw std::invalid_argument("realized_qv_log_bond: Riccati solution does not cover T");

    // log P(t_k, T) = -A(T - t_k) - B(T - t_k)' X+; precompute the curves.
    Vec a_curve(kT + 1);
    Mat b_curve(kT + 1, model.d);
    for (long k = 0; k <= kT; ++k) {
        const double tau = std::max(0.0, T - static_cast<double>(k) * cfg.dt);
        a_curve[k] = sol.eval_A(tau);
        b_curve.row(k) = sol.eval_B(tau).transpose();
    }

    const long n_blocks = (cfg.n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<QvAccum> blocks(static_cast<std::size_t>(n_blocks));
    parallel_blocks(cfg.n_paths, [&](long b, long begin, long end) {
        QvAccum acc;
        acc.realized = Vec::Zero(kT);
        acc.analytic = Vec::Zero(kT);
        Vec x(model.d), xp(model.d), drift(model.d);
        for (long p = begin; p < end; ++p) {
            double lp_prev = -a_curve[0] - b_curve.row(0).dot(x0);
            Vec xp_prev = x0;
            run_path(model, x0, cfg.dt, steps, cfg.seed, p, x, xp, drift,
                     [&](long k, const Vec&, const Vec& xpos, double) {
                         if (k > kT) return;
                         const double lp = -a_curve[k] - b_curve.row(k).dot(xpos);
                         const double diff = lp - lp_prev;
                         acc.realized[k - 1] += diff * diff / cfg.dt;
                         acc.analytic[k - 1] += (b_curve.row(k - 1).transpose().array().square() *
                                                 model.sigma2.array() * xp_prev.array())
                                                    .sum();
                         lp_prev = lp;
                         xp_prev = xpos;
                     });
        }
        blocks[static_cast<std::size_t>(b)] = std::move(acc);
    });
    return reduce_qv(blocks, cfg.n_paths, kT, cfg.dt);
}

QvSeries realized_qv_log_bond(const PathSet& paths, const RiccatiSolution& sol, double T) {
    const SimConfig& cfg = paths.config;
    const long kT = grid_index(cfg, T, "realized_qv_log_bond");
    if (kT < 1) throw std::invalid_argument("realized_qv_log_bond: T must be at least one step");
    if (sol.tau_max() < T - 1e-12)
        throw std::invalid_argument("realized_qv_log_bond: Riccati solution does not cover T");
    const int d = static_cast<int>(paths.x0.size());

    Vec a_curve(kT + 1);
    Mat b_curve(kT + 1, d);
    for (long k = 0; k <= kT; ++k) {
        const double tau = std::max(0.0, T - static_cast<double>(k) * cfg.dt);
        a_curve[k] = sol.eval_A(tau);
        b_curve.row(k) = sol.eval_B(tau).transpose();
    }

    const long n_blocks = (cfg.n_paths + kBlockSize - 1) / kBlockSize;
    std::vector<QvAccum> blocks(static_cast<std::size_t>(n_blocks));
    parallel_blocks(cfg.n_paths, [&](long b, long begin, long end) {
        QvAccum acc;
        acc.realized = Vec::Zero(kT);
        acc.analytic = Vec::Zero(kT);
        for (long p = begin; p < end; ++p) {
            const Mat& traj = paths.states[static_cast<std::size_t>(p)];
            Vec xp_prev = traj.row(0).transpose().cwiseMax(0.0);
            double lp_prev = -a_curve[0] - b_curve.row(0).dot(xp_prev);
            for (long k = 1; k <= kT; ++k) {
                const Vec xpos = traj.row(k).transpose().cwiseMax(0.0);
                const double lp = -a_curve[k] - b_curve.row(k).dot(xpos);
                const double diff = lp - lp_prev;
                acc.realized[k - 1] += diff * diff / cfg.dt;
                acc.analytic[k - 1] += (b_curve.row(k - 1).transpose().array().square() *
                                        paths.model.sigma2.array() * xp_prev.array())
                                           .sum();
                lp_prev = lp;
                xp_prev = xpos;
            }
        }
        blocks[static_cast<std::size_t>(b)] = std::move(acc);
    });
    return reduce_qv(blocks, cfg.n_paths, kT, cfg.dt);
}

}  // namespace cirusv
