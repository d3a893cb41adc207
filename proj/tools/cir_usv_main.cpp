// cir-usv: multi-factor CIR term-structure toolkit.
//
// Subcommands: check-usv, make-family, curve, validate-mc, vol-decomp,
// simulate. JSON results embed a run manifest; CSV results written with
// --out get a sidecar <out>.manifest.json. Exit codes: 0 = decided/ok,
// 2 = input error, 3 = numerical failure (validate-mc additionally
// exits 1 when the z-score gate fails).

#include "cirusv/kernel.hpp"
#include "cirusv/model.hpp"
#include "cirusv/model_io.hpp"
#include "cirusv/montecarlo.hpp"
#include "cirusv/pricing.hpp"
#include "cirusv/riccati.hpp"
#include "cirusv/usv.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using cirusv::Mat;
using cirusv::Vec;
using json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";

class Stopwatch {
public:
    double elapsed_ms() const {
        const auto now = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(now - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json make_manifest(const std::string& command, json config, const std::string& model_hash,
                   std::optional<std::uint64_t> seed, double wall_ms) {
    json m;
    m["command"] = command;
    m["config"] = std::move(config);
    m["model_hash"] = model_hash;
    m["tool_version"] = kToolVersion;
    m["wall_clock_ms"] = wall_ms;
    if (seed)
        m["seed"] = *seed;
    else
        m["seed"] = nullptr;
    return m;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << text;
}

void write_manifest_sidecar(const std::string& csv_path, const json& manifest) {
    if (csv_path.empty()) return;
    std::ofstream out(csv_path + ".manifest.json", std::ios::binary);
    if (out) out << manifest.dump(2) << "\n";
}

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json mat_rows_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
    return rows;
}

Vec to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

cirusv::CirModel load_validated_model(const std::string& path) {
    const cirusv::CirModel model = cirusv::read_model_file(path);
    const cirusv::ValidationReport report = cirusv::validate(model);
    if (!report.ok) {
        std::ostringstream os;
        os << "invalid model " << path << ":";
        for (const auto& [field, what] : report.violations) os << "\n  " << field << ": " << what;
        throw std::invalid_argument(os.str());
    }
    return model;
}

Vec default_or_given_x0(const std::vector<double>& flag, int d, const char* name) {
    if (flag.empty()) return Vec::Ones(d);
    if (static_cast<int>(flag.size()) != d)
        throw std::invalid_argument(std::string(name) + " must have exactly d values");
    return to_vec(flag);
}

// ---------------------------------------------------------------- check-usv

struct CheckUsvArgs {
    std::string model_file;
    double tau_max = 30.0;
    int n_samples = 200;
    double rank_tol = 1e-9;
    double tol = 1e-8;
    std::string out;
    std::string kernel_csv;
};

int run_check_usv(const CheckUsvArgs& args) {
    Stopwatch watch;
    const cirusv::CirModel model = load_validated_model(args.model_file);
    const cirusv::KernelDecomposition kd =
        cirusv::term_structure_kernel(model, args.tau_max, args.n_samples, args.rank_tol);
    const cirusv::UsvCertificate cert = cirusv::usv_certificate(model, kd, args.tol);

    json out;
    out["usv"] = cert.usv;
    out["m"] = cert.m;
    out["kernel_basis"] = mat_rows_to_json(kd.U_basis.transpose());
    out["S"] = mat_rows_to_json(kd.S);
    out["singular_values"] = vec_to_json(kd.singular_values);
    out["coefficients"] = json::array();
    for (const auto& pc : cert.coefficients) {
        json entry;
        entry["constant"] = pc.constant;
        entry["linear"] = vec_to_json(pc.linear);
        entry["quadratic"] = mat_rows_to_json(pc.quadratic);
        out["coefficients"].push_back(std::move(entry));
    }
    out["max_abs_coefficient"] = cert.max_abs_coefficient;
    if (cert.has_witness) {
        out["witness"] = json{{"v", vec_to_json(cert.witness)}, {"value", cert.witness_value}};
    } else {
        out["witness"] = nullptr;
    }
    out["tolerances"] =
        json{{"rank_tol", args.rank_tol}, {"tol", cert.tol}, {"tol_effective", cert.tol_effective}};
    out["near_degenerate_rank"] = kd.near_degenerate;
    if (kd.near_degenerate)
        std::cerr << "warning: singular values close to the rank threshold; "
                     "the factor count m may be sensitive to rank-tol\n";

    json config{{"model", args.model_file}, {"tau_max", args.tau_max},
                {"n_samples", args.n_samples}, {"rank_tol", args.rank_tol}, {"tol", args.tol}};
    out["manifest"] =
        make_manifest("check-usv", config, cirusv::model_hash(model), std::nullopt, watch.elapsed_ms());
    write_text(args.out, out.dump(2) + "\n");

    if (!args.kernel_csv.empty()) {
        std::ostringstream csv;
        for (int i = 0; i < model.d; ++i) csv << (i ? "," : "") << "x_" << (i + 1);
        csv << "\n";
        for (Eigen::Index c = 0; c < kd.U_basis.cols(); ++c) {
            for (int i = 0; i < model.d; ++i)
                csv << (i ? "," : "") << cirusv::format_double(kd.U_basis(i, c));
            csv << "\n";
        }
        write_text(args.kernel_csv, csv.str());
        write_manifest_sidecar(args.kernel_csv, out["manifest"]);
    }
    return 0;
}

// -------------------------------------------------------------- make-family

struct MakeFamilyArgs {
    double beta11 = 0, beta22 = 0, beta23 = 0, rho2 = 0;
    std::vector<double> b;
    std::string out;
};

int run_make_family(const MakeFamilyArgs& args) {
    Stopwatch watch;
    const cirusv::UsvFamilyParams params{args.beta11, args.beta22, args.beta23, args.rho2};
    const cirusv::ValidationReport report = cirusv::validate_family(params);
    if (!report.ok) {
        std::ostringstream os;
        os << "family constraints violated:";
        for (const auto& [field, what] : report.violations) os << "\n  " << field << ": " << what;
        throw std::invalid_argument(os.str());
    }
    Vec b = Vec::Constant(3, 0.1);
    if (!args.b.empty()) {
        if (args.b.size() != 3) throw std::invalid_argument("--b must have exactly 3 values");
        b = to_vec(args.b);
    }
    const cirusv::CirModel model = cirusv::usv_family_3f(params, b);
    write_text(args.out, cirusv::model_to_json(model).dump(2) + "\n");

    json config{{"beta11", args.beta11}, {"beta22", args.beta22}, {"beta23", args.beta23},
                {"rho2", args.rho2},     {"b", vec_to_json(b)}};
    write_manifest_sidecar(args.out, make_manifest("make-family", config,
                                                   cirusv::model_hash(model), std::nullopt,
                                                   watch.elapsed_ms()));
    return 0;
}

// -------------------------------------------------------------------- curve

struct CurveArgs {
    std::string model_file;
    std::vector<double> x0;
    double tau_max = 30.0;
    int n = 121;
    std::string out;
};

int run_curve(const CurveArgs& args) {
    Stopwatch watch;
    const cirusv::CirModel model = load_validated_model(args.model_file);
    const Vec x0 = default_or_given_x0(args.x0, model.d, "--x0");
    if (x0.minCoeff() < 0.0) throw std::invalid_argument("--x0 must be componentwise nonnegative");
    const cirusv::RiccatiSolution sol = cirusv::solve_riccati(model, args.tau_max, args.n);

    std::ostringstream csv;
    csv << "tau,A";
    for (int i = 0; i < model.d; ++i) csv << ",B_" << (i + 1);
    csv << ",price\n";
    for (int k = 0; k < args.n; ++k) {
        const double tau = sol.tau_grid()[k];
        csv << cirusv::format_double(tau) << "," << cirusv::format_double(sol.A()[k]);
        for (int i = 0; i < model.d; ++i) csv << "," << cirusv::format_double(sol.B()(k, i));
        csv << ","
            << cirusv::format_double(std::exp(-sol.A()[k] - sol.B().row(k).dot(x0.transpose())))
            << "\n";
    }
    write_text(args.out, csv.str());

    json config{{"model", args.model_file}, {"x0", vec_to_json(x0)},
                {"tau_max", args.tau_max},  {"n", args.n}};
    write_manifest_sidecar(args.out, make_manifest("curve", config, cirusv::model_hash(model),
                                                   std::nullopt, watch.elapsed_ms()));
    return 0;
}

// -------------------------------------------------------------- validate-mc

struct ValidateMcArgs {
    std::string model_file;
    std::vector<double> x0;
    std::uint64_t seed = 42;
    long n_paths = 100000;
    double dt = 1.0 / 500.0;
    double T = 1.0;
    std::vector<double> claim_u;
    double claim_t = -1.0;  // default: T
    std::string out;
};

int run_validate_mc(const ValidateMcArgs& args) {
    Stopwatch watch;
    const cirusv::CirModel model = load_validated_model(args.model_file);
    const Vec x0 = default_or_given_x0(args.x0, model.d, "--x0");
    if (x0.minCoeff() < 0.0) throw std::invalid_argument("--x0 must be componentwise nonnegative");
    if (args.T < 0.0) throw std::invalid_argument("--T must be >= 0");

    cirusv::SimConfig cfg;
    cfg.n_paths = args.n_paths;
    cfg.dt = args.dt;
    cfg.horizon = std::max(args.T, args.claim_t);
    if (cfg.horizon <= 0.0) cfg.horizon = args.dt;
    cfg.seed = args.seed;
    cirusv::validated_steps(cfg);

    const cirusv::RiccatiSolution sol =
        cirusv::solve_riccati(model, std::max(cfg.horizon, args.dt), 101);

    json out;
    out["T"] = args.T;
    out["x0"] = vec_to_json(x0);
    double max_abs_z = 0.0;

    {
        const double analytic = cirusv::bond_price(model, sol, args.T, x0);
        const cirusv::McEstimate est =
            args.T == 0.0 ? cirusv::McEstimate{1.0, 0.0, args.n_paths}
                          : cirusv::mc_bond_price(model, x0, cfg, args.T);
        const double diff = analytic - est.value;
        const double z = diff == 0.0 ? 0.0 : diff / est.std_error;
        max_abs_z = std::max(max_abs_z, std::abs(z));
        out["bond"] = json{{"analytic", analytic},
                           {"mc", json{{"value", est.value}, {"std_error", est.std_error}, {"n", est.n}}},
                           {"z_score", z}};
    }

    if (!args.claim_u.empty()) {
        if (static_cast<int>(args.claim_u.size()) != model.d)
            throw std::invalid_argument("--claim-u must have exactly d values");
        const Vec u = to_vec(args.claim_u);
        const double t = args.claim_t >= 0.0 ? args.claim_t : args.T;
        const double analytic = cirusv::exp_claim_price(model, u, t, x0);
        const cirusv::McEstimate est =
            t == 0.0 ? cirusv::McEstimate{std::exp(u.dot(x0)), 0.0, args.n_paths}
                     : cirusv::mc_exp_claim(model, x0, cfg, u, t);
        const double diff = analytic - est.value;
        const double z = diff == 0.0 ? 0.0 : diff / est.std_error;
        max_abs_z = std::max(max_abs_z, std::abs(z));
        out["claim"] =
            json{{"u", vec_to_json(u)},
                 {"t", t},
                 {"analytic", analytic},
                 {"mc", json{{"value", est.value}, {"std_error", est.std_error}, {"n", est.n}}},
                 {"z_score", z}};
    }

    const bool pass = max_abs_z <= 4.0;
    out["max_abs_z"] = max_abs_z;
    out["pass"] = pass;

    json config{{"model", args.model_file},
                {"x0", vec_to_json(x0)},
                {"seed", args.seed},
                {"n_paths", args.n_paths},
                {"dt", args.dt},
                {"T", args.T},
                {"claim_u", args.claim_u.empty() ? json(nullptr) : vec_to_json(to_vec(args.claim_u))},
                {"claim_t", args.claim_t >= 0.0 ? json(args.claim_t) : json(nullptr)},
                {"scheme", "euler_full_truncation"}};
    out["manifest"] = make_manifest("validate-mc", config, cirusv::model_hash(model), args.seed,
                                    watch.elapsed_ms());
    write_text(args.out, out.dump(2) + "\n");
    return pass ? 0 : 1;
}

// --------------------------------------------------------------- vol-decomp

struct VolDecompArgs {
    std::string model_file;
    std::vector<double> taus;
    double tau_max = 30.0;
    int n_samples = 200;
    double rank_tol = 1e-9;
    std::string out;
};

int run_vol_decomp(const VolDecompArgs& args) {
    Stopwatch watch;
    const cirusv::CirModel model = load_validated_model(args.model_file);
    if (args.taus.empty()) throw std::invalid_argument("at least one --tau is required");
    double tau_hi = 0.0;
    for (double t : args.taus) {
        if (t < 0.0) throw std::invalid_argument("--tau values must be >= 0");
        tau_hi = std::max(tau_hi, t);
    }

    const cirusv::KernelDecomposition kd =
        cirusv::term_structure_kernel(model, args.tau_max, args.n_samples, args.rank_tol);
    const cirusv::RiccatiSolution sol =
        cirusv::solve_riccati(model, std::max(tau_hi, 1e-3), 101);
    if (kd.m == model.d)
        std::cerr << "note: m = d, the model has no unspanned factors; u-columns are empty\n";

    std::ostringstream csv;
    csv << "tau";
    for (int j = 0; j < kd.m; ++j) csv << ",z_" << (j + 1);
    for (int j = 0; j < model.d - kd.m; ++j) csv << ",u_" << (j + 1);
    csv << "\n";
    for (double tau : args.taus) {
        const cirusv::VolDecomposition vd = cirusv::vol_decomposition(model, kd, sol, tau);
        csv << cirusv::format_double(tau);
        for (Eigen::Index j = 0; j < vd.z_coeffs.size(); ++j)
            csv << "," << cirusv::format_double(vd.z_coeffs[j]);
        for (Eigen::Index j = 0; j < vd.u_coeffs.size(); ++j)
            csv << "," << cirusv::format_double(vd.u_coeffs[j]);
        csv << "\n";
    }
    write_text(args.out, csv.str());

    json config{{"model", args.model_file}, {"tau", args.taus},       {"tau_max", args.tau_max},
                {"n_samples", args.n_samples}, {"rank_tol", args.rank_tol}};
    write_manifest_sidecar(args.out, make_manifest("vol-decomp", config, cirusv::model_hash(model),
                                                   std::nullopt, watch.elapsed_ms()));
    return 0;
}

// ----------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string model_file;
    std::vector<double> x0;
    long n_paths = 100;
    double dt = 0.01;
    double horizon = 1.0;
    std::uint64_t seed = 42;
    std::string out;
};

int run_simulate(const SimulateArgs& args) {
    Stopwatch watch;
    const cirusv::CirModel model = load_validated_model(args.model_file);
    const Vec x0 = default_or_given_x0(args.x0, model.d, "--x0");
    if (x0.minCoeff() < 0.0) throw std::invalid_argument("--x0 must be componentwise nonnegative");

    cirusv::SimConfig cfg;
    cfg.n_paths = args.n_paths;
    cfg.dt = args.dt;
    cfg.horizon = args.horizon;
    cfg.seed = args.seed;
    const cirusv::PathSet ps = cirusv::simulate_paths(model, x0, cfg);

    std::ostringstream csv;
    csv << "path,t";
    for (int i = 0; i < model.d; ++i) csv << ",X_" << (i + 1);
    csv << ",integrated_rate\n";
    for (long p = 0; p < cfg.n_paths; ++p) {
        const Mat& traj = ps.states[static_cast<std::size_t>(p)];
        for (Eigen::Index k = 0; k < traj.rows(); ++k) {
            csv << p << "," << cirusv::format_double(ps.times[k]);
            for (int i = 0; i < model.d; ++i) csv << "," << cirusv::format_double(traj(k, i));
            csv << "," << cirusv::format_double(ps.integrated_rate(p, k)) << "\n";
        }
    }
    write_text(args.out, csv.str());

    json config{{"model", args.model_file}, {"x0", vec_to_json(x0)}, {"n_paths", args.n_paths},
                {"dt", args.dt},            {"horizon", args.horizon}, {"seed", args.seed},
                {"scheme", "euler_full_truncation"}};
    write_manifest_sidecar(args.out, make_manifest("simulate", config, cirusv::model_hash(model),
                                                   args.seed, watch.elapsed_ms()));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-factor CIR term-structure toolkit"};
    app.set_version_flag("--version", std::string("cir-usv ") + kToolVersion);
    app.require_subcommand(1);

    CheckUsvArgs check_args;
    auto* check = app.add_subcommand("check-usv", "decide unspanned stochastic volatility");
    check->add_option("--model", check_args.model_file, "model JSON file")->required();
    check->add_option("--tau-max", check_args.tau_max, "kernel sampling horizon");
    check->add_option("--n-samples", check_args.n_samples, "kernel sample count");
    check->add_option("--rank-tol", check_args.rank_tol, "relative SVD rank tolerance");
    check->add_option("--tol", check_args.tol, "relative coefficient tolerance");
    check->add_option("--out", check_args.out, "write certificate JSON here instead of stdout");
    check->add_option("--kernel-csv", check_args.kernel_csv, "also write the kernel basis as CSV");

    MakeFamilyArgs family_args;
    auto* family = app.add_subcommand("make-family", "emit a three-factor USV family model");
    family->add_option("--beta11", family_args.beta11, "beta11 (beta22 < beta11 < 0)")->required();
    family->add_option("--beta22", family_args.beta22, "beta22 (beta22 < beta11 < 0)")->required();
    family->add_option("--beta23", family_args.beta23, "beta23 (> 0)")->required();
    family->add_option("--rho2", family_args.rho2, "rho2 (> 0)")->required();
    family->add_option("--b", family_args.b, "drift constants (3 values)")->expected(3);
    family->add_option("--out", family_args.out, "write model JSON here instead of stdout");

    CurveArgs curve_args;
    auto* curve = app.add_subcommand("curve", "emit tau, A, B, price as CSV");
    curve->add_option("--model", curve_args.model_file, "model JSON file")->required();
    curve->add_option("--x0", curve_args.x0, "state for the price column (d values, default 1s)")
        ->expected(-1);
    curve->add_option("--tau-max", curve_args.tau_max, "curve horizon");
    curve->add_option("--n", curve_args.n, "number of grid points");
    curve->add_option("--out", curve_args.out, "write CSV here instead of stdout");

    ValidateMcArgs mc_args;
    auto* mc = app.add_subcommand("validate-mc", "compare analytic prices against Monte Carlo");
    mc->add_option("--model", mc_args.model_file, "model JSON file")->required();
    mc->add_option("--x0", mc_args.x0, "initial state (d values, default 1s)")->expected(-1);
    mc->add_option("--seed", mc_args.seed, "RNG seed");
    mc->add_option("--n-paths", mc_args.n_paths, "number of paths");
    mc->add_option("--dt", mc_args.dt, "time step");
    mc->add_option("--T", mc_args.T, "bond maturity");
    mc->add_option("--claim-u", mc_args.claim_u, "also validate exp(u'X) (d values)")->expected(-1);
    mc->add_option("--claim-t", mc_args.claim_t, "claim horizon (default --T)");
    mc->add_option("--out", mc_args.out, "write report JSON here instead of stdout");

    VolDecompArgs vol_args;
    auto* vol = app.add_subcommand("vol-decomp", "volatility loadings on (Z, U) factors");
    vol->add_option("--model", vol_args.model_file, "model JSON file")->required();
    vol->add_option("--tau", vol_args.taus, "maturities (repeatable)")->expected(-1);
    vol->add_option("--tau-max", vol_args.tau_max, "kernel sampling horizon");
    vol->add_option("--n-samples", vol_args.n_samples, "kernel sample count");
    vol->add_option("--rank-tol", vol_args.rank_tol, "relative SVD rank tolerance");
    vol->add_option("--out", vol_args.out, "write CSV here instead of stdout");

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "dump factor paths as CSV");
    sim->add_option("--model", sim_args.model_file, "model JSON file")->required();
    sim->add_option("--x0", sim_args.x0, "initial state (d values, default 1s)")->expected(-1);
    sim->add_option("--n-paths", sim_args.n_paths, "number of paths");
    sim->add_option("--dt", sim_args.dt, "time step");
    sim->add_option("--horizon", sim_args.horizon, "simulation horizon");
    sim->add_option("--seed", sim_args.seed, "RNG seed");
    sim->add_option("--out", sim_args.out, "write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (check->parsed()) return run_check_usv(check_args);
        if (family->parsed()) return run_make_family(family_args);
        if (curve->parsed()) return run_curve(curve_args);
        if (mc->parsed()) return run_validate_mc(mc_args);
        if (vol->parsed()) return run_vol_decomp(vol_args);
        if (sim->parsed()) return run_simulate(sim_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cirusv::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
