#include "cirusv/pricing.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cirusv;
using namespace cirusv::testing;

namespace {

KernelDecomposition paper_maps() {
    Mat s(2, 3), l(1, 3);
    s << 1, 0, 1, 0, 1, 1;
    l << 1, 1, -1;
    return kernel_from_maps(s, l);
}

}  // namespace

TEST_CASE("bond price at tau = 0 is 1") {
    const CirModel m = family_demo();
    const auto sol = solve_riccati(m, 5.0, 51);
    Vec x(3);
    x << 0.3, 1.2, 5.0;
    CHECK(bond_price(m, sol, 0.0, x) == 1.0);
}

TEST_CASE("bond price with b = 0 at x = 0 stays 1") {
    CirModel m = family_demo();
    m.b = Vec::Zero(3);
    const auto sol = solve_riccati(m, 10.0, 101);
    for (double tau : {0.5, 3.0, 10.0})
        CHECK(bond_price(m, sol, tau, Vec::Zero(3)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scalar bond price matches the closed form") {
    const CirModel m = scalar_baseline();
    const auto sol = solve_riccati(m, 2.0, 21);
    const double p = bond_price(m, sol, 1.0, Vec::Ones(1));
    CHECK(p == doctest::Approx(std::exp(-closed_form_scalar_b(-1.0, 1.0, 1.0))).epsilon(1e-10));
    CHECK(p == doctest::Approx(0.58841090529090637).epsilon(1e-10));
}

TEST_CASE("bond price is decreasing in each state coordinate and lies in (0, 1]") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const CirModel m = random_admissible(gen, 3);
        const auto sol = solve_riccati(m, 5.0, 51);
        const Vec x = Vec::NullaryExpr(3, [&](Eigen::Index) { return 2.0 * u01(gen); });
        for (double tau : {0.5, 2.0, 5.0}) {
            const double p = bond_price(m, sol, tau, x);
            REQUIRE(p > 0.0);
            REQUIRE(p <= 1.0);
            for (int i = 0; i < 3; ++i) {
                REQUIRE(bond_price(m, sol, tau, x + 0.1 * Vec::Unit(3, i)) <= p);
            }
        }
    }
}

TEST_CASE("short rate is rho'x") {
    const CirModel m = family_demo();
    CHECK(short_rate(m, Vec::Zero(3)) == 0.0);
    CHECK(short_rate(m, Vec::Ones(3)) == doctest::Approx(5.5).epsilon(1e-14));
}

TEST_CASE("short rate equals the initial forward slope of the curve") {
    const CirModel m = family_demo();
    const auto sol = solve_riccati(m, 1.0, 11);
    Vec x(3);
    x << 1.0, 0.5, 2.0;
    const double h = 1e-7;
    const double fd = -(std::log(bond_price(m, sol, h, x)) - 0.0) / h;
    CHECK(fd == doctest::Approx(short_rate(m, x)).epsilon(1e-6));
}

TEST_CASE("exponential claim price reduces to the bond at u = 0") {
    const CirModel m = family_demo();
    const auto sol = solve_riccati(m, 2.0, 21);
    Vec x(3);
    x << 1.0, 1.0, 1.0;
    for (double t : {0.5, 1.0, 2.0})
        CHECK(exp_claim_price(m, Vec::Zero(3), t, x) ==
              doctest::Approx(bond_price(m, sol, t, x)).epsilon(1e-9));
}

TEST_CASE("exponential claim at t = 0 is exp(u'x)") {
    const CirModel m = family_demo();
    Vec u(3);
    u << -1.0, -1.0, -2.0;
    Vec x(3);
    x << 1.0, 0.2, 0.7;
    CHECK(exp_claim_price(m, u, 0.0, x) == doctest::Approx(std::exp(u.dot(x))).epsilon(1e-14));
}

TEST_CASE("claim blow-up propagates as an error") {
    const CirModel m = scalar_baseline();
    CHECK_THROWS_AS(exp_claim_price(m, Vec::Constant(1, 3.0), 10.0, Vec::Ones(1)), NumericError);
}

TEST_CASE("vol decomposition vanishes at tau = 0") {
    const CirModel m = family_demo();
    const auto sol = solve_riccati(m, 5.0, 51);
    const auto kd = term_structure_kernel(m);
    const VolDecomposition vd = vol_decomposition(m, kd, sol, 0.0);
    CHECK(vd.z_coeffs.lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK(vd.u_coeffs.lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("family decomposition under the paper maps: u-coefficient is -2/3 B1 B2") {
    const CirModel m = family_demo();
    const auto sol = solve_riccati(m, 6.0, 61);
    const KernelDecomposition kd = paper_maps();
    for (double tau : {0.5, 1.0, 5.0}) {
        const double b1 = closed_form_scalar_b(m.beta(0, 0), m.rho[0], tau);
        const double b2 = closed_form_scalar_b(m.beta(1, 1), m.rho[1], tau);
        const VolDecomposition vd = vol_decomposition(m, kd, sol, tau);
        REQUIRE(vd.u_coeffs.size() == 1);
        CHECK(vd.u_coeffs[0] == doctest::Approx(-2.0 / 3.0 * b1 * b2).epsilon(1e-9));
        CHECK(vd.u_coeffs[0] < 0.0);
        CHECK(vd.z_coeffs[0] == doctest::Approx(b1 * b1 + 2.0 / 3.0 * b1 * b2).epsilon(1e-9));
        CHECK(vd.z_coeffs[1] == doctest::Approx(b2 * b2 + 2.0 / 3.0 * b1 * b2).epsilon(1e-9));
    }
}

TEST_CASE("u-loading is strictly negative for tau > 0 under the canonical maps too") {
    const CirModel m = family_demo();
    const auto sol = solve_riccati(m, 10.0, 101);
    const auto kd = term_structure_kernel(m);
    for (double tau : {0.25, 1.0, 5.0, 10.0}) {
        const VolDecomposition vd = vol_decomposition(m, kd, sol, tau);
        REQUIRE(vd.u_coeffs.size() == 1);
        CHECK(vd.u_coeffs[0] < 0.0);
    }
}

TEST_CASE("reconstruction identity holds on random states") {
    std::mt19937_64 gen(22);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const CirModel m = family_demo();
    const auto sol = solve_riccati(m, 6.0, 61);
    for (const KernelDecomposition& kd : {term_structure_kernel(m), paper_maps()}) {
        for (double tau : {0.5, 1.0, 5.0}) {
            const VolDecomposition vd = vol_decomposition(m, kd, sol, tau);
            const Vec b_tau = sol.eval_B(tau);
            for (int rep = 0; rep < 100; ++rep) {
                const Vec x = Vec::NullaryExpr(3, [&](Eigen::Index) { return 4.0 * u01(gen); });
                const double direct =
                    0.5 * (b_tau.array().square() * m.sigma2.array() * x.array()).sum();
                const double via_zu = vd.z_coeffs.dot(kd.S * x) + vd.u_coeffs.dot(kd.L * x);
                REQUIRE(std::abs(direct - via_zu) <= 1e-10 * std::max(1.0, std::abs(direct)));
            }
        }
    }
}

TEST_CASE("coincident diagonal pair: u-coefficient is exactly zero") {
    const CirModel m = diagonal_repeated();
    const auto sol = solve_riccati(m, 5.0, 51);
    const auto kd = diagonal_kernel(m);
    for (double tau : {0.5, 1.0, 5.0}) {
        const VolDecomposition vd = vol_decomposition(m, kd, sol, tau);
        REQUIRE(vd.u_coeffs.size() == 1);
        CHECK(std::abs(vd.u_coeffs[0]) <= 1e-10);
    }
}

TEST_CASE("m = d decompositions have empty u-coefficients") {
    const CirModel m = scalar_baseline();
    const auto sol = solve_riccati(m, 2.0, 21);
    const auto kd = term_structure_kernel(m);
    const VolDecomposition vd = vol_decomposition(m, kd, sol, 1.0);
    CHECK(vd.u_coeffs.size() == 0);
    CHECK(vd.z_coeffs.size() == 1);
}
