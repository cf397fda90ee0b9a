#include "floqpatch/hopf.hpp"

#include "floqpatch/ode.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace floq;
using kinetics::KineticSystem;

namespace {

constexpr double kA2 = 0.3362380612;   // Example-2 parameters
constexpr double kH2 = 0.2221316654;

KineticSystem example2(double s) { return KineticSystem::holling_tanner(kA2, kH2, 1.0, 1.0, 1.0, s); }

} // namespace

TEST_CASE("positive equilibrium of the normalized model")
{
    auto [u, v] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.1);
    CHECK(std::abs(u - 0.085693) < 1e-5);
    CHECK(v == doctest::Approx(u / kH2).epsilon(1e-14));
    CHECK(std::abs(v - 0.385776) < 1e-5);

    // residual of the defining quadratic
    double beta = kH2 * 0.1;
    CHECK(std::abs(beta * u * u + (kA2 * beta - beta + 0.1) * u - kA2 * beta) < 1e-12);

    // dividing the quadratic by s shows u* does not depend on s at all
    auto [u0, v0] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 1e-6);
    CHECK(u0 == doctest::Approx(u).epsilon(1e-12));
    (void)v0;

    // degenerate limit: the beta-grouping beta (u+a)(u-1) + s u = 0 is
    // dominated by its first term as h grows, so u* -> 1
    auto [u1, v1] = hopf::holling_tanner_positive_equilibrium(kA2, 1e6, 0.1);
    CHECK(std::abs(u1 - 1.0) < 1e-3);
    (void)v1;
}

TEST_CASE("weak-focus residuals vanish at the published point")
{
    auto [u, v] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.1);
    (void)v;
    auto [r2, r3] = hopf::weak_focus_order2_residuals(kA2, u, 0.1);
    CHECK(std::abs(r2) < 1e-4);
    CHECK(std::abs(r3) < 1e-3);

    // a = 0 collapses the cubic residual to -3 u^3
    auto [q2, q3] = hopf::weak_focus_order2_residuals(0.0, 0.5, 0.1);
    (void)q2;
    CHECK(q3 == doctest::Approx(-3 * 0.125).epsilon(1e-14));
}

TEST_CASE("independent Newton re-solve of the three-equation system")
{
    auto sol = hopf::solve_weak_focus_order2(0.1, 0.3, 0.1, 0.2);
    CHECK(std::abs(sol.a - kA2) < 1e-5);
    CHECK(std::abs(sol.h - kH2) < 1e-5);
    CHECK(std::abs(sol.ustar - 0.085693) < 1e-5);
}

TEST_CASE("Jacobian at the Example-2 equilibrium matches the published entries")
{
    auto ks = example2(0.1);
    auto [u, v] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.1);
    Eigen::Matrix2d J = hopf::jacobian_at_equilibrium(ks, Eigen::Vector2d(u, v));
    CHECK(std::abs(J(0, 0) - 0.1) < 2e-4);
    CHECK(std::abs(J(0, 1) + 0.203097) < 2e-4);
    CHECK(std::abs(J(1, 0) - 0.450183) < 2e-4);
    CHECK(std::abs(J(1, 1) + 0.1) < 2e-4);

    // purely imaginary eigenvalues +- i 0.285361
    Eigen::EigenSolver<Eigen::Matrix2d> es(J);
    auto evs = es.eigenvalues();
    CHECK(std::abs(evs(0).real()) < 1e-5);
    CHECK(std::abs(std::abs(evs(0).imag()) - 0.285361) < 1e-4);

    // det J = mu0^2
    double mu0 = std::abs(evs(0).imag());
    CHECK(std::abs(J.determinant() - mu0 * mu0) < 1e-6);

    // not-an-equilibrium guard
    CHECK_THROWS_WITH_AS(hopf::jacobian_at_equilibrium(ks, Eigen::Vector2d(0.5, 0.5)),
                         doctest::Contains("not an equilibrium"), Error);
}

TEST_CASE("perturbed trace and determinant")
{
    SUBCASE("eps = 0 reduces to (tr J, det J)")
    {
        Eigen::Matrix2d J, D;
        J << 0.3, -0.7, 1.1, -0.2;
        D << 1, 2, 3, 4;
        auto [T, Dt] = hopf::perturbed_trace_det(J, D, 0.0);
        CHECK(T == doctest::Approx(J.trace()).epsilon(1e-15));
        CHECK(Dt == doctest::Approx(J.determinant()).epsilon(1e-15));
    }
    SUBCASE("matches the direct matrix route for random inputs")
    {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> ent(-2.0, 2.0), eps(-0.2, 0.2);
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::Matrix2d J, D;
            J << ent(rng), ent(rng), ent(rng), ent(rng);
            D << ent(rng), ent(rng), ent(rng), ent(rng);
            double e = eps(rng);
            Eigen::Matrix2d M = Eigen::Matrix2d::Identity() + e * D;
            if (std::abs(M.determinant()) < 1e-3) continue;
            Eigen::Matrix2d adj;
            adj << 1 + e * D(1, 1), -e * D(0, 1), -e * D(1, 0), 1 + e * D(0, 0);
            Eigen::Matrix2d Je = adj * J / M.determinant();
            auto [T, Dt] = hopf::perturbed_trace_det(J, D, e);
            CHECK(std::abs(T - Je.trace()) < 1e-12 * std::max(1.0, std::abs(T)));
            CHECK(std::abs(Dt - Je.determinant()) < 1e-12 * std::max(1.0, std::abs(Dt)));
        }
    }
    SUBCASE("sign of dT/deps at criticality is the bracket's sign")
    {
        Eigen::Matrix2d J, D;
        J << 0.25, -0.9, 0.6, -0.25;  // trace 0
        D << 1, 2, -3, 0.5;
        double bracket = D(1, 1) * J(0, 0) + D(0, 0) * J(1, 1) - D(0, 1) * J(1, 0) - D(1, 0) * J(0, 1);
        double h = 1e-7;
        auto [Tp, Dp] = hopf::perturbed_trace_det(J, D, +h);
        auto [Tm, Dm] = hopf::perturbed_trace_det(J, D, -h);
        double slope = (Tp - Tm) / (2 * h);
        CHECK(slope == doctest::Approx(bracket).epsilon(1e-6));
        (void)Dp;
        (void)Dm;
    }
    SUBCASE("M(eps) = 0 is rejected")
    {
        Eigen::Matrix2d J = Eigen::Matrix2d::Identity();
        CHECK_THROWS_AS(hopf::perturbed_trace_det(J, -Eigen::Matrix2d::Identity(), 1.0), Error);
    }
}

TEST_CASE("transversality rate")
{
    SUBCASE("Example 2 in s: A' = -1/2")
    {
        auto ks = example2(0.1);
        auto [u, v] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.1);
        double ap = hopf::transversality_rate(ks, "s", 0.1, Eigen::Vector2d(u, v));
        CHECK(ap == doctest::Approx(-0.5).epsilon(1e-6));
    }
    SUBCASE("parameter entering only the second equation: A' = (d g_v/d alpha)/2")
    {
        auto syms = std::make_shared<kinetics::SymbolTable>(
            std::vector<std::string>{"u", "v"},
            std::vector<std::string>{"alpha", "beta"}, std::vector<double>{0.0, 3.0});
        // equilibrium fixed at the origin for every alpha
        auto ks = KineticSystem::from_expressions(syms, {"-u - v", "u - v + alpha*v"});
        double ap = hopf::transversality_rate(ks, "alpha", 0.0, Eigen::Vector2d(0, 0));
        CHECK(ap == doctest::Approx(0.5).epsilon(1e-8));
        // unused parameter: zero rate
        double zp = hopf::transversality_rate(ks, "beta", 3.0, Eigen::Vector2d(0, 0));
        CHECK(std::abs(zp) < 1e-8);
    }
}

TEST_CASE("first Lyapunov coefficient")
{
    SUBCASE("synthetic normal form recovers its own coefficient")
    {
        const double cr = -3.0 / 7, ci = 2.0 / 5;
        auto syms = std::make_shared<kinetics::SymbolTable>(
            std::vector<std::string>{"u", "v"},
            std::vector<std::string>{"cr", "ci"}, std::vector<double>{cr, ci});
        auto ks = KineticSystem::from_expressions(
            syms, {"-v + (cr*u - ci*v)*(u*u + v*v)", "u + (ci*u + cr*v)*(u*u + v*v)"});
        auto res = hopf::first_lyapunov_coefficient(ks, Eigen::Vector2d(0, 0));
        CHECK(res.mu0 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(res.c1.real() == doctest::Approx(cr).epsilon(1e-10));
        CHECK(res.c1.imag() == doctest::Approx(ci).epsilon(1e-10));
    }
    SUBCASE("linear systems have C1 = 0")
    {
        auto syms = std::make_shared<kinetics::SymbolTable>(
            std::vector<std::string>{"u", "v"}, std::vector<std::string>{}, std::vector<double>{});
        auto ks = KineticSystem::from_expressions(syms, {"-2*v", "0.5*u"});
        auto res = hopf::first_lyapunov_coefficient(ks, Eigen::Vector2d(0, 0));
        CHECK(std::abs(res.c1) < 1e-14);
        CHECK(res.mu0 == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("Example 2: Im(C1) matches the published value, Re(C1) vanishes")
    {
        auto ks = example2(0.1);
        auto [u, v] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.1);
        double s_star = hopf::tune_to_criticality(ks, "s", 0.1, Eigen::Vector2d(u, v));
        CHECK(std::abs(s_star - 0.1) < 1e-4);
        Eigen::Vector2d eq = hopf::solve_equilibrium(ks, Eigen::Vector2d(u, v));
        auto res = hopf::first_lyapunov_coefficient(ks, eq);
        CHECK(std::abs(res.c1.imag() + 1.872272) < 0.01);
        CHECK(std::abs(res.c1.real()) < 0.01 * std::abs(res.c1.imag()));
        CHECK(std::abs(res.mu0 - 0.285361) < 1e-4);
    }
    SUBCASE("rejects non-critical equilibria")
    {
        auto ks = example2(0.05);
        Eigen::Vector2d eq = hopf::solve_equilibrium(
            ks, Eigen::Vector2d(hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.05).first,
                                hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.05).second));
        CHECK_THROWS_WITH_AS(hopf::first_lyapunov_coefficient(ks, eq),
                             doctest::Contains("not at criticality"), Error);
    }
}

TEST_CASE("period-slope destabilization conditions")
{
    Eigen::Matrix2d J;
    J << 0.1, -0.203097, 0.450183, -0.1;
    const double mu0 = 0.285361;

    SUBCASE("identical diffusion never destabilizes: S = 2 mu0 d0 > 0")
    {
        double d0 = 0.8;
        std::vector<std::complex<double>> coeffs{{-1.0, 0.5}};
        auto ev = hopf::hopf_period_eps_slope(J, mu0, d0 * Eigen::Matrix2d::Identity(), 1, 1, coeffs);
        CHECK(ev.branch == hopf::SlopeBranch::c2);
        // bracket = d0 tr J = 0 at criticality
        CHECK(std::abs(ev.bracket) < 1e-12);
        CHECK(ev.value == doctest::Approx(2 * mu0 * d0).epsilon(1e-12));
        CHECK(ev.prediction == hopf::SlopePrediction::not_destabilizing);
    }
    SUBCASE("zero diffusion is inconclusive")
    {
        std::vector<std::complex<double>> coeffs{{-1.0, 0.5}};
        auto ev = hopf::hopf_period_eps_slope(J, mu0, Eigen::Matrix2d::Zero(), 1, 1, coeffs);
        CHECK(ev.value == 0.0);
        CHECK(ev.prediction == hopf::SlopePrediction::inconclusive);
    }
    SUBCASE("Example-2 bracket values for d21 = +-100")
    {
        Eigen::Matrix2d Dp, Dm;
        Dp << 1, 1, 100, 5;
        Dm << 1, 1, -100, 5;
        std::vector<std::complex<double>> coeffs{{0.0, -1.872272}};
        auto evp = hopf::hopf_period_eps_slope(J, mu0, Dp, 2, 1, coeffs);
        auto evm = hopf::hopf_period_eps_slope(J, mu0, Dm, 2, 1, coeffs);
        CHECK(evp.bracket == doctest::Approx(20.26).epsilon(2e-3));
        CHECK(evm.bracket == doctest::Approx(-20.36).epsilon(2e-3));
        CHECK(evp.branch == hopf::SlopeBranch::c1);
        // Im(C1) < 0: the (C1) product is positive (destabilizing) for the
        // negative bracket only
        CHECK(evp.prediction == hopf::SlopePrediction::not_destabilizing);
        CHECK(evm.prediction == hopf::SlopePrediction::destabilizing);
    }
    SUBCASE("bad inputs")
    {
        std::vector<std::complex<double>> coeffs{{-1.0, 0.5}};
        CHECK_THROWS_AS(hopf::hopf_period_eps_slope(J, mu0, Eigen::Matrix2d::Identity(), 1, 2, coeffs),
                        Error);
        std::vector<std::complex<double>> unstable{{+1.0, 0.5}};
        CHECK_THROWS_WITH_AS(
            hopf::hopf_period_eps_slope(J, mu0, Eigen::Matrix2d::Identity(), 1, 1, unstable),
            doctest::Contains("Re(C_k) >= 0"), Error);
    }
}

namespace {

// realified normal form with a linear growth-rate parameter:
// z' = (alpha + i mu0) z + c z^2 z~
KineticSystem normal_form_model(double alpha, double mu0, double cr, double ci)
{
    auto syms = std::make_shared<kinetics::SymbolTable>(
        std::vector<std::string>{"u", "v"},
        std::vector<std::string>{"alpha", "mu", "cr", "ci"},
        std::vector<double>{alpha, mu0, cr, ci});
    return KineticSystem::from_expressions(
        syms, {"alpha*u - mu*v + (cr*u - ci*v)*(u*u + v*v)",
               "mu*u + alpha*v + (ci*u + cr*v)*(u*u + v*v)"});
}

// H~(r0) = (r(return) - r0)/r0 for the counterclockwise flow, section v = 0
double displacement_tilde(const KineticSystem& ks, double r0)
{
    double y0[] = {r0, 0.0};
    ode::IntegratorConfig cfg;
    cfg.rtol = 1e-12;
    cfg.atol = 1e-15;
    auto rhs = [&ks](std::span<const double> y, std::span<double> dy) { ks.rhs(y, dy); };
    auto hit = ode::integrate_to_section(rhs, y0, 0.0, 50.0, ode::Section{1, 0.0, +1}, cfg, 1e-6);
    return (hit.y_hit[0] - r0) / r0;
}

} // namespace

TEST_CASE("amplitude oracle: the displacement map's leading coefficient is 2 pi Re(C1)/mu0")
{
    const double mu0 = 1.0, cr = -0.5, ci = 0.3;
    auto ks = normal_form_model(0.0, mu0, cr, ci);
    // fit H~ = c r0^2 over the three radii
    double num = 0, den = 0;
    for (double r0 : {0.01, 0.02, 0.04}) {
        double ht = displacement_tilde(ks, r0);
        num += ht * r0 * r0;
        den += r0 * r0 * r0 * r0;
    }
    double fitted = num / den;
    double expected = 2 * M_PI * cr / mu0;
    CHECK(std::abs(fitted - expected) / std::abs(expected) < 0.20);
}

TEST_CASE("bifurcation-parameter scaling: log-log slope 2 over a decade of radii")
{
    const double mu0 = 1.0, cr = -0.5, ci = 0.3;
    // alpha(r0) solves H(r0, alpha) = 0; expect alpha ~ -(cr/A') r0^2, A' = 1
    std::vector<double> lr, la;
    for (double r0 : {0.01, 0.0178, 0.0316, 0.0562, 0.1}) {
        double alpha = -cr * r0 * r0;  // initial guess from the expansion
        double prev_alpha = alpha * 1.15;
        auto H = [&](double a) { return displacement_tilde(normal_form_model(a, mu0, cr, ci), r0); };
        double f_prev = H(prev_alpha);
        for (int it = 0; it < 40; ++it) {
            double f = H(alpha);
            if (std::abs(f) < 1e-12) break;
            double d = (f - f_prev) / (alpha - prev_alpha);
            prev_alpha = alpha;
            f_prev = f;
            alpha -= f / d;
        }
        lr.push_back(std::log(r0));
        la.push_back(std::log(std::abs(alpha)));
    }
    // least-squares slope of ln alpha against ln r0
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
        mx += lr[i];
        my += la[i];
    }
    mx /= lr.size();
    my /= la.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
        num += (lr[i] - mx) * (la[i] - my);
        den += (lr[i] - mx) * (lr[i] - mx);
    }
    double slope = num / den;
    CHECK(std::abs(slope - 2.0) < 0.1);
}
