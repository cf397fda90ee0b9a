#include "floqpatch/period.hpp"

#include <doctest.h>

#include <random>

using namespace floq;
using cycles::CycleSearchOptions;
using cycles::LimitCycle;
using cycles::SystemRef;
using kinetics::KineticSystem;

namespace {

struct Fixture {
    KineticSystem ks = KineticSystem::holling_tanner(1.0, 0.5, 5.0, 1.0, 1.0, 0.1);
    LimitCycle cycle;
    Fixture()
    {
        CycleSearchOptions opts;
        opts.burn_in = 300.0;
        Eigen::VectorXd seed(2);
        seed << 1.0, 1.0;
        auto sys = SystemRef::of(ks);
        cycle = find_cycle(sys, seed, opts);
    }
};

Fixture& fixture()
{
    static Fixture f;
    return f;
}

} // namespace

TEST_CASE("identical diffusion: P1 = d0 p exactly, I(t) branch vanishes")
{
    auto& f = fixture();
    for (double d0 : {1.0, 0.35, -2.0}) {
        auto rep = period::urabe_p1(f.ks, f.cycle, d0 * Eigen::Matrix2d::Identity());
        CHECK(rep.p1 == doctest::Approx(d0 * f.cycle.period).epsilon(1e-12));
        CHECK(rep.method == period::P1Method::identical_diffusion);
    }
}

TEST_CASE("zero diffusion: P1 = 0")
{
    auto& f = fixture();
    auto rep = period::urabe_p1(f.ks, f.cycle, Eigen::Matrix2d::Zero());
    CHECK(rep.p1 == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("quadrature report: gamma~ and the halving gap")
{
    auto& f = fixture();
    Eigen::Matrix2d D;
    D << 1, 10, 1, 1;
    auto rep = period::urabe_p1(f.ks, f.cycle, D);
    CHECK(rep.gamma_tilde == doctest::Approx(f.cycle.max_nontrivial_modulus()).epsilon(1e-5));
    CHECK(rep.samples == 4096);
    CHECK(std::abs(rep.error_estimate) < 1e-4 * std::abs(rep.p1));
    // independently computed value for this configuration
    CHECK(rep.p1 == doctest::Approx(-106.9974).epsilon(1e-3));
}

TEST_CASE("finite-difference route: identical diffusion slope is p within 0.1%")
{
    auto& f = fixture();
    auto rep = period::fd_p1(f.ks, f.cycle, Eigen::Matrix2d::Identity());
    CHECK(rep.method == period::P1Method::finite_difference);
    CHECK(std::abs(rep.p1 - f.cycle.period) / f.cycle.period < 1e-3);

    auto zero = period::fd_p1(f.ks, f.cycle, Eigen::Matrix2d::Zero());
    CHECK(std::abs(zero.p1) < 1e-6 * f.cycle.period);
}

TEST_CASE("Richardson consistency: the two half-step slopes agree to 1%")
{
    auto& f = fixture();
    Eigen::Matrix2d D;
    D << 1, 10, 1, 1;
    auto rep = period::fd_p1(f.ks, f.cycle, D);
    REQUIRE(rep.fd_slopes.size() == 2);
    CHECK(std::abs(rep.fd_slopes[0] - rep.fd_slopes[1]) / std::abs(rep.fd_slopes[1]) < 0.01);
}

TEST_CASE("cross-validation: urabe vs finite differences within 1% on the example matrix")
{
    auto& f = fixture();
    Eigen::Matrix2d D;
    D << 1, 10, 1, 1;
    auto u = period::urabe_p1(f.ks, f.cycle, D);
    auto fd = period::fd_p1(f.ks, f.cycle, D);
    CHECK(std::abs(u.p1 - fd.p1) / std::max(std::abs(fd.p1), 1e-8) < 0.01);
}

TEST_CASE("cross-validation on random diffusion matrices")
{
    auto& f = fixture();
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> ent(-2.0, 2.0);
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::Matrix2d D;
        D << ent(rng), ent(rng), ent(rng), ent(rng);
        auto u = period::urabe_p1(f.ks, f.cycle, D);
        auto fd = period::fd_p1(f.ks, f.cycle, D);
        CHECK(std::abs(u.p1 - fd.p1) / std::max(std::abs(fd.p1), 1e-8) < 0.02);
    }
}

TEST_CASE("property: P1 is linear in the diffusion matrix")
{
    auto& f = fixture();
    Eigen::Matrix2d D1, D2;
    D1 << 0.7, -1.2, 0.4, 1.1;
    D2 << -0.3, 2.0, 1.5, -0.8;
    double a = period::urabe_p1(f.ks, f.cycle, D1).p1;
    double b = period::urabe_p1(f.ks, f.cycle, D2).p1;
    double ab = period::urabe_p1(f.ks, f.cycle, D1 + D2).p1;
    CHECK(std::abs(ab - (a + b)) / std::max(std::abs(ab), 1e-8) < 1e-6);
}

TEST_CASE("property: P1 is invariant under moving the anchor along the orbit")
{
    auto& f = fixture();
    double umin = 1e9, umax = -1e9;
    for (int k = 0; k < 512; ++k) {
        double u = f.cycle.state_at(f.cycle.period * k / 512)(0);
        umin = std::min(umin, u);
        umax = std::max(umax, u);
    }
    CycleSearchOptions opts;
    opts.burn_in = 300.0;
    opts.section = ode::Section{0, umin + 0.3 * (umax - umin), +1};
    Eigen::VectorXd seed(2);
    seed << 1.0, 1.0;
    auto sys = SystemRef::of(f.ks);
    auto shifted = find_cycle(sys, seed, opts);

    Eigen::Matrix2d D;
    D << 1, 10, 1, 1;
    double p1a = period::urabe_p1(f.ks, f.cycle, D).p1;
    double p1b = period::urabe_p1(f.ks, shifted, D).p1;
    CHECK(std::abs(p1a - p1b) / std::abs(p1a) < 1e-6);
}

TEST_CASE("urabe_p1 rejects gamma~ at 1 (non-hyperbolic cycles)")
{
    auto syms = std::make_shared<kinetics::SymbolTable>(
        std::vector<std::string>{"u", "v"}, std::vector<std::string>{}, std::vector<double>{});
    auto ks = KineticSystem::from_expressions(syms, {"-v", "u"});
    CycleSearchOptions opts;
    opts.burn_in = 0.0;
    opts.scan_time = 10.0;
    Eigen::VectorXd seed(2);
    seed << 1.0, 0.0;
    auto sys = SystemRef::of(ks);
    auto circle = find_cycle(sys, seed, opts);
    CHECK_THROWS_WITH_AS(period::urabe_p1(ks, circle, Eigen::Matrix2d::Identity()),
                         doctest::Contains("singular as gamma~"), Error);
}

TEST_CASE("fd_p1 validates its inputs")
{
    auto& f = fixture();
    CHECK_THROWS_AS(period::fd_p1(f.ks, f.cycle, Eigen::Matrix2d::Identity(), {}), Error);
    CHECK_THROWS_AS(period::fd_p1(f.ks, f.cycle, Eigen::Matrix2d::Identity(), {-1e-3}), Error);
    CHECK_THROWS_AS(
        period::fd_p1(f.ks, f.cycle, -1000.0 * Eigen::Matrix2d::Identity(), {1e-3, 5e-4}), Error);
}
