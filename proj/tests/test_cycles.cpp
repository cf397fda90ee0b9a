#include "floqpatch/cycles.hpp"

#include <doctest.h>

#include <cmath>

using namespace floq;
using cycles::CycleSearchOptions;
using cycles::find_cycle;
using cycles::LimitCycle;
using cycles::SystemRef;
using kinetics::KineticSystem;

namespace {

KineticSystem example1() { return KineticSystem::holling_tanner(1.0, 0.5, 5.0, 1.0, 1.0, 0.1); }

LimitCycle example1_cycle(const KineticSystem& ks)
{
    CycleSearchOptions opts;
    opts.burn_in = 300.0;
    Eigen::VectorXd seed(2);
    seed << 1.0, 1.0;
    auto sys = SystemRef::of(ks);
    return find_cycle(sys, seed, opts);
}

} // namespace

TEST_CASE("Example-1 cycle: period, multipliers, stability")
{
    auto ks = example1();
    auto cycle = example1_cycle(ks);

    // independently computed with a separate integrator implementation
    CHECK(cycle.period == doctest::Approx(26.9255451).epsilon(1e-5));
    CHECK(cycle.stability == cycles::Stability::attracting);

    // trivial multiplier within 1e-5 of one
    CHECK(std::abs(cycle.trivial_multiplier() - std::complex<double>(1, 0)) < 1e-5);

    // nontrivial multiplier strictly inside (0, 1)
    double g = cycle.max_nontrivial_modulus();
    CHECK(g > 0.0);
    CHECK(g < 1.0);
    CHECK(g == doctest::Approx(0.0293120).epsilon(1e-3));

    // the cycle surrounds the unstable focus at u = -3 + sqrt(14)
    double ustar = -3.0 + std::sqrt(14.0);
    double umin = 1e9, umax = -1e9;
    for (int k = 0; k < 256; ++k) {
        Eigen::VectorXd y = cycle.state_at(cycle.period * k / 256);
        umin = std::min(umin, y(0));
        umax = std::max(umax, y(0));
    }
    CHECK(umin < ustar);
    CHECK(umax > ustar);

    // orbit closes
    CHECK(cycle.closure_error < 1e-7);
}

TEST_CASE("monodromy: trivial eigenvector and the determinant identity")
{
    auto ks = example1();
    auto cycle = example1_cycle(ks);
    auto sys = SystemRef::of(ks);

    // M phi'(0) = phi'(0)
    Eigen::VectorXd v0 = cycle.velocity_at(0.0, sys);
    Eigen::VectorXd Mv = cycle.monodromy * v0;
    CHECK((Mv - v0).norm() / v0.norm() < 1e-6);

    // det M = exp(int tr J)
    double det = cycle.monodromy.determinant();
    double liouville = std::exp(cycle.trace_integral);
    CHECK(std::abs(det - liouville) / liouville < 1e-5);

    // product of multipliers matches as well
    std::complex<double> prod = 1.0;
    for (int i = 0; i < cycle.multipliers.size(); ++i) prod *= cycle.multipliers(i);
    CHECK(std::abs(std::abs(prod) - liouville) / liouville < 1e-5);
}

TEST_CASE("nontrivial_multiplier_2d agrees with the eigenvalue route")
{
    auto ks = example1();
    auto cycle = example1_cycle(ks);
    auto sys = SystemRef::of(ks);
    double g_int = cycles::nontrivial_multiplier_2d(sys, cycle);
    double g_eig = cycle.max_nontrivial_modulus();
    CHECK(std::abs(g_int - g_eig) / g_eig < 1e-5);
    CHECK(g_int < 1.0);  // stable cycle
}

TEST_CASE("harmonic oscillator: continuum of closed orbits is non-hyperbolic")
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
    auto cycle = find_cycle(sys, seed, opts);
    CHECK(cycle.period == doctest::Approx(2 * M_PI).epsilon(1e-8));
    CHECK(cycle.stability == cycles::Stability::non_hyperbolic);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(cycle.multipliers(i) - std::complex<double>(1, 0)) < 1e-6);

    // gamma~ = 1 from the trace route (tr J = 0)
    CHECK(cycles::nontrivial_multiplier_2d(sys, cycle) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("section-level invariance of the period and multipliers")
{
    auto ks = example1();
    auto base = example1_cycle(ks);
    auto sys = SystemRef::of(ks);

    // move the section level along the cycle's u-range
    double umin = 1e9, umax = -1e9;
    for (int k = 0; k < 512; ++k) {
        double u = base.state_at(base.period * k / 512)(0);
        umin = std::min(umin, u);
        umax = std::max(umax, u);
    }
    CycleSearchOptions opts;
    opts.burn_in = 300.0;
    opts.section = ode::Section{0, umin + 0.7 * (umax - umin), +1};
    Eigen::VectorXd seed(2);
    seed << 1.0, 1.0;
    auto moved = find_cycle(sys, seed, opts);

    CHECK(std::abs(moved.period - base.period) / base.period < 1e-8);
    // multiplier multiset invariant under the time-origin shift (similarity)
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(moved.multipliers(i) - base.multipliers(i)) < 1e-6);
}

TEST_CASE("minimal period: p/2 and p/3 do not close the orbit")
{
    auto ks = example1();
    auto cycle = example1_cycle(ks);
    for (int k : {2, 3}) {
        Eigen::VectorXd y = cycle.state_at(cycle.period / k);
        CHECK((y - cycle.anchor).norm() > 1e-5);
    }
}

TEST_CASE("no recurrence: trajectories into an equilibrium are rejected")
{
    // strongly damped spiral into the origin
    auto syms = std::make_shared<kinetics::SymbolTable>(
        std::vector<std::string>{"u", "v"}, std::vector<std::string>{}, std::vector<double>{});
    auto ks = KineticSystem::from_expressions(syms, {"-u - v", "u - v"});
    CycleSearchOptions opts;
    opts.burn_in = 50.0;
    Eigen::VectorXd seed(2);
    seed << 1.0, 0.0;
    auto sys = SystemRef::of(ks);
    CHECK_THROWS_WITH_AS(find_cycle(sys, seed, opts), doctest::Contains("no recurrence"), Error);
}

TEST_CASE("Example-2 small cycle near the weak focus")
{
    auto ks = KineticSystem::holling_tanner(0.3362380612, 0.2221316654, 1.0, 1.0, 1.0, 0.09999);
    CycleSearchOptions opts;
    opts.burn_in = 3000.0;
    opts.integ.rtol = 1e-12;
    opts.integ.atol = 1e-14;
    Eigen::VectorXd seed(2);
    seed << 0.13, 0.39;
    auto sys = SystemRef::of(ks);
    auto cycle = find_cycle(sys, seed, opts);

    CHECK(cycle.period == doctest::Approx(22.0692).epsilon(1e-4));
    CHECK(cycle.stability == cycles::Stability::attracting);
    double g = cycles::nontrivial_multiplier_2d(sys, cycle);
    // weak focus of order two: gamma~ = exp(-4 A p) with A = (0.1 - s)/2
    double A = (0.1 - 0.09999) / 2;
    CHECK(g == doctest::Approx(std::exp(-4 * A * cycle.period)).epsilon(1e-5));
}
