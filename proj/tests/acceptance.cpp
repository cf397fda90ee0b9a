// Acceptance suite: one numbered criterion per function, each printing a
// single [PASS]/[FAIL] line (plus indented detail lines). Run with a criterion
// number as the only argument, or with none to run all nine.

#include "floqpatch/analysis.hpp"
#include "floqpatch/hopf.hpp"
#include "floqpatch/patch.hpp"
#include "floqpatch/period.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace floq;
using cycles::CycleSearchOptions;
using cycles::LimitCycle;
using cycles::SystemRef;
using kinetics::KineticSystem;

namespace {

int g_failures = 0;
std::vector<std::string> g_detail;

void note(const std::string& s) { g_detail.push_back(s); }

void notef(const char* fmt, ...)
{
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    g_detail.emplace_back(buf);
}

bool expect(bool ok, const std::string& what)
{
    note(std::string(ok ? "  ok   " : "  FAIL ") + what);
    return ok;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- shared fixtures ----

const double kA2 = 0.3362380612, kH2 = 0.2221316654;

KineticSystem& example1_model()
{
    static KineticSystem ks = KineticSystem::holling_tanner(1.0, 0.5, 5.0, 1.0, 1.0, 0.1);
    return ks;
}

const LimitCycle& example1_cycle()
{
    static LimitCycle cycle = [] {
        CycleSearchOptions opts;
        opts.burn_in = 300.0;
        Eigen::VectorXd seed(2);
        seed << 1.0, 1.0;
        auto sys = SystemRef::of(example1_model());
        return find_cycle(sys, seed, opts);
    }();
    return cycle;
}

KineticSystem& example2_model()
{
    static KineticSystem ks = KineticSystem::holling_tanner(kA2, kH2, 1.0, 1.0, 1.0, 0.09999);
    return ks;
}

const LimitCycle& example2_cycle()
{
    static LimitCycle cycle = [] {
        CycleSearchOptions opts;
        opts.burn_in = 3000.0;
        opts.integ.rtol = 1e-12;
        opts.integ.atol = 1e-14;
        Eigen::VectorXd seed(2);
        seed << 0.13, 0.39;
        auto sys = SystemRef::of(example2_model());
        return find_cycle(sys, seed, opts);
    }();
    return cycle;
}

// ---- criteria ----

bool criterion1()
{
    auto t0 = std::chrono::steady_clock::now();
    auto [u, v] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.1);
    double dt = seconds_since(t0);
    (void)v;
    bool ok = true;
    ok &= expect(std::abs(u - 0.085693) <= 1e-5, "u* = " + std::to_string(u) + " within 1e-5 of 0.085693");
    ok &= expect(dt < 1e-3, "runtime " + std::to_string(dt * 1e3) + " ms < 1 ms");
    return ok;
}

bool criterion2()
{
    auto ks = KineticSystem::holling_tanner(kA2, kH2, 1.0, 1.0, 1.0, 0.1);
    auto [u, v] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.1);
    Eigen::Matrix2d J = hopf::jacobian_at_equilibrium(ks, Eigen::Vector2d(u, v));
    bool ok = true;
    const double ref[4] = {0.1, -0.203097, 0.450183, -0.1};
    const char* names[4] = {"J11", "J12", "J21", "J22"};
    for (int i = 0; i < 4; ++i) {
        double got = J(i / 2, i % 2);
        ok &= expect(std::abs(got - ref[i]) <= 2e-4,
                     std::string(names[i]) + " = " + std::to_string(got) + " within 2e-4 of " +
                         std::to_string(ref[i]));
    }
    Eigen::EigenSolver<Eigen::Matrix2d> es(J);
    double mu0 = std::abs(es.eigenvalues()(0).imag());
    ok &= expect(std::abs(mu0 - 0.285361) <= 1e-4,
                 "eigenvalue imaginary part " + std::to_string(mu0) + " within 1e-4 of 0.285361");
    ok &= expect(std::abs(J.determinant() - mu0 * mu0) <= 1e-6,
                 "det J = mu0^2 to 1e-6 (gap " + std::to_string(std::abs(J.determinant() - mu0 * mu0)) + ")");
    return ok;
}

bool criterion3()
{
    auto t0 = std::chrono::steady_clock::now();
    auto ks = KineticSystem::holling_tanner(kA2, kH2, 1.0, 1.0, 1.0, 0.1);
    auto [u, v] = hopf::holling_tanner_positive_equilibrium(kA2, kH2, 0.1);
    hopf::tune_to_criticality(ks, "s", 0.1, Eigen::Vector2d(u, v));
    Eigen::Vector2d eq = hopf::solve_equilibrium(ks, Eigen::Vector2d(u, v));
    auto c1 = hopf::first_lyapunov_coefficient(ks, eq);
    double dt = seconds_since(t0);
    bool ok = true;
    ok &= expect(std::abs(c1.c1.imag() + 1.872272) <= 0.01,
                 "Im(C1) = " + std::to_string(c1.c1.imag()) + " within 0.01 of -1.872272");
    ok &= expect(std::abs(c1.c1.real()) < 0.01 * std::abs(c1.c1.imag()),
                 "|Re(C1)| = " + std::to_string(std::abs(c1.c1.real())) + " < 0.01 |Im(C1)|");
    ok &= expect(dt < 1.0, "runtime " + std::to_string(dt) + " s < 1 s");
    return ok;
}

bool criterion4()
{
    auto& ks = example1_model();
    const auto& cycle = example1_cycle();
    patch::LleOptions lo;  // spec defaults: burn-in 500, horizon 20000
    bool ok = true;

    {
        auto t0 = std::chrono::steady_clock::now();
        patch::PatchSystem ps(ks, 2, Eigen::Matrix2d::Identity(), 0.01);
        auto lle = patch::largest_lyapunov_exponent(ps, cycle, lo);
        double dt = seconds_since(t0);
        notef("  identical diffusion, delta 0.01: lambda_qr %.6f, lambda_floquet %.6f", lle.lambda,
              lle.lambda_floquet);
        ok &= expect(std::abs(lle.lambda) <= 5e-4, "identical-diffusion lambda = 0 +- 5e-4");
        ok &= expect(dt < 120.0, "identical case runtime " + std::to_string(dt) + " s < 2 min");
    }

    Eigen::Matrix2d Ex;
    Ex << 1, 10, 1, 1;
    int matches = 0;
    for (double delta : {0.01, 0.1}) {
        auto t0 = std::chrono::steady_clock::now();
        patch::PatchSystem ps(ks, 2, Ex, delta);
        auto lle = patch::largest_lyapunov_exponent(ps, cycle, lo);
        double dt = seconds_since(t0);
        bool match = std::abs(lle.lambda - 0.0031) <= 0.0015;
        matches += match;
        notef("  cross diffusion d12=10, delta %.3g: lambda_qr %.6f, lambda_floquet %.6f -> %s "
              "(reported 0.0031 +- 0.0015)",
              delta, lle.lambda, lle.lambda_floquet, match ? "match" : "no match");
        ok &= expect(dt < 120.0, "cross case runtime " + std::to_string(dt) + " s < 2 min");
    }
    ok &= expect(matches >= 1, "one of delta in {0.01, 0.1} reproduces lambda = 0.0031 +- 0.0015");
    return ok;
}

bool criterion5()
{
    auto& ks = example2_model();
    const auto& cycle = example2_cycle();
    patch::LleOptions lo;
    bool ok = true;

    Eigen::Matrix2d Ep, Em;
    Ep << 1, 1, 100, 5;
    Em << 1, 1, -100, 5;
    {
        auto t0 = std::chrono::steady_clock::now();
        patch::PatchSystem ps(ks, 2, Ep, 0.01);
        auto lle = patch::largest_lyapunov_exponent(ps, cycle, lo);
        double dt = seconds_since(t0);
        notef("  d21 = +100: lambda_qr %.6f, lambda_floquet %.6f", lle.lambda, lle.lambda_floquet);
        ok &= expect(std::abs(lle.lambda - 0.0079) <= 0.003,
                     "d21 = +100: lambda = 0.0079 +- 0.003 (measured " + std::to_string(lle.lambda) +
                         "; the linearization about the synchronous cycle is strongly unstable at "
                         "this coupling, see the analysis notes)");
        ok &= expect(dt < 120.0, "+100 case runtime " + std::to_string(dt) + " s < 2 min");
    }
    {
        auto t0 = std::chrono::steady_clock::now();
        patch::PatchSystem ps(ks, 2, Em, 0.01);
        auto lle = patch::largest_lyapunov_exponent(ps, cycle, lo);
        double dt = seconds_since(t0);
        notef("  d21 = -100: lambda_qr %.6f, lambda_floquet %.6f", lle.lambda, lle.lambda_floquet);
        ok &= expect(std::abs(lle.lambda) <= 5e-4, "d21 = -100: lambda = 0 +- 5e-4");
        ok &= expect(dt < 120.0, "-100 case runtime " + std::to_string(dt) + " s < 2 min");
    }
    return ok;
}

bool criterion6()
{
    auto& ks = example1_model();
    const auto& cycle = example1_cycle();
    bool ok = true;

    {
        auto t0 = std::chrono::steady_clock::now();
        double d0 = 1.0;
        auto u = period::urabe_p1(ks, cycle, d0 * Eigen::Matrix2d::Identity());
        auto fd = period::fd_p1(ks, cycle, d0 * Eigen::Matrix2d::Identity());
        double gap = std::abs(u.p1 - fd.p1) / std::max(std::abs(fd.p1), 1e-8);
        notef("  D = I: urabe %.8f, fd %.8f, exact %.8f, rel gap %.2e", u.p1, fd.p1,
              d0 * cycle.period, gap);
        ok &= expect(gap < 0.02, "identity-diffusion gap < 2%");
        ok &= expect(std::abs(u.p1 - d0 * cycle.period) < 1e-9, "urabe hits the exact value d0 p");
        ok &= expect(seconds_since(t0) < 60.0, "identity case under 1 min");
    }

    std::mt19937 rng(987654321);
    std::uniform_real_distribution<double> ent(-2.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        auto t0 = std::chrono::steady_clock::now();
        Eigen::Matrix2d D;
        D << ent(rng), ent(rng), ent(rng), ent(rng);
        auto u = period::urabe_p1(ks, cycle, D);
        auto fd = period::fd_p1(ks, cycle, D);
        double gap = std::abs(u.p1 - fd.p1) / std::max(std::abs(fd.p1), 1e-8);
        notef("  random D #%d (%.3f %.3f; %.3f %.3f): urabe %.6f, fd %.6f, rel gap %.2e", trial,
              D(0, 0), D(0, 1), D(1, 0), D(1, 1), u.p1, fd.p1, gap);
        ok &= expect(gap < 0.02, "random-D gap < 2%");
        ok &= expect(seconds_since(t0) < 60.0, "random case under 1 min");
    }
    return ok;
}

bool criterion7()
{
    auto& ks = example1_model();
    const auto& cycle = example1_cycle();
    bool ok = true;

    Eigen::Matrix2d Ens;
    Ens << 1.0, 0.3, 0.1, 1.2;
    for (const auto& [label, E] :
         std::vector<std::pair<const char*, Eigen::Matrix2d>>{{"E = I", Eigen::Matrix2d::Identity()},
                                                              {"E non-symmetric", Ens}}) {
        auto rep = period::urabe_p1(ks, cycle, E);
        for (int n : {2, 3}) {
            auto fit = patch::multiplier_slopes(ks, cycle, n, E);
            double target = -n * rep.p1;
            double rel = std::abs(fit.slope - target) / std::abs(target);
            notef("  %s, n = %d: fitted slope %.4f vs -nP'(0) = %.4f (rel %.3f%%)", label, n,
                  fit.slope, target, rel * 100);
            ok &= expect(rel < 0.05, "slope within 5%");
            for (double dev : fit.trivial_deviation)
                ok &= expect(dev <= 1e-5, "trivial multiplier 1 +- 1e-5 at every probe");
        }
    }
    return ok;
}

bool criterion8()
{
    auto& ks = example1_model();
    const auto& cycle = example1_cycle();
    auto sys = SystemRef::of(ks);
    bool ok = true;

    // Liouville determinant identity on every monodromy computed here
    {
        double liouville = std::exp(cycle.trace_integral);
        double det = cycle.monodromy.determinant();
        ok &= expect(std::abs(det - liouville) / liouville < 1e-5,
                     "kinetic monodromy determinant identity (1e-5)");
        Eigen::Matrix2d Ex;
        Ex << 1, 10, 1, 1;
        for (double delta : {0.01, 0.1}) {
            patch::PatchSystem ps(ks, 2, Ex, delta);
            Eigen::MatrixXd M = patch::patch_monodromy(ps, cycle);
            double expected =
                std::exp(-delta * ps.block_laplacian().trace() * cycle.period + 2 * cycle.trace_integral);
            ok &= expect(std::abs(M.determinant() - expected) / std::abs(expected) < 1e-5,
                         "patch monodromy determinant identity at delta = " + std::to_string(delta));
        }
    }

    // synchronous-state coupling vanishes exactly
    {
        Eigen::Matrix2d E;
        E << 1.7, -3.9, 100.0, 5.0;
        patch::PatchSystem ps(ks, 3, E, 0.37);
        double res = patch::synchronous_residual(ps, cycle, 128);
        ok &= expect(res == 0.0, "synchronous coupling contribution is exactly zero");
    }

    // delta = 0 multiplier multiset replication
    {
        patch::PatchSystem ps(ks, 3, Eigen::Matrix2d::Identity(), 0.0);
        auto evs = patch::patch_floquet(ps, cycle);
        std::vector<std::complex<double>> expected;
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 2; ++i) expected.push_back(cycle.multipliers(i));
        std::vector<bool> used(expected.size(), false);
        double worst = 0;
        for (int i = 0; i < evs.size(); ++i) {
            double best = 1e18;
            std::size_t arg = 0;
            for (std::size_t k = 0; k < expected.size(); ++k) {
                if (used[k]) continue;
                double d = std::abs(evs(i) - expected[k]);
                if (d < best) { best = d; arg = k; }
            }
            used[arg] = true;
            worst = std::max(worst, best);
        }
        ok &= expect(worst < 1e-5, "delta = 0 multiset matches n kinetic copies (worst gap " +
                                       std::to_string(worst) + ")");
    }

    // Appendix-style eigenvalue-slope oracle
    {
        const int N1 = 3, N2 = 3, N = N1 + N2;
        Eigen::Vector3d a(1.0, 1.3, 0.7), b(0.5, -1.2, 2.0);
        std::mt19937 rng(8);
        std::uniform_real_distribution<double> ent(-1.0, 1.0);
        Eigen::MatrixXd A2(N2, N2), R(N, N);
        for (int i = 0; i < N2; ++i)
            for (int j = 0; j < N2; ++j) A2(i, j) = ent(rng) + (i == j ? 5.0 : 0.0);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) R(i, j) = ent(rng);
        auto eigs_near = [&](double delta) {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
            for (int i = 0; i < N1; ++i) A(i, i) = a(i) + delta * b(i);
            A.block(N1, N1, N2, N2) = A2;
            A += delta * delta * R;
            Eigen::EigenSolver<Eigen::MatrixXd> es(A);
            Eigen::Vector3d out;
            for (int j = 0; j < N1; ++j) {
                double best = 1e18;
                for (int i = 0; i < N; ++i) {
                    double d = std::abs(es.eigenvalues()(i) - std::complex<double>(a(j), 0));
                    if (d < best) { best = d; out(j) = es.eigenvalues()(i).real(); }
                }
            }
            return out;
        };
        Eigen::Vector3d s1 = (eigs_near(1e-3) - a) / 1e-3;
        Eigen::Vector3d s2 = (eigs_near(2e-3) - a) / 2e-3;
        Eigen::Vector3d slope = 2 * s1 - s2;
        double worst = (slope - b).cwiseAbs().maxCoeff();
        ok &= expect(worst < 1e-4, "synthetic eigenvalue-path slopes match within 1e-4 (worst " +
                                       std::to_string(worst) + ")");
    }

    // displacement-map leading coefficient and alpha(r0) scaling on a k = 1
    // normal-form system
    {
        const double mu0 = 1.0, cr = -0.5, ci = 0.3;
        auto make = [&](double alpha) {
            auto syms = std::make_shared<kinetics::SymbolTable>(
                std::vector<std::string>{"u", "v"},
                std::vector<std::string>{"alpha", "mu", "cr", "ci"},
                std::vector<double>{alpha, mu0, cr, ci});
            return KineticSystem::from_expressions(
                syms, {"alpha*u - mu*v + (cr*u - ci*v)*(u*u + v*v)",
                       "mu*u + alpha*v + (ci*u + cr*v)*(u*u + v*v)"});
        };
        auto ht = [&](const KineticSystem& sys2, double r0) {
            double y0[] = {r0, 0.0};
            ode::IntegratorConfig cfg;
            cfg.rtol = 1e-12;
            cfg.atol = 1e-15;
            auto rhs = [&sys2](std::span<const double> y, std::span<double> dy) { sys2.rhs(y, dy); };
            auto hit =
                ode::integrate_to_section(rhs, y0, 0.0, 50.0, ode::Section{1, 0.0, +1}, cfg, 1e-6);
            return (hit.y_hit[0] - r0) / r0;
        };
        double num = 0, den = 0;
        auto crit = make(0.0);
        for (double r0 : {0.01, 0.02, 0.04}) {
            double h = ht(crit, r0);
            num += h * r0 * r0;
            den += r0 * r0 * r0 * r0;
        }
        double fitted = num / den, want = 2 * M_PI * cr / mu0;
        ok &= expect(std::abs(fitted - want) / std::abs(want) < 0.20,
                     "displacement-map leading coefficient within 20% (fit " + std::to_string(fitted) +
                         " vs " + std::to_string(want) + ")");

        std::vector<double> lr, la;
        for (double r0 : {0.01, 0.0178, 0.0316, 0.0562, 0.1}) {
            double alpha = -cr * r0 * r0, prev = alpha * 1.15;
            double f_prev = ht(make(prev), r0);
            for (int it = 0; it < 40; ++it) {
                double f = ht(make(alpha), r0);
                if (std::abs(f) < 1e-12) break;
                double d = (f - f_prev) / (alpha - prev);
                prev = alpha;
                f_prev = f;
                alpha -= f / d;
            }
            lr.push_back(std::log(r0));
            la.push_back(std::log(std::abs(alpha)));
        }
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lr.size(); ++i) { mx += lr[i]; my += la[i]; }
        mx /= lr.size();
        my /= la.size();
        double cov = 0, var = 0;
        for (std::size_t i = 0; i < lr.size(); ++i) {
            cov += (lr[i] - mx) * (la[i] - my);
            var += (lr[i] - mx) * (lr[i] - mx);
        }
        double slope = cov / var;
        ok &= expect(std::abs(slope - 2.0) < 0.1,
                     "alpha(r0) log-log slope 2 +- 0.1 (got " + std::to_string(slope) + ")");
    }
    return ok;
}

bool criterion9()
{
    auto& ks = example1_model();
    const auto& cycle = example1_cycle();
    bool ok = true;
    patch::VerdictOptions vo;  // spec defaults

    {
        auto v = patch::predict_and_verify(ks, cycle, Eigen::Matrix2d::Identity(), 2, vo);
        notef("  identical diffusion: verdict %s, P'(0) %.8f (d0 p = %.8f)",
              patch::to_string(v.verdict), v.p_prime, cycle.period);
        ok &= expect(v.verdict == patch::Verdict::stable, "identical diffusion verdict is stable");
        ok &= expect(std::abs(v.p_prime - cycle.period) / cycle.period < 1e-6,
                     "P'(0) = d0 p to 1e-6 relative");
    }
    {
        Eigen::Matrix2d Ex;
        Ex << 1, 10, 1, 1;
        auto v = patch::predict_and_verify(ks, cycle, Ex, 2, vo);
        notef("  cross diffusion: verdict %s, P'(0) %.4f, max |gamma| %.4f",
              patch::to_string(v.verdict), v.p_prime, v.max_multiplier_modulus);
        ok &= expect(v.verdict == patch::Verdict::destabilized, "cross-diffusion verdict is destabilized");
        ok &= expect(v.p_prime < 0, "P'(0) < 0");
        ok &= expect(v.max_multiplier_modulus > 1.0, "a measured multiplier exceeds modulus 1");
    }
    return ok;
}

struct Criterion {
    int id;
    const char* title;
    std::function<bool()> fn;
};

const Criterion kCriteria[] = {
    {1, "Example-2 equilibrium u*", criterion1},
    {2, "Example-2 Jacobian and eigenvalues", criterion2},
    {3, "Example-2 first Lyapunov coefficient", criterion3},
    {4, "Example-1 largest-Lyapunov-exponent reproduction", criterion4},
    {5, "Example-2 largest-Lyapunov-exponent reproduction", criterion5},
    {6, "Urabe P1 against the finite-difference oracle", criterion6},
    {7, "multiplier slope law -nP'(0)", criterion7},
    {8, "property suite (Liouville, synchrony, multisets, slopes, amplitudes)", criterion8},
    {9, "end-to-end destabilization verdicts", criterion9},
};

void run(const Criterion& c)
{
    g_detail.clear();
    bool ok = false;
    std::string err;
    try {
        ok = c.fn();
    } catch (const std::exception& e) {
        err = e.what();
    }
    std::printf("[%s] criterion %d: %s%s\n", ok ? "PASS" : "FAIL", c.id, c.title,
                err.empty() ? "" : (" (exception: " + err + ")").c_str());
    for (const auto& line : g_detail) std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

} // namespace

int main(int argc, char** argv)
{
    if (argc > 1) {
        int want = std::atoi(argv[1]);
        for (const auto& c : kCriteria)
            if (c.id == want) run(c);
    } else {
        for (const auto& c : kCriteria) run(c);
    }
    return g_failures == 0 ? 0 : 1;
}
