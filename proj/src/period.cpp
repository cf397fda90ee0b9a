#include "floqpatch/period.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace floq::period {

const char* to_string(P1Method m)
{
    switch (m) {
        case P1Method::urabe: return "urabe";
        case P1Method::finite_difference: return "finite-difference";
        case P1Method::identical_diffusion: return "identical-diffusion";
    }
    return "?";
}

namespace {

// One trapezoid pass at a given resolution. h(t) and I(t) are accumulated by
// the same rule as the outer integral.
double urabe_quadrature(const kinetics::KineticSystem& ks, const cycles::LimitCycle& cycle,
                        const Eigen::Matrix2d& D, int N, double& gamma_out)
{
    const double p = cycle.period;
    const double dt = p / N;
    std::vector<double> f(N + 1), g(N + 1), fu(N + 1), fv(N + 1), gu(N + 1), gv(N + 1);
    std::vector<double> y(2);
    Eigen::MatrixXd J;
    for (int k = 0; k <= N; ++k) {
        cycle.orbit_->eval_components(k * dt, 0, 2, y);
        ks.jacobian(y, J);
        std::vector<double> F(2);
        ks.rhs(y, F);
        f[k] = F[0];
        g[k] = F[1];
        fu[k] = J(0, 0);
        fv[k] = J(0, 1);
        gu[k] = J(1, 0);
        gv[k] = J(1, 1);
    }

    const double d11 = D(0, 0), d12 = D(0, 1), d21 = D(1, 0), d22 = D(1, 1);

    // h(t) = int_0^t (f_u + g_v)
    std::vector<double> h(N + 1, 0.0);
    for (int k = 1; k <= N; ++k)
        h[k] = h[k - 1] + 0.5 * dt * ((fu[k - 1] + gv[k - 1]) + (fu[k] + gv[k]));
    const double gamma = std::exp(h[N]);
    gamma_out = gamma;
    if (gamma >= 1.0 - 1e-6)
        fail(ErrorCode::numerical, "urabe_p1: formula is singular as gamma~ -> 1 (got " +
                                       std::to_string(gamma) + ")");

    // I(t) = e^{h(t)} int_0^t e^{-h(s)} (f g1 - g f1) ds
    std::vector<double> I(N + 1, 0.0);
    {
        double acc = 0, prev = 0;
        for (int k = 0; k <= N; ++k) {
            double f1 = -(d11 * f[k] + d12 * g[k]);
            double g1 = -(d21 * f[k] + d22 * g[k]);
            double w = std::exp(-h[k]) * (f[k] * g1 - g[k] * f1);
            if (k > 0) acc += 0.5 * dt * (prev + w);
            prev = w;
            I[k] = std::exp(h[k]) * acc;
        }
    }

    double integral = 0, prev = 0;
    for (int k = 0; k <= N; ++k) {
        double q2 = f[k] * f[k] + g[k] * g[k];
        if (q2 < 1e-12)
            fail(ErrorCode::numerical, "urabe_p1: cycle passes through an equilibrium (f^2+g^2 < 1e-12)");
        double f1 = -(d11 * f[k] + d12 * g[k]);
        double g1 = -(d21 * f[k] + d22 * g[k]);
        // The symmetric-part kernel. Note (f_v + g_u): the off-diagonal
        // symmetric part of J enters here, alongside 2 f g (f_u - g_v).
        double K = (2 * f[k] * g[k] * (fu[k] - gv[k]) + (g[k] * g[k] - f[k] * f[k]) * (fv[k] + gu[k])) /
                   (q2 * std::sqrt(q2));
        double rho = (I[k] + I[N] * std::exp(h[k]) / (1.0 - gamma)) / std::sqrt(q2);
        double w = K * rho - (f[k] * f1 + g[k] * g1) / q2;
        if (k > 0) integral += 0.5 * dt * (prev + w);
        prev = w;
    }
    return integral;
}

} // namespace

PeriodDerivativeReport urabe_p1(const kinetics::KineticSystem& ks, const cycles::LimitCycle& cycle,
                                const Eigen::Matrix2d& D, int samples)
{
    if (ks.dim() != 2 || cycle.dim() != 2)
        fail(ErrorCode::invalid_argument, "urabe_p1 requires a planar kinetic system");
    if (samples < 16) fail(ErrorCode::invalid_argument, "urabe_p1: too few quadrature samples");

    PeriodDerivativeReport rep;
    rep.period = cycle.period;
    rep.samples = samples;

    bool identical = std::abs(D(0, 1)) == 0.0 && std::abs(D(1, 0)) == 0.0 && D(0, 0) == D(1, 1);
    rep.method = identical ? P1Method::identical_diffusion : P1Method::urabe;

    double gamma = 0;
    double full = urabe_quadrature(ks, cycle, D, samples, gamma);
    double half = urabe_quadrature(ks, cycle, D, samples / 2, gamma);
    rep.gamma_tilde = gamma;
    rep.p1 = full;
    rep.error_estimate = std::abs(full - half);
    return rep;
}

PeriodDerivativeReport fd_p1(const kinetics::KineticSystem& ks, const cycles::LimitCycle& cycle,
                             const Eigen::MatrixXd& D, std::vector<double> eps_grid,
                             const ode::IntegratorConfig& integ)
{
    if (eps_grid.empty()) fail(ErrorCode::invalid_argument, "fd_p1: empty eps grid");
    std::sort(eps_grid.begin(), eps_grid.end(), std::greater<>());

    struct Job {
        double eps;
        double period = 0;
    };
    std::vector<Job> jobs;
    for (double e : eps_grid) {
        if (!(e > 0)) fail(ErrorCode::invalid_argument, "fd_p1: eps values must be positive");
        jobs.push_back({+e});
        jobs.push_back({-e});
    }

    parallel_for(jobs.size(), [&](std::size_t i) {
        kinetics::PerturbedSystem ps(ks, D, jobs[i].eps);  // fails when I + eps D is singular
        cycles::CycleSearchOptions opts;
        opts.refine_only = true;
        opts.section = cycle.section;
        opts.integ = integ;
        auto sys = cycles::SystemRef::of(ps);
        auto pc = cycles::find_cycle(sys, cycle.anchor, opts);
        jobs[i].period = pc.period;
    });

    PeriodDerivativeReport rep;
    rep.method = P1Method::finite_difference;
    rep.period = cycle.period;
    rep.gamma_tilde = cycle.max_nontrivial_modulus();

    std::vector<double> slopes;
    for (std::size_t k = 0; k < eps_grid.size(); ++k) {
        double e = eps_grid[k];
        double Pp = jobs[2 * k].period, Pm = jobs[2 * k + 1].period;
        slopes.push_back((Pp - Pm) / (2 * e));
    }
    rep.fd_slopes = slopes;
    if (slopes.size() >= 2 && std::abs(eps_grid[0] - 2 * eps_grid[1]) < 1e-9 * eps_grid[0]) {
        // one Richardson level on the (e, e/2) pair
        rep.p1 = (4 * slopes[1] - slopes[0]) / 3.0;
        rep.error_estimate = std::abs(slopes[1] - slopes[0]) / 3.0;
    } else if (slopes.size() >= 2) {
        rep.p1 = slopes.back();
        rep.error_estimate = std::abs(slopes.back() - slopes[slopes.size() - 2]);
    } else {
        rep.p1 = slopes[0];
        rep.error_estimate = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

} // namespace floq::period
