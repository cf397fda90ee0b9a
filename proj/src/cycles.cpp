#include "floqpatch/cycles.hpp"

#include <algorithm>
#include <cmath>

namespace floq::cycles {

SystemRef SystemRef::of(const kinetics::KineticSystem& ks)
{
    return SystemRef{
        ks.dim(),
        [&ks](std::span<const double> y, std::span<double> dy) { ks.rhs(y, dy); },
        [&ks](std::span<const double> y, Eigen::MatrixXd& J) { ks.jacobian(y, J); },
    };
}

SystemRef SystemRef::of(const kinetics::PerturbedSystem& ps)
{
    return SystemRef{
        ps.base().dim(),
        [&ps](std::span<const double> y, std::span<double> dy) { ps.rhs(y, dy); },
        [&ps](std::span<const double> y, Eigen::MatrixXd& J) { ps.jacobian(y, J); },
    };
}

const char* to_string(Stability s)
{
    switch (s) {
        case Stability::attracting: return "attracting";
        case Stability::non_hyperbolic: return "non-hyperbolic";
        case Stability::unstable: return "unstable";
    }
    return "?";
}

namespace {

// RHS of the orbit + variational pair: y' = f(y), Y' = J(y) Y, Y column-major
// in the trailing m^2 slots.
ode::RhsFn augmented_rhs(const SystemRef& sys)
{
    const int m = sys.dim;
    return [&sys, m](std::span<const double> z, std::span<double> dz) {
        auto y = z.first(static_cast<std::size_t>(m));
        sys.rhs(y, dz.first(static_cast<std::size_t>(m)));
        thread_local Eigen::MatrixXd J;
        sys.jacobian(y, J);
        Eigen::Map<const Eigen::MatrixXd> Y(z.data() + m, m, m);
        Eigen::Map<Eigen::MatrixXd> dY(dz.data() + m, m, m);
        dY = J * Y;
    };
}

std::vector<double> augmented_initial(const Eigen::VectorXd& y0)
{
    const int m = static_cast<int>(y0.size());
    std::vector<double> z(static_cast<std::size_t>(m + m * m), 0.0);
    for (int i = 0; i < m; ++i) z[static_cast<std::size_t>(i)] = y0(i);
    for (int i = 0; i < m; ++i) z[static_cast<std::size_t>(m + i * m + i)] = 1.0;  // Y(0) = I
    return z;
}

struct ReturnMap {
    const SystemRef& sys;
    ode::Section section;
    const CycleSearchOptions& opts;

    // Off-section coordinate embedding: all components except section.index.
    Eigen::VectorXd embed(const Eigen::VectorXd& q) const
    {
        Eigen::VectorXd y(sys.dim);
        int k = 0;
        for (int i = 0; i < sys.dim; ++i)
            y(i) = (i == section.index) ? section.level : q(k++);
        return y;
    }
    Eigen::VectorXd project(std::span<const double> y) const
    {
        Eigen::VectorXd q(sys.dim - 1);
        int k = 0;
        for (int i = 0; i < sys.dim; ++i)
            if (i != section.index) q(k++) = y[static_cast<std::size_t>(i)];
        return q;
    }

    // One full return to the section; also reports the return time.
    Eigen::VectorXd operator()(const Eigen::VectorXd& q, double& return_time) const
    {
        Eigen::VectorXd y = embed(q);
        auto hit = ode::integrate_to_section(
            [this](std::span<const double> yy, std::span<double> dy) { sys.rhs(yy, dy); },
            std::span<const double>(y.data(), static_cast<std::size_t>(sys.dim)), 0.0,
            opts.max_return_time, section, opts.integ, /*min_time=*/10 * opts.integ.event_tol);
        return_time = hit.t_hit;
        return project(hit.y_hit);
    }
};

void classify(LimitCycle& c)
{
    double max_other = c.max_nontrivial_modulus();
    if (std::abs(c.trivial_multiplier() - std::complex<double>(1, 0)) > 1e-5) {
        c.stability = Stability::non_hyperbolic;  // no clean unit multiplier
        return;
    }
    if (max_other > 1.0 + 1e-6) c.stability = Stability::unstable;
    else if (max_other < 1.0 - 1e-6) c.stability = Stability::attracting;
    else c.stability = Stability::non_hyperbolic;
}

} // namespace

double LimitCycle::max_nontrivial_modulus() const
{
    double mx = 0;
    for (int i = 0; i < multipliers.size(); ++i)
        if (i != trivial_index) mx = std::max(mx, std::abs(multipliers(i)));
    return mx;
}

void LimitCycle::state_at(double t, std::span<double> out) const
{
    double tm = std::fmod(t, period);
    if (tm < 0) tm += period;
    orbit_->eval_components(tm, 0, dim(), out);
}

Eigen::VectorXd LimitCycle::state_at(double t) const
{
    Eigen::VectorXd y(dim());
    state_at(t, std::span<double>(y.data(), static_cast<std::size_t>(dim())));
    return y;
}

Eigen::VectorXd LimitCycle::velocity_at(double t, const SystemRef& sys) const
{
    Eigen::VectorXd y = state_at(t);
    Eigen::VectorXd dy(dim());
    sys.rhs(std::span<const double>(y.data(), static_cast<std::size_t>(dim())),
            std::span<double>(dy.data(), static_cast<std::size_t>(dim())));
    return dy;
}

void LimitCycle::write_csv(std::ostream& os) const
{
    orbit_->write_csv(os, dim());
}

LimitCycle find_cycle(const SystemRef& sys, const Eigen::VectorXd& seed,
                      const CycleSearchOptions& opts)
{
    const int m = sys.dim;
    if (seed.size() != m) fail(ErrorCode::invalid_argument, "find_cycle: seed dimension mismatch");
    auto rhs = [&sys](std::span<const double> y, std::span<double> dy) { sys.rhs(y, dy); };

    Eigen::VectorXd work = seed;
    if (!opts.refine_only && opts.burn_in > 0) {
        auto yb = ode::advance(rhs, std::span<const double>(work.data(), static_cast<std::size_t>(m)),
                               0.0, opts.burn_in, opts.integ);
        work = Eigen::Map<const Eigen::VectorXd>(yb.data(), m);
    }

    ode::Section section;
    if (opts.section) {
        section = *opts.section;
    } else {
        // scan a window to pick a transversal level for component 0
        auto tr = ode::integrate(rhs, std::span<const double>(work.data(), static_cast<std::size_t>(m)),
                                 0.0, opts.scan_time, opts.integ);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        std::vector<double> y(static_cast<std::size_t>(m));
        for (double t : tr.times()) {
            if (t > tr.t_back()) break;
            tr.eval(t, y);
            lo = std::min(lo, y[0]);
            hi = std::max(hi, y[0]);
        }
        if (!(hi - lo > 1e-9 * (1.0 + std::abs(hi))))
            fail(ErrorCode::no_cycle, "no recurrence detected: trajectory settled to an equilibrium");
        section = ode::Section{0, 0.5 * (lo + hi), +1};
        auto yb = tr.y_back();
        work = Eigen::Map<const Eigen::VectorXd>(yb.data(), m);
    }

    // land on the section
    auto first_hit = ode::integrate_to_section(
        rhs, std::span<const double>(work.data(), static_cast<std::size_t>(m)), 0.0,
        opts.max_return_time, section, opts.integ);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(first_hit.y_hit.data(), m);

    ReturnMap R{sys, section, opts};
    Eigen::VectorXd q = R.project(std::span<const double>(x.data(), static_cast<std::size_t>(m)));
    double period = 0;

    // the fixed-step fallback caps the achievable return-map residual
    const double newton_tol = opts.integ.fixed_step ? std::max(opts.newton_tol, 1e-9)
                                                    : opts.newton_tol;
    bool converged = false;
    for (int it = 0; it < opts.max_newton_iters; ++it) {
        double rt = 0;
        Eigen::VectorXd Rq = R(q, rt);
        Eigen::VectorXd res = Rq - q;
        period = rt;
        if (res.norm() < newton_tol * (1.0 + q.norm())) {
            converged = true;
            break;
        }
        // finite-difference Jacobian of the return map
        Eigen::MatrixXd JR(m - 1, m - 1);
        for (int j = 0; j < m - 1; ++j) {
            double hj = opts.fd_step * (1.0 + std::abs(q(j)));
            Eigen::VectorXd qp = q;
            qp(j) += hj;
            double rt2;
            JR.col(j) = (R(qp, rt2) - Rq) / hj;
        }
        Eigen::MatrixXd A = JR - Eigen::MatrixXd::Identity(m - 1, m - 1);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible())
            fail(ErrorCode::no_cycle, "return-map Newton: singular (J - I); cycle may be non-hyperbolic");
        q += lu.solve(-res);
    }
    if (!converged)
        fail(ErrorCode::no_cycle, "return-map Newton did not converge within " +
                                      std::to_string(opts.max_newton_iters) + " iterations");

    LimitCycle cycle;
    cycle.section = section;
    cycle.anchor = R.embed(q);
    cycle.period = period;

    // one period with the variational system attached
    auto z0 = augmented_initial(cycle.anchor);
    auto aug = ode::integrate(augmented_rhs(sys), z0, 0.0, period, opts.integ);
    cycle.orbit_ = std::make_shared<ode::Trajectory>(std::move(aug));

    // minimality: a p/k return for k = 2, 3 means the section caught a multiple
    for (int k : {2, 3}) {
        std::vector<double> yk(static_cast<std::size_t>(m));
        cycle.orbit_->eval_components(period / k, 0, m, yk);
        double d = 0;
        for (int i = 0; i < m; ++i) d += (yk[static_cast<std::size_t>(i)] - cycle.anchor(i)) *
                                         (yk[static_cast<std::size_t>(i)] - cycle.anchor(i));
        if (std::sqrt(d) < opts.min_period_threshold) {
            cycle.period = period / k;
            auto aug2 = ode::integrate(augmented_rhs(sys), z0, 0.0, cycle.period, opts.integ);
            cycle.orbit_ = std::make_shared<ode::Trajectory>(std::move(aug2));
            break;
        }
    }

    // closure and monodromy
    std::vector<double> zend(static_cast<std::size_t>(m + m * m));
    cycle.orbit_->eval(cycle.period, zend);
    double diff = 0;
    for (int i = 0; i < m; ++i) {
        double d = zend[static_cast<std::size_t>(i)] - cycle.anchor(i);
        diff += d * d;
    }
    cycle.closure_error = std::sqrt(diff) / (1.0 + cycle.anchor.norm());
    if (cycle.closure_error > 1e-7)
        fail(ErrorCode::no_cycle, "located orbit does not close: relative gap " +
                                      std::to_string(cycle.closure_error));
    cycle.monodromy = Eigen::Map<const Eigen::MatrixXd>(zend.data() + m, m, m);

    Eigen::EigenSolver<Eigen::MatrixXd> es(cycle.monodromy);
    if (es.info() != Eigen::Success) fail(ErrorCode::numerical, "monodromy eigenvalue solve failed");
    Eigen::VectorXcd evs = es.eigenvalues();
    std::vector<int> order(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(evs(a)) > std::abs(evs(b)); });
    cycle.multipliers.resize(m);
    Eigen::MatrixXcd sorted_vecs(m, m);
    for (int i = 0; i < m; ++i) {
        cycle.multipliers(i) = evs(order[static_cast<std::size_t>(i)]);
        sorted_vecs.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    }

    // trivial multiplier: nearest to 1, ties broken by alignment with the flow
    Eigen::VectorXd v0(m);
    sys.rhs(std::span<const double>(cycle.anchor.data(), static_cast<std::size_t>(m)),
            std::span<double>(v0.data(), static_cast<std::size_t>(m)));
    v0.normalize();
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        double d = std::abs(cycle.multipliers(i) - std::complex<double>(1, 0));
        if (d < best - 1e-12) {
            best = d;
            cycle.trivial_index = i;
        } else if (d < best + 1e-12) {
            // tie: prefer the eigenvector parallel to phi'(0)
            auto align = [&](int idx) {
                Eigen::VectorXcd w = sorted_vecs.col(idx);
                std::complex<double> dot = 0;
                for (int r = 0; r < m; ++r) dot += std::conj(w(r)) * v0(r);
                return std::abs(dot) / w.norm();
            };
            if (align(i) > align(cycle.trivial_index)) cycle.trivial_index = i;
        }
    }

    // Liouville consistency: prod multipliers = exp(int tr J)
    {
        auto hcum = trace_cumulative(sys, cycle, 2048);
        cycle.trace_integral = hcum.back();
        std::complex<double> prod = 1;
        for (int i = 0; i < m; ++i) prod *= cycle.multipliers(i);
        double lhs = std::abs(prod), rhs2 = std::exp(cycle.trace_integral);
        if (std::abs(lhs - rhs2) > 1e-4 * std::max(rhs2, 1e-30))
            fail(ErrorCode::numerical,
                 "monodromy fails the determinant identity: |prod gamma| = " + std::to_string(lhs) +
                     " vs exp(int tr J) = " + std::to_string(rhs2));
    }

    classify(cycle);
    return cycle;
}

Eigen::MatrixXd monodromy(const SystemRef& sys, const Eigen::VectorXd& anchor, double period,
                          const ode::IntegratorConfig& cfg)
{
    const int m = sys.dim;
    auto z0 = augmented_initial(anchor);
    auto aug = ode::integrate(augmented_rhs(sys), z0, 0.0, period, cfg);
    std::vector<double> zend(static_cast<std::size_t>(m + m * m));
    aug.eval(period, zend);
    return Eigen::Map<const Eigen::MatrixXd>(zend.data() + m, m, m);
}

std::vector<double> trace_cumulative(const SystemRef& sys, const LimitCycle& cycle, int samples)
{
    const int m = cycle.dim();
    std::vector<double> h(static_cast<std::size_t>(samples + 1), 0.0);
    std::vector<double> y(static_cast<std::size_t>(m));
    thread_local Eigen::MatrixXd J;
    double dt = cycle.period / samples;
    double prev_tr = 0;
    for (int k = 0; k <= samples; ++k) {
        cycle.orbit_->eval_components(k * dt, 0, m, y);
        sys.jacobian(y, J);
        double tr = J.trace();
        if (k > 0) h[static_cast<std::size_t>(k)] = h[static_cast<std::size_t>(k - 1)] + 0.5 * dt * (prev_tr + tr);
        prev_tr = tr;
    }
    return h;
}

double nontrivial_multiplier_2d(const SystemRef& sys, const LimitCycle& cycle, int samples)
{
    if (sys.dim != 2 || cycle.dim() != 2)
        fail(ErrorCode::invalid_argument, "nontrivial_multiplier_2d requires a planar system");
    auto h = trace_cumulative(sys, cycle, samples);
    double gamma = std::exp(h.back());
    // cross-check against the eigenvalue route
    double ge = cycle.max_nontrivial_modulus();
    if (std::abs(gamma - ge) > 1e-4 * std::max(ge, 1e-12))
        fail(ErrorCode::numerical,
             "trace-integral multiplier " + std::to_string(gamma) +
                 " disagrees with the monodromy eigenvalue " + std::to_string(ge));
    return gamma;
}

} // namespace floq::cycles
