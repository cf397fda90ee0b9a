#include "floqpatch/hopf.hpp"

#include <cmath>

namespace floq::hopf {

std::pair<double, double> holling_tanner_positive_equilibrium(double a, double h, double s)
{
    if (!(a > 0) || !(h > 0) || !(s > 0))
        fail(ErrorCode::invalid_argument, "equilibrium: a, h, s must be positive");
    const double beta = h * s;
    const double B = a * beta - beta + s, C = -a * beta;
    // product of roots = C/beta < 0, so exactly one positive root; take the
    // numerically stable branch
    double disc = std::sqrt(B * B - 4 * beta * C);
    double u = (B <= 0) ? (-B + disc) / (2 * beta) : (2 * (-C)) / (B + disc);
    double residual = beta * u * u + B * u + C;
    if (std::abs(residual) > 1e-12 * std::max(1.0, std::abs(C)))
        fail(ErrorCode::numerical, "equilibrium: quadratic residual " + std::to_string(residual));
    return {u, u / h};
}

std::pair<double, double> weak_focus_order2_residuals(double a, double u, double s)
{
    double r2 = 2 * u * u + (a + s - 1) * u + a * s;
    double r3 = -(3 + a) * u * u * u - 6 * a * u * (a + u) + a * a * (1 - a);
    return {r2, r3};
}

WeakFocusSolution solve_weak_focus_order2(double s, double a0, double h0, double u0)
{
    // unknowns x = (a, h, u); equations: equilibrium quadratic and the two
    // focus conditions
    auto F = [s](const Eigen::Vector3d& x) {
        double a = x(0), h = x(1), u = x(2);
        double beta = h * s;
        Eigen::Vector3d r;
        r(0) = beta * u * u + (a * beta - beta + s) * u - a * beta;
        auto [r2, r3] = weak_focus_order2_residuals(a, u, s);
        r(1) = r2;
        r(2) = r3;
        return r;
    };
    Eigen::Vector3d x(a0, h0, u0);
    Eigen::Vector3d r = F(x);
    for (int it = 0; it < 200; ++it) {
        if (r.norm() < 1e-13) return {x(0), x(1), x(2), it};
        Eigen::Matrix3d J;
        for (int j = 0; j < 3; ++j) {
            double hstep = 1e-7 * (1.0 + std::abs(x(j)));
            Eigen::Vector3d xp = x;
            xp(j) += hstep;
            J.col(j) = (F(xp) - r) / hstep;
        }
        Eigen::Vector3d dx = J.fullPivLu().solve(-r);
        double lambda = 1.0;
        for (int back = 0; back < 40; ++back) {
            Eigen::Vector3d xn = x + lambda * dx;
            Eigen::Vector3d rn = F(xn);
            if (rn.norm() < r.norm()) {
                x = xn;
                r = rn;
                break;
            }
            lambda *= 0.5;
            if (back == 39)
                fail(ErrorCode::numerical, "weak-focus Newton: line search stalled");
        }
    }
    fail(ErrorCode::numerical, "weak-focus Newton did not converge");
}

Eigen::Matrix2d jacobian_at_equilibrium(const kinetics::KineticSystem& ks,
                                        const Eigen::Vector2d& eq)
{
    if (ks.dim() != 2) fail(ErrorCode::invalid_argument, "jacobian_at_equilibrium: planar only");
    Eigen::VectorXd F = ks.rhs(Eigen::VectorXd(eq));
    if (F.norm() >= 1e-8)
        fail(ErrorCode::invalid_argument,
             "point is not an equilibrium: |F| = " + std::to_string(F.norm()));
    return ks.jacobian(Eigen::VectorXd(eq));
}

std::pair<double, double> perturbed_trace_det(const Eigen::Matrix2d& J, const Eigen::Matrix2d& D,
                                              double eps)
{
    double Meps = (D(0, 0) * D(1, 1) - D(0, 1) * D(1, 0)) * eps * eps + (D(0, 0) + D(1, 1)) * eps + 1.0;
    if (std::abs(Meps) <= 1e-12)
        fail(ErrorCode::numerical, "perturbed_trace_det: M(eps) = 0");
    double T = (J(0, 0) + J(1, 1) +
                eps * (D(1, 1) * J(0, 0) + D(0, 0) * J(1, 1) - D(0, 1) * J(1, 0) - D(1, 0) * J(0, 1))) /
               Meps;
    double Dt = (J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0)) / Meps;
    return {T, Dt};
}

Eigen::Vector2d solve_equilibrium(const kinetics::KineticSystem& ks, const Eigen::Vector2d& guess,
                                  double tol, int max_iters)
{
    Eigen::VectorXd x = guess;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd F = ks.rhs(x);
        if (F.norm() < tol) return x.head<2>();
        Eigen::MatrixXd J = ks.jacobian(x);
        Eigen::Vector2d dx = J.fullPivLu().solve(-F);
        x += dx;
    }
    fail(ErrorCode::numerical, "equilibrium continuation failed to converge");
}

namespace {

// tr J / 2 at the re-solved equilibrium for a given parameter value
double half_trace_at(const kinetics::KineticSystem& ks, const std::string& alpha_name, double alpha,
                     const Eigen::Vector2d& guess, Eigen::Vector2d* eq_out = nullptr)
{
    kinetics::KineticSystem k2 = ks.with_param(alpha_name, alpha);
    Eigen::Vector2d eq = solve_equilibrium(k2, guess);
    Eigen::Matrix2d J = k2.jacobian(Eigen::VectorXd(eq));
    double tr = J.trace(), det = J.determinant();
    if (det - tr * tr / 4 <= 0)
        fail(ErrorCode::numerical, "transversality_rate: eigenvalues not complex at alpha = " +
                                       std::to_string(alpha));
    if (eq_out) *eq_out = eq;
    return tr / 2;
}

} // namespace

double transversality_rate(const kinetics::KineticSystem& ks, const std::string& alpha_name,
                           double alpha0, const Eigen::Vector2d& eq_guess, double step)
{
    auto slope = [&](double h) {
        double Ap = half_trace_at(ks, alpha_name, alpha0 + h, eq_guess);
        double Am = half_trace_at(ks, alpha_name, alpha0 - h, eq_guess);
        return (Ap - Am) / (2 * h);
    };
    double s1 = slope(step);
    double s2 = slope(step / 2);
    return (4 * s2 - s1) / 3;
}

double tune_to_criticality(kinetics::KineticSystem& ks, const std::string& alpha_name,
                           double alpha0, const Eigen::Vector2d& eq_guess)
{
    double alpha = alpha0;
    for (int it = 0; it < 60; ++it) {
        Eigen::Vector2d eq;
        double A = half_trace_at(ks, alpha_name, alpha, eq_guess, &eq);
        if (std::abs(2 * A) < 1e-10) {
            ks.set_param(alpha_name, alpha);
            return alpha;
        }
        double h = 1e-6 * (1.0 + std::abs(alpha));
        double dA = (half_trace_at(ks, alpha_name, alpha + h, eq_guess) - A) / h;
        if (dA == 0) fail(ErrorCode::numerical, "criticality tuning: dA/dalpha = 0");
        alpha -= A / dA;
    }
    fail(ErrorCode::numerical, "criticality tuning did not converge");
}

C1Result first_lyapunov_coefficient(const kinetics::KineticSystem& ks, const Eigen::Vector2d& eq)
{
    if (ks.dim() != 2) fail(ErrorCode::invalid_argument, "first_lyapunov_coefficient: planar only");
    Eigen::Matrix2d J = jacobian_at_equilibrium(ks, eq);
    double tr = J.trace(), det = J.determinant();
    if (std::abs(tr) >= 1e-6)
        fail(ErrorCode::invalid_argument,
             "not at criticality: tr J = " + std::to_string(tr) + " (tune the parameter first)");
    if (det <= 0) fail(ErrorCode::invalid_argument, "not a center-type equilibrium: det J <= 0");
    const double mu0 = std::sqrt(det);

    // canonical coordinates preserving one state component:
    // (x, y) = T (p, q), T^{-1} J T = [[0, -mu0], [mu0, 0]]
    Eigen::Matrix2d T;
    double scale = std::max(1.0, J.norm());
    if (std::abs(J(0, 1)) > 1e-9 * scale) {
        T << 1.0, 0.0, -J(0, 0) / J(0, 1), -mu0 / J(0, 1);
    } else if (std::abs(J(1, 0)) > 1e-9 * scale) {
        T << -J(1, 1) / J(1, 0), -mu0 / J(1, 0), 1.0, 0.0;
    } else {
        fail(ErrorCode::numerical, "eigenbasis ill-conditioned: off-diagonal entries vanish");
    }
    Eigen::Matrix2d Ti = T.inverse();

    // exact partials of F at the equilibrium up to third order
    double H2[2][2][2];  // H2[c][i][j] = d2 F_c / dx_i dx_j
    double H3[2][2][2][2];
    std::vector<double> st(eq.data(), eq.data() + 2);
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 2; ++i) {
            expr::Expr di = ks.rhs_expr(c).diff_var(i);
            for (int j = i; j < 2; ++j) {
                expr::Expr dij = di.diff_var(j);
                double v = dij.eval(st);
                H2[c][i][j] = H2[c][j][i] = v;
                for (int l = j; l < 2; ++l) {
                    double w = dij.diff_var(l).eval(st);
                    H3[c][i][j][l] = H3[c][i][l][j] = H3[c][j][i][l] = w;
                    H3[c][j][l][i] = H3[c][l][i][j] = H3[c][l][j][i] = w;
                }
            }
        }
    }

    // transformed partials: G(p,q) = Ti F(T (p,q) + eq)
    auto d2 = [&](int c, int a, int b) {
        double acc = 0;
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    acc += Ti(c, k) * H2[k][i][j] * T(i, a) * T(j, b);
        return acc;
    };
    auto d3 = [&](int c, int a, int b, int e) {
        double acc = 0;
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int l = 0; l < 2; ++l)
                        acc += Ti(c, k) * H3[k][i][j][l] * T(i, a) * T(j, b) * T(l, e);
        return acc;
    };

    const double fuu = d2(0, 0, 0), fuv = d2(0, 0, 1), fvv = d2(0, 1, 1);
    const double guu = d2(1, 0, 0), guv = d2(1, 0, 1), gvv = d2(1, 1, 1);
    const double fuuu = d3(0, 0, 0, 0), fuuv = d3(0, 0, 0, 1), fuvv = d3(0, 0, 1, 1),
                 fvvv = d3(0, 1, 1, 1);
    const double guuu = d3(1, 0, 0, 0), guuv = d3(1, 0, 0, 1), guvv = d3(1, 0, 1, 1),
                 gvvv = d3(1, 1, 1, 1);

    using cd = std::complex<double>;
    const cd i1(0, 1);
    cd g20 = 0.25 * cd(fuu - fvv + 2 * guv, guu - gvv - 2 * fuv);
    cd g11 = 0.25 * cd(fuu + fvv, guu + gvv);
    cd g02 = 0.25 * cd(fuu - fvv - 2 * guv, guu - gvv + 2 * fuv);
    cd g21 = 0.125 * cd(fuuu + fuvv + guuv + gvvv, guuu + guvv - fuuv - fvvv);

    cd c1 = i1 / (2 * mu0) * (g20 * g11 - 2.0 * std::norm(g11) - std::norm(g02) / 3.0) + g21 / 2.0;
    return C1Result{c1, mu0, T};
}

PeriodSlopeEval hopf_period_eps_slope(const Eigen::Matrix2d& J, double mu0,
                                      const Eigen::Matrix2d& D, int k, int k1,
                                      std::span<const std::complex<double>> coeffs)
{
    if (k1 > k || k1 < 1) fail(ErrorCode::invalid_argument, "hopf_period_eps_slope: need 1 <= k1 <= k");
    if (static_cast<int>(coeffs.size()) < k1)
        fail(ErrorCode::invalid_argument, "hopf_period_eps_slope: coefficients up to C_k1 required");
    if (static_cast<int>(coeffs.size()) >= k && std::isfinite(coeffs[k - 1].real()) &&
        coeffs[k - 1].real() >= 0)
        fail(ErrorCode::invalid_argument,
             "hopf_period_eps_slope: Re(C_k) >= 0, bifurcating cycles are not stable");

    PeriodSlopeEval ev;
    ev.bracket = D(1, 1) * J(0, 0) + D(0, 0) * J(1, 1) - D(0, 1) * J(1, 0) - D(1, 0) * J(0, 1);
    if (k1 == k) {
        if (static_cast<int>(coeffs.size()) < k || !std::isfinite(coeffs[k - 1].real()))
            fail(ErrorCode::invalid_argument, "hopf_period_eps_slope: C_k required when k1 == k");
        ev.branch = SlopeBranch::c2;
        ev.value = mu0 * (D(0, 0) + D(1, 1)) +
                   coeffs[k - 1].imag() / coeffs[k - 1].real() * ev.bracket;
        if (ev.value < -1e-8) ev.prediction = SlopePrediction::destabilizing;
        else if (ev.value > 1e-8) ev.prediction = SlopePrediction::not_destabilizing;
        else ev.prediction = SlopePrediction::inconclusive;
    } else {
        double imck1 = coeffs[k1 - 1].imag();
        if (imck1 == 0)
            fail(ErrorCode::invalid_argument, "hopf_period_eps_slope: Im(C_k1) = 0 contradicts k1");
        ev.branch = SlopeBranch::c1;
        ev.value = imck1 * ev.bracket;
        if (ev.value > 1e-8) ev.prediction = SlopePrediction::destabilizing;
        else if (ev.value < -1e-8) ev.prediction = SlopePrediction::not_destabilizing;
        else ev.prediction = SlopePrediction::inconclusive;
    }
    return ev;
}

} // namespace floq::hopf
