#ifndef FLOQPATCH_HOPF_HPP
#define FLOQPATCH_HOPF_HPP

// Planar Hopf machinery: equilibria, perturbed-Jacobian trace/determinant,
// transversality rate, first Lyapunov coefficient and the period-slope
// destabilization conditions.

#include "floqpatch/kinetics.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace floq::hopf {

// Unique positive equilibrium of the K = m = r = 1 Holling-Tanner
// normalization: positive root of (h s) u^2 + (a h s - h s + s) u - a h s = 0,
// paired with v* = u*/h.
std::pair<double, double> holling_tanner_positive_equilibrium(double a, double h, double s);

// Residuals of the two weak-focus-of-order-two conditions at (a, u*, s).
std::pair<double, double> weak_focus_order2_residuals(double a, double ustar, double s);

// Solve the three-equation system (equilibrium + both focus conditions) for
// (a, h, u*) at fixed s by damped Newton; used as an independent oracle.
struct WeakFocusSolution { double a, h, ustar; int iterations; };
WeakFocusSolution solve_weak_focus_order2(double s, double a0, double h0, double u0);

// Symbolic Jacobian at a verified equilibrium (|F| < 1e-8).
Eigen::Matrix2d jacobian_at_equilibrium(const kinetics::KineticSystem& ks,
                                        const Eigen::Vector2d& eq);

// Trace and determinant of M(eps)^{-1} adj(I + eps D) J.
std::pair<double, double> perturbed_trace_det(const Eigen::Matrix2d& J, const Eigen::Matrix2d& D,
                                              double eps);

// Newton solve of F = 0 from a guess, with the exact Jacobian.
Eigen::Vector2d solve_equilibrium(const kinetics::KineticSystem& ks, const Eigen::Vector2d& guess,
                                  double tol = 1e-13, int max_iters = 60);

// A'(alpha0) where A(alpha) = tr J(alpha)/2 with the equilibrium re-solved at
// each alpha; central difference with one Richardson level. Eigenvalues must
// be complex near alpha0.
double transversality_rate(const kinetics::KineticSystem& ks, const std::string& alpha_name,
                           double alpha0, const Eigen::Vector2d& eq_guess, double step = 1e-5);

// Newton-adjust the named parameter until |tr J| < 1e-10 at the re-solved
// equilibrium; returns the tuned parameter value.
double tune_to_criticality(kinetics::KineticSystem& ks, const std::string& alpha_name,
                           double alpha0, const Eigen::Vector2d& eq_guess);

struct C1Result {
    std::complex<double> c1;
    double mu0 = 0;            // imaginary part of the critical eigenvalue
    Eigen::Matrix2d transform; // canonical-coordinate change used
};

// First Lyapunov coefficient of the normal form z' = i mu0 z + C1 z^2 z~ + ...
// at a critical equilibrium (|tr J| < 1e-6). The canonical coordinates keep
// the first state component, so reported values are comparable across runs.
C1Result first_lyapunov_coefficient(const kinetics::KineticSystem& ks, const Eigen::Vector2d& eq);

enum class SlopeBranch { c1, c2 };
enum class SlopePrediction { destabilizing, not_destabilizing, inconclusive };

struct PeriodSlopeEval {
    SlopeBranch branch;
    double value = 0;    // Im(C_k1) * bracket for (C1); mu0 (d11+d22) + Im/Re * bracket for (C2)
    double bracket = 0;  // d22 J11 + d11 J22 - d12 J21 - d21 J12
    SlopePrediction prediction = SlopePrediction::inconclusive;
};

// Sign-determining quantity of the Hopf destabilization conditions.
// coeffs holds C_1..C_j for some j >= k1; C_k must be present (and have
// negative real part) when k1 == k. When only C_1..C_{k1} are supplied with
// k1 < k, the stability of the bifurcating cycle is the caller's assertion.
PeriodSlopeEval hopf_period_eps_slope(const Eigen::Matrix2d& J, double mu0,
                                      const Eigen::Matrix2d& D, int k, int k1,
                                      std::span<const std::complex<double>> coeffs);

struct HopfReport {
    Eigen::Vector2d equilibrium;
    Eigen::Matrix2d J;
    double mu0 = 0;
    double a_prime = 0;                 // transversality rate, when computed
    std::complex<double> c1;
    std::optional<PeriodSlopeEval> condition;  // for a supplied D
};

} // namespace floq::hopf

#endif
