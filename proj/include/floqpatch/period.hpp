#ifndef FLOQPATCH_PERIOD_HPP
#define FLOQPATCH_PERIOD_HPP

// P'(0) of the period function of the eps-family of cycles of
// (I + eps D) U' = F(U): closed-form line integral along the unperturbed
// cycle, and an independent finite-difference route that re-finds the
// perturbed cycles.

#include "floqpatch/cycles.hpp"

#include <Eigen/Dense>

#include <vector>

namespace floq::period {

enum class P1Method { urabe, finite_difference, identical_diffusion };

const char* to_string(P1Method m);

struct PeriodDerivativeReport {
    double p1 = 0;                  // dP/d(eps) at eps = 0
    P1Method method = P1Method::urabe;
    double period = 0;              // p of the unperturbed cycle
    double gamma_tilde = 0;         // nontrivial multiplier used
    int samples = 0;                // quadrature sample count (urabe)
    double error_estimate = 0;      // quadrature halving gap, or Richardson gap (fd)
    std::vector<double> fd_slopes;  // per-eps central slopes (fd route)
};

// Closed-form P1 evaluated by composite trapezoid quadrature on an equispaced
// resampling of the cycle. Planar systems only; requires gamma~ < 1 strictly
// and the orbit bounded away from equilibria.
PeriodDerivativeReport urabe_p1(const kinetics::KineticSystem& ks, const cycles::LimitCycle& cycle,
                                const Eigen::Matrix2d& D, int samples = 4096);

// Central-difference slope of eps -> P(eps) with one Richardson level.
// eps_grid lists the positive half-steps, largest first (default {1e-3, 5e-4});
// each entry costs two cycle refinements.
PeriodDerivativeReport fd_p1(const kinetics::KineticSystem& ks, const cycles::LimitCycle& cycle,
                             const Eigen::MatrixXd& D,
                             std::vector<double> eps_grid = {1e-3, 5e-4},
                             const ode::IntegratorConfig& integ = {});

} // namespace floq::period

#endif
