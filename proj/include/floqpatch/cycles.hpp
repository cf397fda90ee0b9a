#ifndef FLOQPATCH_CYCLES_HPP
#define FLOQPATCH_CYCLES_HPP

// Limit-cycle location via Poincare return maps, monodromy matrices and
// Floquet multipliers.

#include "floqpatch/kinetics.hpp"
#include "floqpatch/ode.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>

namespace floq::cycles {

// Minimal view of an autonomous system: dimension, RHS, exact Jacobian.
struct SystemRef {
    int dim;
    ode::RhsFn rhs;
    std::function<void(std::span<const double>, Eigen::MatrixXd&)> jacobian;

    static SystemRef of(const kinetics::KineticSystem& ks);
    static SystemRef of(const kinetics::PerturbedSystem& ps);
};

enum class Stability { attracting, non_hyperbolic, unstable };

const char* to_string(Stability s);

class LimitCycle {
public:
    Eigen::VectorXd anchor;            // point on the section
    double period = 0;
    ode::Section section;
    Eigen::MatrixXd monodromy;         // Y(p), Ydot = J(t) Y, Y(0) = I
    Eigen::VectorXcd multipliers;      // eigenvalues of the monodromy, |.| descending
    int trivial_index = 0;             // position of the multiplier carried by the flow
    Stability stability = Stability::attracting;
    double closure_error = 0;          // |phi(p) - phi(0)| / (1 + |phi(0)|)
    double trace_integral = 0;         // int_0^p tr J dt along the cycle

    int dim() const { return static_cast<int>(anchor.size()); }
    std::complex<double> trivial_multiplier() const { return multipliers(trivial_index); }
    // largest |multiplier| among the non-trivial ones
    double max_nontrivial_modulus() const;

    // state on the cycle at time t (t taken modulo the period)
    Eigen::VectorXd state_at(double t) const;
    void state_at(double t, std::span<double> out) const;
    Eigen::VectorXd velocity_at(double t, const SystemRef& sys) const;

    void write_csv(std::ostream& os) const;  // one period of samples

    // orbit + variational solution over one period (dimension m + m^2)
    const ode::Trajectory& orbit_aug() const { return *orbit_; }

    std::shared_ptr<const ode::Trajectory> orbit_;  // augmented trajectory
};

struct CycleSearchOptions {
    double burn_in = 200.0;          // transient before the section scan
    double scan_time = 100.0;        // window used to pick a section level
    double max_return_time = 1000.0; // cap on a single return-map evaluation
    double newton_tol = 1e-10;       // |R(x) - x| target, scaled
    int max_newton_iters = 50;
    double fd_step = 1e-7;           // return-map Jacobian, scaled by (1 + |x|)
    double min_period_threshold = 1e-5;  // |phi(p/k) - phi(0)| below this rejects minimality, k = 2, 3
    std::optional<ode::Section> section;  // fixed section instead of the automatic scan
    bool refine_only = false;        // seed is already near the cycle: skip burn-in and scan
    ode::IntegratorConfig integ;
};

LimitCycle find_cycle(const SystemRef& sys, const Eigen::VectorXd& seed,
                      const CycleSearchOptions& opts = {});

// Y(p) recomputed for a given closed orbit (anchor, period) by integrating the
// variational system along the orbit.
Eigen::MatrixXd monodromy(const SystemRef& sys, const Eigen::VectorXd& anchor, double period,
                          const ode::IntegratorConfig& cfg);

// gamma~ = exp(int_0^p tr J dt) for planar systems; cross-checked against the
// monodromy eigenvalue internally.
double nontrivial_multiplier_2d(const SystemRef& sys, const LimitCycle& cycle, int samples = 4096);

// Resample tr J along the cycle and return the cumulative trapezoid h(t_k),
// k = 0..samples, at equally spaced times; used by the period module.
std::vector<double> trace_cumulative(const SystemRef& sys, const LimitCycle& cycle, int samples);

} // namespace floq::cycles

#endif
