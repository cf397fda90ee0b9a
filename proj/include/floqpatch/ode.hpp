#ifndef FLOQPATCH_ODE_HPP
#define FLOQPATCH_ODE_HPP

// Adaptive Dormand-Prince 5(4) integration with 4th-order dense output and
// Poincare-section event detection, plus a fixed-step RK4 fallback for
// reproducibility studies. Systems are autonomous.

#include "floqpatch/common.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace floq::ode {

struct IntegratorConfig {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 10000000;
    double event_tol = 1e-12;  // event localization tolerance, in time
    bool fixed_step = false;
    double fixed_dt = 2e-4;

    void validate() const;
};

using RhsFn = std::function<void(std::span<const double>, std::span<double>)>;

// Dense trajectory: per accepted step the five interpolation coefficient
// vectors of the DOPRI5 continuous extension (cubic Hermite in fixed-step
// mode, stored in the same layout with c5 = 0).
class Trajectory {
public:
    Trajectory(int dim, double t0, std::span<const double> y0);

    int dim() const { return dim_; }
    std::size_t steps() const { return t_grid_.size() - 1; }
    double t_front() const { return t_grid_.front(); }
    double t_back() const { return t_end_; }
    std::span<const double> y_back() const;
    const std::vector<double>& times() const { return t_grid_; }
    bool event_terminated() const { return event_terminated_; }

    // Dense evaluation; t is clamped to [t_front, t_back].
    void eval(double t, std::span<double> out) const;
    void eval_components(double t, int first, int count, std::span<double> out) const;

    // header "t,y1,...,ym", one row per accepted step
    void write_csv(std::ostream& os) const;
    // same, restricted to the first `count` components (for augmented systems)
    void write_csv(std::ostream& os, int count) const;

    void push_step(double t1, std::span<const double> c1, std::span<const double> c2,
                   std::span<const double> c3, std::span<const double> c4,
                   std::span<const double> c5);
    void mark_event() { event_terminated_ = true; }
    void truncate_to(double t_end);  // drop dense segments beyond t_end

private:
    std::size_t segment_of(double t) const;
    int dim_;
    std::vector<double> t_grid_;        // accepted step boundaries, strictly increasing
    double t_end_ = 0.0;                // query clamp; equals t_grid_.back() unless truncated
    std::vector<double> coeff_;         // 5*dim per segment
    bool event_terminated_ = false;
};

struct Section {
    int index = 0;       // state component
    double level = 0.0;  // crossing level
    int direction = +1;  // +1 upward, -1 downward, 0 either
};

Trajectory integrate(const RhsFn& rhs, std::span<const double> y0, double t0, double t1,
                     const IntegratorConfig& cfg);

// Same stepping without storing the dense history; returns the final state.
// For long burn-in phases.
std::vector<double> advance(const RhsFn& rhs, std::span<const double> y0, double t0, double t1,
                            const IntegratorConfig& cfg);

struct SectionHit {
    Trajectory trajectory;
    double t_hit;
    std::vector<double> y_hit;
};

// Integrate until y[section.index] crosses section.level in the requested
// direction; the crossing time is localized on the dense output by bisection
// to cfg.event_tol. Crossings with t <= min_time are ignored.
SectionHit integrate_to_section(const RhsFn& rhs, std::span<const double> y0, double t0,
                                double t_max, const Section& section,
                                const IntegratorConfig& cfg, double min_time = 0.0);

} // namespace floq::ode

#endif
