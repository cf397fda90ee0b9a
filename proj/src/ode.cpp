#include "floqpatch/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace floq::ode {

void IntegratorConfig::validate() const
{
    if (!(rtol > 0) || !(atol > 0)) fail(ErrorCode::invalid_argument, "tolerances must be positive");
    if (!(event_tol > 0)) fail(ErrorCode::invalid_argument, "event tolerance must be positive");
    if (max_steps < 1) fail(ErrorCode::invalid_argument, "max_steps must be >= 1");
    if (fixed_step && !(fixed_dt > 0)) fail(ErrorCode::invalid_argument, "fixed_dt must be positive");
}

Trajectory::Trajectory(int dim, double t0, std::span<const double> y0) : dim_(dim)
{
    t_grid_.push_back(t0);
    t_end_ = t0;
    coeff_.assign(static_cast<std::size_t>(5 * dim), 0.0);
    std::copy(y0.begin(), y0.end(), coeff_.begin());
}

std::span<const double> Trajectory::y_back() const
{
    static thread_local std::vector<double> buf;
    buf.resize(static_cast<std::size_t>(dim_));
    eval(t_end_, buf);
    return buf;
}

void Trajectory::push_step(double t1, std::span<const double> c1, std::span<const double> c2,
                           std::span<const double> c3, std::span<const double> c4,
                           std::span<const double> c5)
{
    if (!(t1 > t_grid_.back()))
        fail(ErrorCode::numerical, "trajectory: non-increasing time grid");
    if (t_grid_.size() == 1) coeff_.clear();  // replace the degenerate seed segment
    t_grid_.push_back(t1);
    t_end_ = t1;
    for (auto sp : {c1, c2, c3, c4, c5}) coeff_.insert(coeff_.end(), sp.begin(), sp.end());
}

std::size_t Trajectory::segment_of(double t) const
{
    auto it = std::upper_bound(t_grid_.begin(), t_grid_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - t_grid_.begin());
    std::size_t nseg = t_grid_.size() - 1;
    if (i == 0) return 0;
    return std::min(i - 1, nseg ? nseg - 1 : std::size_t{0});
}

void Trajectory::eval_components(double t, int first, int count, std::span<double> out) const
{
    const auto d = static_cast<std::size_t>(dim_);
    t = std::clamp(t, t_grid_.front(), t_end_);
    if (t_grid_.size() == 1) {
        for (int k = 0; k < count; ++k)
            out[static_cast<std::size_t>(k)] = coeff_[static_cast<std::size_t>(first + k)];
        return;
    }
    std::size_t seg = segment_of(t);
    double t0 = t_grid_[seg], t1 = t_grid_[seg + 1];
    double th = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    const double* c = coeff_.data() + 5 * d * seg;
    const double* c1 = c;
    const double* c2 = c + d;
    const double* c3 = c + 2 * d;
    const double* c4 = c + 3 * d;
    const double* c5 = c + 4 * d;
    double om = 1.0 - th;
    for (int k = 0; k < count; ++k) {
        std::size_t i = static_cast<std::size_t>(first + k);
        out[static_cast<std::size_t>(k)] =
            c1[i] + th * (c2[i] + om * (c3[i] + th * (c4[i] + om * c5[i])));
    }
}

void Trajectory::eval(double t, std::span<double> out) const
{
    eval_components(t, 0, dim_, out);
}

void Trajectory::write_csv(std::ostream& os) const { write_csv(os, dim_); }

void Trajectory::write_csv(std::ostream& os, int count) const
{
    os << "t";
    for (int i = 1; i <= count; ++i) os << ",y" << i;
    os << "\n";
    std::vector<double> y(static_cast<std::size_t>(count));
    char buf[40];
    auto row = [&](double t) {
        eval_components(t, 0, count, y);
        std::snprintf(buf, sizeof buf, "%.17g", t);
        os << buf;
        for (double v : y) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << ',' << buf;
        }
        os << "\n";
    };
    for (double t : t_grid_) {
        if (t >= t_end_) break;
        row(t);
    }
    row(t_end_);
}

void Trajectory::truncate_to(double t_stop)
{
    // dense segments keep their native spans; queries are clamped to t_end_
    t_end_ = std::clamp(t_stop, t_grid_.front(), t_grid_.back());
}

namespace {

// Dormand-Prince 5(4) tableau
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784,
                 A76 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200,
                 E6 = 22.0 / 525, E7 = -1.0 / 40;
// 4th-order dense-output weights
constexpr double D1 = -12715105075.0 / 11282082432.0;
constexpr double D3 = 87487479700.0 / 32700410799.0;
constexpr double D4 = -10690763975.0 / 1880347072.0;
constexpr double D5 = 701980252875.0 / 199316789632.0;
constexpr double D6 = -1453857185.0 / 822651844.0;
constexpr double D7 = 69997945.0 / 29380423.0;

// Callback after each accepted step; return false to stop the integration.
using StepCallback = std::function<bool()>;

void integrate_adaptive(const RhsFn& rhs, double t0, double t1, const IntegratorConfig& cfg,
                        Trajectory* traj, std::vector<double>& y, const StepCallback& on_step)
{
    const int n = static_cast<int>(y.size());
    const auto nz = static_cast<std::size_t>(n);
    std::vector<double> k1(nz), k2(nz), k3(nz), k4(nz), k5(nz), k6(nz), k7(nz);
    std::vector<double> ytmp(nz), y1(nz), yd(nz), c3(nz), c4(nz), c5(nz);

    rhs(y, k1);

    double t = t0;
    double span = t1 - t0;
    double h = span / 100.0;
    {
        double d0 = 0, d1 = 0;
        for (std::size_t i = 0; i < nz; ++i) {
            double sc = cfg.atol + cfg.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        if (d1 > 0) h = std::min(h, 0.01 * std::sqrt((d0 + 1e-30) / d1));
        h = std::min({h, cfg.max_step, span});
        if (!(h > 0)) h = span * 1e-6;
    }

    long steps = 0;
    bool rejected_last = false;
    while (t < t1) {
        if (++steps > cfg.max_steps)
            fail(ErrorCode::numerical, "max steps exceeded at t = " + std::to_string(t));
        h = std::min({h, cfg.max_step, t1 - t});
        if (!(t + h > t)) fail(ErrorCode::numerical, "step size underflow at t = " + std::to_string(t));

        for (std::size_t i = 0; i < nz; ++i) ytmp[i] = y[i] + h * A21 * k1[i];
        rhs(ytmp, k2);
        for (std::size_t i = 0; i < nz; ++i) ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        rhs(ytmp, k3);
        for (std::size_t i = 0; i < nz; ++i)
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        rhs(ytmp, k4);
        for (std::size_t i = 0; i < nz; ++i)
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        rhs(ytmp, k5);
        for (std::size_t i = 0; i < nz; ++i)
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        rhs(ytmp, k6);
        for (std::size_t i = 0; i < nz; ++i)
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        rhs(y1, k7);

        double err = 0;
        for (std::size_t i = 0; i < nz; ++i) {
            double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / n);

        if (err <= 1.0) {
            if (traj) {
                for (std::size_t i = 0; i < nz; ++i) {
                    yd[i] = y1[i] - y[i];
                    double bspl = h * k1[i] - yd[i];
                    c3[i] = bspl;
                    c4[i] = yd[i] - h * k7[i] - bspl;
                    c5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                traj->push_step(t + h, y, yd, c3, c4, c5);
            }
            t += h;
            y = y1;
            k1 = k7;  // FSAL
            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            fac = std::clamp(fac, 0.2, rejected_last ? 1.0 : 5.0);
            h *= fac;
            rejected_last = false;
            if (on_step && !on_step()) return;
        } else {
            h *= std::max(0.9 * std::pow(err, -0.2), 0.1);
            rejected_last = true;
        }
    }
}

void integrate_fixed(const RhsFn& rhs, double t0, double t1, const IntegratorConfig& cfg,
                     Trajectory* traj, std::vector<double>& y, const StepCallback& on_step)
{
    const auto n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), ytmp(n), y1(n), yd(n), c3(n), c4(n), c5(n, 0.0);
    double t = t0;
    long nsteps = static_cast<long>(std::ceil((t1 - t0) / cfg.fixed_dt - 1e-12));
    nsteps = std::max<long>(nsteps, 1);
    if (nsteps > cfg.max_steps) fail(ErrorCode::numerical, "max steps exceeded (fixed step)");
    for (long s = 0; s < nsteps; ++s) {
        double h = (s == nsteps - 1) ? (t1 - t) : cfg.fixed_dt;
        rhs(y, k1);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(ytmp, k3);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * k3[i];
        rhs(ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            y1[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        if (traj) {
            rhs(y1, k2);  // endpoint slope for the Hermite interpolant
            for (std::size_t i = 0; i < n; ++i) {
                yd[i] = y1[i] - y[i];
                c3[i] = h * k1[i] - yd[i];
                c4[i] = yd[i] - h * k2[i] - c3[i];
            }
            traj->push_step(t + h, y, yd, c3, c4, c5);
        }
        t += h;
        y = y1;
        if (on_step && !on_step()) return;
    }
}

void run_integration(const RhsFn& rhs, double t0, double t1, const IntegratorConfig& cfg,
                     Trajectory* traj, std::vector<double>& y, const StepCallback& on_step)
{
    if (cfg.fixed_step)
        integrate_fixed(rhs, t0, t1, cfg, traj, y, on_step);
    else
        integrate_adaptive(rhs, t0, t1, cfg, traj, y, on_step);
}

} // namespace

Trajectory integrate(const RhsFn& rhs, std::span<const double> y0, double t0, double t1,
                     const IntegratorConfig& cfg)
{
    cfg.validate();
    if (!(t1 > t0)) fail(ErrorCode::invalid_argument, "integrate: need t1 > t0");
    Trajectory traj(static_cast<int>(y0.size()), t0, y0);
    std::vector<double> y(y0.begin(), y0.end());
    run_integration(rhs, t0, t1, cfg, &traj, y, nullptr);
    return traj;
}

std::vector<double> advance(const RhsFn& rhs, std::span<const double> y0, double t0, double t1,
                            const IntegratorConfig& cfg)
{
    cfg.validate();
    if (!(t1 > t0)) fail(ErrorCode::invalid_argument, "advance: need t1 > t0");
    std::vector<double> y(y0.begin(), y0.end());
    run_integration(rhs, t0, t1, cfg, nullptr, y, nullptr);
    return y;
}

SectionHit integrate_to_section(const RhsFn& rhs, std::span<const double> y0, double t0,
                                double t_max, const Section& section,
                                const IntegratorConfig& cfg, double min_time)
{
    cfg.validate();
    const int n = static_cast<int>(y0.size());
    if (section.index < 0 || section.index >= n)
        fail(ErrorCode::invalid_argument, "section index out of range");
    if (!(t_max > t0)) fail(ErrorCode::invalid_argument, "integrate_to_section: need t_max > t0");

    Trajectory traj(n, t0, y0);
    std::vector<double> y(y0.begin(), y0.end());

    auto g_of = [&](double t) {
        double v;
        traj.eval_components(t, section.index, 1, std::span<double>(&v, 1));
        return v - section.level;
    };
    auto crosses = [&](double glo, double ghi) {
        if (section.direction > 0) return glo < 0 && ghi >= 0;
        if (section.direction < 0) return glo > 0 && ghi <= 0;
        return (glo < 0 && ghi >= 0) || (glo > 0 && ghi <= 0);
    };

    double t_hit = -1.0;
    const int subdiv = 8;
    auto scan_last_segment = [&]() -> bool {
        const auto& ts = traj.times();
        double ta = ts[ts.size() - 2], tb = ts.back();
        if (tb <= min_time) return true;
        double prev_t = std::max(ta, min_time);
        double prev_g = g_of(prev_t);
        for (int k = 1; k <= subdiv; ++k) {
            double tk = ta + (tb - ta) * k / subdiv;
            if (tk <= prev_t) continue;
            double gk = g_of(tk);
            if (crosses(prev_g, gk)) {
                double lo = prev_t, hi = tk, glo = prev_g;
                while (hi - lo > cfg.event_tol) {
                    double mid = 0.5 * (lo + hi);
                    double gm = g_of(mid);
                    bool in_left = (glo < 0) ? (gm >= 0) : (gm <= 0);
                    if (in_left) hi = mid;
                    else { lo = mid; glo = gm; }
                }
                t_hit = 0.5 * (lo + hi);
                return false;  // stop integration
            }
            prev_t = tk;
            prev_g = gk;
        }
        return true;
    };

    run_integration(rhs, t0, t_max, cfg, &traj, y, scan_last_segment);

    if (t_hit < 0)
        fail(ErrorCode::no_cycle, "no section crossing in [" + std::to_string(t0) + ", " +
                                      std::to_string(t_max) + "]");

    std::vector<double> yh(static_cast<std::size_t>(n));
    traj.eval(t_hit, yh);
    yh[static_cast<std::size_t>(section.index)] = section.level;  // land exactly on the section
    traj.truncate_to(t_hit);
    traj.mark_event();
    return SectionHit{std::move(traj), t_hit, std::move(yh)};
}

} // namespace floq::ode
