#include "floqpatch/patch.hpp"

#include <algorithm>
#include <cmath>

namespace floq::patch {

PatchSystem::PatchSystem(kinetics::KineticSystem ks, int n, Eigen::MatrixXd E, double delta)
    : ks_(std::move(ks)), n_(n), E_(std::move(E)), delta_(delta)
{
    if (n_ < 2) fail(ErrorCode::invalid_argument, "patch system: need n >= 2");
    if (!(delta_ >= 0)) fail(ErrorCode::invalid_argument, "patch system: need delta >= 0");
    if (E_.rows() != ks_.dim() || E_.cols() != ks_.dim())
        fail(ErrorCode::invalid_argument, "patch system: E must be m x m");
    if (!E_.allFinite()) fail(ErrorCode::invalid_argument, "patch system: E has non-finite entries");
}

void PatchSystem::rhs(std::span<const double> y, std::span<double> dy) const
{
    const int m = ks_.dim();
    thread_local std::vector<double> diff, coup;
    diff.assign(static_cast<std::size_t>(m), 0.0);
    coup.assign(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < n_; ++j) {
        auto yj = y.subspan(static_cast<std::size_t>(j * m), static_cast<std::size_t>(m));
        // sum_i (U^i - U^j), differenced first so synchrony gives exact zeros
        std::fill(diff.begin(), diff.end(), 0.0);
        for (int i = 0; i < n_; ++i) {
            if (i == j) continue;
            auto yi = y.subspan(static_cast<std::size_t>(i * m), static_cast<std::size_t>(m));
            for (int c = 0; c < m; ++c)
                diff[static_cast<std::size_t>(c)] += yi[static_cast<std::size_t>(c)] - yj[static_cast<std::size_t>(c)];
        }
        for (int r = 0; r < m; ++r) {
            double acc = 0;
            for (int c = 0; c < m; ++c) acc += E_(r, c) * diff[static_cast<std::size_t>(c)];
            coup[static_cast<std::size_t>(r)] = delta_ * acc;
        }
        auto out = dy.subspan(static_cast<std::size_t>(j * m), static_cast<std::size_t>(m));
        ks_.rhs(yj, out);
        for (int r = 0; r < m; ++r) out[static_cast<std::size_t>(r)] += coup[static_cast<std::size_t>(r)];
    }
}

Eigen::MatrixXd PatchSystem::block_laplacian() const
{
    const int m = ks_.dim();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim(), dim());
    for (int j = 0; j < n_; ++j)
        for (int i = 0; i < n_; ++i) {
            if (i == j) L.block(j * m, i * m, m, m) = (n_ - 1) * E_;
            else L.block(j * m, i * m, m, m) = -E_;
        }
    return L;
}

void PatchSystem::linearization_at(std::span<const double> base_state, Eigen::MatrixXd& out) const
{
    const int m = ks_.dim();
    thread_local Eigen::MatrixXd J;
    ks_.jacobian(base_state, J);
    out = -delta_ * block_laplacian();
    for (int j = 0; j < n_; ++j) out.block(j * m, j * m, m, m) += J;
}

double synchronous_residual(const PatchSystem& ps, const cycles::LimitCycle& cycle, int samples)
{
    const int m = ps.kinetic().dim();
    const int N = ps.dim();
    std::vector<double> y(static_cast<std::size_t>(m)), Y(static_cast<std::size_t>(N)),
        dY(static_cast<std::size_t>(N)), f(static_cast<std::size_t>(m));
    double worst = 0;
    for (int k = 0; k < samples; ++k) {
        double t = cycle.period * k / samples;
        cycle.orbit_->eval_components(t, 0, m, y);
        for (int j = 0; j < ps.patches(); ++j)
            std::copy(y.begin(), y.end(), Y.begin() + j * m);
        ps.rhs(Y, dY);
        ps.kinetic().rhs(y, f);
        for (int j = 0; j < ps.patches(); ++j)
            for (int c = 0; c < m; ++c)
                worst = std::max(worst, std::abs(dY[static_cast<std::size_t>(j * m + c)] -
                                                 f[static_cast<std::size_t>(c)]));
    }
    return worst;
}

namespace {

// base kinetic orbit (m) + column-major frame W (N x k) driven by the
// synchronous-cycle linearization
ode::RhsFn frame_rhs(const PatchSystem& ps, int k)
{
    const int m = ps.kinetic().dim();
    const int N = ps.dim();
    return [&ps, m, N, k](std::span<const double> z, std::span<double> dz) {
        auto base = z.first(static_cast<std::size_t>(m));
        ps.kinetic().rhs(base, dz.first(static_cast<std::size_t>(m)));
        thread_local Eigen::MatrixXd A;
        ps.linearization_at(base, A);
        Eigen::Map<const Eigen::MatrixXd> W(z.data() + m, N, k);
        Eigen::Map<Eigen::MatrixXd> dW(dz.data() + m, N, k);
        dW = A * W;
    };
}

} // namespace

Eigen::MatrixXd patch_monodromy(const PatchSystem& ps, const cycles::LimitCycle& cycle,
                                const ode::IntegratorConfig& cfg)
{
    const int m = ps.kinetic().dim();
    const int N = ps.dim();
    if (cycle.dim() != m) fail(ErrorCode::invalid_argument, "patch_monodromy: cycle dimension mismatch");
    std::vector<double> z0(static_cast<std::size_t>(m + N * N), 0.0);
    for (int i = 0; i < m; ++i) z0[static_cast<std::size_t>(i)] = cycle.anchor(i);
    for (int i = 0; i < N; ++i) z0[static_cast<std::size_t>(m + i * N + i)] = 1.0;
    auto traj = ode::integrate(frame_rhs(ps, N), z0, 0.0, cycle.period, cfg);
    std::vector<double> zend(z0.size());
    traj.eval(cycle.period, zend);
    return Eigen::Map<const Eigen::MatrixXd>(zend.data() + m, N, N);
}

Eigen::VectorXcd patch_floquet(const PatchSystem& ps, const cycles::LimitCycle& cycle,
                               const ode::IntegratorConfig& cfg)
{
    Eigen::MatrixXd M = patch_monodromy(ps, cycle, cfg);
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) fail(ErrorCode::numerical, "patch monodromy eigensolve failed");
    Eigen::VectorXcd evs = es.eigenvalues();
    std::sort(evs.data(), evs.data() + evs.size(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  return std::abs(a) > std::abs(b);
              });
    return evs;
}

SlopeFit multiplier_slopes(const kinetics::KineticSystem& ks, const cycles::LimitCycle& cycle,
                           int n, const Eigen::MatrixXd& E, std::vector<double> probes,
                           const ode::IntegratorConfig& cfg)
{
    if (probes.empty()) fail(ErrorCode::invalid_argument, "multiplier_slopes: no probes");
    std::sort(probes.begin(), probes.end());
    if (!(probes.front() > 0)) fail(ErrorCode::invalid_argument, "multiplier_slopes: probes must be positive");

    // separation precondition: kinetic nontrivial multipliers leave a gap
    if (cycle.max_nontrivial_modulus() > 0.95)
        fail(ErrorCode::numerical,
             "multiplier_slopes: kinetic multipliers too close to 1 (gap <= 0.05), "
             "branches perturbed from 1 are not separable");

    SlopeFit fit;
    fit.probes = probes;
    fit.multipliers.resize(probes.size());
    fit.trivial_deviation.resize(probes.size());

    parallel_for(probes.size(), [&](std::size_t i) {
        PatchSystem ps(ks, n, E, probes[i]);
        fit.multipliers[i] = patch_floquet(ps, cycle, cfg);
    });

    // near-1 group: the n closest to 1; drop the trivial one
    const int nb = n - 1;
    std::vector<std::vector<std::complex<double>>> branch_vals(
        static_cast<std::size_t>(nb), std::vector<std::complex<double>>(probes.size()));
    std::vector<std::complex<double>> prev;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
        const auto& evs = fit.multipliers[pi];
        std::vector<int> idx(static_cast<std::size_t>(evs.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            return std::abs(evs(a) - 1.0) < std::abs(evs(b) - 1.0);
        });
        fit.trivial_deviation[pi] = std::abs(evs(idx[0]) - 1.0);
        std::vector<std::complex<double>> group;
        for (int k = 1; k <= nb; ++k) group.push_back(evs(idx[static_cast<std::size_t>(k)]));
        if (!prev.empty()) {
            // nearest-neighbor continuation from the previous probe
            std::vector<std::complex<double>> matched(group.size());
            std::vector<bool> used(group.size(), false);
            for (std::size_t b = 0; b < prev.size(); ++b) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t arg = 0;
                for (std::size_t g = 0; g < group.size(); ++g) {
                    if (used[g]) continue;
                    double d = std::abs(group[g] - prev[b]);
                    if (d < best) { best = d; arg = g; }
                }
                // ambiguity: another unused candidate at essentially the same distance
                for (std::size_t g = 0; g < group.size(); ++g) {
                    if (used[g] || g == arg) continue;
                    if (std::abs(std::abs(group[g] - prev[b]) - best) < 1e-9 &&
                        std::abs(group[g] - group[arg]) > 1e-9)
                        fail(ErrorCode::numerical, "multiplier_slopes: branch tracking ambiguity "
                                                   "(eigenvalue collision)");
                }
                used[arg] = true;
                matched[b] = group[arg];
            }
            group = matched;
        }
        prev = group;
        for (int b = 0; b < nb; ++b) branch_vals[static_cast<std::size_t>(b)][pi] = group[static_cast<std::size_t>(b)];
    }

    double lsq_sum = 0;
    for (int b = 0; b < nb; ++b) {
        double num = 0, den = 0;
        for (std::size_t pi = 0; pi < probes.size(); ++pi) {
            double d = probes[pi];
            num += d * (branch_vals[static_cast<std::size_t>(b)][pi].real() - 1.0);
            den += d * d;
        }
        double s = num / den;
        fit.lsq_slopes.push_back(s);
        double res = 0;
        for (std::size_t pi = 0; pi < probes.size(); ++pi) {
            double r = branch_vals[static_cast<std::size_t>(b)][pi].real() - 1.0 - s * probes[pi];
            res += r * r;
        }
        fit.lsq_residuals.push_back(std::sqrt(res));
        lsq_sum += s;

        // Richardson from the smallest doubling pair
        for (std::size_t pi = 0; pi < probes.size(); ++pi) {
            for (std::size_t pj = pi + 1; pj < probes.size(); ++pj) {
                if (std::abs(probes[pj] - 2 * probes[pi]) < 1e-9 * probes[pj]) {
                    double s1 = (branch_vals[static_cast<std::size_t>(b)][pi].real() - 1.0) / probes[pi];
                    double s2 = (branch_vals[static_cast<std::size_t>(b)][pj].real() - 1.0) / probes[pj];
                    fit.richardson_slopes.push_back(2 * s1 - s2);
                    goto next_branch;
                }
            }
        }
    next_branch:;
    }

    if (!fit.richardson_slopes.empty()) {
        double acc = 0;
        for (double s : fit.richardson_slopes) acc += s;
        fit.slope = acc / static_cast<double>(fit.richardson_slopes.size());
    } else {
        fit.slope = lsq_sum / nb;
    }
    return fit;
}

LleResult largest_lyapunov_exponent(const PatchSystem& ps, const cycles::LimitCycle& cycle,
                                    const LleOptions& opts)
{
    const int m = ps.kinetic().dim();
    const int N = ps.dim();
    if (!(opts.horizon > 0) || !(opts.qr_interval > 0) || opts.burn_in < 0)
        fail(ErrorCode::invalid_argument, "lle: bad horizon/burn-in/interval");

    LleResult out;
    // Floquet route first: exact for periodic coefficients
    {
        Eigen::VectorXcd evs = patch_floquet(ps, cycle, {});
        out.lambda_floquet = std::log(std::abs(evs(0))) / cycle.period;
    }

    std::vector<double> z(static_cast<std::size_t>(m + N * N), 0.0);
    for (int i = 0; i < m; ++i) z[static_cast<std::size_t>(i)] = cycle.anchor(i);
    for (int i = 0; i < N; ++i) z[static_cast<std::size_t>(m + i * N + i)] = 1.0;

    auto rhs = frame_rhs(ps, N);
    double t = 0;
    double logsum = 0, t_acc = 0;
    const double t_total = opts.burn_in + opts.horizon;
    while (t < t_total - 1e-9) {
        double t1 = std::min(t + opts.qr_interval, t_total);
        z = ode::advance(rhs, z, t, t1, opts.integ);
        Eigen::Map<Eigen::MatrixXd> W(z.data() + m, N, N);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
        Eigen::MatrixXd Q = qr.householderQ();
        Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int c = 0; c < N; ++c)
            if (R(c, c) < 0) { R.row(c) = -R.row(c); Q.col(c) = -Q.col(c); }
        if (t >= opts.burn_in - 1e-9) {
            logsum += std::log(R(0, 0));
            t_acc += t1 - t;
            out.trace.emplace_back(t1, logsum / t_acc);
        }
        W = Q;
        t = t1;
    }
    if (t_acc <= 0) fail(ErrorCode::invalid_argument, "lle: horizon shorter than burn-in");
    out.lambda = logsum / t_acc;

    // Running-estimate oscillation over the last 20% (at least three cycle
    // periods), sampled once per period: the raw per-interval estimate carries
    // an O(1/t) within-period wiggle that says nothing about convergence of
    // the average.
    double window = std::max(0.2 * opts.horizon, 3 * cycle.period);
    double t_tail = opts.burn_in + opts.horizon - window;
    std::size_t stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(cycle.period / opts.qr_interval)));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < out.trace.size(); i += stride) {
        auto& [tt, lam] = out.trace[i];
        if (tt >= t_tail) {
            lo = std::min(lo, lam);
            hi = std::max(hi, lam);
        }
    }
    out.oscillation = (hi >= lo) ? hi - lo : 0.0;
    if (opts.check_convergence && out.oscillation > opts.convergence_tol)
        fail(ErrorCode::numerical,
             "lle: horizon too short, running estimate still oscillates by " +
                 std::to_string(out.oscillation));
    return out;
}

const char* to_string(Verdict v)
{
    switch (v) {
        case Verdict::destabilized: return "destabilized";
        case Verdict::stable: return "stable";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

DestabilizationVerdict predict_and_verify(const kinetics::KineticSystem& ks,
                                          const cycles::LimitCycle& cycle,
                                          const Eigen::MatrixXd& E, int n,
                                          const VerdictOptions& opts)
{
    DestabilizationVerdict v;

    if (ks.dim() == 2) {
        v.p1_report = period::urabe_p1(ks, cycle, Eigen::Matrix2d(E), opts.urabe_samples);
    } else {
        v.p1_report = period::fd_p1(ks, cycle, E, {1e-3, 5e-4}, opts.integ);
    }
    v.p_prime = v.p1_report.p1;
    v.predicted_slope = -n * v.p_prime;

    v.slopes = multiplier_slopes(ks, cycle, n, E, opts.probes, opts.integ);
    for (std::size_t pi = 0; pi < v.slopes.probes.size(); ++pi) {
        if (v.slopes.trivial_deviation[pi] > 1e-5)
            fail(ErrorCode::numerical, "verdict: trivial multiplier drifted from 1 by " +
                                           std::to_string(v.slopes.trivial_deviation[pi]));
        const auto& evs = v.slopes.multipliers[pi];
        // largest modulus among all but the one nearest to 1
        int triv = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < evs.size(); ++k) {
            double d = std::abs(evs(k) - 1.0);
            if (d < best) { best = d; triv = k; }
        }
        for (int k = 0; k < evs.size(); ++k)
            if (k != triv) v.max_multiplier_modulus = std::max(v.max_multiplier_modulus, std::abs(evs(k)));
    }

    {
        PatchSystem ps(ks, n, E, opts.lle_delta);
        v.lle = largest_lyapunov_exponent(ps, cycle, opts.lle);
        v.lle_delta = opts.lle_delta;
    }

    const bool predicted_unstable = v.p_prime < -1e-8;
    const bool predicted_stable = v.p_prime > 1e-8;
    // the Floquet route is exact for periodic coefficients; the QR estimate is
    // reported alongside for cross-validation
    const bool measured_unstable =
        v.max_multiplier_modulus > 1.0 + 1e-6 || v.lle.lambda_floquet > 1e-4;

    if (predicted_unstable && measured_unstable) {
        v.verdict = Verdict::destabilized;
        v.evidence = "P'(0) < 0 and measured instability (max |gamma| = " +
                     std::to_string(v.max_multiplier_modulus) +
                     ", lle = " + std::to_string(v.lle.lambda) + ")";
    } else if (predicted_stable && !measured_unstable) {
        v.verdict = Verdict::stable;
        v.evidence = "P'(0) > 0 and no measured instability";
    } else {
        v.verdict = Verdict::inconclusive;
        v.evidence = "prediction (P'(0) = " + std::to_string(v.p_prime) +
                     ") and measurement (max |gamma| = " + std::to_string(v.max_multiplier_modulus) +
                     ", lle = " + std::to_string(v.lle.lambda) + ") do not agree on a strict verdict";
    }
    return v;
}

} // namespace floq::patch
