#include "floqpatch.h"

#include "floqpatch/analysis.hpp"
#include "floqpatch/hopf.hpp"
#include "floqpatch/patch.hpp"
#include "floqpatch/period.hpp"

#include <cstdio>
#include <cstring>
#include <iostream>
#include <sstream>

using namespace floq;

struct fq_model {
    kinetics::KineticSystem ks;
};

struct fq_cycle {
    cycles::LimitCycle cycle;
};

namespace {

thread_local std::string g_last_error;

fq_status status_of(ErrorCode c)
{
    switch (c) {
        case ErrorCode::invalid_argument: return FQ_ERR_INVALID;
        case ErrorCode::parse: return FQ_ERR_PARSE;
        case ErrorCode::domain: return FQ_ERR_DOMAIN;
        case ErrorCode::numerical: return FQ_ERR_NUMERICAL;
        case ErrorCode::no_cycle: return FQ_ERR_NO_CYCLE;
        case ErrorCode::io: return FQ_ERR_IO;
    }
    return FQ_ERR_NUMERICAL;
}

template <typename Fn>
fq_status guarded(Fn&& fn)
{
    try {
        fn();
        return FQ_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FQ_ERR_NUMERICAL;
    }
}

Eigen::MatrixXd mat_from(const double* data, int rows, int cols)
{
    Eigen::MatrixXd M(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) M(r, c) = data[r * cols + c];
    return M;
}

} // namespace

extern "C" {

const char* fq_version(void) { return app::version(); }

const char* fq_last_error(void) { return g_last_error.c_str(); }

fq_status fq_model_holling_tanner(double a, double h, double K, double m, double r, double s,
                                  fq_model** out)
{
    return guarded([&] {
        if (!out) fail(ErrorCode::invalid_argument, "null output handle");
        *out = new fq_model{kinetics::KineticSystem::holling_tanner(a, h, K, m, r, s)};
    });
}

fq_status fq_model_custom(const char* const* var_names, size_t n_vars,
                          const char* const* param_names, const double* param_values,
                          size_t n_params, const char* const* rhs_sources, fq_model** out)
{
    return guarded([&] {
        if (!out || !var_names || !rhs_sources)
            fail(ErrorCode::invalid_argument, "null argument");
        std::vector<std::string> vars(var_names, var_names + n_vars);
        std::vector<std::string> pnames;
        std::vector<double> pvals;
        for (size_t i = 0; i < n_params; ++i) {
            pnames.emplace_back(param_names[i]);
            pvals.push_back(param_values[i]);
        }
        auto syms = std::make_shared<kinetics::SymbolTable>(vars, pnames, pvals);
        std::vector<std::string> sources(rhs_sources, rhs_sources + n_vars);
        *out = new fq_model{kinetics::KineticSystem::from_expressions(syms, sources)};
    });
}

void fq_model_free(fq_model* model) { delete model; }

int fq_model_dim(const fq_model* model) { return model ? model->ks.dim() : 0; }

fq_status fq_model_set_param(fq_model* model, const char* name, double value)
{
    return guarded([&] {
        if (!model || !name) fail(ErrorCode::invalid_argument, "null argument");
        model->ks.set_param(name, value);
    });
}

fq_status fq_model_rhs(const fq_model* model, const double* state, double* out)
{
    return guarded([&] {
        if (!model || !state || !out) fail(ErrorCode::invalid_argument, "null argument");
        const auto m = static_cast<std::size_t>(model->ks.dim());
        model->ks.rhs(std::span<const double>(state, m), std::span<double>(out, m));
    });
}

fq_status fq_model_jacobian(const fq_model* model, const double* state, double* out)
{
    return guarded([&] {
        if (!model || !state || !out) fail(ErrorCode::invalid_argument, "null argument");
        const int m = model->ks.dim();
        Eigen::MatrixXd J;
        model->ks.jacobian(std::span<const double>(state, static_cast<std::size_t>(m)), J);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) out[r * m + c] = J(r, c);
    });
}

void fq_cycle_options_init(fq_cycle_options* opts)
{
    if (!opts) return;
    std::memset(opts, 0, sizeof *opts);
    opts->burn_in = 200.0;
    opts->scan_time = 100.0;
    opts->max_return_time = 1000.0;
    opts->rtol = 1e-10;
    opts->atol = 1e-12;
}

fq_status fq_find_cycle(const fq_model* model, const double* seed, const fq_cycle_options* opts,
                        fq_cycle** out)
{
    return guarded([&] {
        if (!model || !seed || !out) fail(ErrorCode::invalid_argument, "null argument");
        cycles::CycleSearchOptions co;
        if (opts) {
            co.burn_in = opts->burn_in;
            co.scan_time = opts->scan_time;
            co.max_return_time = opts->max_return_time;
            co.integ.rtol = opts->rtol;
            co.integ.atol = opts->atol;
            co.refine_only = opts->refine_only != 0;
            if (opts->use_section)
                co.section = ode::Section{opts->section_index, opts->section_level, +1};
        }
        Eigen::VectorXd s0 = Eigen::Map<const Eigen::VectorXd>(seed, model->ks.dim());
        auto sys = cycles::SystemRef::of(model->ks);
        *out = new fq_cycle{cycles::find_cycle(sys, s0, co)};
    });
}

void fq_cycle_free(fq_cycle* cycle) { delete cycle; }

double fq_cycle_period(const fq_cycle* cycle) { return cycle ? cycle->cycle.period : 0.0; }

const char* fq_cycle_stability(const fq_cycle* cycle)
{
    return cycle ? cycles::to_string(cycle->cycle.stability) : "?";
}

fq_status fq_cycle_anchor(const fq_cycle* cycle, double* out)
{
    return guarded([&] {
        if (!cycle || !out) fail(ErrorCode::invalid_argument, "null argument");
        for (int i = 0; i < cycle->cycle.dim(); ++i) out[i] = cycle->cycle.anchor(i);
    });
}

fq_status fq_cycle_multipliers(const fq_cycle* cycle, double* re, double* im, size_t cap,
                               size_t* count)
{
    return guarded([&] {
        if (!cycle || !re || !im || !count) fail(ErrorCode::invalid_argument, "null argument");
        const auto n = static_cast<size_t>(cycle->cycle.multipliers.size());
        *count = n;
        if (cap < n) fail(ErrorCode::invalid_argument, "multiplier buffer too small");
        for (size_t i = 0; i < n; ++i) {
            re[i] = cycle->cycle.multipliers(static_cast<int>(i)).real();
            im[i] = cycle->cycle.multipliers(static_cast<int>(i)).imag();
        }
    });
}

fq_status fq_cycle_state_at(const fq_cycle* cycle, double t, double* out)
{
    return guarded([&] {
        if (!cycle || !out) fail(ErrorCode::invalid_argument, "null argument");
        cycle->cycle.state_at(t, std::span<double>(out, static_cast<std::size_t>(cycle->cycle.dim())));
    });
}

fq_status fq_urabe_p1(const fq_model* model, const fq_cycle* cycle, const double* D, int samples,
                      fq_p1_report* out)
{
    return guarded([&] {
        if (!model || !cycle || !D || !out) fail(ErrorCode::invalid_argument, "null argument");
        auto rep = period::urabe_p1(model->ks, cycle->cycle, Eigen::Matrix2d(mat_from(D, 2, 2)),
                                    samples > 0 ? samples : 4096);
        *out = fq_p1_report{rep.p1, rep.period, rep.gamma_tilde, rep.error_estimate};
    });
}

fq_status fq_fd_p1(const fq_model* model, const fq_cycle* cycle, const double* D,
                   const double* eps, size_t n_eps, fq_p1_report* out)
{
    return guarded([&] {
        if (!model || !cycle || !D || !out) fail(ErrorCode::invalid_argument, "null argument");
        std::vector<double> grid;
        if (eps && n_eps) grid.assign(eps, eps + n_eps);
        else grid = {1e-3, 5e-4};
        const int m = model->ks.dim();
        auto rep = period::fd_p1(model->ks, cycle->cycle, mat_from(D, m, m), grid);
        *out = fq_p1_report{rep.p1, rep.period, rep.gamma_tilde, rep.error_estimate};
    });
}

fq_status fq_holling_tanner_equilibrium(double a, double h, double s, double* u_star,
                                        double* v_star)
{
    return guarded([&] {
        if (!u_star || !v_star) fail(ErrorCode::invalid_argument, "null argument");
        auto [u, v] = hopf::holling_tanner_positive_equilibrium(a, h, s);
        *u_star = u;
        *v_star = v;
    });
}

fq_status fq_first_lyapunov(const fq_model* model, const double* eq, double* c1_re, double* c1_im,
                            double* mu0)
{
    return guarded([&] {
        if (!model || !eq || !c1_re || !c1_im || !mu0)
            fail(ErrorCode::invalid_argument, "null argument");
        auto res = hopf::first_lyapunov_coefficient(model->ks, Eigen::Vector2d(eq[0], eq[1]));
        *c1_re = res.c1.real();
        *c1_im = res.c1.imag();
        *mu0 = res.mu0;
    });
}

fq_status fq_hopf_condition(const double* J, double mu0, const double* D, int k, int k1,
                            const double* coeff_re, const double* coeff_im, size_t n_coeffs,
                            double* value, double* bracket, int* prediction)
{
    return guarded([&] {
        if (!J || !D || !coeff_re || !coeff_im || !value || !bracket || !prediction)
            fail(ErrorCode::invalid_argument, "null argument");
        std::vector<std::complex<double>> coeffs;
        for (size_t i = 0; i < n_coeffs; ++i) coeffs.emplace_back(coeff_re[i], coeff_im[i]);
        auto ev = hopf::hopf_period_eps_slope(Eigen::Matrix2d(mat_from(J, 2, 2)), mu0,
                                              Eigen::Matrix2d(mat_from(D, 2, 2)), k, k1, coeffs);
        *value = ev.value;
        *bracket = ev.bracket;
        *prediction = ev.prediction == hopf::SlopePrediction::destabilizing      ? +1
                      : ev.prediction == hopf::SlopePrediction::not_destabilizing ? -1
                                                                                  : 0;
    });
}

fq_status fq_patch_floquet(const fq_model* model, const fq_cycle* cycle, int n, const double* E,
                           double delta, double* re, double* im, size_t cap, size_t* count)
{
    return guarded([&] {
        if (!model || !cycle || !E || !re || !im || !count)
            fail(ErrorCode::invalid_argument, "null argument");
        const int m = model->ks.dim();
        patch::PatchSystem ps(model->ks, n, mat_from(E, m, m), delta);
        auto evs = patch::patch_floquet(ps, cycle->cycle);
        *count = static_cast<size_t>(evs.size());
        if (cap < *count) fail(ErrorCode::invalid_argument, "multiplier buffer too small");
        for (int i = 0; i < evs.size(); ++i) {
            re[i] = evs(i).real();
            im[i] = evs(i).imag();
        }
    });
}

fq_status fq_patch_lle(const fq_model* model, const fq_cycle* cycle, int n, const double* E,
                       double delta, double burn_in, double horizon, fq_lle_result* out)
{
    return guarded([&] {
        if (!model || !cycle || !E || !out) fail(ErrorCode::invalid_argument, "null argument");
        const int m = model->ks.dim();
        patch::PatchSystem ps(model->ks, n, mat_from(E, m, m), delta);
        patch::LleOptions lo;
        if (burn_in >= 0) lo.burn_in = burn_in;
        if (horizon > 0) lo.horizon = horizon;
        auto lle = patch::largest_lyapunov_exponent(ps, cycle->cycle, lo);
        *out = fq_lle_result{lle.lambda, lle.lambda_floquet, lle.oscillation};
    });
}

fq_status fq_predict_and_verify(const fq_model* model, const fq_cycle* cycle, int n,
                                const double* E, const double* probes, size_t n_probes,
                                double lle_delta, fq_verdict* out)
{
    return guarded([&] {
        if (!model || !cycle || !E || !out) fail(ErrorCode::invalid_argument, "null argument");
        const int m = model->ks.dim();
        patch::VerdictOptions vo;
        if (probes && n_probes) vo.probes.assign(probes, probes + n_probes);
        if (lle_delta > 0) vo.lle_delta = lle_delta;
        auto v = patch::predict_and_verify(model->ks, cycle->cycle, mat_from(E, m, m), n, vo);
        *out = fq_verdict{v.p_prime,
                          v.predicted_slope,
                          v.slopes.slope,
                          v.max_multiplier_modulus,
                          v.lle.lambda,
                          v.verdict == patch::Verdict::destabilized ? +1
                          : v.verdict == patch::Verdict::stable     ? -1
                                                                    : 0};
    });
}

void fq_run_options_init(fq_run_options* opts)
{
    if (!opts) return;
    std::memset(opts, 0, sizeof *opts);
    opts->out_dir = "out";
}

int fq_run(const char* subcommand, const char* config_path, const fq_run_options* opts)
{
    app::RunOptions ro;
    if (opts) {
        if (opts->out_dir) ro.out_dir = opts->out_dir;
        if (opts->tol > 0) ro.tol = opts->tol;
        ro.fixed_step = opts->fixed_step != 0;
        ro.strict = opts->strict != 0;
        if (opts->probes) {
            std::vector<double> ps;
            std::stringstream ss(opts->probes);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    ps.push_back(std::stod(item));
                } catch (...) {
                    std::fprintf(stderr, "error: bad probe value '%s'\n", item.c_str());
                    return 2;
                }
            }
            ro.probes = ps;
        }
        if (opts->grid) ro.grid = opts->grid;
        if (!opts->quiet) ro.log = &std::cout;
    } else {
        ro.log = &std::cout;
    }
    return app::run(subcommand ? subcommand : "", config_path ? config_path : "", ro);
}

} // extern "C"
