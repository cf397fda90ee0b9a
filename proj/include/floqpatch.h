/*
 * floqpatch - destabilization analysis of synchronous periodic solutions in
 * coupled n-patch ODE models.
 *
 * C interface to the shared library: opaque handles and status codes. All
 * functions returning fq_status leave a human-readable message retrievable
 * with fq_last_error() on failure. Matrices are row-major.
 */

#ifndef FLOQPATCH_H
#define FLOQPATCH_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    FQ_OK = 0,
    FQ_ERR_INVALID = 1,
    FQ_ERR_PARSE = 2,
    FQ_ERR_DOMAIN = 3,     /* state or expression left its domain */
    FQ_ERR_NUMERICAL = 4,  /* integration/Newton/eigenvalue failure */
    FQ_ERR_NO_CYCLE = 5,
    FQ_ERR_IO = 6,
} fq_status;

const char* fq_version(void);
/* Thread-local message describing the most recent failure in this thread. */
const char* fq_last_error(void);

/* ---- kinetic models ---- */

typedef struct fq_model fq_model;

fq_status fq_model_holling_tanner(double a, double h, double K, double m, double r, double s,
                                  fq_model** out);
/* Custom model from expression sources, one per state variable. */
fq_status fq_model_custom(const char* const* var_names, size_t n_vars,
                          const char* const* param_names, const double* param_values,
                          size_t n_params, const char* const* rhs_sources, fq_model** out);
void fq_model_free(fq_model* model);
int fq_model_dim(const fq_model* model);
fq_status fq_model_set_param(fq_model* model, const char* name, double value);
fq_status fq_model_rhs(const fq_model* model, const double* state, double* out);
/* out receives m*m entries, row-major. */
fq_status fq_model_jacobian(const fq_model* model, const double* state, double* out);

/* ---- limit cycles ---- */

typedef struct fq_cycle fq_cycle;

typedef struct {
    double burn_in;          /* transient before the section scan (default 200) */
    double scan_time;        /* window used to choose a section level (default 100) */
    double max_return_time;  /* cap per return-map evaluation (default 1000) */
    double rtol, atol;       /* integrator tolerances (default 1e-10 / 1e-12) */
    int use_section;         /* nonzero: use section_index/section_level below */
    int section_index;
    double section_level;
    int refine_only;         /* seed already near the cycle */
} fq_cycle_options;

void fq_cycle_options_init(fq_cycle_options* opts);

fq_status fq_find_cycle(const fq_model* model, const double* seed, const fq_cycle_options* opts,
                        fq_cycle** out);
void fq_cycle_free(fq_cycle* cycle);
double fq_cycle_period(const fq_cycle* cycle);
/* "attracting", "non-hyperbolic" or "unstable". */
const char* fq_cycle_stability(const fq_cycle* cycle);
fq_status fq_cycle_anchor(const fq_cycle* cycle, double* out);
/* Multipliers sorted by descending modulus; *count receives m. */
fq_status fq_cycle_multipliers(const fq_cycle* cycle, double* re, double* im, size_t cap,
                               size_t* count);
fq_status fq_cycle_state_at(const fq_cycle* cycle, double t, double* out);

/* ---- period-function derivative P'(0) ---- */

typedef struct {
    double p1;
    double period;
    double gamma_tilde;
    double error_estimate;
} fq_p1_report;

/* Closed-form line integral along the cycle (planar models, D is 2x2). */
fq_status fq_urabe_p1(const fq_model* model, const fq_cycle* cycle, const double* D, int samples,
                      fq_p1_report* out);
/* Finite-difference route: eps lists the positive half-steps (largest first). */
fq_status fq_fd_p1(const fq_model* model, const fq_cycle* cycle, const double* D,
                   const double* eps, size_t n_eps, fq_p1_report* out);

/* ---- planar Hopf quantities ---- */

fq_status fq_holling_tanner_equilibrium(double a, double h, double s, double* u_star,
                                        double* v_star);
/* First Lyapunov coefficient at a critical equilibrium of a planar model. */
fq_status fq_first_lyapunov(const fq_model* model, const double* eq, double* c1_re, double* c1_im,
                            double* mu0);
/* Destabilization-condition value; prediction: +1 destabilizing, -1 not, 0 inconclusive. */
fq_status fq_hopf_condition(const double* J, double mu0, const double* D, int k, int k1,
                            const double* coeff_re, const double* coeff_im, size_t n_coeffs,
                            double* value, double* bracket, int* prediction);

/* ---- patch systems ---- */

/* Floquet multipliers of the linearization about the synchronous cycle for an
 * n-patch all-to-all coupling with matrix E and strength delta. *count
 * receives n*m. */
fq_status fq_patch_floquet(const fq_model* model, const fq_cycle* cycle, int n, const double* E,
                           double delta, double* re, double* im, size_t cap, size_t* count);

typedef struct {
    double lambda_qr;
    double lambda_floquet;
    double oscillation;
} fq_lle_result;

fq_status fq_patch_lle(const fq_model* model, const fq_cycle* cycle, int n, const double* E,
                       double delta, double burn_in, double horizon, fq_lle_result* out);

typedef struct {
    double p_prime;          /* P'(0) */
    double predicted_slope;  /* -n P'(0) */
    double fitted_slope;
    double max_multiplier;   /* over probe couplings, nontrivial branches */
    double lle;
    int verdict;             /* +1 destabilized, -1 stable, 0 inconclusive */
} fq_verdict;

fq_status fq_predict_and_verify(const fq_model* model, const fq_cycle* cycle, int n,
                                const double* E, const double* probes, size_t n_probes,
                                double lle_delta, fq_verdict* out);

/* ---- analysis orchestration ---- */

typedef struct {
    const char* out_dir;  /* default "out" */
    double tol;           /* > 0 overrides the configured cycle rtol */
    int fixed_step;
    int strict;           /* inconclusive verdicts exit 4 */
    const char* probes;   /* comma list overriding [analysis] probes, or NULL */
    const char* grid;     /* sweep grid like "delta=1e-3,2e-3" or "E12=0:10:11", or NULL */
    int quiet;            /* suppress the stdout summary */
} fq_run_options;

void fq_run_options_init(fq_run_options* opts);

/* Run a subcommand (cycle, period, hopf, floquet, lle, verdict, sweep,
 * example1, example2) against a config file; writes artifacts to out_dir.
 * Returns the process exit status: 0 ok, 2 config error, 3 numerical error,
 * 4 inconclusive verdict under strict. */
int fq_run(const char* subcommand, const char* config_path, const fq_run_options* opts);

#ifdef __cplusplus
}
#endif

#endif /* FLOQPATCH_H */
