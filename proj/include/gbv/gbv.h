/*
 * gbv - generalized Bayes verification library
 *
 * C interface to the gbv core: generalized posteriors pi_n propto
 * exp(-n f_n) pi, Newton fitting, Laplace approximation, random-walk
 * Metropolis sampling, grid quadrature, normal-limit diagnostics, sandwich
 * calibration, and coverage experiments over the built-in model zoo.
 *
 * Conventions:
 *   - every fallible call returns gbv_status; GBV_OK is 0
 *   - on failure, gbv_last_error() returns a thread-local message
 *   - matrices cross the boundary as dense row-major double arrays
 *   - objects are opaque handles released with the matching *_free
 */

#ifndef GBV_H
#define GBV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gbv_status {
  GBV_OK = 0,
  GBV_ERR_ARGUMENT = 1,    /* bad inputs: dimensions, domains, invalid data */
  GBV_ERR_EVALUATION = 2,  /* model produced NaN or unusable values */
  GBV_ERR_NUMERICAL = 3,   /* non-PD matrix, singular system, stuck chain */
  GBV_ERR_IO = 4,          /* file missing or malformed */
  GBV_ERR_UNSUPPORTED = 5  /* outside supported range (e.g. grid in D > 2) */
} gbv_status;

const char* gbv_version(void);
const char* gbv_last_error(void);

typedef struct gbv_model gbv_model;
typedef struct gbv_prior gbv_prior;
typedef struct gbv_posterior gbv_posterior;
typedef struct gbv_fit gbv_fit;
typedef struct gbv_laplace gbv_laplace;
typedef struct gbv_draws gbv_draws;
typedef struct gbv_grid gbv_grid;
typedef struct gbv_sandwich gbv_sandwich;
typedef struct gbv_field gbv_field;
typedef struct gbv_table gbv_table;

void gbv_model_free(gbv_model* m);
void gbv_prior_free(gbv_prior* p);
void gbv_posterior_free(gbv_posterior* gp);
void gbv_fit_free(gbv_fit* f);
void gbv_laplace_free(gbv_laplace* l);
void gbv_draws_free(gbv_draws* d);
void gbv_grid_free(gbv_grid* g);
void gbv_sandwich_free(gbv_sandwich* s);
void gbv_field_free(gbv_field* f);
void gbv_table_free(gbv_table* t);

/* ---- numeric tables (named columns, row-major data) ---- */

gbv_status gbv_table_new(const char* const* column_names, int cols, const double* data_rowmajor,
                         long rows, gbv_table** out);
gbv_status gbv_table_load_csv(const char* path, gbv_table** out);
gbv_status gbv_table_save_csv(const gbv_table* t, const char* path);
long gbv_table_rows(const gbv_table* t);
int gbv_table_cols(const gbv_table* t);
const char* gbv_table_column_name(const gbv_table* t, int j);
const double* gbv_table_data(const gbv_table* t);

/* ---- lattice fields (torus, site values in index order) ---- */

gbv_status gbv_field_new(int m, int L, const double* values, gbv_field** out);
/* writes/reads "<base>.json" (header {m, L}) and "<base>.csv" (site values) */
gbv_status gbv_field_save(const gbv_field* f, const char* base_path);
gbv_status gbv_field_load(const char* base_path, gbv_field** out);
int gbv_field_m(const gbv_field* f);
int gbv_field_side(const gbv_field* f);
long gbv_field_sites(const gbv_field* f);
const double* gbv_field_values(const gbv_field* f);

/* ---- model zoo ----
 * family: "gaussian" (uses sigma2), "bernoulli-logit", "poisson",
 * "plusminus-binary". `power` tempers the loss (1 is the plain model;
 * 2 duplicates every log-density term). */

gbv_status gbv_model_iid_expfam(const char* family, double sigma2, const double* data, long n,
                                double power, gbv_model** out);
/* fractional-count variant: mean sufficient statistic supplied directly */
gbv_status gbv_model_iid_expfam_matched(const char* family, double sigma2, double s_n, long n,
                                        double power, gbv_model** out);
/* table columns x_1..x_D,y */
gbv_status gbv_model_glm(const char* family, double sigma2, const gbv_table* data, gbv_model** out);
gbv_status gbv_model_gmrf(const gbv_field* field, double gamma, int isotropic, gbv_model** out);
gbv_status gbv_model_ising(const gbv_field* field, gbv_model** out);
/* table columns y_1..y_d with +-1 entries; weights NULL or length rows */
gbv_status gbv_model_boltzmann(const gbv_table* samples, const double* weights, gbv_model** out);
/* table columns time,event,x_1..x_D */
gbv_status gbv_model_cox(const gbv_table* data, gbv_model** out);
/* cdf_name: "logistic" or "gaussian" */
gbv_status gbv_model_median(const char* cdf_name, const double* data, long n, gbv_model** out);

int gbv_model_dim(const gbv_model* m);
gbv_status gbv_model_value(const gbv_model* m, const double* theta, double* out);
gbv_status gbv_model_gradient(const gbv_model* m, const double* theta, double* out);
gbv_status gbv_model_hessian(const gbv_model* m, const double* theta, double* out_rowmajor);
/* analytic-vs-finite-difference cross-check at the given probe points */
gbv_status gbv_model_check_derivatives(const gbv_model* m, const double* probes_rowmajor,
                                       long n_probes, double h, double* max_grad_rel_err,
                                       double* max_hess_rel_err, int* pass);

/* ---- priors ---- */

gbv_status gbv_prior_uniform(int dim, const double* lower, const double* upper, gbv_prior** out);
gbv_status gbv_prior_gaussian(int dim, const double* mean, const double* sd, gbv_prior** out);
gbv_status gbv_prior_logit_uniform(gbv_prior** out);

/* ---- generalized posterior ---- */

gbv_status gbv_posterior_new(const gbv_model* m, const gbv_prior* p, long n, gbv_posterior** out);
gbv_status gbv_posterior_log_density(const gbv_posterior* gp, const double* theta, double* out);

/* ---- fitting ---- */

gbv_status gbv_fit_run(const gbv_model* m, const double* theta_init, double tol, long max_iter,
                       gbv_fit** out);
/* rebuild a fit handle from previously saved values (stage-wise pipelines) */
gbv_status gbv_fit_from_values(int dim, const double* theta, double f_min, double grad_norm,
                               long iterations, int converged, const double* hessian_rowmajor,
                               gbv_fit** out);
int gbv_fit_converged(const gbv_fit* f);
long gbv_fit_iterations(const gbv_fit* f);
double gbv_fit_min_value(const gbv_fit* f);
double gbv_fit_grad_norm(const gbv_fit* f);
gbv_status gbv_fit_theta(const gbv_fit* f, double* out);
gbv_status gbv_fit_hessian(const gbv_fit* f, double* out_rowmajor);

/* ---- curvature/smoothness audit on the box [e_lower, e_upper] ---- */

typedef struct gbv_audit_result {
  int fit_converged;
  double min_eigenvalue_H0;
  double convexity_min_eig_over_probes;
  double third_bound_estimate;
  int third_from_analytic;
  double grad_residual;
  int pd_pass;
  int convexity_pass;
  int third_bound_pass;
  int stationary_pass;
  int overall_pass;
} gbv_audit_result;

gbv_status gbv_audit_run(const gbv_model* m, const gbv_fit* f, const double* e_lower,
                         const double* e_upper, gbv_audit_result* out);

/* ---- Laplace approximation ---- */

gbv_status gbv_laplace_run(const gbv_posterior* gp, const gbv_fit* f, gbv_laplace** out);
double gbv_laplace_log_normalizer(const gbv_laplace* l);
gbv_status gbv_laplace_mean(const gbv_laplace* l, double* out);
gbv_status gbv_laplace_covariance(const gbv_laplace* l, double* out_rowmajor);

/* ---- sampling ---- */

gbv_status gbv_sample_rwm(const gbv_posterior* gp, const double* theta_init, long steps,
                          long burn_in, uint64_t seed, const gbv_laplace* scale_or_null,
                          gbv_draws** out);
/* wrap externally produced draws (e.g. merged chains) for the diagnostics */
gbv_status gbv_draws_from_data(int dim, const double* data_rowmajor, long rows, uint64_t seed,
                               double acceptance_rate, long burn_in, gbv_draws** out);
long gbv_draws_size(const gbv_draws* d);
int gbv_draws_dim(const gbv_draws* d);
const double* gbv_draws_data(const gbv_draws* d); /* row-major S x D */
double gbv_draws_acceptance_rate(const gbv_draws* d);
/* CSV header theta_1..theta_D plus "<path>.meta.json" sidecar */
gbv_status gbv_draws_save_csv(const gbv_draws* d, const char* path);
gbv_status gbv_draws_load_csv(const char* path, gbv_draws** out);
gbv_status gbv_draws_ess(const gbv_draws* d, double* out_per_coord);

/* ---- grid quadrature (D <= 2) ---- */

gbv_status gbv_grid_run(const gbv_posterior* gp, const double* lower, const double* upper,
                        int resolution, gbv_grid** out);
double gbv_grid_log_normalizer(const gbv_grid* g);
gbv_status gbv_grid_mean(const gbv_grid* g, double* out);
gbv_status gbv_grid_mass_in_ball(const gbv_grid* g, const double* center, double radius,
                                 double* out);
/* columns theta_1[,theta_2],mass */
gbv_status gbv_grid_save_csv(const gbv_grid* g, const char* path);

/* ---- normal-limit diagnostics ---- */

gbv_status gbv_tv_to_normal(const gbv_grid* g, const double* theta_n, long n,
                            const double* H0_rowmajor, double* out);
gbv_status gbv_moment_gap(const gbv_draws* d, const double* theta_n, long n,
                          const double* H0_rowmajor, double* mean_gap, double* cov_gap);
gbv_status gbv_concentration_draws(const gbv_draws* d, const double* theta0, double eps,
                                   double* out);
gbv_status gbv_concentration_grid(const gbv_grid* g, const double* theta0, double eps, double* out);

/* ---- sandwich covariance and affine calibration ---- */

gbv_status gbv_sandwich_run(const gbv_model* m, const gbv_fit* f, gbv_sandwich** out);
long gbv_sandwich_components(const gbv_sandwich* s);
gbv_status gbv_sandwich_A(const gbv_sandwich* s, double* out_rowmajor);
gbv_status gbv_sandwich_J(const gbv_sandwich* s, double* out_rowmajor);
gbv_status gbv_sandwich_cov(const gbv_sandwich* s, double* out_rowmajor);
gbv_status gbv_affine_calibrate(const gbv_draws* d, const double* center,
                                const double* target_cov_rowmajor, gbv_draws** out);

/* ---- credible sets ---- */

gbv_status gbv_credible_set(const gbv_draws* d, double rho, double* center, double* shape_rowmajor,
                            double* radius2);
gbv_status gbv_credible_contains(const gbv_draws* d, double rho, const double* theta0,
                                 int* contains);

/* ---- coverage experiments (built-in replication pipelines) ---- */

typedef enum gbv_coverage_family {
  GBV_COVERAGE_NORMAL_MEAN = 0,    /* correctly specified normal-mean model */
  GBV_COVERAGE_POWER_GAUSSIAN = 1  /* every Gaussian log-density term duplicated */
} gbv_coverage_family;

typedef struct gbv_coverage_spec {
  gbv_coverage_family family;
  double theta0;
  double sigma;
  long n_per_rep;
  double rho;
  long reps;
  uint64_t seed;
  int calibrate;
  long sampler_steps;   /* 0 picks the default */
  long sampler_burn_in; /* 0 picks the default */
  int threads;          /* <= 0 picks one thread */
} gbv_coverage_spec;

typedef struct gbv_coverage_result {
  long replications; /* valid (non-failed) replications */
  long hits;
  long failed;
  double coverage;
  double wilson_lo;
  double wilson_hi;
} gbv_coverage_result;

gbv_status gbv_coverage_run(const gbv_coverage_spec* spec, gbv_coverage_result* out);

/* ---- data generators ----
 * covariate_spec: "gaussian(scale)", "rademacher", "uniform(lo,hi)"
 * baseline_spec:  "exponential(rate)", "weibull(shape,scale)"
 * censor_spec:    "none", "exponential(rate)", "uniform(hi)"
 * noise_spec:     "gaussian(sigma)", "cauchy(gamma)", "mixture(eps,outlier_scale)" */

gbv_status gbv_sim_glm(const char* kind, const double* theta_true, int dim, long n,
                       const char* covariate_spec, double sigma, uint64_t seed, gbv_table** out);
gbv_status gbv_sim_ising(int L, int m, double theta1, double theta2, int sweeps, int burn_sweeps,
                         uint64_t seed, int* critical_warning, gbv_field** out);
gbv_status gbv_sim_gmrf(int L, int m, const double* theta_axes, double gamma, uint64_t seed,
                        gbv_field** out);
/* A is row-major d x d strictly upper triangular; exact_table (optional)
 * gets columns y_1..y_d,prob */
gbv_status gbv_sim_boltzmann(int d, const double* A_rowmajor, const double* b, long n,
                             uint64_t seed, gbv_table** samples, gbv_table** exact_table);
gbv_status gbv_sim_cox(long n, const double* theta_true, int dim, const char* baseline_spec,
                       const char* censor_spec, const char* covariate_spec, uint64_t seed,
                       gbv_table** out);
gbv_status gbv_sim_location(long n, double theta0, const char* noise_spec, uint64_t seed,
                            gbv_table** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GBV_H */
