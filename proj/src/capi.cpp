// C shim over the gbv core: opaque handles, status codes, thread-local
// error text. All exceptions stop at this boundary.

#include "gbv/gbv.h"

#include <cstring>
#include <string>

#include "core.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "laplace.hpp"
#include "models/cox.hpp"
#include "models/expfam.hpp"
#include "models/glm.hpp"
#include "models/median.hpp"
#include "models/pseudolik.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "simulate.hpp"
#include "specparse.hpp"

struct gbv_model {
  std::shared_ptr<const gbv::ObjectiveModel> impl;
};
struct gbv_prior {
  gbv::PriorSpec impl;
};
struct gbv_posterior {
  gbv::GeneralizedPosterior impl;
};
struct gbv_fit {
  gbv::FitResult impl;
};
struct gbv_laplace {
  gbv::LaplaceResult impl;
};
struct gbv_draws {
  gbv::DrawMatrix impl;
  std::vector<double> rowmajor;  // backs gbv_draws_data
};
struct gbv_grid {
  gbv::GridDensity impl;
};
struct gbv_sandwich {
  gbv::SandwichEstimate impl;
};
struct gbv_field {
  gbv::FieldSample impl;
};
struct gbv_table {
  std::vector<std::string> columns;
  gbv::Mat values;
  std::vector<double> rowmajor;  // backs gbv_table_data
};

namespace {

thread_local std::string g_last_error;

void set_error(const char* what) { g_last_error = what ? what : "unknown error"; }

gbv_status to_status(const std::exception& e) {
  set_error(e.what());
  if (dynamic_cast<const gbv::ArgumentError*>(&e)) return GBV_ERR_ARGUMENT;
  if (dynamic_cast<const gbv::EvaluationError*>(&e)) return GBV_ERR_EVALUATION;
  if (dynamic_cast<const gbv::NumericalError*>(&e)) return GBV_ERR_NUMERICAL;
  if (dynamic_cast<const gbv::IoError*>(&e)) return GBV_ERR_IO;
  if (dynamic_cast<const gbv::UnsupportedError*>(&e)) return GBV_ERR_UNSUPPORTED;
  return GBV_ERR_NUMERICAL;
}

gbv::Vec to_vec(const double* data, long n) {
  if (!data) throw gbv::ArgumentError("null array argument");
  return Eigen::Map<const gbv::Vec>(data, n);
}

gbv::Mat to_mat(const double* data, long rows, long cols) {
  if (!data) throw gbv::ArgumentError("null matrix argument");
  gbv::Mat m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = data[i * cols + j];
  return m;
}

void from_mat(const gbv::Mat& m, double* out) {
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
}

void require(bool ok, const char* what) {
  if (!ok) throw gbv::ArgumentError(what);
}

std::vector<double> rowmajor_copy(const gbv::Mat& m) {
  std::vector<double> flat(static_cast<size_t>(m.rows()) * m.cols());
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) flat[static_cast<size_t>(i) * m.cols() + j] = m(i, j);
  return flat;
}

gbv_table* new_table(std::vector<std::string> columns, gbv::Mat values) {
  auto* t = new gbv_table{std::move(columns), std::move(values), {}};
  t->rowmajor = rowmajor_copy(t->values);
  return t;
}

gbv_draws* new_draws(gbv::DrawMatrix draws) {
  auto* d = new gbv_draws{std::move(draws), {}};
  d->rowmajor = rowmajor_copy(d->impl.draws);
  return d;
}

gbv::GLMDataset table_to_glm(const gbv_table& t, const gbv::ExpFam1P& family) {
  int yc = -1;
  for (size_t j = 0; j < t.columns.size(); ++j)
    if (t.columns[j] == "y") yc = static_cast<int>(j);
  require(yc >= 0, "GLM table needs a 'y' column");
  const int d = static_cast<int>(t.columns.size()) - 1;
  require(d >= 1, "GLM table needs covariate columns x_1..x_D");
  gbv::GLMDataset out{gbv::Mat(t.values.rows(), d), t.values.col(yc), family};
  for (int j = 0; j < d; ++j) {
    const std::string name = "x_" + std::to_string(j + 1);
    int c = -1;
    for (size_t q = 0; q < t.columns.size(); ++q)
      if (t.columns[q] == name) c = static_cast<int>(q);
    require(c >= 0, "GLM table missing a covariate column");
    out.X.col(j) = t.values.col(c);
  }
  return out;
}

gbv::SurvivalDataset table_to_survival(const gbv_table& t) {
  int tc = -1, ec = -1;
  for (size_t j = 0; j < t.columns.size(); ++j) {
    if (t.columns[j] == "time") tc = static_cast<int>(j);
    if (t.columns[j] == "event") ec = static_cast<int>(j);
  }
  require(tc >= 0 && ec >= 0, "survival table needs 'time' and 'event' columns");
  const int d = static_cast<int>(t.columns.size()) - 2;
  require(d >= 1, "survival table needs covariate columns x_1..x_D");
  gbv::SurvivalDataset out;
  out.time = t.values.col(tc);
  out.event.resize(t.values.rows());
  for (long i = 0; i < t.values.rows(); ++i) out.event[i] = static_cast<int>(t.values(i, ec));
  out.X.resize(t.values.rows(), d);
  for (int j = 0; j < d; ++j) {
    const std::string name = "x_" + std::to_string(j + 1);
    int c = -1;
    for (size_t q = 0; q < t.columns.size(); ++q)
      if (t.columns[q] == name) c = static_cast<int>(q);
    require(c >= 0, "survival table missing a covariate column");
    out.X.col(j) = t.values.col(c);
  }
  return out;
}

}  // namespace

#define GBV_GUARD_BEGIN try {
#define GBV_GUARD_END                 \
  return GBV_OK;                      \
  }                                   \
  catch (const std::exception& e) {   \
    return to_status(e);              \
  }                                   \
  catch (...) {                       \
    set_error("unknown error");       \
    return GBV_ERR_NUMERICAL;         \
  }

extern "C" {

const char* gbv_version(void) { return "1.0.0"; }
const char* gbv_last_error(void) { return g_last_error.c_str(); }

void gbv_model_free(gbv_model* m) { delete m; }
void gbv_prior_free(gbv_prior* p) { delete p; }
void gbv_posterior_free(gbv_posterior* gp) { delete gp; }
void gbv_fit_free(gbv_fit* f) { delete f; }
void gbv_laplace_free(gbv_laplace* l) { delete l; }
void gbv_draws_free(gbv_draws* d) { delete d; }
void gbv_grid_free(gbv_grid* g) { delete g; }
void gbv_sandwich_free(gbv_sandwich* s) { delete s; }
void gbv_field_free(gbv_field* f) { delete f; }
void gbv_table_free(gbv_table* t) { delete t; }

gbv_status gbv_table_new(const char* const* column_names, int cols, const double* data_rowmajor,
                         long rows, gbv_table** out) {
  GBV_GUARD_BEGIN
  require(out && column_names && cols >= 1 && rows >= 0, "gbv_table_new: bad arguments");
  std::vector<std::string> names;
  for (int j = 0; j < cols; ++j) names.emplace_back(column_names[j]);
  *out = new_table(std::move(names), rows > 0 ? to_mat(data_rowmajor, rows, cols) : gbv::Mat(0, cols));
  GBV_GUARD_END
}

gbv_status gbv_table_load_csv(const char* path, gbv_table** out) {
  GBV_GUARD_BEGIN
  require(out && path, "gbv_table_load_csv: bad arguments");
  const gbv::CsvTable csv = gbv::read_csv(path);
  *out = new_table(csv.columns, csv.values);
  GBV_GUARD_END
}

gbv_status gbv_table_save_csv(const gbv_table* t, const char* path) {
  GBV_GUARD_BEGIN
  require(t && path, "gbv_table_save_csv: bad arguments");
  gbv::write_csv(path, t->columns, t->values);
  GBV_GUARD_END
}

long gbv_table_rows(const gbv_table* t) { return t ? t->values.rows() : 0; }
int gbv_table_cols(const gbv_table* t) { return t ? static_cast<int>(t->columns.size()) : 0; }

const char* gbv_table_column_name(const gbv_table* t, int j) {
  if (!t || j < 0 || j >= static_cast<int>(t->columns.size())) return nullptr;
  return t->columns[j].c_str();
}

const double* gbv_table_data(const gbv_table* t) { return t ? t->rowmajor.data() : nullptr; }

gbv_status gbv_field_new(int m, int L, const double* values, gbv_field** out) {
  GBV_GUARD_BEGIN
  require(out, "gbv_field_new: bad arguments");
  gbv::FieldSample f;
  f.lattice = gbv::TorusLattice::make(m, L);
  f.values = to_vec(values, f.lattice.sites());
  *out = new gbv_field{std::move(f)};
  GBV_GUARD_END
}

gbv_status gbv_field_save(const gbv_field* f, const char* base_path) {
  GBV_GUARD_BEGIN
  require(f && base_path, "gbv_field_save: bad arguments");
  gbv::save_field(f->impl, base_path);
  GBV_GUARD_END
}

gbv_status gbv_field_load(const char* base_path, gbv_field** out) {
  GBV_GUARD_BEGIN
  require(out && base_path, "gbv_field_load: bad arguments");
  *out = new gbv_field{gbv::load_field(base_path)};
  GBV_GUARD_END
}

int gbv_field_m(const gbv_field* f) { return f ? f->impl.lattice.m : 0; }
int gbv_field_side(const gbv_field* f) { return f ? f->impl.lattice.L : 0; }
long gbv_field_sites(const gbv_field* f) { return f ? f->impl.lattice.sites() : 0; }
const double* gbv_field_values(const gbv_field* f) { return f ? f->impl.values.data() : nullptr; }

gbv_status gbv_model_iid_expfam(const char* family, double sigma2, const double* data, long n,
                                double power, gbv_model** out) {
  GBV_GUARD_BEGIN
  require(out && family, "gbv_model_iid_expfam: bad arguments");
  const gbv::ExpFam1P fam = gbv::expfam_by_name(family, sigma2);
  *out = new gbv_model{gbv::build_iid_expfam(fam, to_vec(data, n), power)};
  GBV_GUARD_END
}

gbv_status gbv_model_iid_expfam_matched(const char* family, double sigma2, double s_n, long n,
                                        double power, gbv_model** out) {
  GBV_GUARD_BEGIN
  require(out && family, "gbv_model_iid_expfam_matched: bad arguments");
  const gbv::ExpFam1P fam = gbv::expfam_by_name(family, sigma2);
  *out = new gbv_model{gbv::build_iid_expfam_matched(fam, s_n, n, power)};
  GBV_GUARD_END
}

gbv_status gbv_model_glm(const char* family, double sigma2, const gbv_table* data, gbv_model** out) {
  GBV_GUARD_BEGIN
  require(out && family && data, "gbv_model_glm: bad arguments");
  *out = new gbv_model{gbv::build_glm(table_to_glm(*data, gbv::expfam_by_name(family, sigma2)))};
  GBV_GUARD_END
}

gbv_status gbv_model_gmrf(const gbv_field* field, double gamma, int isotropic, gbv_model** out) {
  GBV_GUARD_BEGIN
  require(out && field, "gbv_model_gmrf: bad arguments");
  *out = new gbv_model{gbv::gmrf_pseudolik(field->impl, gamma, isotropic != 0)};
  GBV_GUARD_END
}

gbv_status gbv_model_ising(const gbv_field* field, gbv_model** out) {
  GBV_GUARD_BEGIN
  require(out && field, "gbv_model_ising: bad arguments");
  *out = new gbv_model{gbv::ising_pseudolik(field->impl)};
  GBV_GUARD_END
}

gbv_status gbv_model_boltzmann(const gbv_table* samples, const double* weights, gbv_model** out) {
  GBV_GUARD_BEGIN
  require(out && samples, "gbv_model_boltzmann: bad arguments");
  gbv::Vec w;
  if (weights) w = to_vec(weights, samples->values.rows());
  *out = new gbv_model{gbv::boltzmann_pseudolik(samples->values, w)};
  GBV_GUARD_END
}

gbv_status gbv_model_cox(const gbv_table* data, gbv_model** out) {
  GBV_GUARD_BEGIN
  require(out && data, "gbv_model_cox: bad arguments");
  *out = new gbv_model{gbv::cox_partial_model(table_to_survival(*data))};
  GBV_GUARD_END
}

gbv_status gbv_model_median(const char* cdf_name, const double* data, long n, gbv_model** out) {
  GBV_GUARD_BEGIN
  require(out && cdf_name, "gbv_model_median: bad arguments");
  *out = new gbv_model{
      gbv::median_location_model(to_vec(data, n), gbv::symmetric_cdf_by_name(cdf_name))};
  GBV_GUARD_END
}

int gbv_model_dim(const gbv_model* m) { return m ? m->impl->dim() : 0; }

gbv_status gbv_model_value(const gbv_model* m, const double* theta, double* out) {
  GBV_GUARD_BEGIN
  require(m && theta && out, "gbv_model_value: bad arguments");
  *out = m->impl->value(to_vec(theta, m->impl->dim()));
  GBV_GUARD_END
}

gbv_status gbv_model_gradient(const gbv_model* m, const double* theta, double* out) {
  GBV_GUARD_BEGIN
  require(m && theta && out, "gbv_model_gradient: bad arguments");
  const gbv::Vec g = m->impl->gradient(to_vec(theta, m->impl->dim()));
  for (int j = 0; j < g.size(); ++j) out[j] = g(j);
  GBV_GUARD_END
}

gbv_status gbv_model_hessian(const gbv_model* m, const double* theta, double* out_rowmajor) {
  GBV_GUARD_BEGIN
  require(m && theta && out_rowmajor, "gbv_model_hessian: bad arguments");
  from_mat(m->impl->hessian(to_vec(theta, m->impl->dim())), out_rowmajor);
  GBV_GUARD_END
}

gbv_status gbv_model_check_derivatives(const gbv_model* m, const double* probes_rowmajor,
                                       long n_probes, double h, double* max_grad_rel_err,
                                       double* max_hess_rel_err, int* pass) {
  GBV_GUARD_BEGIN
  require(m && probes_rowmajor && n_probes >= 1, "gbv_model_check_derivatives: bad arguments");
  const int d = m->impl->dim();
  std::vector<gbv::Vec> probes;
  probes.reserve(n_probes);
  for (long i = 0; i < n_probes; ++i) probes.push_back(to_vec(probes_rowmajor + i * d, d));
  const gbv::ModelValidationReport report = gbv::validate_model(*m->impl, probes, h);
  if (max_grad_rel_err) *max_grad_rel_err = report.max_grad_rel_err;
  if (max_hess_rel_err) *max_hess_rel_err = report.max_hess_rel_err;
  if (pass) *pass = report.pass ? 1 : 0;
  GBV_GUARD_END
}

gbv_status gbv_prior_uniform(int dim, const double* lower, const double* upper, gbv_prior** out) {
  GBV_GUARD_BEGIN
  require(out && dim >= 1, "gbv_prior_uniform: bad arguments");
  *out = new gbv_prior{
      gbv::PriorSpec::uniform_box(gbv::DomainBox::bounds(to_vec(lower, dim), to_vec(upper, dim)))};
  GBV_GUARD_END
}

gbv_status gbv_prior_gaussian(int dim, const double* mean, const double* sd, gbv_prior** out) {
  GBV_GUARD_BEGIN
  require(out && dim >= 1, "gbv_prior_gaussian: bad arguments");
  *out = new gbv_prior{gbv::PriorSpec::gaussian(to_vec(mean, dim), to_vec(sd, dim))};
  GBV_GUARD_END
}

gbv_status gbv_prior_logit_uniform(gbv_prior** out) {
  GBV_GUARD_BEGIN
  require(out, "gbv_prior_logit_uniform: bad arguments");
  *out = new gbv_prior{gbv::logit_uniform_prior()};
  GBV_GUARD_END
}

gbv_status gbv_posterior_new(const gbv_model* m, const gbv_prior* p, long n, gbv_posterior** out) {
  GBV_GUARD_BEGIN
  require(out && m && p, "gbv_posterior_new: bad arguments");
  *out = new gbv_posterior{gbv::GeneralizedPosterior(m->impl, p->impl, n)};
  GBV_GUARD_END
}

gbv_status gbv_posterior_log_density(const gbv_posterior* gp, const double* theta, double* out) {
  GBV_GUARD_BEGIN
  require(gp && theta && out, "gbv_posterior_log_density: bad arguments");
  *out = gbv::unnormalized_log_posterior(gp->impl, to_vec(theta, gp->impl.dim()));
  GBV_GUARD_END
}

gbv_status gbv_fit_run(const gbv_model* m, const double* theta_init, double tol, long max_iter,
                       gbv_fit** out) {
  GBV_GUARD_BEGIN
  require(out && m && theta_init, "gbv_fit_run: bad arguments");
  *out = new gbv_fit{gbv::find_minimizer(*m->impl, to_vec(theta_init, m->impl->dim()), tol, max_iter)};
  GBV_GUARD_END
}

gbv_status gbv_fit_from_values(int dim, const double* theta, double f_min, double grad_norm,
                               long iterations, int converged, const double* hessian_rowmajor,
                               gbv_fit** out) {
  GBV_GUARD_BEGIN
  require(out && theta && hessian_rowmajor && dim >= 1, "gbv_fit_from_values: bad arguments");
  gbv::FitResult fit;
  fit.theta_n = to_vec(theta, dim);
  fit.f_min = f_min;
  fit.grad_norm = grad_norm;
  fit.iterations = iterations;
  fit.converged = converged != 0;
  fit.hessian_at_min = to_mat(hessian_rowmajor, dim, dim);
  fit.hessian_at_min = 0.5 * (fit.hessian_at_min + fit.hessian_at_min.transpose());
  *out = new gbv_fit{std::move(fit)};
  GBV_GUARD_END
}

int gbv_fit_converged(const gbv_fit* f) { return f && f->impl.converged ? 1 : 0; }
long gbv_fit_iterations(const gbv_fit* f) { return f ? f->impl.iterations : 0; }
double gbv_fit_min_value(const gbv_fit* f) { return f ? f->impl.f_min : 0.0; }
double gbv_fit_grad_norm(const gbv_fit* f) { return f ? f->impl.grad_norm : 0.0; }

gbv_status gbv_fit_theta(const gbv_fit* f, double* out) {
  GBV_GUARD_BEGIN
  require(f && out, "gbv_fit_theta: bad arguments");
  for (int j = 0; j < f->impl.theta_n.size(); ++j) out[j] = f->impl.theta_n(j);
  GBV_GUARD_END
}

gbv_status gbv_fit_hessian(const gbv_fit* f, double* out_rowmajor) {
  GBV_GUARD_BEGIN
  require(f && out_rowmajor, "gbv_fit_hessian: bad arguments");
  from_mat(f->impl.hessian_at_min, out_rowmajor);
  GBV_GUARD_END
}

gbv_status gbv_audit_run(const gbv_model* m, const gbv_fit* f, const double* e_lower,
                         const double* e_upper, gbv_audit_result* out) {
  GBV_GUARD_BEGIN
  require(m && f && e_lower && e_upper && out, "gbv_audit_run: bad arguments");
  const int d = m->impl->dim();
  const gbv::AuditReport report = gbv::bvm_audit(
      *m->impl, f->impl, gbv::DomainBox::bounds(to_vec(e_lower, d), to_vec(e_upper, d)));
  out->fit_converged = report.fit_converged;
  out->min_eigenvalue_H0 = report.min_eigenvalue_H0;
  out->convexity_min_eig_over_probes = report.convexity_min_eig_over_probes;
  out->third_bound_estimate = report.third_bound_estimate;
  out->third_from_analytic = report.third_from_analytic;
  out->grad_residual = report.grad_residual_at_thetan;
  out->pd_pass = report.pd_pass;
  out->convexity_pass = report.convexity_pass;
  out->third_bound_pass = report.third_bound_pass;
  out->stationary_pass = report.stationary_pass;
  out->overall_pass = report.overall_pass;
  GBV_GUARD_END
}

gbv_status gbv_laplace_run(const gbv_posterior* gp, const gbv_fit* f, gbv_laplace** out) {
  GBV_GUARD_BEGIN
  require(out && gp && f, "gbv_laplace_run: bad arguments");
  *out = new gbv_laplace{gbv::laplace_log_normalizer(gp->impl, f->impl)};
  GBV_GUARD_END
}

double gbv_laplace_log_normalizer(const gbv_laplace* l) { return l ? l->impl.log_zhat : 0.0; }

gbv_status gbv_laplace_mean(const gbv_laplace* l, double* out) {
  GBV_GUARD_BEGIN
  require(l && out, "gbv_laplace_mean: bad arguments");
  for (int j = 0; j < l->impl.mean.size(); ++j) out[j] = l->impl.mean(j);
  GBV_GUARD_END
}

gbv_status gbv_laplace_covariance(const gbv_laplace* l, double* out_rowmajor) {
  GBV_GUARD_BEGIN
  require(l && out_rowmajor, "gbv_laplace_covariance: bad arguments");
  from_mat(l->impl.covariance, out_rowmajor);
  GBV_GUARD_END
}

gbv_status gbv_sample_rwm(const gbv_posterior* gp, const double* theta_init, long steps,
                          long burn_in, uint64_t seed, const gbv_laplace* scale_or_null,
                          gbv_draws** out) {
  GBV_GUARD_BEGIN
  require(out && gp && theta_init, "gbv_sample_rwm: bad arguments");
  std::optional<gbv::Mat> proposal;
  if (scale_or_null) proposal = gbv::cholesky_lower(scale_or_null->impl.covariance);
  *out = new_draws(gbv::rwm_sample(gp->impl, to_vec(theta_init, gp->impl.dim()), steps, burn_in,
                                   seed, proposal));
  GBV_GUARD_END
}

gbv_status gbv_draws_from_data(int dim, const double* data_rowmajor, long rows, uint64_t seed,
                               double acceptance_rate, long burn_in, gbv_draws** out) {
  GBV_GUARD_BEGIN
  require(out && data_rowmajor && dim >= 1 && rows >= 1, "gbv_draws_from_data: bad arguments");
  gbv::DrawMatrix d;
  d.draws = to_mat(data_rowmajor, rows, dim);
  d.seed = seed;
  d.acceptance_rate = acceptance_rate;
  d.burn_in = burn_in;
  *out = new_draws(std::move(d));
  GBV_GUARD_END
}

long gbv_draws_size(const gbv_draws* d) { return d ? d->impl.size() : 0; }
int gbv_draws_dim(const gbv_draws* d) { return d ? d->impl.dim() : 0; }
double gbv_draws_acceptance_rate(const gbv_draws* d) { return d ? d->impl.acceptance_rate : 0.0; }

const double* gbv_draws_data(const gbv_draws* d) { return d ? d->rowmajor.data() : nullptr; }

gbv_status gbv_draws_save_csv(const gbv_draws* d, const char* path) {
  GBV_GUARD_BEGIN
  require(d && path, "gbv_draws_save_csv: bad arguments");
  gbv::save_draws_csv(d->impl, path);
  GBV_GUARD_END
}

gbv_status gbv_draws_load_csv(const char* path, gbv_draws** out) {
  GBV_GUARD_BEGIN
  require(out && path, "gbv_draws_load_csv: bad arguments");
  *out = new_draws(gbv::load_draws_csv(path));
  GBV_GUARD_END
}

gbv_status gbv_draws_ess(const gbv_draws* d, double* out_per_coord) {
  GBV_GUARD_BEGIN
  require(d && out_per_coord, "gbv_draws_ess: bad arguments");
  const gbv::EssResult r = gbv::effective_sample_size(d->impl);
  for (int j = 0; j < r.ess.size(); ++j) out_per_coord[j] = r.ess(j);
  GBV_GUARD_END
}

gbv_status gbv_grid_run(const gbv_posterior* gp, const double* lower, const double* upper,
                        int resolution, gbv_grid** out) {
  GBV_GUARD_BEGIN
  require(out && gp, "gbv_grid_run: bad arguments");
  const int d = gp->impl.dim();
  *out = new gbv_grid{gbv::grid_density(
      gp->impl, gbv::DomainBox::bounds(to_vec(lower, d), to_vec(upper, d)), resolution)};
  GBV_GUARD_END
}

double gbv_grid_log_normalizer(const gbv_grid* g) { return g ? g->impl.log_z_grid : 0.0; }

gbv_status gbv_grid_mean(const gbv_grid* g, double* out) {
  GBV_GUARD_BEGIN
  require(g && out, "gbv_grid_mean: bad arguments");
  const gbv::Vec mean = g->impl.mean();
  for (int j = 0; j < mean.size(); ++j) out[j] = mean(j);
  GBV_GUARD_END
}

gbv_status gbv_grid_mass_in_ball(const gbv_grid* g, const double* center, double radius,
                                 double* out) {
  GBV_GUARD_BEGIN
  require(g && center && out, "gbv_grid_mass_in_ball: bad arguments");
  *out = g->impl.mass_in_ball(to_vec(center, g->impl.dim()), radius);
  GBV_GUARD_END
}

gbv_status gbv_grid_save_csv(const gbv_grid* g, const char* path) {
  GBV_GUARD_BEGIN
  require(g && path, "gbv_grid_save_csv: bad arguments");
  const int d = g->impl.dim();
  std::vector<std::string> cols;
  for (int j = 0; j < d; ++j) cols.push_back("theta_" + std::to_string(j + 1));
  cols.push_back("mass");
  gbv::Mat values(g->impl.cells(), d + 1);
  for (long i = 0; i < g->impl.cells(); ++i) {
    const gbv::Vec c = g->impl.cell_center(i);
    for (int j = 0; j < d; ++j) values(i, j) = c(j);
    values(i, d) = g->impl.mass(i);
  }
  gbv::write_csv(path, cols, values);
  GBV_GUARD_END
}

gbv_status gbv_tv_to_normal(const gbv_grid* g, const double* theta_n, long n,
                            const double* H0_rowmajor, double* out) {
  GBV_GUARD_BEGIN
  require(g && theta_n && H0_rowmajor && out, "gbv_tv_to_normal: bad arguments");
  const int d = g->impl.dim();
  *out = gbv::tv_to_normal_limit(g->impl, to_vec(theta_n, d), n, to_mat(H0_rowmajor, d, d));
  GBV_GUARD_END
}

gbv_status gbv_moment_gap(const gbv_draws* d, const double* theta_n, long n,
                          const double* H0_rowmajor, double* mean_gap, double* cov_gap) {
  GBV_GUARD_BEGIN
  require(d && theta_n && H0_rowmajor, "gbv_moment_gap: bad arguments");
  const int dim = d->impl.dim();
  const gbv::MomentGap gap =
      gbv::moment_gap_to_normal(d->impl, to_vec(theta_n, dim), n, to_mat(H0_rowmajor, dim, dim));
  if (mean_gap) *mean_gap = gap.mean_gap;
  if (cov_gap) *cov_gap = gap.cov_gap;
  GBV_GUARD_END
}

gbv_status gbv_concentration_draws(const gbv_draws* d, const double* theta0, double eps,
                                   double* out) {
  GBV_GUARD_BEGIN
  require(d && theta0 && out, "gbv_concentration_draws: bad arguments");
  *out = gbv::concentration_mass(d->impl, to_vec(theta0, d->impl.dim()), eps);
  GBV_GUARD_END
}

gbv_status gbv_concentration_grid(const gbv_grid* g, const double* theta0, double eps, double* out) {
  GBV_GUARD_BEGIN
  require(g && theta0 && out, "gbv_concentration_grid: bad arguments");
  *out = gbv::concentration_mass(g->impl, to_vec(theta0, g->impl.dim()), eps);
  GBV_GUARD_END
}

gbv_status gbv_sandwich_run(const gbv_model* m, const gbv_fit* f, gbv_sandwich** out) {
  GBV_GUARD_BEGIN
  require(out && m && f, "gbv_sandwich_run: bad arguments");
  *out = new gbv_sandwich{gbv::sandwich_covariance(*m->impl, f->impl)};
  GBV_GUARD_END
}

long gbv_sandwich_components(const gbv_sandwich* s) { return s ? s->impl.component_count : 0; }

gbv_status gbv_sandwich_A(const gbv_sandwich* s, double* out_rowmajor) {
  GBV_GUARD_BEGIN
  require(s && out_rowmajor, "gbv_sandwich_A: bad arguments");
  from_mat(s->impl.A_hat, out_rowmajor);
  GBV_GUARD_END
}

gbv_status gbv_sandwich_J(const gbv_sandwich* s, double* out_rowmajor) {
  GBV_GUARD_BEGIN
  require(s && out_rowmajor, "gbv_sandwich_J: bad arguments");
  from_mat(s->impl.J_hat, out_rowmajor);
  GBV_GUARD_END
}

gbv_status gbv_sandwich_cov(const gbv_sandwich* s, double* out_rowmajor) {
  GBV_GUARD_BEGIN
  require(s && out_rowmajor, "gbv_sandwich_cov: bad arguments");
  from_mat(s->impl.sandwich_cov, out_rowmajor);
  GBV_GUARD_END
}

gbv_status gbv_affine_calibrate(const gbv_draws* d, const double* center,
                                const double* target_cov_rowmajor, gbv_draws** out) {
  GBV_GUARD_BEGIN
  require(out && d && center && target_cov_rowmajor, "gbv_affine_calibrate: bad arguments");
  const int dim = d->impl.dim();
  *out = new_draws(gbv::affine_calibrate(d->impl, to_vec(center, dim),
                                         to_mat(target_cov_rowmajor, dim, dim)));
  GBV_GUARD_END
}

gbv_status gbv_credible_set(const gbv_draws* d, double rho, double* center, double* shape_rowmajor,
                            double* radius2) {
  GBV_GUARD_BEGIN
  require(d, "gbv_credible_set: bad arguments");
  const gbv::CredibleSet set = gbv::credible_set(d->impl, rho);
  if (center)
    for (int j = 0; j < set.center.size(); ++j) center[j] = set.center(j);
  if (shape_rowmajor) from_mat(set.shape, shape_rowmajor);
  if (radius2) *radius2 = set.radius2;
  GBV_GUARD_END
}

gbv_status gbv_credible_contains(const gbv_draws* d, double rho, const double* theta0,
                                 int* contains) {
  GBV_GUARD_BEGIN
  require(d && theta0 && contains, "gbv_credible_contains: bad arguments");
  const gbv::CredibleSet set = gbv::credible_set(d->impl, rho);
  *contains = set.contains(to_vec(theta0, d->impl.dim())) ? 1 : 0;
  GBV_GUARD_END
}

gbv_status gbv_coverage_run(const gbv_coverage_spec* spec, gbv_coverage_result* out) {
  GBV_GUARD_BEGIN
  require(spec && out, "gbv_coverage_run: bad arguments");
  require(spec->sigma > 0.0, "gbv_coverage_run: sigma must be > 0");
  require(spec->n_per_rep >= 2, "gbv_coverage_run: n_per_rep must be >= 2");

  const double power = spec->family == GBV_COVERAGE_POWER_GAUSSIAN ? 2.0 : 1.0;
  const double sigma2 = spec->sigma * spec->sigma;
  const double theta0 = spec->theta0;
  const long n = spec->n_per_rep;

  gbv::CoverageOptions options;
  if (spec->sampler_steps > 0) options.sampler_steps = spec->sampler_steps;
  if (spec->sampler_burn_in > 0) options.sampler_burn_in = spec->sampler_burn_in;
  options.threads = spec->threads > 0 ? spec->threads : 1;

  // wide uniform prior, effectively flat at desk scale
  const gbv::Vec lo = gbv::Vec::Constant(1, theta0 - 50.0 * spec->sigma);
  const gbv::Vec hi = gbv::Vec::Constant(1, theta0 + 50.0 * spec->sigma);
  const gbv::PriorSpec prior = gbv::PriorSpec::uniform_box(gbv::DomainBox::bounds(lo, hi));

  auto make_posterior = [=](std::uint64_t rep_seed) {
    const gbv::Vec data =
        gbv::gen_location(n, theta0, gbv::NoiseSpec::gaussian(spec->sigma), rep_seed);
    auto model = gbv::build_iid_expfam(gbv::expfam_gaussian(sigma2), data, power);
    return gbv::GeneralizedPosterior(model, prior, n);
  };

  gbv::Vec theta0_vec(1);
  theta0_vec(0) = theta0;
  const gbv::CoverageReport report = gbv::coverage_experiment_impl(
      make_posterior, theta0_vec, spec->rho, spec->reps, spec->seed, spec->calibrate != 0, options);

  out->replications = report.replications;
  out->hits = report.hits;
  out->failed = report.failed;
  out->coverage = report.coverage;
  out->wilson_lo = report.wilson_lo;
  out->wilson_hi = report.wilson_hi;
  GBV_GUARD_END
}

gbv_status gbv_sim_glm(const char* kind, const double* theta_true, int dim, long n,
                       const char* covariate_spec, double sigma, uint64_t seed, gbv_table** out) {
  GBV_GUARD_BEGIN
  require(out && kind && theta_true && covariate_spec, "gbv_sim_glm: bad arguments");
  gbv::GlmKind k;
  const std::string kind_s = kind;
  if (kind_s == "linear") {
    k = gbv::GlmKind::Linear;
  } else if (kind_s == "logistic") {
    k = gbv::GlmKind::Logistic;
  } else if (kind_s == "poisson") {
    k = gbv::GlmKind::Poisson;
  } else {
    throw gbv::ArgumentError("gbv_sim_glm: kind must be linear|logistic|poisson");
  }
  const gbv::GLMDataset data = gbv::gen_glm(k, to_vec(theta_true, dim), n,
                                            gbv::parse_covariate_spec(covariate_spec), seed, sigma);
  std::vector<std::string> names;
  for (int j = 0; j < data.X.cols(); ++j) names.push_back("x_" + std::to_string(j + 1));
  names.push_back("y");
  gbv::Mat values(data.X.rows(), data.X.cols() + 1);
  values.leftCols(data.X.cols()) = data.X;
  values.col(data.X.cols()) = data.y;
  *out = new_table(std::move(names), std::move(values));
  GBV_GUARD_END
}

gbv_status gbv_sim_ising(int L, int m, double theta1, double theta2, int sweeps, int burn_sweeps,
                         uint64_t seed, int* critical_warning, gbv_field** out) {
  GBV_GUARD_BEGIN
  require(out, "gbv_sim_ising: bad arguments");
  gbv::Vec theta(2);
  theta << theta1, theta2;
  bool warn = false;
  *out = new gbv_field{gbv::gen_ising_gibbs(L, m, theta, sweeps, burn_sweeps, seed, &warn)};
  if (critical_warning) *critical_warning = warn ? 1 : 0;
  GBV_GUARD_END
}

gbv_status gbv_sim_gmrf(int L, int m, const double* theta_axes, double gamma, uint64_t seed,
                        gbv_field** out) {
  GBV_GUARD_BEGIN
  require(out && theta_axes, "gbv_sim_gmrf: bad arguments");
  *out = new gbv_field{gbv::gen_gmrf(L, m, to_vec(theta_axes, m), gamma, seed)};
  GBV_GUARD_END
}

gbv_status gbv_sim_boltzmann(int d, const double* A_rowmajor, const double* b, long n,
                             uint64_t seed, gbv_table** samples, gbv_table** exact_table) {
  GBV_GUARD_BEGIN
  require(samples && A_rowmajor && b, "gbv_sim_boltzmann: bad arguments");
  const gbv::BoltzmannExact sim =
      gbv::gen_boltzmann_exact(d, to_mat(A_rowmajor, d, d), to_vec(b, d), n, seed);

  std::vector<std::string> names;
  for (int j = 0; j < d; ++j) names.push_back("y_" + std::to_string(j + 1));
  *samples = new_table(names, sim.samples);

  if (exact_table) {
    names.push_back("prob");
    gbv::Mat values(sim.states.rows(), d + 1);
    values.leftCols(d) = sim.states;
    values.col(d) = sim.exact_probs;
    *exact_table = new_table(std::move(names), std::move(values));
  }
  GBV_GUARD_END
}

gbv_status gbv_sim_cox(long n, const double* theta_true, int dim, const char* baseline_spec,
                       const char* censor_spec, const char* covariate_spec, uint64_t seed,
                       gbv_table** out) {
  GBV_GUARD_BEGIN
  require(out && theta_true && baseline_spec && censor_spec && covariate_spec,
          "gbv_sim_cox: bad arguments");
  const gbv::SurvivalDataset data = gbv::gen_cox(
      n, to_vec(theta_true, dim), gbv::parse_baseline_spec(baseline_spec),
      gbv::parse_censor_spec(censor_spec), gbv::parse_covariate_spec(covariate_spec), seed);
  std::vector<std::string> names{"time", "event"};
  for (int j = 0; j < data.X.cols(); ++j) names.push_back("x_" + std::to_string(j + 1));
  gbv::Mat values(data.X.rows(), data.X.cols() + 2);
  values.col(0) = data.time;
  for (long i = 0; i < data.X.rows(); ++i) values(i, 1) = data.event[i];
  values.rightCols(data.X.cols()) = data.X;
  *out = new_table(std::move(names), std::move(values));
  GBV_GUARD_END
}

gbv_status gbv_sim_location(long n, double theta0, const char* noise_spec, uint64_t seed,
                            gbv_table** out) {
  GBV_GUARD_BEGIN
  require(out && noise_spec, "gbv_sim_location: bad arguments");
  const gbv::Vec data = gbv::gen_location(n, theta0, gbv::parse_noise_spec(noise_spec), seed);
  *out = new_table({"x"}, data);
  GBV_GUARD_END
}

}  // extern "C"
