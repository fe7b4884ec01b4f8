#include "core.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "numerics.hpp"

namespace gbv {

DomainBox DomainBox::unbounded(int dim) {
  DomainBox b;
  b.lower = Vec::Constant(dim, kNegInf);
  b.upper = Vec::Constant(dim, kPosInf);
  return b;
}

DomainBox DomainBox::bounds(Vec lo, Vec hi) {
  if (lo.size() != hi.size()) throw ArgumentError("DomainBox: lower/upper dimension mismatch");
  for (int j = 0; j < lo.size(); ++j) {
    if (!(lo(j) < hi(j))) throw ArgumentError("DomainBox: lower must be < upper componentwise");
  }
  DomainBox b;
  b.lower = std::move(lo);
  b.upper = std::move(hi);
  return b;
}

DomainBox DomainBox::centered(const Vec& center, double half_width) {
  if (half_width <= 0.0) throw ArgumentError("DomainBox: half_width must be > 0");
  return bounds(center.array() - half_width, center.array() + half_width);
}

bool DomainBox::contains(const Vec& theta) const {
  if (theta.size() != lower.size()) return false;
  for (int j = 0; j < theta.size(); ++j) {
    if (!(theta(j) > lower(j) && theta(j) < upper(j))) return false;
  }
  return true;
}

bool DomainBox::bounded() const {
  for (int j = 0; j < lower.size(); ++j) {
    if (std::isinf(lower(j)) || std::isinf(upper(j))) return false;
  }
  return true;
}

void ObjectiveModel::check_theta(const Vec& theta) const {
  if (theta.size() != dim()) {
    std::ostringstream os;
    os << "theta has dimension " << theta.size() << ", model expects " << dim();
    throw ArgumentError(os.str());
  }
  for (int j = 0; j < theta.size(); ++j) {
    if (!std::isfinite(theta(j))) throw ArgumentError("theta has a non-finite entry");
  }
}

Vec ObjectiveModel::component_gradient(long, const Vec&) const {
  throw ArgumentError("model does not expose component gradients");
}

Mat ObjectiveModel::component_gradients(const Vec& theta) const {
  const long k = component_count();
  if (k <= 0) throw ArgumentError("model does not expose component gradients");
  Mat g(k, dim());
  for (long i = 0; i < k; ++i) g.row(i) = component_gradient(i, theta);
  return g;
}

CallableModel::CallableModel(int dim, DomainBox domain, ValueFn f, GradFn grad, HessFn hess,
                             bool convex_flag)
    : dim_(dim),
      domain_(std::move(domain)),
      f_(std::move(f)),
      grad_(std::move(grad)),
      hess_(std::move(hess)),
      convex_(convex_flag) {
  if (domain_.dim() != dim_) throw ArgumentError("CallableModel: domain dimension mismatch");
  if (!f_) throw ArgumentError("CallableModel: value function required");
}

double CallableModel::value(const Vec& theta) const {
  check_theta(theta);
  const double v = f_(theta);
  if (std::isnan(v)) throw EvaluationError("model value is NaN");
  return v;
}

Vec CallableModel::gradient(const Vec& theta) const {
  check_theta(theta);
  if (grad_) return grad_(theta);
  return central_gradient([this](const Vec& t) { return f_(t); }, theta, scaled_steps(theta, 1e-5));
}

Mat CallableModel::hessian(const Vec& theta) const {
  check_theta(theta);
  if (hess_) return hess_(theta);
  return central_hessian([this](const Vec& t) { return f_(t); }, theta, scaled_steps(theta, 1e-4));
}

QuadraticModel::QuadraticModel(Vec center, Mat hess, double offset, std::optional<DomainBox> domain)
    : center_(std::move(center)),
      hess_(0.5 * (hess + hess.transpose())),
      offset_(offset),
      domain_(domain ? *domain : DomainBox::unbounded(static_cast<int>(center_.size()))) {
  if (hess_.rows() != center_.size()) throw ArgumentError("QuadraticModel: Hessian dimension mismatch");
  convex_ = min_eigenvalue(hess_) >= -1e-12;
}

double QuadraticModel::value(const Vec& theta) const {
  check_theta(theta);
  const Vec d = theta - center_;
  return 0.5 * d.dot(hess_ * d) + offset_;
}

Vec QuadraticModel::gradient(const Vec& theta) const {
  check_theta(theta);
  return hess_ * (theta - center_);
}

PriorSpec PriorSpec::uniform_box(const DomainBox& box) {
  if (!box.bounded()) throw ArgumentError("uniform prior requires a bounded box");
  double log_vol = 0.0;
  for (int j = 0; j < box.dim(); ++j) log_vol += std::log(box.upper(j) - box.lower(j));
  const double logd = -log_vol;
  DomainBox support = box;
  return PriorSpec(
      Kind::UniformBox, box.dim(),
      [support, logd](const Vec& theta) { return support.contains(theta) ? logd : kNegInf; },
      "uniform-box");
}

PriorSpec PriorSpec::gaussian(Vec mean, Vec sd) {
  if (mean.size() != sd.size()) throw ArgumentError("gaussian prior: mean/sd dimension mismatch");
  for (int j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 0.0)) throw ArgumentError("gaussian prior: sd must be > 0");
  }
  const int d = static_cast<int>(mean.size());
  double log_norm = -0.5 * d * std::log(2.0 * M_PI);
  for (int j = 0; j < d; ++j) log_norm -= std::log(sd(j));
  return PriorSpec(
      Kind::Gaussian, d,
      [mean, sd, log_norm](const Vec& theta) {
        double q = 0.0;
        for (int j = 0; j < theta.size(); ++j) {
          const double z = (theta(j) - mean(j)) / sd(j);
          q += z * z;
        }
        return log_norm - 0.5 * q;
      },
      "gaussian");
}

PriorSpec PriorSpec::custom(int dim, std::function<double(const Vec&)> log_density, std::string label) {
  if (!log_density) throw ArgumentError("custom prior: log density required");
  return PriorSpec(Kind::Custom, dim, std::move(log_density), std::move(label));
}

double PriorSpec::log_density(const Vec& theta) const {
  if (theta.size() != dim_) throw ArgumentError("prior: theta dimension mismatch");
  const double v = log_density_(theta);
  if (std::isnan(v)) throw EvaluationError("prior log density is NaN");
  return v;
}

PriorSpec logit_uniform_prior() {
  return PriorSpec::custom(
      1,
      [](const Vec& theta) {
        const double t = theta(0);
        // log sigma(t) + log sigma(-t), stably
        const double a = -(std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))));
        const double b = -(std::max(-t, 0.0) + std::log1p(std::exp(-std::abs(t))));
        return a + b;
      },
      "logit-uniform");
}

GeneralizedPosterior::GeneralizedPosterior(std::shared_ptr<const ObjectiveModel> m, PriorSpec p,
                                           long n_eff)
    : model(std::move(m)), prior(std::move(p)), n(n_eff) {
  if (!model) throw ArgumentError("GeneralizedPosterior: model required");
  if (n < 1) throw ArgumentError("GeneralizedPosterior: n must be >= 1");
  if (prior.dim() != model->dim())
    throw ArgumentError("GeneralizedPosterior: prior/model dimension mismatch");
}

double unnormalized_log_posterior(const GeneralizedPosterior& gp, const Vec& theta) {
  gp.model->check_theta(theta);
  const double log_prior = gp.prior.log_density(theta);
  if (log_prior == kNegInf) return kNegInf;
  if (!gp.model->domain().contains(theta)) return kNegInf;
  const double f = gp.model->value(theta);
  if (std::isnan(f)) throw EvaluationError("model value is NaN inside unnormalized_log_posterior");
  return -static_cast<double>(gp.n) * f + log_prior;
}

ModelValidationReport validate_model(const ObjectiveModel& m, const std::vector<Vec>& probes,
                                     double h) {
  if (h <= 0.0) throw ArgumentError("validate_model: h must be > 0");
  ModelValidationReport report;
  auto f = [&m](const Vec& t) { return m.value(t); };
  for (const Vec& theta : probes) {
    ProbeCheck check;
    check.theta = theta;
    if (theta.size() != m.dim() || !m.domain().contains(theta)) {
      check.skipped = true;
      ++report.skipped;
      report.probes.push_back(std::move(check));
      continue;
    }
    Vec hg(theta.size()), hh(theta.size());
    for (int j = 0; j < theta.size(); ++j) {
      const double s = std::max(1.0, std::abs(theta(j)));
      hg(j) = h * s;
      hh(j) = 10.0 * h * s;
    }
    const Vec g_an = m.gradient(theta);
    const Vec g_fd = central_gradient(f, theta, hg);
    const Mat h_an = m.hessian(theta);
    const Mat h_fd = central_hessian(f, theta, hh);

    check.grad_rel_err = (g_an - g_fd).norm() / std::max(1.0, g_an.norm());
    check.hess_rel_err = (h_an - h_fd).norm() / std::max(1.0, h_an.norm());
    check.grad_pass = check.grad_rel_err < ModelValidationReport::kGradThreshold;
    check.hess_pass = check.hess_rel_err < ModelValidationReport::kHessThreshold;
    report.max_grad_rel_err = std::max(report.max_grad_rel_err, check.grad_rel_err);
    report.max_hess_rel_err = std::max(report.max_hess_rel_err, check.hess_rel_err);
    report.probes.push_back(std::move(check));
  }
  report.pass = true;
  for (const auto& c : report.probes) {
    if (!c.skipped && (!c.grad_pass || !c.hess_pass)) report.pass = false;
  }
  return report;
}

}  // namespace gbv
