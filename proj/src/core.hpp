#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace gbv {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

// Axis-aligned open box, possibly unbounded, used both as the parameter
// space and as the audit neighborhood. Ball membership, where a result
// needs balls instead of boxes, is tested separately via Euclidean distance.
struct DomainBox {
  Vec lower;
  Vec upper;

  static DomainBox unbounded(int dim);
  static DomainBox bounds(Vec lo, Vec hi);
  static DomainBox centered(const Vec& center, double half_width);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& theta) const;  // strict interior
  bool bounded() const;
};

// The f_n contract: value, analytic gradient and Hessian, optional certified
// third-derivative bound on a box, a convexity claim, and (when available)
// the per-component decomposition n*f_n = sum_i c_i used by the sandwich
// estimator. Implementations are immutable after construction and all
// evaluations are pure, so concurrent use is safe.
class ObjectiveModel {
 public:
  virtual ~ObjectiveModel() = default;

  virtual int dim() const = 0;
  virtual const DomainBox& domain() const = 0;
  virtual double value(const Vec& theta) const = 0;
  virtual Vec gradient(const Vec& theta) const = 0;
  virtual Mat hessian(const Vec& theta) const = 0;

  virtual bool convex() const { return false; }

  // Certified sup of the Frobenius norm of the third-derivative tensor on
  // the box; nullopt when the model has no analytic bound (probe instead).
  virtual std::optional<double> third_deriv_bound(const DomainBox&) const { return std::nullopt; }

  // Component decomposition for sandwich estimation; 0 means unavailable.
  virtual long component_count() const { return 0; }
  virtual Vec component_gradient(long i, const Vec& theta) const;
  // All component gradients stacked row-wise; overridden where a single
  // sweep is much cheaper than k independent calls.
  virtual Mat component_gradients(const Vec& theta) const;

  void check_theta(const Vec& theta) const;  // finite + dimension match
};

// Model wrapping plain callables; missing derivatives fall back to central
// finite differences of the value. Used by tests and probes.
class CallableModel final : public ObjectiveModel {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  CallableModel(int dim, DomainBox domain, ValueFn f, GradFn grad = nullptr, HessFn hess = nullptr,
                bool convex_flag = false);

  int dim() const override { return dim_; }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec& theta) const override;
  bool convex() const override { return convex_; }

 private:
  int dim_;
  DomainBox domain_;
  ValueFn f_;
  GradFn grad_;
  HessFn hess_;
  bool convex_;
};

// f(theta) = 1/2 (theta-m)^T H (theta-m) + c; exact for optimizer and
// Laplace oracles.
class QuadraticModel final : public ObjectiveModel {
 public:
  QuadraticModel(Vec center, Mat hess, double offset = 0.0, std::optional<DomainBox> domain = {});

  int dim() const override { return static_cast<int>(center_.size()); }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec&) const override { return hess_; }
  bool convex() const override { return convex_; }
  std::optional<double> third_deriv_bound(const DomainBox&) const override { return 0.0; }

 private:
  Vec center_;
  Mat hess_;
  double offset_;
  DomainBox domain_;
  bool convex_;
};

class PriorSpec {
 public:
  enum class Kind { UniformBox, Gaussian, Custom };

  static PriorSpec uniform_box(const DomainBox& box);
  // Independent coordinates N(mean_j, sd_j^2).
  static PriorSpec gaussian(Vec mean, Vec sd);
  // Caller certifies the density integrates to one over its support.
  static PriorSpec custom(int dim, std::function<double(const Vec&)> log_density,
                          std::string label = "custom");

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  double log_density(const Vec& theta) const;

 private:
  PriorSpec(Kind kind, int dim, std::function<double(const Vec&)> logd, std::string label)
      : kind_(kind), dim_(dim), log_density_(std::move(logd)), label_(std::move(label)) {}

  Kind kind_;
  int dim_;
  std::function<double(const Vec&)> log_density_;
  std::string label_;
};

// Uniform prior on the mean parameter of the logit link, expressed in the
// natural parameter: log pi(theta) = log sigma(theta) + log(1 - sigma(theta)).
PriorSpec logit_uniform_prior();

struct GeneralizedPosterior {
  std::shared_ptr<const ObjectiveModel> model;
  PriorSpec prior;
  long n;

  GeneralizedPosterior(std::shared_ptr<const ObjectiveModel> m, PriorSpec p, long n_eff);
  int dim() const { return model->dim(); }
};

// log of exp(-n f_n(theta)) pi(theta) without the normalizer; -inf exactly
// when pi(theta) = 0 or theta is outside the model domain.
double unnormalized_log_posterior(const GeneralizedPosterior& gp, const Vec& theta);

struct ProbeCheck {
  Vec theta;
  double grad_rel_err = 0.0;
  double hess_rel_err = 0.0;
  bool skipped = false;
  bool grad_pass = false;
  bool hess_pass = false;
};

struct ModelValidationReport {
  std::vector<ProbeCheck> probes;
  double max_grad_rel_err = 0.0;
  double max_hess_rel_err = 0.0;
  long skipped = 0;
  bool pass = false;
  static constexpr double kGradThreshold = 1e-5;
  static constexpr double kHessThreshold = 1e-3;
};

// Cross-checks analytic derivatives against central finite differences with
// base step h for gradients and 10h for Hessians (scaled per coordinate).
ModelValidationReport validate_model(const ObjectiveModel& m, const std::vector<Vec>& probes,
                                     double h = 1e-5);

}  // namespace gbv
