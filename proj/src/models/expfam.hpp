#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "../core.hpp"

namespace gbv {

// One-parameter natural exponential family q(y|eta) = exp(eta s(y) - kappa(eta)).
// kappa and its first three derivatives are analytic; d3_sup_on returns a
// certified sup of |kappa'''| over an eta interval (infinite when none).
struct ExpFam1P {
  std::string name;
  std::function<double(double)> kappa;
  std::function<double(double)> dkappa;
  std::function<double(double)> d2kappa;
  std::function<double(double)> d3kappa;
  std::function<double(double, double)> d3_sup_on;  // (eta_lo, eta_hi) -> sup |kappa'''|
  std::function<double(double)> suff;               // s(y)
};

ExpFam1P expfam_gaussian(double sigma2);
ExpFam1P expfam_bernoulli_logit();
ExpFam1P expfam_poisson();
ExpFam1P expfam_plusminus();  // y in {-1,+1}, kappa(eta) = log(e^eta + e^-eta)

ExpFam1P expfam_by_name(const std::string& name, double sigma2 = 1.0);

// Multi-parameter kappa supplied as a callable triple; the caller certifies
// smoothness and convexity of kappa on the domain.
struct KappaMulti {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  std::function<std::optional<double>(const DomainBox&)> third_bound;  // may be null
};

// i.i.d. exponential-family objective f_n(theta) = power * (kappa(theta) - theta^T S_n).
// `power` tempers the loss (each observation's log-density counted `power`
// times); the per-observation sufficient statistics stay available for the
// component-gradient contract.
class IidExpFamModel final : public ObjectiveModel {
 public:
  IidExpFamModel(KappaMulti kappa, Mat suff_stats, DomainBox domain, double power = 1.0);

  int dim() const override { return static_cast<int>(s_n_.size()); }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec& theta) const override;
  bool convex() const override { return true; }
  std::optional<double> third_deriv_bound(const DomainBox& box) const override;

  long component_count() const override { return suff_stats_.rows(); }
  Vec component_gradient(long i, const Vec& theta) const override;

  const Vec& mean_suff_stat() const { return s_n_; }
  long n() const { return suff_stats_.rows(); }
  double power() const { return power_; }

 private:
  KappaMulti kappa_;
  Mat suff_stats_;  // n x D, one row per observation
  Vec s_n_;
  DomainBox domain_;
  double power_;
};

// 1-parameter convenience builder from raw observations.
std::shared_ptr<IidExpFamModel> build_iid_expfam(const ExpFam1P& family, const Vec& data,
                                                 double power = 1.0);

// Fractional-count variant: S_n supplied directly with a nominal n; no
// per-observation components.
std::shared_ptr<IidExpFamModel> build_iid_expfam_matched(const ExpFam1P& family, double s_n, long n,
                                                         double power = 1.0);

KappaMulti kappa_from_family(const ExpFam1P& family);

}  // namespace gbv
