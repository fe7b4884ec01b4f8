#include "expfam.hpp"

#include <cmath>

#include "../errors.hpp"

namespace gbv {

namespace {

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

ExpFam1P expfam_gaussian(double sigma2) {
  if (!(sigma2 > 0.0)) throw ArgumentError("expfam_gaussian: sigma2 must be > 0");
  ExpFam1P f;
  f.name = "gaussian";
  f.kappa = [sigma2](double eta) { return eta * eta / (2.0 * sigma2); };
  f.dkappa = [sigma2](double eta) { return eta / sigma2; };
  f.d2kappa = [sigma2](double) { return 1.0 / sigma2; };
  f.d3kappa = [](double) { return 0.0; };
  f.d3_sup_on = [](double, double) { return 0.0; };
  f.suff = [sigma2](double y) { return y / sigma2; };
  return f;
}

ExpFam1P expfam_bernoulli_logit() {
  ExpFam1P f;
  f.name = "bernoulli-logit";
  // log(1 + e^eta) = max(eta, 0) + log1p(e^-|eta|)
  f.kappa = [](double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); };
  f.dkappa = [](double eta) { return sigmoid(eta); };
  f.d2kappa = [](double eta) {
    const double s = sigmoid(eta);
    return s * (1.0 - s);
  };
  f.d3kappa = [](double eta) {
    const double s = sigmoid(eta);
    return s * (1.0 - s) * (1.0 - 2.0 * s);
  };
  f.d3_sup_on = [](double, double) { return 3.0; };  // certified global bound
  f.suff = [](double y) { return y; };
  return f;
}

ExpFam1P expfam_poisson() {
  ExpFam1P f;
  f.name = "poisson";
  f.kappa = [](double eta) { return std::exp(eta); };
  f.dkappa = [](double eta) { return std::exp(eta); };
  f.d2kappa = [](double eta) { return std::exp(eta); };
  f.d3kappa = [](double eta) { return std::exp(eta); };
  f.d3_sup_on = [](double, double hi) { return std::exp(hi); };  // kappa''' increasing
  f.suff = [](double y) { return y; };
  return f;
}

ExpFam1P expfam_plusminus() {
  ExpFam1P f;
  f.name = "plusminus-binary";
  // log(e^eta + e^-eta) = |eta| + log1p(e^(-2|eta|))
  f.kappa = [](double eta) { return std::abs(eta) + std::log1p(std::exp(-2.0 * std::abs(eta))); };
  f.dkappa = [](double eta) { return std::tanh(eta); };
  f.d2kappa = [](double eta) {
    const double t = std::tanh(eta);
    return 1.0 - t * t;
  };
  f.d3kappa = [](double eta) {
    const double t = std::tanh(eta);
    return -2.0 * t * (1.0 - t * t);
  };
  f.d3_sup_on = [](double, double) { return 2.0; };  // certified global bound
  f.suff = [](double y) { return y; };
  return f;
}

ExpFam1P expfam_by_name(const std::string& name, double sigma2) {
  if (name == "gaussian") return expfam_gaussian(sigma2);
  if (name == "bernoulli-logit" || name == "bernoulli") return expfam_bernoulli_logit();
  if (name == "poisson") return expfam_poisson();
  if (name == "plusminus-binary" || name == "plusminus") return expfam_plusminus();
  throw ArgumentError("unknown exponential family: " + name);
}

KappaMulti kappa_from_family(const ExpFam1P& family) {
  KappaMulti k;
  k.value = [family](const Vec& theta) { return family.kappa(theta(0)); };
  k.grad = [family](const Vec& theta) {
    Vec g(1);
    g(0) = family.dkappa(theta(0));
    return g;
  };
  k.hess = [family](const Vec& theta) {
    Mat h(1, 1);
    h(0, 0) = family.d2kappa(theta(0));
    return h;
  };
  k.third_bound = [family](const DomainBox& box) -> std::optional<double> {
    if (!family.d3_sup_on) return std::nullopt;
    const double b = family.d3_sup_on(box.lower(0), box.upper(0));
    return std::isfinite(b) ? std::optional<double>(b) : std::nullopt;
  };
  return k;
}

IidExpFamModel::IidExpFamModel(KappaMulti kappa, Mat suff_stats, DomainBox domain, double power)
    : kappa_(std::move(kappa)),
      suff_stats_(std::move(suff_stats)),
      domain_(std::move(domain)),
      power_(power) {
  if (suff_stats_.rows() < 1) throw ArgumentError("iid expfam: data must be nonempty");
  if (!(power_ > 0.0)) throw ArgumentError("iid expfam: power must be > 0");
  if (!suff_stats_.allFinite()) throw ArgumentError("iid expfam: sufficient statistics must be finite");
  if (domain_.dim() != suff_stats_.cols()) throw ArgumentError("iid expfam: domain dimension mismatch");
  s_n_ = suff_stats_.colwise().mean();
}

double IidExpFamModel::value(const Vec& theta) const {
  check_theta(theta);
  return power_ * (kappa_.value(theta) - theta.dot(s_n_));
}

Vec IidExpFamModel::gradient(const Vec& theta) const {
  check_theta(theta);
  return power_ * (kappa_.grad(theta) - s_n_);
}

Mat IidExpFamModel::hessian(const Vec& theta) const {
  check_theta(theta);
  Mat h = power_ * kappa_.hess(theta);
  return 0.5 * (h + h.transpose());
}

std::optional<double> IidExpFamModel::third_deriv_bound(const DomainBox& box) const {
  if (!kappa_.third_bound) return std::nullopt;
  const auto b = kappa_.third_bound(box);
  if (!b) return std::nullopt;
  return power_ * *b;
}

Vec IidExpFamModel::component_gradient(long i, const Vec& theta) const {
  if (i < 0 || i >= suff_stats_.rows()) throw ArgumentError("iid expfam: component index out of range");
  check_theta(theta);
  return power_ * (kappa_.grad(theta) - suff_stats_.row(i).transpose());
}

std::shared_ptr<IidExpFamModel> build_iid_expfam(const ExpFam1P& family, const Vec& data,
                                                 double power) {
  if (data.size() < 1) throw ArgumentError("build_iid_expfam: data must be nonempty");
  Mat stats(data.size(), 1);
  for (long i = 0; i < data.size(); ++i) {
    const double s = family.suff(data(i));
    if (!std::isfinite(s)) throw ArgumentError("build_iid_expfam: non-finite sufficient statistic");
    stats(i, 0) = s;
  }
  return std::make_shared<IidExpFamModel>(kappa_from_family(family), std::move(stats),
                                          DomainBox::unbounded(1), power);
}

std::shared_ptr<IidExpFamModel> build_iid_expfam_matched(const ExpFam1P& family, double s_n, long n,
                                                         double power) {
  if (n < 1) throw ArgumentError("build_iid_expfam_matched: n must be >= 1");
  if (!std::isfinite(s_n)) throw ArgumentError("build_iid_expfam_matched: S_n must be finite");
  Mat stats = Mat::Constant(n, 1, s_n);
  return std::make_shared<IidExpFamModel>(kappa_from_family(family), std::move(stats),
                                          DomainBox::unbounded(1), power);
}

}  // namespace gbv
