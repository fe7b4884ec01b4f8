#include "median.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "../errors.hpp"

namespace gbv {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// phi(x) / Phi(x), stable over the whole line.
double normal_log_cdf_slope(double x) {
  if (x < -20.0) {
    // asymptotic series Phi(x) ~ phi(x)/(-x) (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8)
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) +
                          105.0 / (x2 * x2 * x2 * x2);
    return -x / series;
  }
  const double log_phi = -0.5 * x * x - 0.5 * std::log(2.0 * M_PI);
  const double log_cdf = std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
  return std::exp(log_phi - log_cdf);
}

void validate_symmetric_cdf(const SymmetricCDF& g) {
  for (int i = 0; i <= 16; ++i) {
    const double x = -4.0 + 0.5 * i;
    if (std::abs(g.cdf(-x) - (1.0 - g.cdf(x))) > 1e-12)
      throw ArgumentError("SymmetricCDF '" + g.name + "': G(-x) != 1 - G(x)");
    if (g.d2log(x) > 1e-12)
      throw ArgumentError("SymmetricCDF '" + g.name + "': (log G)'' must be <= 0");

    const double h = 1e-5;
    const double fd1 = (std::log(g.cdf(x + h)) - std::log(g.cdf(x - h))) / (2.0 * h);
    if (std::abs(fd1 - g.dlog(x)) > 1e-5 * std::max(1.0, std::abs(g.dlog(x))))
      throw ArgumentError("SymmetricCDF '" + g.name + "': (log G)' disagrees with finite differences");
    const double fd2 = (g.dlog(x + h) - g.dlog(x - h)) / (2.0 * h);
    if (std::abs(fd2 - g.d2log(x)) > 1e-4 * std::max(1.0, std::abs(g.d2log(x))))
      throw ArgumentError("SymmetricCDF '" + g.name + "': (log G)'' disagrees with finite differences");
    const double fd3 = (g.d2log(x + h) - g.d2log(x - h)) / (2.0 * h);
    if (std::abs(fd3 - g.d3log(x)) > 1e-4 * std::max(1.0, std::abs(g.d3log(x))))
      throw ArgumentError("SymmetricCDF '" + g.name + "': (log G)''' disagrees with finite differences");
  }
  if (!(g.d2log(0.0) < 0.0))
    throw ArgumentError("SymmetricCDF '" + g.name + "': (log G)''(0) must be < 0");
}

}  // namespace

SymmetricCDF logistic_cdf() {
  SymmetricCDF g;
  g.name = "logistic";
  g.cdf = [](double x) { return sigmoid(x); };
  g.dlog = [](double x) { return sigmoid(-x); };
  g.d2log = [](double x) {
    const double s = sigmoid(x);
    return -s * (1.0 - s);
  };
  g.d3log = [](double x) {
    const double s = sigmoid(x);
    return -s * (1.0 - s) * (1.0 - 2.0 * s);
  };
  return g;
}

SymmetricCDF gaussian_cdf() {
  SymmetricCDF g;
  g.name = "gaussian";
  g.cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  g.dlog = [](double x) { return normal_log_cdf_slope(x); };
  g.d2log = [](double x) {
    const double r = normal_log_cdf_slope(x);
    return -r * (x + r);
  };
  g.d3log = [](double x) {
    const double r = normal_log_cdf_slope(x);
    return r * ((x + 2.0 * r) * (x + r) - 1.0);
  };
  return g;
}

SymmetricCDF symmetric_cdf_by_name(const std::string& name) {
  if (name == "logistic") return logistic_cdf();
  if (name == "gaussian") return gaussian_cdf();
  throw ArgumentError("unknown symmetric CDF: " + name);
}

MedianLocationModel::MedianLocationModel(const Vec& data, SymmetricCDF g) : g_(std::move(g)) {
  n_ = data.size();
  if (n_ < 1) throw ArgumentError("median_location_model: data must be nonempty");
  if (!data.allFinite()) throw ArgumentError("median_location_model: data has NaN/Inf");
  validate_symmetric_cdf(g_);

  std::vector<double> sorted(data.data(), data.data() + n_);
  std::sort(sorted.begin(), sorted.end());
  m_n_ = (n_ % 2 == 1) ? sorted[(n_ - 1) / 2]
                       : 0.5 * (sorted[n_ / 2 - 1] + sorted[n_ / 2]);
  domain_ = DomainBox::unbounded(1);
}

double MedianLocationModel::value(const Vec& theta) const {
  check_theta(theta);
  const double u = m_n_ - theta(0);
  return -0.5 * (std::log(g_.cdf(u)) + std::log(g_.cdf(-u)));
}

Vec MedianLocationModel::gradient(const Vec& theta) const {
  check_theta(theta);
  const double u = m_n_ - theta(0);
  Vec g(1);
  g(0) = 0.5 * (g_.dlog(u) - g_.dlog(-u));
  return g;
}

Mat MedianLocationModel::hessian(const Vec& theta) const {
  check_theta(theta);
  const double u = m_n_ - theta(0);
  Mat h(1, 1);
  h(0, 0) = -0.5 * (g_.d2log(u) + g_.d2log(-u));
  return h;
}

std::optional<double> MedianLocationModel::third_deriv_bound(const DomainBox& box) const {
  if (!box.bounded()) return std::nullopt;
  // f''' is analytic; a dense scan over the (one-dimensional) box certifies
  // the sup to scan resolution.
  double worst = 0.0;
  const int points = 4097;
  for (int i = 0; i < points; ++i) {
    const double theta = box.lower(0) + (box.upper(0) - box.lower(0)) * i / (points - 1);
    const double u = m_n_ - theta;
    worst = std::max(worst, std::abs(0.5 * (g_.d3log(u) - g_.d3log(-u))));
  }
  return 1.05 * worst;
}

std::shared_ptr<MedianLocationModel> median_location_model(const Vec& data, const SymmetricCDF& g) {
  return std::make_shared<MedianLocationModel>(data, g);
}

}  // namespace gbv
