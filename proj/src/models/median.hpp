#pragma once

#include <functional>
#include <memory>
#include <string>

#include "../core.hpp"

namespace gbv {

// Symmetric CDF G with analytic log-derivative chain; G(-x) = 1 - G(x) and
// (log G)'' <= 0 are validated at construction.
struct SymmetricCDF {
  std::string name;
  std::function<double(double)> cdf;
  std::function<double(double)> dlog;   // (log G)'
  std::function<double(double)> d2log;  // (log G)''
  std::function<double(double)> d3log;  // (log G)'''
};

SymmetricCDF logistic_cdf();
SymmetricCDF gaussian_cdf();
SymmetricCDF symmetric_cdf_by_name(const std::string& name);

// Location objective centered on the sample median:
// f_n(theta) = -1/2 [log G(m_n - theta) + log G(theta - m_n)].
// Even n takes the midpoint of the two middle order statistics.
class MedianLocationModel final : public ObjectiveModel {
 public:
  MedianLocationModel(const Vec& data, SymmetricCDF g);

  int dim() const override { return 1; }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec& theta) const override;
  bool convex() const override { return true; }
  std::optional<double> third_deriv_bound(const DomainBox& box) const override;

  double sample_median() const { return m_n_; }
  long n() const { return n_; }

 private:
  double m_n_ = 0.0;
  long n_ = 0;
  SymmetricCDF g_;
  DomainBox domain_;
};

std::shared_ptr<MedianLocationModel> median_location_model(const Vec& data, const SymmetricCDF& g);

}  // namespace gbv
