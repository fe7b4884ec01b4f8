#pragma once

#include <memory>
#include <string>

#include "../core.hpp"
#include "expfam.hpp"

namespace gbv {

struct GLMDataset {
  Mat X;  // n x D covariates
  Vec y;  // n responses
  ExpFam1P family;
};

// Regression objective f_n(theta) = (1/n) sum_i [kappa(theta^T x_i) - s(y_i) theta^T x_i].
class GLMModel final : public ObjectiveModel {
 public:
  explicit GLMModel(GLMDataset data);

  int dim() const override { return static_cast<int>(data_.X.cols()); }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec& theta) const override;
  bool convex() const override { return true; }
  std::optional<double> third_deriv_bound(const DomainBox& box) const override;

  long component_count() const override { return data_.X.rows(); }
  Vec component_gradient(long i, const Vec& theta) const override;
  Mat component_gradients(const Vec& theta) const override;

  long n() const { return data_.X.rows(); }
  const GLMDataset& data() const { return data_; }

 private:
  Vec etas(const Vec& theta) const;

  GLMDataset data_;
  Vec s_y_;  // s(y_i)
  DomainBox domain_;
};

std::shared_ptr<GLMModel> build_glm(GLMDataset data);

// CSV with mandatory header x_1,...,x_D,y.
GLMDataset read_glm_csv(const std::string& path, const ExpFam1P& family);
void write_glm_csv(const std::string& path, const GLMDataset& data);

}  // namespace gbv
