#pragma once

#include <memory>
#include <string>
#include <vector>

#include "../core.hpp"

namespace gbv {

struct SurvivalDataset {
  Vec time;                // y_i >= 0
  std::vector<int> event;  // z_i in {0,1}
  Mat X;                   // n x D covariates
};

// Partial-likelihood objective
// f_n(theta) = (1/n) sum_i z_i H^n_{y_i}(theta) - theta^T (1/n) sum_i z_i x_i,
// H^n_y(theta) = log((1/n) sum_j e^{theta^T x_j} 1(y_j >= y)), evaluated by a
// single descending-time sweep with log-sum-exp stabilized risk-set moments.
// Ties share identical risk sets (Breslow); the model records a warning flag.
class CoxPartialModel final : public ObjectiveModel {
 public:
  explicit CoxPartialModel(SurvivalDataset data);

  int dim() const override { return static_cast<int>(data_.X.cols()); }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec& theta) const override;
  bool convex() const override { return true; }

  long component_count() const override { return data_.X.rows(); }
  Vec component_gradient(long i, const Vec& theta) const override;
  Mat component_gradients(const Vec& theta) const override;

  long n() const { return data_.X.rows(); }
  long event_count() const { return event_count_; }
  bool has_ties() const { return has_ties_; }
  const SurvivalDataset& data() const { return data_; }

 private:
  // One pass over subjects in descending time order; `order` determines how
  // much risk-set information is accumulated (0: value, 1: +gradient,
  // 2: +Hessian; per-event means land in `event_means` when requested).
  void sweep(const Vec& theta, int order, double* value, Vec* grad, Mat* hess,
             Mat* event_means) const;

  SurvivalDataset data_;
  std::vector<long> desc_order_;  // indices sorted by descending time
  Vec mean_xz_;                   // (1/n) sum z_i x_i
  long event_count_ = 0;
  bool has_ties_ = false;
  DomainBox domain_;
};

std::shared_ptr<CoxPartialModel> cox_partial_model(SurvivalDataset data);

// CSV columns: time,event,x_1..x_D (header mandatory).
SurvivalDataset read_survival_csv(const std::string& path);
void write_survival_csv(const std::string& path, const SurvivalDataset& data);

}  // namespace gbv
