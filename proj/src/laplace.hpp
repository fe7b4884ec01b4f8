#pragma once

#include "core.hpp"
#include "numerics.hpp"

namespace gbv {

struct LaplaceResult {
  double log_zhat = 0.0;
  Vec mean;        // theta_n
  Mat covariance;  // (n H_n)^{-1}
  double log_det_H = 0.0;
};

// log_zhat = -n f_min + log pi(theta_n) + (D/2) log(2 pi / n) - 1/2 log det H_n.
// The prior factor is evaluated at theta_n. Throws NumericalError when H_n
// is not positive definite (Cholesky is the verdict).
LaplaceResult laplace_log_normalizer(const GeneralizedPosterior& gp, const FitResult& fit);

// Multivariate normal density N(theta | mean, covariance).
double laplace_normal_density(const LaplaceResult& lr, const Vec& theta);

}  // namespace gbv
