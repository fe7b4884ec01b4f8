#include "laplace.hpp"

#include <cmath>

#include "errors.hpp"

namespace gbv {

LaplaceResult laplace_log_normalizer(const GeneralizedPosterior& gp, const FitResult& fit) {
  if (!fit.converged) throw ArgumentError("laplace: fit did not converge");
  const int d = gp.dim();
  if (fit.theta_n.size() != d) throw ArgumentError("laplace: fit/posterior dimension mismatch");

  const auto chol = cholesky_lower(fit.hessian_at_min);
  if (!chol) throw NumericalError("Laplace undefined: Hessian not positive definite");

  const double n = static_cast<double>(gp.n);
  const double log_prior = gp.prior.log_density(fit.theta_n);
  if (!std::isfinite(log_prior))
    throw NumericalError("laplace: prior density vanishes at theta_n");

  LaplaceResult out;
  out.mean = fit.theta_n;
  out.log_det_H = log_det_from_cholesky(*chol);
  out.log_zhat = -n * fit.f_min + log_prior + 0.5 * d * std::log(2.0 * M_PI / n) - 0.5 * out.log_det_H;

  // (n H_n)^{-1} from the same factorization
  Mat identity = Mat::Identity(d, d);
  Mat h_inv = chol->transpose().triangularView<Eigen::Upper>().solve(
      chol->triangularView<Eigen::Lower>().solve(identity));
  out.covariance = 0.5 * (h_inv + h_inv.transpose()) / n;
  return out;
}

double laplace_normal_density(const LaplaceResult& lr, const Vec& theta) {
  const int d = static_cast<int>(lr.mean.size());
  if (theta.size() != d) throw ArgumentError("laplace_normal_density: dimension mismatch");
  const auto chol = cholesky_lower(lr.covariance);
  if (!chol) throw NumericalError("laplace_normal_density: covariance not positive definite");
  const Vec z = chol->triangularView<Eigen::Lower>().solve(theta - lr.mean);
  const double log_det = log_det_from_cholesky(*chol);
  return std::exp(-0.5 * d * std::log(2.0 * M_PI) - 0.5 * log_det - 0.5 * z.squaredNorm());
}

}  // namespace gbv
