#include "diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "laplace.hpp"
#include "rng.hpp"

namespace gbv {

namespace {

double normal_log_density(const Vec& x, const Mat& chol_cov, double log_det_cov) {
  const Vec z = chol_cov.triangularView<Eigen::Lower>().solve(x);
  return -0.5 * x.size() * std::log(2.0 * M_PI) - 0.5 * log_det_cov - 0.5 * z.squaredNorm();
}

}  // namespace

double tv_to_normal_limit(const GridDensity& gd, const Vec& theta_n, long n, const Mat& H0) {
  const int d = gd.dim();
  if (d > 2) throw UnsupportedError("tv_to_normal_limit: only D <= 2 is supported");
  if (theta_n.size() != d || H0.rows() != d || H0.cols() != d)
    throw ArgumentError("tv_to_normal_limit: dimension mismatch");

  const auto chol_h = cholesky_lower(H0);
  if (!chol_h) throw NumericalError("tv_to_normal_limit: H0 not positive definite");
  // Covariance H0^{-1}: chol(cov) = L^{-T} with H0 = L L^T.
  const Mat cov = chol_h->transpose().triangularView<Eigen::Upper>().solve(
      chol_h->triangularView<Eigen::Lower>().solve(Mat::Identity(d, d)));
  const auto chol_cov = cholesky_lower(0.5 * (cov + cov.transpose()));
  if (!chol_cov) throw NumericalError("tv_to_normal_limit: H0^{-1} not positive definite");
  const double log_det_cov = log_det_from_cholesky(*chol_cov);

  const double root_n = std::sqrt(static_cast<double>(n));
  const double cell_vol_x = gd.cell_volume * std::pow(root_n, d);

  double tv = 0.0;
  double normal_mass = 0.0;
  const long m = gd.cells();
  for (long i = 0; i < m; ++i) {
    const Vec x = root_n * (gd.cell_center(i) - theta_n);
    const double normal_cell = std::exp(normal_log_density(x, *chol_cov, log_det_cov)) * cell_vol_x;
    normal_mass += normal_cell;
    tv += std::abs(gd.mass(i) - normal_cell);
  }
  if (normal_mass < 0.9999)
    throw ArgumentError("grid too small: box covers less than 99.99% of the normal mass");
  return std::clamp(0.5 * tv, 0.0, 1.0);
}

MomentGap moment_gap_to_normal(const DrawMatrix& draws, const Vec& theta_n, long n, const Mat& H0) {
  if (draws.size() < 1000) throw ArgumentError("moment_gap_to_normal: need S >= 1000 draws");
  const int d = draws.dim();
  if (theta_n.size() != d || H0.rows() != d) throw ArgumentError("moment_gap_to_normal: dimension mismatch");
  const double root_n = std::sqrt(static_cast<double>(n));

  Mat x = draws.draws;
  x.rowwise() -= theta_n.transpose();
  x *= root_n;

  const Vec mean = x.colwise().mean();
  const Mat centered = x.rowwise() - mean.transpose();
  const Mat cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);

  const auto chol_h = cholesky_lower(H0);
  if (!chol_h) throw NumericalError("moment_gap_to_normal: H0 not positive definite");
  const Mat h_inv = chol_h->transpose().triangularView<Eigen::Upper>().solve(
      chol_h->triangularView<Eigen::Lower>().solve(Mat::Identity(d, d)));

  MomentGap out;
  out.mean_gap = mean.norm();
  out.cov_gap = (cov - h_inv).norm();
  return out;
}

double concentration_mass(const DrawMatrix& draws, const Vec& theta0, double eps) {
  if (eps <= 0.0) throw ArgumentError("concentration_mass: eps must be > 0");
  if (draws.size() < 1) throw ArgumentError("concentration_mass: empty draws");
  long inside = 0;
  for (long i = 0; i < draws.size(); ++i) {
    if ((draws.draws.row(i).transpose() - theta0).norm() <= eps) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(draws.size());
}

double concentration_mass(const GridDensity& gd, const Vec& theta0, double eps) {
  if (eps <= 0.0) throw ArgumentError("concentration_mass: eps must be > 0");
  return gd.mass_in_ball(theta0, eps);
}

SandwichEstimate sandwich_covariance(const ObjectiveModel& m, const FitResult& fit) {
  if (!fit.converged) throw ArgumentError("sandwich_covariance: fit did not converge");
  const long k = m.component_count();
  const int d = m.dim();
  if (k <= d) throw ArgumentError("insufficient components: need k > D for the sandwich estimate");

  SandwichEstimate out;
  out.component_count = k;
  out.A_hat = m.hessian(fit.theta_n);
  out.A_hat = 0.5 * (out.A_hat + out.A_hat.transpose());

  const Mat g = m.component_gradients(fit.theta_n);  // k x D
  const Vec gbar = g.colwise().mean();
  const Mat centered = g.rowwise() - gbar.transpose();
  // J centered at the empirical mean: robust to the optimizer stopping at
  // tolerance rather than the exact root.
  const double n = static_cast<double>(k);
  out.J_hat = centered.transpose() * centered / n;
  out.J_hat = 0.5 * (out.J_hat + out.J_hat.transpose());

  const auto chol_a = cholesky_lower(out.A_hat);
  if (!chol_a) throw NumericalError("sandwich_covariance: A_hat is singular or not positive definite");
  if (min_eigenvalue(out.J_hat) <= 1e-14 * std::max(1.0, out.J_hat.cwiseAbs().maxCoeff()))
    throw NumericalError("sandwich_covariance: component gradient covariance is not positive definite");

  const Mat a_inv = chol_a->transpose().triangularView<Eigen::Upper>().solve(
      chol_a->triangularView<Eigen::Lower>().solve(Mat::Identity(d, d)));
  Mat cov = a_inv * out.J_hat * a_inv / n;
  out.sandwich_cov = 0.5 * (cov + cov.transpose());
  return out;
}

DrawMatrix affine_calibrate(const DrawMatrix& draws, const Vec& theta_n, const Mat& sigma_target) {
  if (draws.size() < 2) throw ArgumentError("affine_calibrate: draws must be nonempty");
  const int d = draws.dim();
  if (theta_n.size() != d || sigma_target.rows() != d)
    throw ArgumentError("affine_calibrate: dimension mismatch");

  const Mat sigma_post = draws.covariance();
  if (min_eigenvalue(sigma_post) <= 0.0)
    throw NumericalError("affine_calibrate: posterior draw covariance is singular");

  const Mat c = sym_sqrt(sigma_target) * sym_inv_sqrt(sigma_post);

  DrawMatrix out = draws;
  Mat centered = draws.draws.rowwise() - theta_n.transpose();
  out.draws = (centered * c.transpose()).rowwise() + theta_n.transpose();
  return out;
}

bool CredibleSet::contains(const Vec& theta) const {
  const auto chol = cholesky_lower(shape);
  if (!chol) throw NumericalError("CredibleSet: shape not positive definite");
  const Vec z = chol->triangularView<Eigen::Lower>().solve(theta - center);
  return z.squaredNorm() <= radius2;
}

CredibleSet credible_set(const DrawMatrix& draws, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ArgumentError("credible_set: rho must be in (0,1)");
  if (draws.size() < 1000) throw ArgumentError("credible_set: need S >= 1000 draws");

  CredibleSet out;
  out.nominal_mass = rho;
  out.center = draws.mean();
  out.shape = draws.covariance();

  const auto chol = cholesky_lower(out.shape);
  if (!chol) throw NumericalError("credible_set: draw covariance is singular");

  const long s = draws.size();
  std::vector<double> d2(s);
  for (long i = 0; i < s; ++i) {
    const Vec z =
        chol->triangularView<Eigen::Lower>().solve(draws.draws.row(i).transpose() - out.center);
    d2[i] = z.squaredNorm();
  }
  // smallest radius covering at least a rho fraction of the draws
  const long idx = std::min<long>(s - 1, static_cast<long>(std::ceil(rho * s)) - 1);
  std::nth_element(d2.begin(), d2.begin() + idx, d2.end());
  out.radius2 = d2[idx];
  return out;
}

std::pair<double, double> wilson_interval(long hits, long trials) {
  if (trials <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

CoverageReport coverage_experiment_impl(
    const std::function<GeneralizedPosterior(std::uint64_t)>& make_posterior, const Vec& theta0,
    double rho, long reps, std::uint64_t seed, bool calibrate, const CoverageOptions& options) {
  if (reps < 100) throw ArgumentError("coverage_experiment: need reps >= 100");
  if (!(rho > 0.0 && rho < 1.0)) throw ArgumentError("coverage_experiment: rho must be in (0,1)");

  enum class Outcome : int { Hit, Miss, Failed };
  std::vector<Outcome> outcomes(reps, Outcome::Failed);

  auto run_rep = [&](long rep) {
    const std::uint64_t rep_seed = Rng::derive(seed, static_cast<std::uint64_t>(rep));
    try {
      const GeneralizedPosterior gp = make_posterior(rep_seed);
      const Vec init = Vec::Zero(gp.dim());
      const FitResult fit = find_minimizer(*gp.model, init, options.optimizer_tol,
                                           options.optimizer_max_iter);
      if (!fit.converged) {
        outcomes[rep] = Outcome::Failed;
        return;
      }
      std::optional<Mat> proposal;
      try {
        const LaplaceResult lap = laplace_log_normalizer(gp, fit);
        proposal = cholesky_lower(lap.covariance);
      } catch (const std::exception&) {
        proposal = std::nullopt;
      }
      DrawMatrix draws = rwm_sample(gp, fit.theta_n, options.sampler_steps,
                                    options.sampler_burn_in, Rng::derive(rep_seed, 1), proposal);
      if (calibrate) {
        const SandwichEstimate sw = sandwich_covariance(*gp.model, fit);
        draws = affine_calibrate(draws, fit.theta_n, sw.sandwich_cov);
      }
      const CredibleSet set = credible_set(draws, rho);
      outcomes[rep] = set.contains(theta0) ? Outcome::Hit : Outcome::Miss;
    } catch (const std::exception&) {
      outcomes[rep] = Outcome::Failed;
    }
  };

  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    for (long rep = 0; rep < reps; ++rep) run_rep(rep);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (long rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1)) run_rep(rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  CoverageReport report;
  report.calibrated = calibrate;
  for (const Outcome o : outcomes) {
    if (o == Outcome::Failed) {
      ++report.failed;
    } else {
      ++report.replications;
      if (o == Outcome::Hit) ++report.hits;
    }
  }
  report.coverage = report.replications > 0
                        ? static_cast<double>(report.hits) / static_cast<double>(report.replications)
                        : 0.0;
  std::tie(report.wilson_lo, report.wilson_hi) = wilson_interval(report.hits, report.replications);
  return report;
}

}  // namespace gbv
