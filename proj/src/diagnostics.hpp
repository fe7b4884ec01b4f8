#pragma once

#include <cstdint>
#include <functional>

#include "core.hpp"
#include "numerics.hpp"
#include "sampler.hpp"

namespace gbv {

// Total variation between the grid posterior, rescaled to x = sqrt(n)(theta - theta_n),
// and N(0, H0^{-1}). Errors out when the grid box covers less than 99.99% of
// the normal's mass in x-coordinates.
double tv_to_normal_limit(const GridDensity& gd, const Vec& theta_n, long n, const Mat& H0);

struct MomentGap {
  double mean_gap = 0.0;  // |mean(x)|
  double cov_gap = 0.0;   // ||cov(x) - H0^{-1}||_F
};

// Moment surrogate of the normal-limit check for D > 2 (needs S >= 1000).
MomentGap moment_gap_to_normal(const DrawMatrix& draws, const Vec& theta_n, long n, const Mat& H0);

// Fraction of draws / grid mass inside the Euclidean ball B_eps(theta0).
double concentration_mass(const DrawMatrix& draws, const Vec& theta0, double eps);
double concentration_mass(const GridDensity& gd, const Vec& theta0, double eps);

struct SandwichEstimate {
  Mat A_hat;           // f_n''(theta_n)
  Mat J_hat;           // centered component-gradient second moment / n
  Mat sandwich_cov;    // A^{-1} J A^{-1} / n
  long component_count = 0;
};

// Plug-in sandwich from the model's component decomposition; requires
// k >= D + 1 components and a converged fit. For dependent-component
// pseudolikelihoods the independence plug-in is known to understate J.
SandwichEstimate sandwich_covariance(const ObjectiveModel& m, const FitResult& fit);

// theta -> theta_n + C (theta - theta_n) with C = target^{1/2} post^{-1/2}
// (symmetric PSD roots); the transformed draws' covariance matches the
// target up to sampling error.
DrawMatrix affine_calibrate(const DrawMatrix& draws, const Vec& theta_n, const Mat& sigma_target);

struct CredibleSet {
  Vec center;
  Mat shape;       // draw covariance
  double radius2 = 0.0;
  double nominal_mass = 0.0;

  bool contains(const Vec& theta) const;
};

// Ellipsoid from draw moments and the empirical rho-quantile of Mahalanobis
// distances; convex by construction.
CredibleSet credible_set(const DrawMatrix& draws, double rho);

struct CoverageReport {
  long replications = 0;  // valid (non-failed) replications
  long hits = 0;
  long failed = 0;
  double coverage = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  bool calibrated = false;
};

struct CoverageOptions {
  long sampler_steps = 6000;
  long sampler_burn_in = 1000;
  double optimizer_tol = 1e-8;
  long optimizer_max_iter = 200;
  int threads = 1;
};

// One replication: simulate, fit, sample, optionally sandwich-calibrate,
// build the credible set, test theta0 membership. Failed fits are excluded
// from the hit fraction but counted in the report. Replications are
// independent (seed, rep) substreams, so results do not depend on `threads`.
template <class Data>
CoverageReport coverage_experiment(const std::function<Data(std::uint64_t)>& gen,
                                   const std::function<GeneralizedPosterior(const Data&)>& build,
                                   const Vec& theta0, double rho, long reps, std::uint64_t seed,
                                   bool calibrate, const CoverageOptions& options = {});

// Type-erased worker behind the template above.
CoverageReport coverage_experiment_impl(
    const std::function<GeneralizedPosterior(std::uint64_t)>& make_posterior, const Vec& theta0,
    double rho, long reps, std::uint64_t seed, bool calibrate, const CoverageOptions& options);

template <class Data>
CoverageReport coverage_experiment(const std::function<Data(std::uint64_t)>& gen,
                                   const std::function<GeneralizedPosterior(const Data&)>& build,
                                   const Vec& theta0, double rho, long reps, std::uint64_t seed,
                                   bool calibrate, const CoverageOptions& options) {
  auto make_posterior = [&gen, &build](std::uint64_t rep_seed) { return build(gen(rep_seed)); };
  return coverage_experiment_impl(make_posterior, theta0, rho, reps, seed, calibrate, options);
}

// 95% Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(long hits, long trials);

}  // namespace gbv
