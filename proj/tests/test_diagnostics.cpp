#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "laplace.hpp"
#include "models/expfam.hpp"
#include "models/glm.hpp"
#include "models/pseudolik.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "simulate.hpp"

using namespace gbv;

namespace {

// posterior exactly N(m, 1/n): gaussian-natural expfam with S_n = m, flat prior
GeneralizedPosterior exact_normal_posterior(double m, long n, double box_half = 25.0) {
  auto model = build_iid_expfam_matched(expfam_gaussian(1.0), m, n);
  const DomainBox box =
      DomainBox::bounds(Vec::Constant(1, m - box_half), Vec::Constant(1, m + box_half));
  return GeneralizedPosterior(model, PriorSpec::uniform_box(box), n);
}

DrawMatrix normal_draws(const Vec& mean, const Mat& cov, long s, std::uint64_t seed) {
  const Mat chol = *cholesky_lower(cov);
  Rng rng(seed);
  DrawMatrix d;
  d.draws.resize(s, mean.size());
  Vec z(mean.size());
  for (long i = 0; i < s; ++i) {
    for (int j = 0; j < mean.size(); ++j) z(j) = rng.normal();
    d.draws.row(i) = (mean + chol * z).transpose();
  }
  return d;
}

}  // namespace

TEST_CASE("TV of a posterior against its own normal limit is quadrature-small") {
  const long n = 400;
  const GeneralizedPosterior gp = exact_normal_posterior(0.7, n, 1.0);
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, 0.7 - 1.0), Vec::Constant(1, 0.7 + 1.0));
  const GridDensity grid = grid_density(gp, box, 2048);
  // q_n is exactly N(0, 1) in x-coordinates when theta_n = m and H0 = 1
  const double tv = tv_to_normal_limit(grid, Vec::Constant(1, 0.7), n, Mat::Identity(1, 1));
  CHECK(tv < 1e-4);
}

TEST_CASE("TV unit-mismatch probe: N(0,1) vs N(1,1) = 2 Phi(0.5) - 1") {
  const long n = 400;
  const double m = 0.0;
  const GeneralizedPosterior gp = exact_normal_posterior(m, n, 2.0);
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, m - 2.0), Vec::Constant(1, m + 2.0));
  const GridDensity grid = grid_density(gp, box, 4096);
  // shifting theta_n by 1/sqrt(n) makes q_n = N(1,1) in x-coordinates
  const Vec shifted = Vec::Constant(1, m - 1.0 / std::sqrt(static_cast<double>(n)));
  const double tv = tv_to_normal_limit(grid, shifted, n, Mat::Identity(1, 1));
  CHECK(tv == doctest::Approx(0.382925).epsilon(3e-4));
}

TEST_CASE("two-dimensional grid: normalization, ball mass, and TV against the limit") {
  // posterior exactly N(center, (n H)^{-1}) via a quadratic objective and a
  // flat prior over the box
  Mat h(2, 2);
  h << 2.0, 0.6, 0.6, 1.5;
  Vec center(2);
  center << 0.4, -0.2;
  const long n = 60;
  auto quad = std::make_shared<QuadraticModel>(center, h);
  const DomainBox box = DomainBox::bounds(center.array() - 1.5, center.array() + 1.5);
  const GeneralizedPosterior gp(quad, PriorSpec::uniform_box(box), n);

  const GridDensity grid = grid_density(gp, box, 192);
  double total = 0.0;
  for (long i = 0; i < grid.cells(); ++i) total += grid.mass(i);
  CHECK(std::abs(total - 1.0) < 1e-10);
  CHECK((grid.mean() - center).norm() < 1e-3);

  // ball mass oracle: for N(0, (nH)^{-1}) the radius-r ball mass comes from
  // the two-dimensional eigendecomposition; use a Monte Carlo oracle instead
  const Mat cov = (static_cast<double>(n) * h).inverse();
  const Mat chol = *cholesky_lower(cov);
  Rng rng(77);
  long inside = 0;
  const long mc = 200000;
  Vec z(2);
  for (long i = 0; i < mc; ++i) {
    z << rng.normal(), rng.normal();
    if ((chol * z).norm() <= 0.15) ++inside;
  }
  const double mc_mass = static_cast<double>(inside) / mc;
  CHECK(std::abs(grid.mass_in_ball(center, 0.15) - mc_mass) < 0.01);

  // the rescaled posterior is exactly N(0, H^{-1}): TV is quadrature noise
  const double tv = tv_to_normal_limit(grid, center, n, h);
  CHECK(tv < 2e-3);

  // and a deliberately wrong curvature is detected
  const double tv_wrong = tv_to_normal_limit(grid, center, n, Mat(0.5 * h));
  CHECK(tv_wrong > 0.1);
}

TEST_CASE("TV errors out when the grid box misses normal mass") {
  const long n = 4;
  const GeneralizedPosterior gp = exact_normal_posterior(0.0, n, 10.0);
  // box of half-width 0.25: only +-0.5 sd of the x-scale normal
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, -0.25), Vec::Constant(1, 0.25));
  const GridDensity grid = grid_density(gp, box, 64);
  CHECK_THROWS_AS(tv_to_normal_limit(grid, Vec::Zero(1), n, Mat::Identity(1, 1)), ArgumentError);
}

TEST_CASE("TV refinement stability: doubling resolution moves the value < 1e-3") {
  const long n = 50;
  auto model = build_iid_expfam_matched(expfam_bernoulli_logit(), 0.3, n);
  const GeneralizedPosterior gp(model, logit_uniform_prior(), n);
  const FitResult fit = find_minimizer(*model, Vec::Zero(1), 1e-12, 60);
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, -4.0), Vec::Constant(1, 2.5));
  Mat h0 = fit.hessian_at_min;
  const double tv_a = tv_to_normal_limit(grid_density(gp, box, 2048), fit.theta_n, n, h0);
  const double tv_b = tv_to_normal_limit(grid_density(gp, box, 4096), fit.theta_n, n, h0);
  CHECK(std::abs(tv_a - tv_b) < 1e-3);
  CHECK(tv_a >= 0.0);
  CHECK(tv_a <= 1.0);
}

TEST_CASE("moment gaps: matching draws small, shifted mean detected") {
  Mat h0(2, 2);
  h0 << 2.0, 0.4, 0.4, 1.0;
  const Mat cov = h0.inverse();
  const long n = 100;
  const double root_n = std::sqrt(static_cast<double>(n));
  const Vec theta_n = Vec::Constant(2, 0.3);

  // draws from N(theta_n, H0^{-1}/n): x = sqrt(n)(theta - theta_n) ~ N(0, H0^{-1})
  const DrawMatrix good = normal_draws(theta_n, cov / n, 40000, 8);
  const MomentGap g = moment_gap_to_normal(good, theta_n, n, h0);
  CHECK(g.mean_gap < 4.0 / std::sqrt(40000.0) * 3.0);
  CHECK(g.cov_gap < 0.05);

  // mean shifted by (1,0)/sqrt(n): mean gap near 1
  Vec shift(2);
  shift << 1.0 / root_n, 0.0;
  const DrawMatrix off = normal_draws(theta_n + shift, cov / n, 40000, 9);
  const MomentGap g2 = moment_gap_to_normal(off, theta_n, n, h0);
  CHECK(g2.mean_gap == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("moment gap surrogate on the six-dimensional Boltzmann posterior") {
  Mat a = Mat::Zero(3, 3);
  a(0, 1) = 0.3;
  a(0, 2) = -0.2;
  a(1, 2) = 0.15;
  Vec b(3);
  b << 0.2, -0.1, 0.1;
  const long n = 20000;
  const BoltzmannExact sim = gen_boltzmann_exact(3, a, b, n, 5150);
  auto model = boltzmann_pseudolik(sim.samples);
  const FitResult fit = find_minimizer(*model, Vec::Zero(6), 1e-8, 200);
  REQUIRE(fit.converged);

  const GeneralizedPosterior gp(
      model, PriorSpec::gaussian(Vec::Zero(6), Vec::Constant(6, 5.0)), n);
  const LaplaceResult lap = laplace_log_normalizer(gp, fit);
  const DrawMatrix draws =
      rwm_sample(gp, fit.theta_n, 40000, 8000, 61, cholesky_lower(lap.covariance));

  const Mat h0 = fit.hessian_at_min;
  const MomentGap gap = moment_gap_to_normal(draws, fit.theta_n, n, h0);
  const Mat h0_inv = h0.inverse();
  CHECK(gap.cov_gap < 0.25 * h0_inv.norm());
}

TEST_CASE("concentration mass oracles") {
  // all draws at theta0
  DrawMatrix at;
  at.draws = Mat::Zero(1500, 1);
  CHECK(concentration_mass(at, Vec::Zero(1), 0.5) == 1.0);

  // standard normal grid: ball of radius 1.959964 holds 95%
  const GeneralizedPosterior gp = exact_normal_posterior(0.0, 1, 20.0);
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, -20.0), Vec::Constant(1, 20.0));
  const GridDensity grid = grid_density(gp, box, 8192);
  CHECK(concentration_mass(grid, Vec::Zero(1), 1.959964) == doctest::Approx(0.95).epsilon(2e-4));
}

TEST_CASE("sandwich on the power posterior: A = 2, J -> 4, cov -> 1/n") {
  const long n = 4000;
  const Vec data = gen_location(n, 0.0, NoiseSpec::gaussian(1.0), 314);
  auto model = build_iid_expfam(expfam_gaussian(1.0), data, 2.0);
  const FitResult fit = find_minimizer(*model, Vec::Zero(1), 1e-11, 100);
  REQUIRE(fit.converged);
  const SandwichEstimate sw = sandwich_covariance(*model, fit);
  CHECK(sw.A_hat(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(sw.J_hat(0, 0) == doctest::Approx(4.0).epsilon(0.1));  // 4 sigma-hat^2
  CHECK(sw.sandwich_cov(0, 0) == doctest::Approx(1.0 / n).epsilon(0.1));
}

TEST_CASE("sandwich on a correctly specified model: A approx J") {
  const GLMDataset data = gen_glm(GlmKind::Logistic, Vec::Constant(2, 0.5), 3000,
                                  CovariateSpec::gaussian(1.0), 77);
  auto glm = build_glm(data);
  const FitResult fit = find_minimizer(*glm, Vec::Zero(2), 1e-10, 100);
  REQUIRE(fit.converged);
  const SandwichEstimate sw = sandwich_covariance(*glm, fit);
  CHECK((sw.A_hat - sw.J_hat).norm() / sw.A_hat.norm() < 0.1);
}

TEST_CASE("sandwich consistency ratio shrinks with n") {
  double ratios[2];
  int idx = 0;
  for (const long n : {500L, 5000L}) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const GLMDataset data = gen_glm(GlmKind::Logistic, Vec::Constant(2, 0.5), n,
                                      CovariateSpec::gaussian(1.0), 1000 + seed);
      auto glm = build_glm(data);
      const FitResult fit = find_minimizer(*glm, Vec::Zero(2), 1e-8, 100);
      const SandwichEstimate sw = sandwich_covariance(*glm, fit);
      acc += (sw.A_hat - sw.J_hat).norm() / sw.A_hat.norm();
    }
    ratios[idx++] = acc / 5.0;
  }
  CHECK(ratios[1] < ratios[0]);
}

TEST_CASE("sandwich error paths: degenerate components and too few components") {
  auto matched = build_iid_expfam_matched(expfam_gaussian(1.0), 0.5, 50);
  const FitResult fit = find_minimizer(*matched, Vec::Zero(1), 1e-10, 50);
  // all component gradients identical: J = 0
  CHECK_THROWS_AS(sandwich_covariance(*matched, fit), NumericalError);

  auto tiny = build_iid_expfam(expfam_gaussian(1.0), Vec::Ones(1), 1.0);
  const FitResult ft = find_minimizer(*tiny, Vec::Zero(1), 1e-10, 50);
  CHECK_THROWS_AS(sandwich_covariance(*tiny, ft), ArgumentError);  // k = 1 <= D
}

TEST_CASE("affine calibration: identity, variance doubling, diagonal scaling") {
  // target == posterior covariance: draws unchanged to rounding
  const DrawMatrix d = normal_draws(Vec::Zero(1), Mat::Identity(1, 1), 5000, 3);
  const DrawMatrix same = affine_calibrate(d, Vec::Zero(1), d.covariance());
  CHECK((same.draws - d.draws).cwiseAbs().maxCoeff() < 1e-10);

  // power-posterior scale: var sigma^2/(2n) calibrated to sigma^2/n
  const long n = 50;
  const DrawMatrix half = normal_draws(Vec::Zero(1), Mat::Identity(1, 1) / (2.0 * n), 100000, 4);
  const DrawMatrix cal = affine_calibrate(half, Vec::Zero(1), Mat::Identity(1, 1) / n);
  const double ratio = cal.covariance()(0, 0) / half.covariance()(0, 0);
  CHECK(ratio > 1.9);
  CHECK(ratio < 2.1);

  // 2-D diagonal: target (4,1) from posterior (1,1) scales sds by (2,1)
  Mat post = Mat::Identity(2, 2);
  Mat target = post;
  target(0, 0) = 4.0;
  const DrawMatrix d2 = normal_draws(Vec::Zero(2), post, 200000, 5);
  const DrawMatrix c2 = affine_calibrate(d2, Vec::Zero(2), target);
  const Mat cov2 = c2.covariance();
  CHECK(std::sqrt(cov2(0, 0) / d2.covariance()(0, 0)) == doctest::Approx(2.0).epsilon(0.02));
  CHECK(std::sqrt(cov2(1, 1) / d2.covariance()(1, 1)) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("credible sets: chi-square radii, quantile monotonicity, mass") {
  const DrawMatrix d2 = normal_draws(Vec::Zero(2), Mat::Identity(2, 2), 200000, 6);
  const CredibleSet s90 = credible_set(d2, 0.9);
  CHECK(s90.radius2 == doctest::Approx(4.60517).epsilon(0.05));

  const DrawMatrix d1 = normal_draws(Vec::Zero(1), Mat::Identity(1, 1), 200000, 7);
  const CredibleSet s1 = credible_set(d1, 0.9);
  // half-width = radius * sd
  CHECK(std::sqrt(s1.radius2 * s1.shape(0, 0)) == doctest::Approx(1.644854).epsilon(0.02));

  const CredibleSet s50 = credible_set(d2, 0.5);
  CHECK(s50.radius2 < s90.radius2);  // nested

  // empirical mass within +-0.01 of rho
  long inside = 0;
  for (long i = 0; i < d2.size(); ++i)
    if (s90.contains(d2.draws.row(i).transpose())) ++inside;
  CHECK(std::abs(static_cast<double>(inside) / d2.size() - 0.9) < 0.01);
}

TEST_CASE("credible sets are equivariant under affine maps of the draws") {
  const DrawMatrix d = normal_draws(Vec::Zero(2), Mat::Identity(2, 2), 50000, 12);
  Mat m(2, 2);
  m << 2.0, 0.5, 0.0, 1.5;
  Vec b(2);
  b << 1.0, -2.0;
  DrawMatrix mapped = d;
  mapped.draws = (d.draws * m.transpose()).rowwise() + b.transpose();

  const CredibleSet orig = credible_set(d, 0.8);
  const CredibleSet after = credible_set(mapped, 0.8);
  CHECK((after.center - (m * orig.center + b)).norm() < 1e-10);
  CHECK((after.shape - m * orig.shape * m.transpose()).norm() < 1e-8);
  CHECK(after.radius2 == doctest::Approx(orig.radius2).epsilon(1e-10));
}

TEST_CASE("wilson interval brackets the point estimate") {
  const auto [lo, hi] = wilson_interval(1800, 2000);
  CHECK(lo < 0.9);
  CHECK(hi > 0.9);
  CHECK(lo > 0.88);
  CHECK(hi < 0.92);
}

TEST_CASE("coverage experiment: fast raw vs calibrated power-posterior contrast") {
  const double theta0 = 0.4;
  const double sigma = 1.0;
  const long n = 100;
  const PriorSpec prior = PriorSpec::uniform_box(
      DomainBox::bounds(Vec::Constant(1, theta0 - 50.0), Vec::Constant(1, theta0 + 50.0)));

  std::function<GeneralizedPosterior(std::uint64_t)> make = [&](std::uint64_t rep_seed) {
    const Vec data = gen_location(n, theta0, NoiseSpec::gaussian(sigma), rep_seed);
    return GeneralizedPosterior(build_iid_expfam(expfam_gaussian(1.0), data, 2.0), prior, n);
  };

  CoverageOptions opt;
  opt.sampler_steps = 3000;
  opt.sampler_burn_in = 600;
  opt.threads = 2;

  const CoverageReport raw = coverage_experiment_impl(make, Vec::Constant(1, theta0), 0.9, 250,
                                                      2025, false, opt);
  const CoverageReport cal = coverage_experiment_impl(make, Vec::Constant(1, theta0), 0.9, 250,
                                                      2025, true, opt);
  CHECK(raw.replications + raw.failed == 250);
  // closed-form raw target 0.7553; generous band at 250 reps
  CHECK(raw.coverage > 0.65);
  CHECK(raw.coverage < 0.85);
  CHECK(cal.coverage > 0.82);
  CHECK(cal.coverage <= 1.0);
  // calibration moves coverage toward the nominal level
  CHECK(std::abs(cal.coverage - 0.9) <= std::abs(raw.coverage - 0.9) + 0.03);
  CHECK(raw.wilson_lo <= raw.coverage);
  CHECK(raw.wilson_hi >= raw.coverage);
}

TEST_CASE("coverage experiment accepts a separate generator and builder") {
  const double theta0 = 0.1;
  const PriorSpec prior = PriorSpec::uniform_box(
      DomainBox::bounds(Vec::Constant(1, -40.0), Vec::Constant(1, 40.0)));
  std::function<Vec(std::uint64_t)> gen = [&](std::uint64_t rep_seed) {
    return gen_location(80, theta0, NoiseSpec::gaussian(1.0), rep_seed);
  };
  std::function<GeneralizedPosterior(const Vec&)> build = [&](const Vec& data) {
    return GeneralizedPosterior(build_iid_expfam(expfam_gaussian(1.0), data), prior,
                                data.size());
  };
  CoverageOptions opt;
  opt.sampler_steps = 1500;
  opt.sampler_burn_in = 300;
  const CoverageReport report =
      coverage_experiment<Vec>(gen, build, Vec::Constant(1, theta0), 0.9, 100, 17, false, opt);
  CHECK(report.replications + report.failed == 100);
  CHECK(report.coverage > 0.75);
}

TEST_CASE("coverage experiment is deterministic across thread counts") {
  const double theta0 = -0.2;
  const PriorSpec prior = PriorSpec::uniform_box(
      DomainBox::bounds(Vec::Constant(1, -50.0), Vec::Constant(1, 50.0)));
  std::function<GeneralizedPosterior(std::uint64_t)> make = [&](std::uint64_t rep_seed) {
    const Vec data = gen_location(60, theta0, NoiseSpec::gaussian(1.0), rep_seed);
    return GeneralizedPosterior(build_iid_expfam(expfam_gaussian(1.0), data), prior, 60);
  };
  CoverageOptions one;
  one.sampler_steps = 1500;
  one.sampler_burn_in = 300;
  one.threads = 1;
  CoverageOptions four = one;
  four.threads = 4;
  const CoverageReport a =
      coverage_experiment_impl(make, Vec::Constant(1, theta0), 0.9, 120, 7, false, one);
  const CoverageReport b =
      coverage_experiment_impl(make, Vec::Constant(1, theta0), 0.9, 120, 7, false, four);
  CHECK(a.hits == b.hits);
  CHECK(a.failed == b.failed);
}
