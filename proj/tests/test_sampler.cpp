#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core.hpp"
#include "errors.hpp"
#include "models/expfam.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "sampler.hpp"

using namespace gbv;

namespace {

GeneralizedPosterior standard_normal_target() {
  // f_n = theta^2/2 with n = 1, flat prior on [-10, 10]
  auto model = std::make_shared<QuadraticModel>(Vec::Zero(1), Mat::Identity(1, 1));
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, -10.0), Vec::Constant(1, 10.0));
  return GeneralizedPosterior(model, PriorSpec::uniform_box(box), 1);
}

GeneralizedPosterior conjugate_posterior(double xbar, long n, double prior_mean, double prior_sd) {
  auto model = build_iid_expfam_matched(expfam_gaussian(1.0), xbar, n);
  return GeneralizedPosterior(model, PriorSpec::gaussian(Vec::Constant(1, prior_mean),
                                                         Vec::Constant(1, prior_sd)),
                              n);
}

}  // namespace

TEST_CASE("chain determinism: identical inputs give bit-identical draws") {
  const GeneralizedPosterior gp = standard_normal_target();
  const DrawMatrix a = rwm_sample(gp, Vec::Zero(1), 5000, 1000, 42);
  const DrawMatrix b = rwm_sample(gp, Vec::Zero(1), 5000, 1000, 42);
  CHECK((a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  const DrawMatrix c = rwm_sample(gp, Vec::Zero(1), 5000, 1000, 43);
  CHECK((a.draws - c.draws).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("standard normal target: mean within 3 sd/sqrt(ESS), acceptance in band") {
  const GeneralizedPosterior gp = standard_normal_target();
  const DrawMatrix draws = rwm_sample(gp, Vec::Zero(1), 50000, 5000, 7);
  const EssResult ess = effective_sample_size(draws);
  const double tol = 3.0 / std::sqrt(ess.ess(0));
  CHECK(std::abs(draws.mean()(0)) < tol);
  CHECK(draws.acceptance_rate >= 0.15);
  CHECK(draws.acceptance_rate <= 0.45);
}

TEST_CASE("conjugate normal-normal moments match the closed form") {
  const double xbar = 0.8, prior_mean = -1.0, prior_sd = 2.0;
  const long n = 20;
  const GeneralizedPosterior gp = conjugate_posterior(xbar, n, prior_mean, prior_sd);
  // precision n + 1/tau^2, mean (n xbar + mu0/tau^2) / (n + 1/tau^2)
  const double prec = n + 1.0 / (prior_sd * prior_sd);
  const double post_mean = (n * xbar + prior_mean / (prior_sd * prior_sd)) / prec;
  const double post_var = 1.0 / prec;

  const DrawMatrix draws = rwm_sample(gp, Vec::Constant(1, xbar), 80000, 8000, 11);
  const EssResult ess = effective_sample_size(draws);
  const double se_mean = std::sqrt(post_var / ess.ess(0));
  CHECK(std::abs(draws.mean()(0) - post_mean) < 3.0 * se_mean);
  const double var = draws.covariance()(0, 0);
  const double se_var = post_var * std::sqrt(2.0 / ess.ess(0));
  CHECK(std::abs(var - post_var) < 3.0 * se_var);
}

TEST_CASE("stuck chains raise instead of spinning") {
  // prior support is a tiny island far from anywhere the proposal can reach
  // with the huge fixed shape factor, forcing rejections from the start
  auto model = std::make_shared<QuadraticModel>(Vec::Zero(1), Mat::Identity(1, 1));
  const DomainBox tiny = DomainBox::bounds(Vec::Constant(1, -1e-9), Vec::Constant(1, 1e-9));
  const GeneralizedPosterior gp(model, PriorSpec::uniform_box(tiny), 1);
  Mat huge = Mat::Identity(1, 1) * 1e9;
  CHECK_THROWS_WITH_AS(rwm_sample(gp, Vec::Zero(1), 1000, 100, 3, huge),
                       "stuck chain: check initialization/scale", NumericalError);
}

TEST_CASE("rwm rejects invalid setup") {
  const GeneralizedPosterior gp = standard_normal_target();
  CHECK_THROWS_AS(rwm_sample(gp, Vec::Zero(1), 100, 100, 1), ArgumentError);  // steps == burn_in
  CHECK_THROWS_AS(rwm_sample(gp, Vec::Constant(1, 50.0), 1000, 10, 1), ArgumentError);  // zero density
}

TEST_CASE("grid density on the Gaussian test family") {
  const GeneralizedPosterior gp = conjugate_posterior(0.0, 4, 0.0, 1.0);
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, -6.0), Vec::Constant(1, 6.0));
  const GridDensity grid = grid_density(gp, box, 2048);
  CHECK(grid.log_z_grid == doctest::Approx(-0.5 * std::log(5.0)).epsilon(1e-4));

  double total = 0.0;
  for (long i = 0; i < grid.cells(); ++i) total += grid.mass(i);
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("flat posterior over a uniform prior has uniform cell masses") {
  auto flat = std::make_shared<CallableModel>(1, DomainBox::unbounded(1),
                                              [](const Vec&) { return 0.0; });
  const DomainBox box = DomainBox::bounds(Vec::Zero(1), Vec::Ones(1));
  const GeneralizedPosterior gp(flat, PriorSpec::uniform_box(box), 3);
  const GridDensity grid = grid_density(gp, box, 64);
  for (long i = 0; i < grid.cells(); ++i)
    CHECK(grid.mass(i) == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("grid posterior mean matches the conjugate closed form") {
  const double xbar = 0.8, prior_mean = -1.0, prior_sd = 2.0;
  const long n = 20;
  const GeneralizedPosterior gp = conjugate_posterior(xbar, n, prior_mean, prior_sd);
  const double prec = n + 1.0 / (prior_sd * prior_sd);
  const double post_mean = (n * xbar + prior_mean / (prior_sd * prior_sd)) / prec;
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, post_mean - 3.0),
                                          Vec::Constant(1, post_mean + 3.0));
  const GridDensity grid = grid_density(gp, box, 4096);
  CHECK(grid.mean()(0) == doctest::Approx(post_mean).epsilon(1e-6));
}

TEST_CASE("grid rejects unsupported setups") {
  auto flat3 = std::make_shared<CallableModel>(3, DomainBox::unbounded(3),
                                               [](const Vec&) { return 0.0; });
  const GeneralizedPosterior gp3(
      flat3, PriorSpec::gaussian(Vec::Zero(3), Vec::Ones(3)), 1);
  const DomainBox box3 = DomainBox::bounds(Vec::Constant(3, -1.0), Vec::Constant(3, 1.0));
  CHECK_THROWS_AS(grid_density(gp3, box3, 64), UnsupportedError);

  const GeneralizedPosterior gp = standard_normal_target();
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, -6.0), Vec::Constant(1, 6.0));
  CHECK_THROWS_AS(grid_density(gp, box, 16), ArgumentError);  // resolution < 32
}

TEST_CASE("ESS: iid draws give ESS close to S") {
  Rng rng(101);
  DrawMatrix d;
  d.draws.resize(20000, 1);
  for (long i = 0; i < d.draws.rows(); ++i) d.draws(i, 0) = rng.normal();
  const EssResult r = effective_sample_size(d);
  CHECK(r.ess(0) / d.size() > 0.8);
  CHECK(r.ess(0) / d.size() < 1.2);
}

TEST_CASE("ESS: AR(1) chain with rho 0.9 matches (1-rho)/(1+rho) within factor 1.5") {
  Rng rng(55);
  const double rho = 0.9;
  DrawMatrix d;
  d.draws.resize(60000, 1);
  double x = 0.0;
  for (long i = 0; i < d.draws.rows(); ++i) {
    x = rho * x + std::sqrt(1.0 - rho * rho) * rng.normal();
    d.draws(i, 0) = x;
  }
  const EssResult r = effective_sample_size(d);
  const double target = (1.0 - rho) / (1.0 + rho);
  const double ratio = r.ess(0) / d.size();
  CHECK(ratio > target / 1.5);
  CHECK(ratio < target * 1.5);
}

TEST_CASE("ESS: anticorrelated chain exceeds S and is capped with a flag") {
  DrawMatrix d;
  d.draws.resize(2000, 1);
  for (long i = 0; i < d.draws.rows(); ++i) d.draws(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
  const EssResult r = effective_sample_size(d);
  CHECK(r.ess(0) > d.size());
  CHECK(r.capped_flag);
}

TEST_CASE("ESS: constant chain reports 1 with a warning flag") {
  DrawMatrix d;
  d.draws = Mat::Constant(500, 1, 3.14);
  const EssResult r = effective_sample_size(d);
  CHECK(r.ess(0) == 1.0);
  CHECK(r.constant_flag);
  DrawMatrix small;
  small.draws = Mat::Zero(50, 1);
  CHECK_THROWS_AS(effective_sample_size(small), ArgumentError);
}

TEST_CASE("sampler and grid agree in sup-norm CDF distance at desk scale") {
  // Bernoulli-natural posterior, a 1-D zoo model
  auto model = build_iid_expfam_matched(expfam_bernoulli_logit(), 0.3, 50);
  const GeneralizedPosterior gp(model, logit_uniform_prior(), 50);
  const FitResult fit = find_minimizer(*model, Vec::Zero(1), 1e-10, 50);

  const DrawMatrix draws = rwm_sample(gp, fit.theta_n, 210000, 10000, 99);
  const DomainBox box = DomainBox::bounds(Vec::Constant(1, -4.0), Vec::Constant(1, 2.0));
  const GridDensity grid = grid_density(gp, box, 2048);

  std::vector<double> sorted(draws.draws.data(), draws.draws.data() + draws.size());
  std::sort(sorted.begin(), sorted.end());
  double sup = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double x = box.lower(0) + (box.upper(0) - box.lower(0)) * k / 100.0;
    const double ecdf =
        std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
    sup = std::max(sup, std::abs(ecdf / sorted.size() - grid.cdf1d(x)));
  }
  CHECK(sup < 0.02);
}

TEST_CASE("draws stay inside the model domain") {
  const GeneralizedPosterior gp = standard_normal_target();
  const DrawMatrix draws = rwm_sample(gp, Vec::Zero(1), 20000, 2000, 5);
  CHECK(draws.draws.minCoeff() > -10.0);
  CHECK(draws.draws.maxCoeff() < 10.0);
}

TEST_CASE("draws CSV round trip with metadata sidecar") {
  const GeneralizedPosterior gp = standard_normal_target();
  const DrawMatrix draws = rwm_sample(gp, Vec::Zero(1), 1200, 200, 17);
  const std::string path = "draws_roundtrip_test.csv";
  save_draws_csv(draws, path);
  const DrawMatrix back = load_draws_csv(path);
  CHECK((back.draws - draws.draws).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.seed == draws.seed);
  CHECK(back.burn_in == draws.burn_in);
  CHECK(back.acceptance_rate == doctest::Approx(draws.acceptance_rate));
  std::remove(path.c_str());
  std::remove((path + ".meta.json").c_str());
}
