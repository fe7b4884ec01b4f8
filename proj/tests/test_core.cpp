#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core.hpp"
#include "errors.hpp"
#include "models/glm.hpp"
#include "rng.hpp"
#include "simulate.hpp"

using namespace gbv;

namespace {

GeneralizedPosterior make_gp(std::shared_ptr<const ObjectiveModel> m, PriorSpec prior, long n) {
  return GeneralizedPosterior(std::move(m), std::move(prior), n);
}

std::shared_ptr<CallableModel> flat_model() {
  return std::make_shared<CallableModel>(1, DomainBox::unbounded(1),
                                         [](const Vec&) { return 0.0; });
}

}  // namespace

TEST_CASE("domain box membership is strict and handles unbounded sides") {
  DomainBox box = DomainBox::bounds(Vec::Constant(1, 0.0), Vec::Constant(1, 1.0));
  CHECK(box.contains(Vec::Constant(1, 0.5)));
  CHECK_FALSE(box.contains(Vec::Constant(1, 0.0)));  // open
  CHECK_FALSE(box.contains(Vec::Constant(1, 2.0)));
  CHECK(box.bounded());

  DomainBox all = DomainBox::unbounded(2);
  CHECK(all.contains(Vec::Constant(2, 1e9)));
  CHECK_FALSE(all.bounded());

  CHECK_THROWS_AS(DomainBox::bounds(Vec::Constant(1, 1.0), Vec::Constant(1, 1.0)), ArgumentError);
}

TEST_CASE("log posterior closed-form values") {
  // f == 0, standard normal prior, theta = 0: log pi(0) = -log sqrt(2 pi)
  auto gp = make_gp(flat_model(), PriorSpec::gaussian(Vec::Zero(1), Vec::Ones(1)), 1);
  CHECK(unnormalized_log_posterior(gp, Vec::Zero(1)) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));

  // n = 4, f = theta^2/2, prior N(0,1), theta = 1: -2 - 0.5 - 0.918939
  auto half_square = std::make_shared<CallableModel>(
      1, DomainBox::unbounded(1), [](const Vec& t) { return 0.5 * t(0) * t(0); });
  auto gp2 = make_gp(half_square, PriorSpec::gaussian(Vec::Zero(1), Vec::Ones(1)), 4);
  CHECK(unnormalized_log_posterior(gp2, Vec::Ones(1)) ==
        doctest::Approx(-2.0 - 0.5 - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));

  // uniform prior on (0,1), theta = 2: zero prior density
  auto box = DomainBox::bounds(Vec::Zero(1), Vec::Ones(1));
  auto gp3 = make_gp(flat_model(), PriorSpec::uniform_box(box), 1);
  CHECK(unnormalized_log_posterior(gp3, Vec::Constant(1, 2.0)) == kNegInf);
}

TEST_CASE("log posterior error paths") {
  auto gp = make_gp(flat_model(), PriorSpec::gaussian(Vec::Zero(1), Vec::Ones(1)), 1);
  CHECK_THROWS_AS(unnormalized_log_posterior(gp, Vec::Zero(2)), ArgumentError);
  Vec bad(1);
  bad(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(unnormalized_log_posterior(gp, bad), ArgumentError);

  auto nan_model = std::make_shared<CallableModel>(
      1, DomainBox::unbounded(1), [](const Vec&) { return std::nan(""); });
  auto gp_nan = make_gp(nan_model, PriorSpec::gaussian(Vec::Zero(1), Vec::Ones(1)), 1);
  CHECK_THROWS_AS(unnormalized_log_posterior(gp_nan, Vec::Zero(1)), EvaluationError);
}

TEST_CASE("log posterior is monotone decreasing in n where f > 0") {
  auto positive = std::make_shared<CallableModel>(
      1, DomainBox::unbounded(1), [](const Vec& t) { return 1.0 + t(0) * t(0); });
  const PriorSpec prior = PriorSpec::gaussian(Vec::Zero(1), Vec::Ones(1));
  Vec theta = Vec::Constant(1, 0.7);
  double prev = unnormalized_log_posterior(make_gp(positive, prior, 1), theta);
  for (long n : {2L, 5L, 17L, 100L}) {
    const double cur = unnormalized_log_posterior(make_gp(positive, prior, n), theta);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("priors equal up to a constant factor shift the log posterior by a constant") {
  auto model = std::make_shared<CallableModel>(
      1, DomainBox::unbounded(1), [](const Vec& t) { return std::cos(t(0)); });
  const PriorSpec p1 = PriorSpec::custom(1, [](const Vec& t) { return -std::abs(t(0)); });
  const PriorSpec p2 =
      PriorSpec::custom(1, [](const Vec& t) { return -std::abs(t(0)) + std::log(3.0); });
  auto gp1 = make_gp(model, p1, 7);
  auto gp2 = make_gp(model, p2, 7);

  Rng rng(11);
  double first_diff = 0.0;
  for (int i = 0; i < 20; ++i) {
    Vec theta = Vec::Constant(1, rng.uniform(-4.0, 4.0));
    const double diff =
        unnormalized_log_posterior(gp2, theta) - unnormalized_log_posterior(gp1, theta);
    if (i == 0) first_diff = diff;
    CHECK(diff == doctest::Approx(first_diff).epsilon(1e-12));
  }
  CHECK(first_diff == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("stored Hessians are exactly symmetric across the zoo sample") {
  const GLMDataset data = gen_glm(GlmKind::Logistic, Vec::Constant(2, 0.4), 50,
                                  CovariateSpec::gaussian(1.0), 99);
  auto glm = build_glm(data);
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    Vec theta(2);
    theta << rng.uniform(-1, 1), rng.uniform(-1, 1);
    const Mat h = glm->hessian(theta);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("validate_model: quadratic Hessian error is zero to rounding") {
  Mat h(2, 2);
  h << 2.0, 1.0, 1.0, 3.0;
  auto quad = std::make_shared<QuadraticModel>(Vec::Zero(2), h);
  std::vector<Vec> probes{Vec::Zero(2), Vec::Constant(2, 0.5)};
  const auto report = validate_model(*quad, probes);
  CHECK(report.pass);
  CHECK(report.max_hess_rel_err < 1e-8);
}

TEST_CASE("validate_model: logistic GLM passes at 20 random probes") {
  const GLMDataset data = gen_glm(GlmKind::Logistic, Vec::Constant(3, 0.3), 80,
                                  CovariateSpec::gaussian(1.0), 7);
  auto glm = build_glm(data);
  Rng rng(21);
  std::vector<Vec> probes;
  for (int i = 0; i < 20; ++i) {
    Vec p(3);
    for (int j = 0; j < 3; ++j) p(j) = rng.uniform(-1.5, 1.5);
    probes.push_back(p);
  }
  const auto report = validate_model(*glm, probes);
  CHECK(report.pass);
  CHECK(report.max_grad_rel_err < 1e-5);
  CHECK(report.max_hess_rel_err < 1e-3);
}

TEST_CASE("validate_model: a wrong gradient sign fails on every probe") {
  auto broken = std::make_shared<CallableModel>(
      1, DomainBox::unbounded(1), [](const Vec& t) { return t(0) * t(0); },
      [](const Vec& t) { return Vec::Constant(1, -2.0 * t(0)); });
  std::vector<Vec> probes{Vec::Constant(1, 0.5), Vec::Constant(1, -1.0), Vec::Constant(1, 2.0)};
  const auto report = validate_model(*broken, probes);
  CHECK_FALSE(report.pass);
  for (const auto& probe : report.probes) CHECK_FALSE(probe.grad_pass);
}

TEST_CASE("validate_model skips probes outside the domain with a warning count") {
  auto model = std::make_shared<CallableModel>(
      1, DomainBox::bounds(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)),
      [](const Vec& t) { return t(0) * t(0); });
  std::vector<Vec> probes{Vec::Constant(1, 0.2), Vec::Constant(1, 5.0)};
  const auto report = validate_model(*model, probes);
  CHECK(report.skipped == 1);
  CHECK(report.probes[1].skipped);
}

TEST_CASE("gaussian and uniform priors are normalized densities") {
  // uniform: log density = -log(volume)
  auto box = DomainBox::bounds(Vec::Constant(2, -1.0), Vec::Constant(2, 3.0));
  const PriorSpec uniform = PriorSpec::uniform_box(box);
  CHECK(uniform.log_density(Vec::Zero(2)) == doctest::Approx(-std::log(16.0)));

  // gaussian: matches the closed-form normal log density
  Vec mean(2), sd(2);
  mean << 1.0, -2.0;
  sd << 2.0, 0.5;
  const PriorSpec gauss = PriorSpec::gaussian(mean, sd);
  Vec at(2);
  at << 0.0, -1.0;
  const double expected = -std::log(2.0 * M_PI) - std::log(2.0 * 0.5) -
                          0.5 * (0.25 + 4.0);
  CHECK(gauss.log_density(at) == doctest::Approx(expected).epsilon(1e-12));

  // logit-uniform integrates to 1 over R (trapezoid oracle)
  const PriorSpec lu = logit_uniform_prior();
  double mass = 0.0;
  const double h = 0.001;
  for (double t = -40.0; t <= 40.0; t += h)
    mass += std::exp(lu.log_density(Vec::Constant(1, t))) * h;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}
