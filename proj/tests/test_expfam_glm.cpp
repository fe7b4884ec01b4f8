#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "errors.hpp"
#include "models/expfam.hpp"
#include "models/glm.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "simulate.hpp"

using namespace gbv;

namespace {

// finite-difference oracle for the kappa derivative chain
void check_family_derivatives(const ExpFam1P& fam) {
  Rng rng(2024);
  for (int i = 0; i < 50; ++i) {
    const double eta = rng.uniform(-4.0, 4.0);
    const double h = 1e-5;
    const double d1 = (fam.kappa(eta + h) - fam.kappa(eta - h)) / (2.0 * h);
    const double d2 = (fam.dkappa(eta + h) - fam.dkappa(eta - h)) / (2.0 * h);
    const double d3 = (fam.d2kappa(eta + h) - fam.d2kappa(eta - h)) / (2.0 * h);
    CHECK(std::abs(d1 - fam.dkappa(eta)) <= 1e-6 * std::max(1.0, std::abs(fam.dkappa(eta))));
    CHECK(std::abs(d2 - fam.d2kappa(eta)) <= 1e-6 * std::max(1.0, std::abs(fam.d2kappa(eta))));
    CHECK(std::abs(d3 - fam.d3kappa(eta)) <= 1e-5 * std::max(1.0, std::abs(fam.d3kappa(eta))));
    CHECK(fam.d2kappa(eta) > 0.0);
  }
}

}  // namespace

TEST_CASE("family derivative chains match finite differences of kappa") {
  check_family_derivatives(expfam_gaussian(1.0));
  check_family_derivatives(expfam_gaussian(2.5));
  check_family_derivatives(expfam_bernoulli_logit());
  check_family_derivatives(expfam_poisson());
  check_family_derivatives(expfam_plusminus());
}

TEST_CASE("third-derivative envelopes hold pointwise") {
  const ExpFam1P bern = expfam_bernoulli_logit();
  const ExpFam1P gauss = expfam_gaussian(1.0);
  const ExpFam1P pois = expfam_poisson();
  const ExpFam1P pm = expfam_plusminus();
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const double eta = rng.uniform(-6.0, 6.0);
    CHECK(std::abs(bern.d3kappa(eta)) <= 3.0);
    CHECK(gauss.d3kappa(eta) == 0.0);
    CHECK(pois.d3kappa(eta) == doctest::Approx(std::exp(eta)).epsilon(1e-12));
    CHECK(std::abs(pm.d3kappa(eta)) <= 2.0);
  }
}

TEST_CASE("stable kappa evaluations at extreme eta") {
  const ExpFam1P bern = expfam_bernoulli_logit();
  CHECK(bern.kappa(800.0) == doctest::Approx(800.0));
  CHECK(bern.kappa(-800.0) == doctest::Approx(0.0));
  const ExpFam1P pm = expfam_plusminus();
  CHECK(pm.kappa(700.0) == doctest::Approx(700.0));
  CHECK(pm.kappa(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("iid expfam construction values") {
  // Bernoulli, data mean 0.25: f(0) = kappa(0) = log 2
  Vec data(4);
  data << 1.0, 0.0, 0.0, 0.0;
  auto bern = build_iid_expfam(expfam_bernoulli_logit(), data);
  CHECK(bern->value(Vec::Zero(1)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Poisson with S_n = 2: gradient vanishes at log 2
  auto pois = build_iid_expfam_matched(expfam_poisson(), 2.0, 50);
  CHECK(pois->gradient(Vec::Constant(1, std::log(2.0)))(0) == doctest::Approx(0.0).epsilon(1e-14));

  // Gaussian with S_n = 0: minimizer at 0 with unit curvature
  auto gauss = build_iid_expfam_matched(expfam_gaussian(1.0), 0.0, 10);
  const FitResult fit = find_minimizer(*gauss, Vec::Constant(1, 0.7), 1e-12, 50);
  CHECK(fit.theta_n(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.hessian_at_min(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(build_iid_expfam(expfam_poisson(), Vec()), ArgumentError);
}

TEST_CASE("power multiplier scales value, gradient, components") {
  Vec data(5);
  data << 0.3, -0.2, 1.1, 0.4, -0.6;
  auto plain = build_iid_expfam(expfam_gaussian(1.0), data, 1.0);
  auto doubled = build_iid_expfam(expfam_gaussian(1.0), data, 2.0);
  const Vec theta = Vec::Constant(1, 0.8);
  CHECK(doubled->value(theta) == doctest::Approx(2.0 * plain->value(theta)).epsilon(1e-14));
  CHECK(doubled->gradient(theta)(0) == doctest::Approx(2.0 * plain->gradient(theta)(0)));
  CHECK(doubled->component_gradient(2, theta)(0) ==
        doctest::Approx(2.0 * plain->component_gradient(2, theta)(0)));
}

TEST_CASE("GLM closed-form oracles") {
  // linear-Gaussian: theta_n solves the normal equations
  const GLMDataset data = gen_glm(GlmKind::Linear, Vec::Constant(3, 0.5), 120,
                                  CovariateSpec::gaussian(1.0), 31);
  auto glm = build_glm(data);
  const FitResult fit = find_minimizer(*glm, Vec::Zero(3), 1e-11, 100);
  const Vec oracle = (data.X.transpose() * data.X).ldlt().solve(data.X.transpose() * data.y);
  CHECK((fit.theta_n - oracle).norm() < 1e-8);

  // logistic intercept-only with y mean 0.25 reduces to the Bernoulli expfam
  Mat ones = Mat::Ones(8, 1);
  Vec y(8);
  y << 1, 1, 0, 0, 0, 0, 0, 0;
  auto intercept = build_glm(GLMDataset{ones, y, expfam_bernoulli_logit()});
  const FitResult fi = find_minimizer(*intercept, Vec::Zero(1), 1e-10, 100);
  CHECK(fi.theta_n(0) == doctest::Approx(std::log(0.25 / 0.75)).epsilon(1e-9));

  // Poisson intercept-only at theta = 0 with mean(y) = 3: f(0) = kappa(0) = 1
  Mat ones3 = Mat::Ones(3, 1);
  Vec y3(3);
  y3 << 2, 3, 4;
  auto pois = build_glm(GLMDataset{ones3, y3, expfam_poisson()});
  CHECK(pois->value(Vec::Zero(1)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("GLM rejects rank-deficient designs") {
  Mat x(6, 2);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = i + 1.0;
    x(i, 1) = 2.0 * (i + 1.0);  // collinear column
  }
  Vec y = Vec::Ones(6);
  CHECK_THROWS_WITH_AS(build_glm(GLMDataset{x, y, expfam_bernoulli_logit()}),
                       "covariates linearly dependent: theta not identifiable", ArgumentError);
}

TEST_CASE("GLM Hessian is PSD at random probes") {
  const GLMDataset data = gen_glm(GlmKind::Poisson, Vec::Constant(2, 0.2), 100,
                                  CovariateSpec::bounded_uniform(-1.0, 1.0), 5);
  auto glm = build_glm(data);
  Rng rng(9);
  for (int i = 0; i < 12; ++i) {
    Vec theta(2);
    theta << rng.uniform(-1, 1), rng.uniform(-1, 1);
    CHECK(min_eigenvalue(glm->hessian(theta)) >= -1e-12);
  }
}

TEST_CASE("GLM moment matching at the minimizer") {
  const GLMDataset data = gen_glm(GlmKind::Logistic, Vec::Constant(2, 0.6), 150,
                                  CovariateSpec::gaussian(1.0), 77);
  auto glm = build_glm(data);
  const double tol = 1e-8;
  const FitResult fit = find_minimizer(*glm, Vec::Zero(2), tol, 200);
  REQUIRE(fit.converged);
  // (1/n) sum kappa'(theta^T x_i) x_i == (1/n) sum s(y_i) x_i at theta_n
  Vec lhs = Vec::Zero(2), rhs = Vec::Zero(2);
  for (long i = 0; i < data.X.rows(); ++i) {
    const double eta = data.X.row(i).dot(fit.theta_n);
    lhs += data.family.dkappa(eta) * data.X.row(i).transpose();
    rhs += data.family.suff(data.y(i)) * data.X.row(i).transpose();
  }
  CHECK((lhs - rhs).norm() / data.X.rows() <= 10.0 * tol);
}

TEST_CASE("zoo-wide derivative validation across GLM families") {
  Rng rng(123);
  for (const GlmKind kind : {GlmKind::Linear, GlmKind::Logistic, GlmKind::Poisson}) {
    const GLMDataset data =
        gen_glm(kind, Vec::Constant(2, 0.3), 80, CovariateSpec::bounded_uniform(-1.0, 1.0), 42);
    auto glm = build_glm(data);
    std::vector<Vec> probes;
    for (int i = 0; i < 20; ++i) {
      Vec p(2);
      p << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
      probes.push_back(p);
    }
    const auto report = validate_model(*glm, probes);
    CHECK(report.pass);
  }
}

TEST_CASE("GLM CSV round trip preserves the dataset") {
  const GLMDataset data = gen_glm(GlmKind::Logistic, Vec::Constant(2, 0.4), 25,
                                  CovariateSpec::gaussian(1.0), 13);
  const std::string path = "glm_roundtrip_test.csv";
  write_glm_csv(path, data);
  const GLMDataset back = read_glm_csv(path, expfam_bernoulli_logit());
  CHECK((back.X - data.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.y - data.y).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}
