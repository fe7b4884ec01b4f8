#include "simulate.hpp"

#include <cmath>

#include "errors.hpp"
#include "rng.hpp"

namespace gbv {

namespace {

double draw_covariate(const CovariateSpec& cov, Rng& rng) {
  switch (cov.kind) {
    case CovariateSpec::Kind::IidGaussian:
      return cov.a * rng.normal();
    case CovariateSpec::Kind::Rademacher:
      return static_cast<double>(rng.rademacher());
    case CovariateSpec::Kind::BoundedUniform:
      return rng.uniform(cov.a, cov.b);
    case CovariateSpec::Kind::Constant:
      return cov.a;
  }
  throw ArgumentError("gen: unknown covariate spec");
}

bool covariate_bounded(const CovariateSpec& cov) {
  return cov.kind != CovariateSpec::Kind::IidGaussian;
}

}  // namespace

GLMDataset gen_glm(GlmKind kind, const Vec& theta_true, long n, const CovariateSpec& cov,
                   std::uint64_t seed, double sigma) {
  if (n < 1) throw ArgumentError("gen_glm: n must be >= 1");
  const int d = static_cast<int>(theta_true.size());
  if (d < 1) throw ArgumentError("gen_glm: theta_true must be nonempty");

  GLMDataset out{Mat(n, d), Vec(n),
                 kind == GlmKind::Linear
                     ? expfam_gaussian(sigma * sigma)
                     : (kind == GlmKind::Logistic ? expfam_bernoulli_logit() : expfam_poisson())};
  for (long i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    for (int j = 0; j < d; ++j) out.X(i, j) = draw_covariate(cov, rng);
    const double eta = out.X.row(i).dot(theta_true);
    switch (kind) {
      case GlmKind::Linear:
        out.y(i) = eta + sigma * rng.normal();
        break;
      case GlmKind::Logistic:
        out.y(i) = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        break;
      case GlmKind::Poisson:
        if (eta > 30.0)
          throw ArgumentError(
              "gen_glm: poisson mean overflow (theta^T x > 30); use bounded covariates");
        out.y(i) = static_cast<double>(rng.poisson(std::exp(eta)));
        break;
    }
  }
  return out;
}

FieldSample gen_ising_gibbs(int L, int m, const Vec& theta, int sweeps, int burn_sweeps,
                            std::uint64_t seed, bool* critical_warning) {
  if (theta.size() != 2) throw ArgumentError("gen_ising_gibbs: theta must be (theta_1, theta_2)");
  if (!(sweeps > burn_sweeps && burn_sweeps >= 50))
    throw ArgumentError("gen_ising_gibbs: need sweeps > burn_sweeps >= 50");
  if (critical_warning) *critical_warning = (m == 2 && std::abs(theta(1)) >= 0.4);

  FieldSample field;
  field.lattice = TorusLattice::make(m, L);
  const long n = field.lattice.sites();
  field.values.resize(n);

  Rng rng(seed, 0);
  for (long i = 0; i < n; ++i) field.values(i) = rng.rademacher();

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (long i = 0; i < n; ++i) {
      field.values(i) =
          rng.uniform() < ising_conditional_probability(theta, field, i) ? 1.0 : -1.0;
    }
  }
  return field;
}

FieldSample gen_gmrf(int L, int m, const Vec& theta_axes, double gamma, std::uint64_t seed) {
  if (theta_axes.size() != m) throw ArgumentError("gen_gmrf: need one coefficient per axis");
  if (!(gamma > 0.0)) throw ArgumentError("gen_gmrf: gamma must be > 0");

  FieldSample field;
  field.lattice = TorusLattice::make(m, L);
  const long n = field.lattice.sites();
  if (n > 4096) throw UnsupportedError("gen_gmrf: dense sampler supports L^m <= 4096");

  Mat q = Mat::Identity(n, n);
  for (long i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      q(i, field.lattice.neighbor(i, 2 * a)) -= theta_axes(a);
      q(i, field.lattice.neighbor(i, 2 * a + 1)) -= theta_axes(a);
    }
  }
  q *= gamma;

  const auto chol = cholesky_lower(q);
  if (!chol) throw NumericalError("conditional spec has no valid joint: reduce |theta|");

  Rng rng(seed, 0);
  Vec z(n);
  for (long i = 0; i < n; ++i) z(i) = rng.normal();
  field.values = chol->transpose().triangularView<Eigen::Upper>().solve(z);
  return field;
}

BoltzmannExact gen_boltzmann_exact(int d, const Mat& A, const Vec& b, long n, std::uint64_t seed) {
  if (d < 1 || d > 20) throw UnsupportedError("gen_boltzmann_exact: need 1 <= d <= 20");
  if (A.rows() != d || A.cols() != d || b.size() != d)
    throw ArgumentError("gen_boltzmann_exact: parameter dimension mismatch");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j)
      if (A(i, j) != 0.0)
        throw ArgumentError("gen_boltzmann_exact: A must be strictly upper triangular");

  const long states = 1L << d;
  BoltzmannExact out;
  out.states.resize(states, d);
  Vec energy(states);
  for (long s = 0; s < states; ++s) {
    for (int j = 0; j < d; ++j) out.states(s, j) = (s & (1L << j)) ? 1.0 : -1.0;
    const Vec y = out.states.row(s).transpose();
    energy(s) = y.dot(A * y) + b.dot(y);
  }
  const double emax = energy.maxCoeff();
  Vec w = (energy.array() - emax).exp();
  out.exact_probs = w / w.sum();

  Vec cdf(states);
  double acc = 0.0;
  for (long s = 0; s < states; ++s) {
    acc += out.exact_probs(s);
    cdf(s) = acc;
  }
  cdf(states - 1) = 1.0;

  out.samples.resize(n, d);
  for (long i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const double u = rng.uniform();
    long lo = 0, hi = states - 1;
    while (lo < hi) {
      const long mid = (lo + hi) / 2;
      if (u <= cdf(mid)) hi = mid; else lo = mid + 1;
    }
    out.samples.row(i) = out.states.row(lo);
  }
  return out;
}

SurvivalDataset gen_cox(long n, const Vec& theta_true, const BaselineSpec& baseline,
                        const CensorSpec& censor, const CovariateSpec& cov, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("gen_cox: n must be >= 1");
  if (!covariate_bounded(cov)) throw ArgumentError("gen_cox: covariates must be bounded");
  const int d = static_cast<int>(theta_true.size());

  SurvivalDataset out;
  out.time.resize(n);
  out.event.resize(n);
  out.X.resize(n, d);

  for (long i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    for (int j = 0; j < d; ++j) out.X(i, j) = draw_covariate(cov, rng);
    const double eta = out.X.row(i).dot(theta_true);
    const double s = -std::log(rng.uniform()) * std::exp(-eta);  // Lambda0(T)
    double t = 0.0;
    switch (baseline.kind) {
      case BaselineSpec::Kind::Exponential:
        t = s / baseline.rate;
        break;
      case BaselineSpec::Kind::Weibull:
        t = baseline.scale * std::pow(s, 1.0 / baseline.shape);
        break;
    }
    double c = kPosInf;
    switch (censor.kind) {
      case CensorSpec::Kind::None:
        break;
      case CensorSpec::Kind::Exponential:
        c = -std::log(rng.uniform()) / censor.a;
        break;
      case CensorSpec::Kind::Uniform:
        c = censor.a * rng.uniform();
        break;
    }
    out.time(i) = std::min(t, c);
    out.event[i] = t <= c ? 1 : 0;
  }
  return out;
}

Vec gen_location(long n, double theta0, const NoiseSpec& noise, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("gen_location: n must be >= 1");
  Vec out(n);
  for (long i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    switch (noise.kind) {
      case NoiseSpec::Kind::Gaussian:
        out(i) = theta0 + noise.scale * rng.normal();
        break;
      case NoiseSpec::Kind::Cauchy:
        out(i) = theta0 + noise.scale * rng.cauchy();
        break;
      case NoiseSpec::Kind::Mixture: {
        const double z = noise.scale * rng.normal();
        const bool outlier = rng.uniform() < noise.epsilon;
        out(i) = theta0 + (outlier ? noise.outlier_scale * z : z);
        break;
      }
    }
  }
  return out;
}

}  // namespace gbv
