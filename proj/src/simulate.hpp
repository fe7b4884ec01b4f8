#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "core.hpp"
#include "models/cox.hpp"
#include "models/glm.hpp"
#include "models/pseudolik.hpp"

namespace gbv {

struct CovariateSpec {
  enum class Kind { IidGaussian, Rademacher, BoundedUniform, Constant };
  Kind kind = Kind::IidGaussian;
  double a = 1.0;  // gaussian scale, uniform lower bound, or constant value
  double b = 0.0;  // uniform upper bound

  static CovariateSpec gaussian(double scale) { return {Kind::IidGaussian, scale, 0.0}; }
  static CovariateSpec rademacher() { return {Kind::Rademacher, 0.0, 0.0}; }
  static CovariateSpec bounded_uniform(double lo, double hi) { return {Kind::BoundedUniform, lo, hi}; }
  static CovariateSpec constant(double c) { return {Kind::Constant, c, 0.0}; }
};

enum class GlmKind { Linear, Logistic, Poisson };

// Covariates drawn i.i.d. per coordinate, responses from the named family at
// mean link(theta^T x). Each observation uses its own RNG substream, so
// outputs are bit-reproducible and parallelizable. Linear responses use
// noise sd `sigma`.
GLMDataset gen_glm(GlmKind kind, const Vec& theta_true, long n, const CovariateSpec& cov,
                   std::uint64_t seed, double sigma = 1.0);

// Systematic-scan Gibbs on a torus; returns the final field. Flags (but does
// not reject) couplings at or beyond |theta_2| = 0.4 on 2-D lattices, near
// criticality where one long chain mixes poorly.
FieldSample gen_ising_gibbs(int L, int m, const Vec& theta, int sweeps, int burn_sweeps,
                            std::uint64_t seed, bool* critical_warning = nullptr);

// Exact joint Gaussian field via dense Cholesky of Q = gamma (I - B), with B
// carrying theta_axes on neighbor pairs (one coefficient per axis, so B is
// symmetric). Requires L^m <= 4096.
FieldSample gen_gmrf(int L, int m, const Vec& theta_axes, double gamma, std::uint64_t seed);

struct BoltzmannExact {
  Mat samples;      // n x d, +-1 entries
  Mat states;       // 2^d x d enumeration
  Vec exact_probs;  // matching probabilities
};

// Enumerates all 2^d states (d <= 20), samples i.i.d. by inverse CDF, and
// exposes the exact distribution table.
BoltzmannExact gen_boltzmann_exact(int d, const Mat& A, const Vec& b, long n, std::uint64_t seed);

struct BaselineSpec {
  enum class Kind { Exponential, Weibull };
  Kind kind = Kind::Exponential;
  double rate = 1.0;   // exponential hazard rate
  double shape = 1.0;  // weibull k
  double scale = 1.0;  // weibull lambda

  static BaselineSpec exponential(double c) { return {Kind::Exponential, c, 1.0, 1.0}; }
  static BaselineSpec weibull(double k, double lambda) { return {Kind::Weibull, 0.0, k, lambda}; }
};

struct CensorSpec {
  enum class Kind { None, Exponential, Uniform };
  Kind kind = Kind::None;
  double a = 1.0;  // exponential rate, or uniform upper bound

  static CensorSpec none() { return {Kind::None, 0.0}; }
  static CensorSpec exponential(double rate) { return {Kind::Exponential, rate}; }
  static CensorSpec uniform(double c) { return {Kind::Uniform, c}; }
};

// Event time by inverse transform T = Lambda0^{-1}(-log U * e^{-theta^T x});
// y = min(T, C), z = 1(T <= C). Covariates must be bounded
// (rademacher or bounded-uniform).
SurvivalDataset gen_cox(long n, const Vec& theta_true, const BaselineSpec& baseline,
                        const CensorSpec& censor, const CovariateSpec& cov, std::uint64_t seed);

struct NoiseSpec {
  enum class Kind { Gaussian, Cauchy, Mixture };
  Kind kind = Kind::Gaussian;
  double scale = 1.0;          // gaussian sigma or cauchy gamma
  double epsilon = 0.0;        // mixture contamination fraction
  double outlier_scale = 1.0;  // mixture outlier sd multiplier

  static NoiseSpec gaussian(double sigma) { return {Kind::Gaussian, sigma, 0.0, 1.0}; }
  static NoiseSpec cauchy(double gamma) { return {Kind::Cauchy, gamma, 0.0, 1.0}; }
  static NoiseSpec mixture(double eps, double outlier_scale, double sigma = 1.0) {
    return {Kind::Mixture, sigma, eps, outlier_scale};
  }
};

// Location-family draws centered at theta0; mixture with epsilon = 0 is
// bit-identical to the pure gaussian generator at the same seed.
Vec gen_location(long n, double theta0, const NoiseSpec& noise, std::uint64_t seed);

}  // namespace gbv
