#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace gbv {

struct DrawMatrix {
  Mat draws;  // S x D, post-burn-in
  std::uint64_t seed = 0;
  double acceptance_rate = 0.0;  // measured after adaptation froze
  long burn_in = 0;

  long size() const { return draws.rows(); }
  int dim() const { return static_cast<int>(draws.cols()); }
  Vec mean() const;
  Mat covariance() const;
};

// Gaussian-proposal random-walk Metropolis. The proposal is
// scale * L * xi with L a fixed shape factor (Laplace Cholesky when given,
// else 0.1 * I); the log scale adapts by Robbins-Monro toward acceptance
// 0.30 during burn-in only and is frozen afterward, so the retained chain
// is Markov. Identical arguments give bit-identical output.
DrawMatrix rwm_sample(const GeneralizedPosterior& gp, const Vec& theta_init, long steps,
                      long burn_in, std::uint64_t seed,
                      const std::optional<Mat>& proposal_chol = std::nullopt);

struct GridDensity {
  DomainBox box;
  std::vector<int> resolution;      // per axis, size 1 or 2
  std::vector<double> log_mass;     // normalized log cell masses, row-major
  double log_z_grid = 0.0;
  double cell_volume = 0.0;

  int dim() const { return static_cast<int>(resolution.size()); }
  long cells() const;
  Vec cell_center(long flat_index) const;
  double mass(long flat_index) const;
  double mass_in_ball(const Vec& center, double radius) const;
  Vec mean() const;
  // Empirical CDF at x for D = 1 grids.
  double cdf1d(double x) const;
};

// Midpoint-rule representation of the posterior on a bounded box; the
// quadrature oracle for D <= 2.
GridDensity grid_density(const GeneralizedPosterior& gp, const DomainBox& box, int resolution);

struct EssResult {
  Vec ess;             // per coordinate
  bool constant_flag = false;
  bool capped_flag = false;  // anticorrelated chain, ESS > S capped at 10 S
};

// Initial-positive-sequence autocorrelation estimator; requires S >= 100.
EssResult effective_sample_size(const DrawMatrix& draws);

// CSV with header theta_1..theta_D plus a JSON sidecar (seed, acceptance,
// burn-in) at path + ".meta.json".
void save_draws_csv(const DrawMatrix& draws, const std::string& path);
DrawMatrix load_draws_csv(const std::string& path);

}  // namespace gbv
