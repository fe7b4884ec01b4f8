#include "sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "errors.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace gbv {

Vec DrawMatrix::mean() const { return draws.colwise().mean(); }

Mat DrawMatrix::covariance() const {
  const long s = draws.rows();
  if (s < 2) throw ArgumentError("DrawMatrix: need at least 2 draws for covariance");
  const Mat centered = draws.rowwise() - draws.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(s - 1);
}

DrawMatrix rwm_sample(const GeneralizedPosterior& gp, const Vec& theta_init, long steps,
                      long burn_in, std::uint64_t seed, const std::optional<Mat>& proposal_chol) {
  if (!(steps > burn_in && burn_in >= 0)) throw ArgumentError("rwm_sample: need steps > burn_in >= 0");
  const int d = gp.dim();
  if (theta_init.size() != d) throw ArgumentError("rwm_sample: theta_init dimension mismatch");

  double lp = unnormalized_log_posterior(gp, theta_init);
  if (lp == kNegInf) throw ArgumentError("rwm_sample: theta_init has zero posterior density");

  Mat shape = proposal_chol ? *proposal_chol : Mat(0.1 * Mat::Identity(d, d));
  if (shape.rows() != d || shape.cols() != d)
    throw ArgumentError("rwm_sample: proposal factor dimension mismatch");

  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
  Rng rng(seed, 0);

  Vec x = theta_init;
  Vec xi(d), prop(d);
  DrawMatrix out;
  out.seed = seed;
  out.burn_in = burn_in;
  out.draws.resize(steps - burn_in, d);

  const long stuck_limit = 10 * d;
  long initial_rejects = 0;
  bool ever_accepted = false;
  long accepted_post = 0;

  for (long t = 0; t < steps; ++t) {
    for (int j = 0; j < d; ++j) xi(j) = rng.normal();
    prop = x + std::exp(log_scale) * (shape * xi);

    bool accept = false;
    const double lp_prop = unnormalized_log_posterior(gp, prop);
    if (lp_prop > kNegInf) {
      const double log_ratio = lp_prop - lp;
      accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
    } else {
      rng.uniform();  // keep the consumption pattern fixed
    }
    if (accept) {
      x = prop;
      lp = lp_prop;
      ever_accepted = true;
    } else if (!ever_accepted) {
      if (++initial_rejects >= stuck_limit)
        throw NumericalError("stuck chain: check initialization/scale");
    }

    if (t < burn_in) {
      const double gamma = 1.0 / std::pow(static_cast<double>(t + 1), 0.6);
      log_scale += gamma * ((accept ? 1.0 : 0.0) - 0.30);
    } else {
      out.draws.row(t - burn_in) = x;
      if (accept) ++accepted_post;
    }
  }

  out.acceptance_rate = static_cast<double>(accepted_post) / static_cast<double>(steps - burn_in);
  return out;
}

long GridDensity::cells() const {
  long c = 1;
  for (int r : resolution) c *= r;
  return c;
}

Vec GridDensity::cell_center(long flat_index) const {
  const int d = dim();
  Vec c(d);
  if (d == 1) {
    const double w = (box.upper(0) - box.lower(0)) / resolution[0];
    c(0) = box.lower(0) + (flat_index + 0.5) * w;
  } else {
    const long i = flat_index / resolution[1];
    const long j = flat_index % resolution[1];
    const double w0 = (box.upper(0) - box.lower(0)) / resolution[0];
    const double w1 = (box.upper(1) - box.lower(1)) / resolution[1];
    c(0) = box.lower(0) + (i + 0.5) * w0;
    c(1) = box.lower(1) + (j + 0.5) * w1;
  }
  return c;
}

double GridDensity::mass(long flat_index) const { return std::exp(log_mass[flat_index]); }

double GridDensity::mass_in_ball(const Vec& center, double radius) const {
  double acc = 0.0;
  const long m = cells();
  for (long i = 0; i < m; ++i) {
    if ((cell_center(i) - center).norm() <= radius) acc += mass(i);
  }
  return acc;
}

Vec GridDensity::mean() const {
  Vec acc = Vec::Zero(dim());
  const long m = cells();
  for (long i = 0; i < m; ++i) acc += mass(i) * cell_center(i);
  return acc;
}

double GridDensity::cdf1d(double x) const {
  if (dim() != 1) throw ArgumentError("cdf1d: grid is not one-dimensional");
  const double w = (box.upper(0) - box.lower(0)) / resolution[0];
  double acc = 0.0;
  for (int i = 0; i < resolution[0]; ++i) {
    const double lo = box.lower(0) + i * w;
    if (x >= lo + w) {
      acc += mass(i);
    } else if (x > lo) {
      acc += mass(i) * (x - lo) / w;  // linear within the cell
      break;
    } else {
      break;
    }
  }
  return acc;
}

GridDensity grid_density(const GeneralizedPosterior& gp, const DomainBox& box, int resolution) {
  const int d = gp.dim();
  if (d > 2) throw UnsupportedError("grid_density: only D <= 2 is supported");
  if (box.dim() != d) throw ArgumentError("grid_density: box dimension mismatch");
  if (!box.bounded()) throw ArgumentError("grid_density: box must be bounded");
  if (resolution < 32) throw ArgumentError("grid_density: resolution must be >= 32 per axis");

  GridDensity g;
  g.box = box;
  g.resolution.assign(d, resolution);
  const long m = g.cells();
  g.cell_volume = 1.0;
  for (int j = 0; j < d; ++j) g.cell_volume *= (box.upper(j) - box.lower(j)) / resolution;

  std::vector<double> logd(m);
  double max_logd = kNegInf;
  for (long i = 0; i < m; ++i) {
    logd[i] = unnormalized_log_posterior(gp, g.cell_center(i));
    max_logd = std::max(max_logd, logd[i]);
  }
  if (!std::isfinite(max_logd))
    throw NumericalError("grid_density: posterior vanishes on the whole box");

  double sum = 0.0;
  for (long i = 0; i < m; ++i) sum += std::exp(logd[i] - max_logd);
  const double log_sum = max_logd + std::log(sum);
  g.log_z_grid = log_sum + std::log(g.cell_volume);

  g.log_mass.resize(m);
  for (long i = 0; i < m; ++i) g.log_mass[i] = logd[i] - log_sum;
  return g;
}

EssResult effective_sample_size(const DrawMatrix& draws) {
  const long s = draws.size();
  if (s < 100) throw ArgumentError("effective_sample_size: need at least 100 draws");
  const int d = draws.dim();

  EssResult out;
  out.ess.resize(d);
  for (int c = 0; c < d; ++c) {
    const Vec x = draws.draws.col(c);
    if (x.maxCoeff() == x.minCoeff()) {
      out.ess(c) = 1.0;
      out.constant_flag = true;
      continue;
    }
    const double mean = x.mean();
    const Vec centered = x.array() - mean;
    const double gamma0 = centered.squaredNorm() / static_cast<double>(s);
    auto gamma_at = [&](long t) {
      double acc = 0.0;
      for (long i = 0; i + t < s; ++i) acc += centered(i) * centered(i + t);
      return acc / static_cast<double>(s);
    };
    // Sum of initial positive autocorrelation pairs (Gamma_k = rho_2k + rho_2k+1).
    double tau = -1.0;
    for (long k = 0; 2 * k + 1 < s; ++k) {
      const double pair = (gamma_at(2 * k) + gamma_at(2 * k + 1)) / gamma0;
      if (pair <= 0.0) break;
      tau += 2.0 * pair;
    }
    double ess = (tau > 0.0) ? static_cast<double>(s) / tau : kPosInf;
    if (ess > 10.0 * s) {
      ess = 10.0 * s;
      out.capped_flag = true;
    }
    out.ess(c) = ess;
  }
  return out;
}

void save_draws_csv(const DrawMatrix& draws, const std::string& path) {
  std::vector<std::string> cols;
  for (int j = 0; j < draws.dim(); ++j) cols.push_back("theta_" + std::to_string(j + 1));
  write_csv(path, cols, draws.draws);

  nlohmann::json meta;
  meta["seed"] = draws.seed;
  meta["acceptance_rate"] = draws.acceptance_rate;
  meta["burn_in"] = draws.burn_in;
  std::ofstream out(path + ".meta.json");
  if (!out) throw IoError("cannot write draws metadata: " + path + ".meta.json");
  out << meta.dump(2) << "\n";
}

DrawMatrix load_draws_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  DrawMatrix out;
  out.draws = table.values;
  for (size_t j = 0; j < table.columns.size(); ++j) {
    if (table.columns[j] != "theta_" + std::to_string(j + 1))
      throw IoError("draws CSV has unexpected header column '" + table.columns[j] + "'");
  }
  std::ifstream meta_in(path + ".meta.json");
  if (meta_in) {
    nlohmann::json meta = nlohmann::json::parse(meta_in, nullptr, false);
    if (!meta.is_discarded()) {
      out.seed = meta.value("seed", std::uint64_t{0});
      out.acceptance_rate = meta.value("acceptance_rate", 0.0);
      out.burn_in = meta.value("burn_in", long{0});
    }
  }
  return out;
}

}  // namespace gbv
