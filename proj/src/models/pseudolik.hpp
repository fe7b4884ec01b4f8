#pragma once

#include <memory>
#include <string>
#include <vector>

#include "../core.hpp"
#include "expfam.hpp"

namespace gbv {

// Periodic integer lattice Z_L^m; every site has exactly 2m neighbors.
struct TorusLattice {
  int m = 0;
  int L = 0;
  std::vector<long> neighbors;  // sites() x 2m, flattened; axis a -> entries 2a, 2a+1

  static TorusLattice make(int m, int L);
  long sites() const;
  long neighbor(long site, int slot) const { return neighbors[site * 2 * m + slot]; }
  std::vector<int> coords(long site) const;
  long index(const std::vector<int>& c) const;
};

struct FieldSample {
  TorusLattice lattice;
  Vec values;  // length sites(), index order

  bool is_pm_one() const;
  double neighbor_sum(long site) const;
};

// theta <-> (b, strictly upper-triangular A); order b_1..b_d then A_12, A_13,
// .., A_1d, A_23, ... (row-major upper triangle).
struct ThetaPacking {
  int d = 0;

  explicit ThetaPacking(int node_count);
  int dim() const { return d + d * (d - 1) / 2; }
  int slot(int i, int j) const;  // A_{ij}, requires i < j
  Vec pack(const Vec& b, const Mat& A) const;
  void unpack(const Vec& theta, Vec* b, Mat* A) const;
};

// Conditional probability of a +1 outcome for the plus/minus binary family:
// P(y = +1 | rest) = e^eta / (e^eta + e^-eta).
double conditional_probability_plus(double eta);

// Ising full conditional at a site: eta = theta_1 + theta_2 * (neighbor sum).
// Drives the Gibbs simulator.
double ising_conditional_probability(const Vec& theta, const FieldSample& field, long site);

// Per-site Gaussian conditional objective
// f_n = (1/n) sum_i [ 1/2 gamma (theta^T x_i)^2 - gamma (theta^T x_i) y_i ],
// x_i the neighbor values (isotropic: per-axis sums, D = m; else D = 2m).
class GmrfPseudolikModel final : public ObjectiveModel {
 public:
  GmrfPseudolikModel(const FieldSample& field, double gamma, bool isotropic);

  int dim() const override { return static_cast<int>(gram_.rows()); }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec& theta) const override;
  bool convex() const override { return true; }
  std::optional<double> third_deriv_bound(const DomainBox&) const override { return 0.0; }

  long component_count() const override { return rows_.rows(); }
  Vec component_gradient(long i, const Vec& theta) const override;
  Mat component_gradients(const Vec& theta) const override;

  // Closed-form minimizer (weighted least squares).
  Vec closed_form_minimizer() const;

 private:
  double gamma_;
  Mat rows_;   // n x D neighbor features
  Vec y_;
  Mat gram_;   // (1/n) sum x x^T
  Vec cross_;  // (1/n) sum x y
  DomainBox domain_;
};

// Ising pseudolikelihood on a torus: D = 2, covariate row (1, sum of
// neighbor spins), plus/minus binary family.
class IsingPseudolikModel final : public ObjectiveModel {
 public:
  explicit IsingPseudolikModel(const FieldSample& field);

  int dim() const override { return 2; }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec& theta) const override;
  bool convex() const override { return true; }
  std::optional<double> third_deriv_bound(const DomainBox&) const override;

  long component_count() const override { return n_; }
  Vec component_gradient(long i, const Vec& theta) const override;
  Mat component_gradients(const Vec& theta) const override;

  int lattice_dim() const { return m_; }

 private:
  struct Cell {
    double y;      // -1 or +1
    double s;      // neighbor sum
    double count;
  };

  long n_ = 0;
  int m_ = 0;
  std::vector<Cell> cells_;       // compressed (y, neighbor-sum) counts
  std::vector<double> site_y_;    // per-site data for component gradients
  std::vector<double> site_s_;
  ExpFam1P family_;
  DomainBox domain_;
};

// Fully visible Boltzmann machine pseudolikelihood over i.i.d. +-1 samples;
// D = d + d(d-1)/2 with the ThetaPacking layout. Weights allow fractional
// counts (exact-distribution inputs).
class BoltzmannPseudolikModel final : public ObjectiveModel {
 public:
  BoltzmannPseudolikModel(Mat samples, Vec weights = Vec());

  int dim() const override { return packing_.dim(); }
  const DomainBox& domain() const override { return domain_; }
  double value(const Vec& theta) const override;
  Vec gradient(const Vec& theta) const override;
  Mat hessian(const Vec& theta) const override;
  bool convex() const override { return true; }
  std::optional<double> third_deriv_bound(const DomainBox&) const override;

  long component_count() const override { return weighted_ ? 0 : samples_.rows(); }
  Vec component_gradient(long i, const Vec& theta) const override;

  const ThetaPacking& packing() const { return packing_; }
  int node_count() const { return static_cast<int>(samples_.cols()); }

  // Conditional P(y_j = +1 | y_{-j}) under theta.
  double conditional_probability(const Vec& theta, int j, const Vec& y) const;

 private:
  Vec sample_gradient(const Vec& b, const Mat& w, long i) const;

  Mat samples_;   // unique configurations (rows) after compression
  Vec weights_;   // matching counts (fractional allowed)
  Mat raw_;       // original samples for the component contract
  bool weighted_ = false;
  double total_weight_ = 0.0;
  ThetaPacking packing_{2};
  ExpFam1P family_;
  DomainBox domain_;
};

std::shared_ptr<GmrfPseudolikModel> gmrf_pseudolik(const FieldSample& field, double gamma,
                                                   bool isotropic);
std::shared_ptr<IsingPseudolikModel> ising_pseudolik(const FieldSample& field);
std::shared_ptr<BoltzmannPseudolikModel> boltzmann_pseudolik(const Mat& samples,
                                                             const Vec& weights = Vec());

// Field files: "<base>.json" header {m, L} plus "<base>.csv" site values in
// index order. Boltzmann samples: CSV of +-1 entries, columns y_1..y_d.
void save_field(const FieldSample& field, const std::string& base_path);
FieldSample load_field(const std::string& base_path);
void save_pm_samples(const Mat& samples, const std::string& path);
Mat load_pm_samples(const std::string& path);

}  // namespace gbv
