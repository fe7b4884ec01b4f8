#include "pseudolik.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "../errors.hpp"
#include "../io.hpp"

namespace gbv {

TorusLattice TorusLattice::make(int m, int L) {
  if (m < 1) throw ArgumentError("TorusLattice: m must be >= 1");
  if (L < 3) throw ArgumentError("TorusLattice: L must be >= 3 so neighbors are distinct");
  TorusLattice lat;
  lat.m = m;
  lat.L = L;
  const long n = lat.sites();
  lat.neighbors.resize(n * 2 * m);
  for (long site = 0; site < n; ++site) {
    long rem = site;
    long stride = 1;
    for (int a = 0; a < m; ++a) {
      const int coord = static_cast<int>(rem % L);
      rem /= L;
      const int minus = (coord + L - 1) % L;
      const int plus = (coord + 1) % L;
      lat.neighbors[site * 2 * m + 2 * a] = site + (minus - coord) * stride;
      lat.neighbors[site * 2 * m + 2 * a + 1] = site + (plus - coord) * stride;
      stride *= L;
    }
  }
  return lat;
}

long TorusLattice::sites() const {
  long n = 1;
  for (int a = 0; a < m; ++a) n *= L;
  return n;
}

std::vector<int> TorusLattice::coords(long site) const {
  std::vector<int> c(m);
  for (int a = 0; a < m; ++a) {
    c[a] = static_cast<int>(site % L);
    site /= L;
  }
  return c;
}

long TorusLattice::index(const std::vector<int>& c) const {
  if (static_cast<int>(c.size()) != m) throw ArgumentError("TorusLattice: coordinate size mismatch");
  long idx = 0;
  long stride = 1;
  for (int a = 0; a < m; ++a) {
    const int v = ((c[a] % L) + L) % L;
    idx += v * stride;
    stride *= L;
  }
  return idx;
}

bool FieldSample::is_pm_one() const {
  for (long i = 0; i < values.size(); ++i) {
    if (values(i) != 1.0 && values(i) != -1.0) return false;
  }
  return true;
}

double FieldSample::neighbor_sum(long site) const {
  double s = 0.0;
  for (int slot = 0; slot < 2 * lattice.m; ++slot) s += values(lattice.neighbor(site, slot));
  return s;
}

ThetaPacking::ThetaPacking(int node_count) : d(node_count) {
  if (d < 2) throw ArgumentError("ThetaPacking: need at least 2 nodes");
}

int ThetaPacking::slot(int i, int j) const {
  if (!(0 <= i && i < j && j < d)) throw ArgumentError("ThetaPacking: slot requires 0 <= i < j < d");
  // row-major upper triangle offset after the d bias slots
  return d + i * d - i * (i + 1) / 2 + (j - i - 1);
}

Vec ThetaPacking::pack(const Vec& b, const Mat& A) const {
  if (b.size() != d || A.rows() != d || A.cols() != d)
    throw ArgumentError("ThetaPacking: pack dimension mismatch");
  Vec theta(dim());
  theta.head(d) = b;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) theta(slot(i, j)) = A(i, j);
  return theta;
}

void ThetaPacking::unpack(const Vec& theta, Vec* b, Mat* A) const {
  if (theta.size() != dim()) throw ArgumentError("ThetaPacking: unpack dimension mismatch");
  *b = theta.head(d);
  *A = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) (*A)(i, j) = theta(slot(i, j));
}

double conditional_probability_plus(double eta) {
  // e^eta / (e^eta + e^-eta) = 1 / (1 + e^{-2 eta})
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-2.0 * eta));
  const double e = std::exp(2.0 * eta);
  return e / (1.0 + e);
}

double ising_conditional_probability(const Vec& theta, const FieldSample& field, long site) {
  if (theta.size() != 2) throw ArgumentError("ising conditional: theta must be (theta_1, theta_2)");
  if (site < 0 || site >= field.lattice.sites()) throw ArgumentError("ising conditional: bad site");
  return conditional_probability_plus(theta(0) + theta(1) * field.neighbor_sum(site));
}

GmrfPseudolikModel::GmrfPseudolikModel(const FieldSample& field, double gamma, bool isotropic)
    : gamma_(gamma) {
  if (!(gamma > 0.0)) throw ArgumentError("gmrf_pseudolik: gamma must be > 0");
  if (!field.values.allFinite()) throw ArgumentError("gmrf_pseudolik: field has NaN/Inf");
  const long n = field.lattice.sites();
  if (field.values.size() != n) throw ArgumentError("gmrf_pseudolik: field size mismatch");
  const int m = field.lattice.m;
  const int d = isotropic ? m : 2 * m;

  rows_.resize(n, d);
  y_ = field.values;
  for (long i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      const double lo = field.values(field.lattice.neighbor(i, 2 * a));
      const double hi = field.values(field.lattice.neighbor(i, 2 * a + 1));
      if (isotropic) {
        rows_(i, a) = lo + hi;
      } else {
        rows_(i, 2 * a) = lo;
        rows_(i, 2 * a + 1) = hi;
      }
    }
  }
  gram_ = rows_.transpose() * rows_ / static_cast<double>(n);
  gram_ = 0.5 * (gram_ + gram_.transpose());
  cross_ = rows_.transpose() * y_ / static_cast<double>(n);
  domain_ = DomainBox::unbounded(d);
}

double GmrfPseudolikModel::value(const Vec& theta) const {
  check_theta(theta);
  return gamma_ * (0.5 * theta.dot(gram_ * theta) - theta.dot(cross_));
}

Vec GmrfPseudolikModel::gradient(const Vec& theta) const {
  check_theta(theta);
  return gamma_ * (gram_ * theta - cross_);
}

Mat GmrfPseudolikModel::hessian(const Vec& theta) const {
  check_theta(theta);
  return gamma_ * gram_;
}

Vec GmrfPseudolikModel::component_gradient(long i, const Vec& theta) const {
  if (i < 0 || i >= rows_.rows()) throw ArgumentError("gmrf: component index out of range");
  check_theta(theta);
  const Vec x = rows_.row(i).transpose();
  return gamma_ * (x.dot(theta) - y_(i)) * x;
}

Mat GmrfPseudolikModel::component_gradients(const Vec& theta) const {
  check_theta(theta);
  const Vec resid = rows_ * theta - y_;
  Mat g = rows_;
  g.array().colwise() *= resid.array();
  return gamma_ * g;
}

Vec GmrfPseudolikModel::closed_form_minimizer() const {
  const auto chol = cholesky_lower(gram_);
  if (!chol) throw NumericalError("gmrf: neighbor Gram matrix is singular");
  return chol->transpose().triangularView<Eigen::Upper>().solve(
      chol->triangularView<Eigen::Lower>().solve(cross_));
}

IsingPseudolikModel::IsingPseudolikModel(const FieldSample& field) : family_(expfam_plusminus()) {
  if (!field.is_pm_one()) throw ArgumentError("ising_pseudolik: field values must be +-1");
  n_ = field.lattice.sites();
  m_ = field.lattice.m;
  if (field.values.size() != n_) throw ArgumentError("ising_pseudolik: field size mismatch");

  site_y_.resize(n_);
  site_s_.resize(n_);
  std::map<std::pair<int, int>, double> counts;  // (y, neighbor sum) -> count
  for (long i = 0; i < n_; ++i) {
    site_y_[i] = field.values(i);
    site_s_[i] = field.neighbor_sum(i);
    counts[{static_cast<int>(site_y_[i]), static_cast<int>(site_s_[i])}] += 1.0;
  }
  cells_.reserve(counts.size());
  for (const auto& [key, count] : counts)
    cells_.push_back({static_cast<double>(key.first), static_cast<double>(key.second), count});
  domain_ = DomainBox::unbounded(2);
}

double IsingPseudolikModel::value(const Vec& theta) const {
  check_theta(theta);
  double acc = 0.0;
  for (const auto& cell : cells_) {
    const double eta = theta(0) + theta(1) * cell.s;
    acc += cell.count * (family_.kappa(eta) - cell.y * eta);
  }
  return acc / static_cast<double>(n_);
}

Vec IsingPseudolikModel::gradient(const Vec& theta) const {
  check_theta(theta);
  Vec g = Vec::Zero(2);
  for (const auto& cell : cells_) {
    const double eta = theta(0) + theta(1) * cell.s;
    const double r = family_.dkappa(eta) - cell.y;
    g(0) += cell.count * r;
    g(1) += cell.count * r * cell.s;
  }
  return g / static_cast<double>(n_);
}

Mat IsingPseudolikModel::hessian(const Vec& theta) const {
  check_theta(theta);
  Mat h = Mat::Zero(2, 2);
  for (const auto& cell : cells_) {
    const double eta = theta(0) + theta(1) * cell.s;
    const double k2 = family_.d2kappa(eta);
    h(0, 0) += cell.count * k2;
    h(0, 1) += cell.count * k2 * cell.s;
    h(1, 1) += cell.count * k2 * cell.s * cell.s;
  }
  h(1, 0) = h(0, 1);
  return h / static_cast<double>(n_);
}

std::optional<double> IsingPseudolikModel::third_deriv_bound(const DomainBox&) const {
  // |kappa'''| <= 2 and |X| <= (1, 2m) componentwise.
  const double cap = 2.0 * m_;
  double fro2 = 0.0;
  const double mags[2] = {1.0, cap};
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        const double b = 2.0 * mags[j] * mags[k] * mags[l];
        fro2 += b * b;
      }
  return std::sqrt(fro2);
}

Vec IsingPseudolikModel::component_gradient(long i, const Vec& theta) const {
  if (i < 0 || i >= n_) throw ArgumentError("ising: component index out of range");
  check_theta(theta);
  const double eta = theta(0) + theta(1) * site_s_[i];
  const double r = family_.dkappa(eta) - site_y_[i];
  Vec g(2);
  g << r, r * site_s_[i];
  return g;
}

Mat IsingPseudolikModel::component_gradients(const Vec& theta) const {
  check_theta(theta);
  Mat g(n_, 2);
  for (long i = 0; i < n_; ++i) {
    const double eta = theta(0) + theta(1) * site_s_[i];
    const double r = family_.dkappa(eta) - site_y_[i];
    g(i, 0) = r;
    g(i, 1) = r * site_s_[i];
  }
  return g;
}

BoltzmannPseudolikModel::BoltzmannPseudolikModel(Mat samples, Vec weights)
    : raw_(samples), packing_(std::max<int>(2, static_cast<int>(samples.cols()))),
      family_(expfam_plusminus()) {
  const long n = samples.rows();
  const int d = static_cast<int>(samples.cols());
  if (n < 1) throw ArgumentError("boltzmann_pseudolik: need at least one sample");
  if (d < 2) throw ArgumentError("boltzmann_pseudolik: need d >= 2 nodes");
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      if (samples(i, j) != 1.0 && samples(i, j) != -1.0)
        throw ArgumentError("boltzmann_pseudolik: sample values must be +-1");

  weighted_ = weights.size() > 0;
  if (weighted_) {
    if (weights.size() != n) throw ArgumentError("boltzmann_pseudolik: weights size mismatch");
    if ((weights.array() < 0.0).any()) throw ArgumentError("boltzmann_pseudolik: negative weight");
    samples_ = std::move(samples);
    weights_ = std::move(weights);
  } else if (d <= 20) {
    // compress repeated configurations; evaluation cost becomes O(unique * d)
    std::map<std::uint32_t, double> counts;
    for (long i = 0; i < n; ++i) {
      std::uint32_t key = 0;
      for (int j = 0; j < d; ++j)
        if (samples(i, j) > 0.0) key |= (1u << j);
      counts[key] += 1.0;
    }
    samples_.resize(static_cast<long>(counts.size()), d);
    weights_.resize(static_cast<long>(counts.size()));
    long r = 0;
    for (const auto& [key, count] : counts) {
      for (int j = 0; j < d; ++j) samples_(r, j) = (key & (1u << j)) ? 1.0 : -1.0;
      weights_(r) = count;
      ++r;
    }
  } else {
    samples_ = std::move(samples);
    weights_ = Vec::Ones(n);
  }
  total_weight_ = weights_.sum();
  if (!(total_weight_ > 0.0)) throw ArgumentError("boltzmann_pseudolik: total weight must be > 0");
  domain_ = DomainBox::unbounded(packing_.dim());
}

Vec BoltzmannPseudolikModel::sample_gradient(const Vec& b, const Mat& w, long i) const {
  const int d = node_count();
  const Vec y = samples_.row(i).transpose();
  const Vec eta = b + w * y;  // eta_j = b_j + sum_{k != j} A_(kj) y_k
  Vec g = Vec::Zero(dim());
  for (int j = 0; j < d; ++j) {
    const double r = family_.dkappa(eta(j)) - y(j);
    g(j) += r;
    for (int k = 0; k < d; ++k) {
      if (k == j) continue;
      g(packing_.slot(std::min(j, k), std::max(j, k))) += r * y(k);
    }
  }
  return g;
}

double BoltzmannPseudolikModel::value(const Vec& theta) const {
  check_theta(theta);
  Vec b;
  Mat a;
  packing_.unpack(theta, &b, &a);
  const Mat w = a + a.transpose();
  double acc = 0.0;
  for (long i = 0; i < samples_.rows(); ++i) {
    const Vec y = samples_.row(i).transpose();
    const Vec eta = b + w * y;
    double per = 0.0;
    for (int j = 0; j < node_count(); ++j) per += family_.kappa(eta(j)) - y(j) * eta(j);
    acc += weights_(i) * per;
  }
  return acc / total_weight_;
}

Vec BoltzmannPseudolikModel::gradient(const Vec& theta) const {
  check_theta(theta);
  Vec b;
  Mat a;
  packing_.unpack(theta, &b, &a);
  const Mat w = a + a.transpose();
  Vec g = Vec::Zero(dim());
  for (long i = 0; i < samples_.rows(); ++i) g += weights_(i) * sample_gradient(b, w, i);
  return g / total_weight_;
}

Mat BoltzmannPseudolikModel::hessian(const Vec& theta) const {
  check_theta(theta);
  Vec b;
  Mat a;
  packing_.unpack(theta, &b, &a);
  const Mat w = a + a.transpose();
  const int d = node_count();
  Mat h = Mat::Zero(dim(), dim());
  Vec phi = Vec::Zero(dim());
  for (long i = 0; i < samples_.rows(); ++i) {
    const Vec y = samples_.row(i).transpose();
    const Vec eta = b + w * y;
    for (int j = 0; j < d; ++j) {
      phi.setZero();
      phi(j) = 1.0;
      for (int k = 0; k < d; ++k) {
        if (k == j) continue;
        phi(packing_.slot(std::min(j, k), std::max(j, k))) = y(k);
      }
      h += (weights_(i) * family_.d2kappa(eta(j))) * (phi * phi.transpose());
    }
  }
  h /= total_weight_;
  return 0.5 * (h + h.transpose());
}

std::optional<double> BoltzmannPseudolikModel::third_deriv_bound(const DomainBox&) const {
  // |kappa'''| <= 2 and |phi entries| <= 1: each tensor component is at
  // most 2d, summed over D^3 components.
  const double per = 2.0 * node_count();
  const double dd = static_cast<double>(dim());
  return per * std::sqrt(dd * dd * dd);
}

Vec BoltzmannPseudolikModel::component_gradient(long i, const Vec& theta) const {
  if (weighted_) throw ArgumentError("boltzmann: weighted model has no per-sample components");
  if (i < 0 || i >= raw_.rows()) throw ArgumentError("boltzmann: component index out of range");
  check_theta(theta);
  Vec b;
  Mat a;
  packing_.unpack(theta, &b, &a);
  const Mat w = a + a.transpose();
  const int d = node_count();
  const Vec y = raw_.row(i).transpose();
  const Vec eta = b + w * y;
  Vec g = Vec::Zero(dim());
  for (int j = 0; j < d; ++j) {
    const double r = family_.dkappa(eta(j)) - y(j);
    g(j) += r;
    for (int k = 0; k < d; ++k) {
      if (k == j) continue;
      g(packing_.slot(std::min(j, k), std::max(j, k))) += r * y(k);
    }
  }
  return g;
}

double BoltzmannPseudolikModel::conditional_probability(const Vec& theta, int j, const Vec& y) const {
  check_theta(theta);
  if (j < 0 || j >= node_count()) throw ArgumentError("boltzmann: node index out of range");
  Vec b;
  Mat a;
  packing_.unpack(theta, &b, &a);
  const Mat w = a + a.transpose();
  double eta = b(j);
  for (int k = 0; k < node_count(); ++k) {
    if (k != j) eta += w(j, k) * y(k);
  }
  return conditional_probability_plus(eta);
}

std::shared_ptr<GmrfPseudolikModel> gmrf_pseudolik(const FieldSample& field, double gamma,
                                                   bool isotropic) {
  return std::make_shared<GmrfPseudolikModel>(field, gamma, isotropic);
}

std::shared_ptr<IsingPseudolikModel> ising_pseudolik(const FieldSample& field) {
  return std::make_shared<IsingPseudolikModel>(field);
}

std::shared_ptr<BoltzmannPseudolikModel> boltzmann_pseudolik(const Mat& samples, const Vec& weights) {
  return std::make_shared<BoltzmannPseudolikModel>(samples, weights);
}

void save_field(const FieldSample& field, const std::string& base_path) {
  nlohmann::json header;
  header["m"] = field.lattice.m;
  header["L"] = field.lattice.L;
  std::ofstream hout(base_path + ".json");
  if (!hout) throw IoError("cannot write field header: " + base_path + ".json");
  hout << header.dump(2) << "\n";
  write_csv(base_path + ".csv", {"value"}, field.values);
}

FieldSample load_field(const std::string& base_path) {
  std::ifstream hin(base_path + ".json");
  if (!hin) throw IoError("cannot open field header: " + base_path + ".json");
  nlohmann::json header = nlohmann::json::parse(hin, nullptr, false);
  if (header.is_discarded() || !header.contains("m") || !header.contains("L"))
    throw IoError("malformed field header: " + base_path + ".json");

  FieldSample field;
  field.lattice = TorusLattice::make(header["m"].get<int>(), header["L"].get<int>());
  const CsvTable table = read_csv(base_path + ".csv");
  if (table.values.cols() != 1) throw IoError("field CSV must have a single 'value' column");
  if (table.values.rows() != field.lattice.sites())
    throw IoError("field CSV row count does not match L^m");
  field.values = table.values.col(0);
  return field;
}

void save_pm_samples(const Mat& samples, const std::string& path) {
  std::vector<std::string> cols;
  for (int j = 0; j < samples.cols(); ++j) cols.push_back("y_" + std::to_string(j + 1));
  write_csv(path, cols, samples);
}

Mat load_pm_samples(const std::string& path) {
  const CsvTable table = read_csv(path);
  return table.values;
}

}  // namespace gbv
