#include "glm.hpp"

#include <cmath>

#include "../errors.hpp"
#include "../io.hpp"

namespace gbv {

GLMModel::GLMModel(GLMDataset data) : data_(std::move(data)) {
  const long n = data_.X.rows();
  const int d = static_cast<int>(data_.X.cols());
  if (n < 1) throw ArgumentError("glm: dataset must be nonempty");
  if (data_.y.size() != n) throw ArgumentError("glm: X/y row mismatch");
  if (!data_.X.allFinite() || !data_.y.allFinite()) throw ArgumentError("glm: data has NaN/Inf");

  // Identifiability: smallest singular value of X/sqrt(n).
  const Mat gram = data_.X.transpose() * data_.X / static_cast<double>(n);
  if (min_eigenvalue(gram) <= 1e-20)  // sigma_min = sqrt(lambda_min) <= 1e-10
    throw ArgumentError("covariates linearly dependent: theta not identifiable");

  s_y_.resize(n);
  for (long i = 0; i < n; ++i) s_y_(i) = data_.family.suff(data_.y(i));
  domain_ = DomainBox::unbounded(d);
}

Vec GLMModel::etas(const Vec& theta) const { return data_.X * theta; }

double GLMModel::value(const Vec& theta) const {
  check_theta(theta);
  const Vec eta = etas(theta);
  double acc = 0.0;
  for (long i = 0; i < eta.size(); ++i) acc += data_.family.kappa(eta(i)) - s_y_(i) * eta(i);
  return acc / static_cast<double>(eta.size());
}

Vec GLMModel::gradient(const Vec& theta) const {
  check_theta(theta);
  const Vec eta = etas(theta);
  Vec g = Vec::Zero(dim());
  for (long i = 0; i < eta.size(); ++i)
    g += (data_.family.dkappa(eta(i)) - s_y_(i)) * data_.X.row(i).transpose();
  return g / static_cast<double>(eta.size());
}

Mat GLMModel::hessian(const Vec& theta) const {
  check_theta(theta);
  const Vec eta = etas(theta);
  Mat h = Mat::Zero(dim(), dim());
  for (long i = 0; i < eta.size(); ++i) {
    const Vec x = data_.X.row(i).transpose();
    h += data_.family.d2kappa(eta(i)) * (x * x.transpose());
  }
  h /= static_cast<double>(eta.size());
  return 0.5 * (h + h.transpose());
}

std::optional<double> GLMModel::third_deriv_bound(const DomainBox& box) const {
  if (!data_.family.d3_sup_on || !box.bounded()) return std::nullopt;
  // Range of eta over the box: per observation, interval arithmetic on theta^T x_i.
  double eta_lo = 0.0, eta_hi = 0.0;
  bool first = true;
  const int d = dim();
  for (long i = 0; i < data_.X.rows(); ++i) {
    double lo = 0.0, hi = 0.0;
    for (int j = 0; j < d; ++j) {
      const double x = data_.X(i, j);
      const double a = box.lower(j) * x;
      const double b = box.upper(j) * x;
      lo += std::min(a, b);
      hi += std::max(a, b);
    }
    eta_lo = first ? lo : std::min(eta_lo, lo);
    eta_hi = first ? hi : std::max(eta_hi, hi);
    first = false;
  }
  const double ksup = data_.family.d3_sup_on(eta_lo, eta_hi);
  if (!std::isfinite(ksup)) return std::nullopt;

  // |f'''_{jkl}| <= ksup * max_i |x_ij x_ik x_il| componentwise.
  double fro2 = 0.0;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      for (int l = 0; l < d; ++l) {
        double m = 0.0;
        for (long i = 0; i < data_.X.rows(); ++i)
          m = std::max(m, std::abs(data_.X(i, j) * data_.X(i, k) * data_.X(i, l)));
        fro2 += (ksup * m) * (ksup * m);
      }
    }
  }
  return std::sqrt(fro2);
}

Vec GLMModel::component_gradient(long i, const Vec& theta) const {
  if (i < 0 || i >= data_.X.rows()) throw ArgumentError("glm: component index out of range");
  check_theta(theta);
  const double eta = data_.X.row(i).dot(theta);
  return (data_.family.dkappa(eta) - s_y_(i)) * data_.X.row(i).transpose();
}

Mat GLMModel::component_gradients(const Vec& theta) const {
  check_theta(theta);
  const Vec eta = etas(theta);
  Mat g(data_.X.rows(), dim());
  for (long i = 0; i < eta.size(); ++i)
    g.row(i) = (data_.family.dkappa(eta(i)) - s_y_(i)) * data_.X.row(i);
  return g;
}

std::shared_ptr<GLMModel> build_glm(GLMDataset data) { return std::make_shared<GLMModel>(std::move(data)); }

GLMDataset read_glm_csv(const std::string& path, const ExpFam1P& family) {
  const CsvTable table = read_csv(path);
  const int yc = table.col_index("y");
  if (yc < 0) throw IoError("GLM CSV missing 'y' column: " + path);
  const int d = static_cast<int>(table.columns.size()) - 1;
  if (d < 1) throw IoError("GLM CSV needs at least one covariate column: " + path);
  GLMDataset out{Mat(table.rows(), d), Vec(table.rows()), family};
  for (int j = 0; j < d; ++j) {
    const std::string name = "x_" + std::to_string(j + 1);
    const int c = table.col_index(name);
    if (c < 0) throw IoError("GLM CSV missing column '" + name + "': " + path);
    out.X.col(j) = table.values.col(c);
  }
  out.y = table.values.col(yc);
  return out;
}

void write_glm_csv(const std::string& path, const GLMDataset& data) {
  std::vector<std::string> cols;
  for (int j = 0; j < data.X.cols(); ++j) cols.push_back("x_" + std::to_string(j + 1));
  cols.push_back("y");
  Mat values(data.X.rows(), data.X.cols() + 1);
  values.leftCols(data.X.cols()) = data.X;
  values.col(data.X.cols()) = data.y;
  write_csv(path, cols, values);
}

}  // namespace gbv
