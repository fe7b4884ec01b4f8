#include "cox.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "../errors.hpp"
#include "../io.hpp"

namespace gbv {

CoxPartialModel::CoxPartialModel(SurvivalDataset data) : data_(std::move(data)) {
  const long n = data_.X.rows();
  const int d = static_cast<int>(data_.X.cols());
  if (n < 1 || d < 1) throw ArgumentError("cox: empty dataset");
  if (data_.time.size() != n || static_cast<long>(data_.event.size()) != n)
    throw ArgumentError("cox: time/event/X size mismatch");
  if (!data_.time.allFinite() || !data_.X.allFinite()) throw ArgumentError("cox: data has NaN/Inf");
  for (long i = 0; i < n; ++i) {
    if (data_.time(i) < 0.0) throw ArgumentError("cox: times must be >= 0");
    if (data_.event[i] != 0 && data_.event[i] != 1)
      throw ArgumentError("cox: event indicators must be 0 or 1");
    if (data_.event[i] == 1) ++event_count_;
  }
  if (event_count_ == 0) throw ArgumentError("cox: dataset has zero events");

  // Identifiability needs non-degenerate covariates (Var(a^T X) > 0).
  const Vec xbar = data_.X.colwise().mean();
  const Mat centered = data_.X.rowwise() - xbar.transpose();
  const Mat cov = centered.transpose() * centered / static_cast<double>(n);
  if (min_eigenvalue(cov) <= 1e-10)
    throw ArgumentError("cox: covariates degenerate (some direction has zero variance)");

  desc_order_.resize(n);
  std::iota(desc_order_.begin(), desc_order_.end(), 0);
  std::stable_sort(desc_order_.begin(), desc_order_.end(),
                   [this](long a, long b) { return data_.time(a) > data_.time(b); });
  for (long r = 0; r + 1 < n; ++r) {
    if (data_.time(desc_order_[r]) == data_.time(desc_order_[r + 1])) {
      has_ties_ = true;  // Breslow convention applies
      break;
    }
  }
  if (has_ties_)
    std::cerr << "warning: tied times; risk sets follow the Breslow convention\n";

  mean_xz_ = Vec::Zero(d);
  for (long i = 0; i < n; ++i) {
    if (data_.event[i] == 1) mean_xz_ += data_.X.row(i).transpose();
  }
  mean_xz_ /= static_cast<double>(n);
  domain_ = DomainBox::unbounded(d);
}

void CoxPartialModel::sweep(const Vec& theta, int order, double* value, Vec* grad, Mat* hess,
                            Mat* event_means) const {
  const long n = data_.X.rows();
  const int d = dim();

  // Running risk-set sums scaled by e^{-shift}: s0 = sum e^{eta - shift},
  // s1 = sum e^{eta - shift} x, s2 = sum e^{eta - shift} x x^T.
  double shift = kNegInf;
  double s0 = 0.0;
  Vec s1 = Vec::Zero(d);
  Mat s2 = order >= 2 ? Mat::Zero(d, d) : Mat();

  double val = 0.0;
  Vec g = Vec::Zero(d);
  Mat h = order >= 2 ? Mat::Zero(d, d) : Mat();

  long r = 0;
  while (r < n) {
    // add the whole tie group before evaluating its events
    long group_end = r;
    const double t = data_.time(desc_order_[r]);
    while (group_end < n && data_.time(desc_order_[group_end]) == t) ++group_end;
    for (long q = r; q < group_end; ++q) {
      const long i = desc_order_[q];
      const double eta = data_.X.row(i).dot(theta);
      if (eta > shift) {
        const double rescale = std::isfinite(shift) ? std::exp(shift - eta) : 0.0;
        s0 *= rescale;
        s1 *= rescale;
        if (order >= 2) s2 *= rescale;
        shift = eta;
      }
      const double w = std::exp(eta - shift);
      s0 += w;
      if (order >= 1) {
        const Vec x = data_.X.row(i).transpose();
        s1 += w * x;
        if (order >= 2) s2 += w * (x * x.transpose());
      }
    }
    for (long q = r; q < group_end; ++q) {
      const long i = desc_order_[q];
      if (data_.event[i] != 1) continue;
      val += shift + std::log(s0) - std::log(static_cast<double>(n));
      if (order >= 1) {
        const Vec mean = s1 / s0;
        g += mean - data_.X.row(i).transpose();
        if (event_means) event_means->row(i) = mean;
        if (order >= 2) h += s2 / s0 - mean * mean.transpose();
      }
    }
    r = group_end;
  }

  if (value) *value = val / static_cast<double>(n) - theta.dot(mean_xz_);
  if (grad) *grad = g / static_cast<double>(n);
  if (hess) {
    h /= static_cast<double>(n);
    *hess = 0.5 * (h + h.transpose());
  }
}

double CoxPartialModel::value(const Vec& theta) const {
  check_theta(theta);
  double v = 0.0;
  sweep(theta, 0, &v, nullptr, nullptr, nullptr);
  return v;
}

Vec CoxPartialModel::gradient(const Vec& theta) const {
  check_theta(theta);
  Vec g;
  sweep(theta, 1, nullptr, &g, nullptr, nullptr);
  return g;
}

Mat CoxPartialModel::hessian(const Vec& theta) const {
  check_theta(theta);
  Mat h;
  sweep(theta, 2, nullptr, nullptr, &h, nullptr);
  return h;
}

Vec CoxPartialModel::component_gradient(long i, const Vec& theta) const {
  if (i < 0 || i >= data_.X.rows()) throw ArgumentError("cox: component index out of range");
  return component_gradients(theta).row(i);
}

Mat CoxPartialModel::component_gradients(const Vec& theta) const {
  check_theta(theta);
  const long n = data_.X.rows();
  Mat means = Mat::Zero(n, dim());
  Vec g;
  sweep(theta, 1, nullptr, &g, nullptr, &means);
  Mat out = Mat::Zero(n, dim());
  for (long i = 0; i < n; ++i) {
    if (data_.event[i] == 1) out.row(i) = means.row(i) - data_.X.row(i);
  }
  return out;
}

std::shared_ptr<CoxPartialModel> cox_partial_model(SurvivalDataset data) {
  return std::make_shared<CoxPartialModel>(std::move(data));
}

SurvivalDataset read_survival_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int tc = table.col_index("time");
  const int ec = table.col_index("event");
  if (tc < 0 || ec < 0) throw IoError("survival CSV needs 'time' and 'event' columns: " + path);
  const int d = static_cast<int>(table.columns.size()) - 2;
  if (d < 1) throw IoError("survival CSV needs at least one covariate column: " + path);

  SurvivalDataset out;
  out.time = table.values.col(tc);
  out.event.resize(table.rows());
  out.X.resize(table.rows(), d);
  for (long i = 0; i < table.rows(); ++i) {
    const double e = table.values(i, ec);
    if (e != 0.0 && e != 1.0) throw IoError("survival CSV event values must be 0/1: " + path);
    out.event[i] = static_cast<int>(e);
  }
  for (int j = 0; j < d; ++j) {
    const std::string name = "x_" + std::to_string(j + 1);
    const int c = table.col_index(name);
    if (c < 0) throw IoError("survival CSV missing column '" + name + "': " + path);
    out.X.col(j) = table.values.col(c);
  }
  return out;
}

void write_survival_csv(const std::string& path, const SurvivalDataset& data) {
  std::vector<std::string> cols{"time", "event"};
  for (int j = 0; j < data.X.cols(); ++j) cols.push_back("x_" + std::to_string(j + 1));
  Mat values(data.X.rows(), data.X.cols() + 2);
  values.col(0) = data.time;
  for (long i = 0; i < data.X.rows(); ++i) values(i, 1) = data.event[i];
  values.rightCols(data.X.cols()) = data.X;
  write_csv(path, cols, values);
}

}  // namespace gbv
