#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace gbv {

EigenSystem jacobi_eigensystem(const Mat& sym, bool want_vectors) {
  const int d = static_cast<int>(sym.rows());
  if (sym.cols() != d) throw ArgumentError("jacobi_eigensystem: matrix not square");
  Mat a = 0.5 * (sym + sym.transpose());
  Mat v = Mat::Identity(d, d);

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double tol = 1e-15 * scale;
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += std::abs(a(p, q));
    if (off <= tol * d * d) break;

    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tol * 1e-2) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        // smaller-magnitude root of t^2 + 2*tau*t - 1 = 0
        const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                      : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (int k = 0; k < d; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        if (want_vectors) {
          for (int k = 0; k < d; ++k) {
            const double vkp = v(k, p);
            const double vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });

  EigenSystem out;
  out.values.resize(d);
  if (want_vectors) out.vectors.resize(d, d);
  for (int i = 0; i < d; ++i) {
    out.values(i) = a(order[i], order[i]);
    if (want_vectors) out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

double min_eigenvalue(const Mat& sym) { return jacobi_eigensystem(sym, false).values(0); }

std::optional<Mat> cholesky_lower(const Mat& sym) {
  Eigen::LLT<Mat> llt(sym);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return Mat(llt.matrixL());
}

double log_det_from_cholesky(const Mat& lower) {
  double s = 0.0;
  for (int i = 0; i < lower.rows(); ++i) s += std::log(lower(i, i));
  return 2.0 * s;
}

Mat sym_sqrt(const Mat& sym) {
  EigenSystem es = jacobi_eigensystem(sym);
  const double floor = -1e-10 * std::max(1.0, es.values.cwiseAbs().maxCoeff());
  Vec root = es.values;
  for (int i = 0; i < root.size(); ++i) {
    if (root(i) < floor) throw NumericalError("sym_sqrt: matrix has a negative eigenvalue");
    root(i) = std::sqrt(std::max(0.0, root(i)));
  }
  return es.vectors * root.asDiagonal() * es.vectors.transpose();
}

Mat sym_inv_sqrt(const Mat& sym) {
  EigenSystem es = jacobi_eigensystem(sym);
  Vec root = es.values;
  for (int i = 0; i < root.size(); ++i) {
    if (root(i) <= 0.0) throw NumericalError("sym_inv_sqrt: matrix is not positive definite");
    root(i) = 1.0 / std::sqrt(root(i));
  }
  return es.vectors * root.asDiagonal() * es.vectors.transpose();
}

}  // namespace gbv
