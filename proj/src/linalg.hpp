#pragma once

#include <Eigen/Dense>
#include <optional>

namespace gbv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Cyclic Jacobi eigensolver for symmetric matrices with a fixed sweep order,
// so results are identical across runs and thread counts. Eigenvalues are
// returned in ascending order; eigenvectors (columns) match that order.
struct EigenSystem {
  Vec values;
  Mat vectors;
};

EigenSystem jacobi_eigensystem(const Mat& sym, bool want_vectors = true);

double min_eigenvalue(const Mat& sym);

// Lower Cholesky factor, or nullopt when the matrix is not positive definite.
std::optional<Mat> cholesky_lower(const Mat& sym);

double log_det_from_cholesky(const Mat& lower);

// Symmetric PSD square root / inverse square root via the Jacobi eigensystem.
// Throws NumericalError when an eigenvalue is non-positive (inverse case)
// or negative beyond rounding (square root case).
Mat sym_sqrt(const Mat& sym);
Mat sym_inv_sqrt(const Mat& sym);

}  // namespace gbv
