// Small dense linear algebra kernels shared by the estimators and optimizers.
#pragma once

#include <Eigen/Dense>

namespace perfopt {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Moore-Penrose pseudoinverse via SVD. Singular values below
// 1e-10 * sigma_max are treated as zero.
Matrix pseudoinverse(const Matrix& m);

// Inverse of a small square matrix. Throws SingularMatrixError when the
// condition number exceeds 1e12.
Matrix invert_small(const Matrix& m);

// Largest singular value.
double spectral_norm(const Matrix& m);

// If ||g|| > max_norm, returns g / ||g|| (unit length), otherwise g unchanged.
// This is deliberately not a rescale to max_norm.
Vector clip_gradient(const Vector& g, double max_norm);

// Componentwise clamp of x to [lo, hi]. Throws InvalidInputError on size
// mismatch or lo[i] > hi[i].
Vector project_box(const Vector& x, const Vector& lo, const Vector& hi);

// Condition number estimate (ratio of extreme singular values; inf when the
// smallest is zero).
double condition_number(const Matrix& m);

}  // namespace perfopt
