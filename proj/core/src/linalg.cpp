#include "perfopt/linalg.hpp"

#include <cmath>
#include <limits>

#include "perfopt/errors.hpp"

namespace perfopt {

Matrix pseudoinverse(const Matrix& m) {
  if (m.size() == 0) throw InvalidInputError("pseudoinverse: empty matrix");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cutoff = 1e-10 * sv(0);
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

Matrix invert_small(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw InvalidInputError("invert_small: matrix must be square and non-empty");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smin = sv(sv.size() - 1);
  if (smin <= 0.0 || sv(0) / smin > 1e12)
    throw SingularMatrixError("invert_small: condition number exceeds 1e12");
  Eigen::VectorXd inv_sv = sv.cwiseInverse();
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Vector clip_gradient(const Vector& g, double max_norm) {
  if (max_norm <= 0.0) throw InvalidInputError("clip_gradient: max_norm must be positive");
  double n = g.norm();
  if (n > max_norm) return g * (max_norm / n);
  return g;
}

Vector project_box(const Vector& x, const Vector& lo, const Vector& hi) {
  if (x.size() != lo.size() || x.size() != hi.size())
    throw InvalidInputError("project_box: size mismatch");
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (lo[i] > hi[i]) throw InvalidInputError("project_box: lo > hi");
    out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
  }
  return out;
}

double condition_number(const Matrix& m) {
  if (m.size() == 0) throw InvalidInputError("condition_number: empty matrix");
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  double smin = sv(sv.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

}  // namespace perfopt
