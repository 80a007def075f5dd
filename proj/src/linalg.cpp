#include "wh/linalg.hpp"

#include "wh/error.hpp"

#include <cmath>

namespace wh {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

SpdFactor::SpdFactor(const Matrix& a, const std::string& context) : llt_(a) {
  bool ok = llt_.info() == Eigen::Success;
  if (ok) {
    const auto diag = llt_.matrixLLT().diagonal();
    ok = diag.allFinite() && (diag.array() > 0.0).all();
  }
  if (!ok) {
    std::string msg = "singular system: matrix is not positive definite";
    if (!context.empty()) msg += " (" + context + ")";
    throw SingularSystem(msg);
  }
}

double SpdFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Matrix SpdFactor::inverse() const {
  return llt_.solve(Matrix::Identity(size(), size()));
}

Vector SpdFactor::inverse_diagonal() const {
  // diag(A⁻¹)_i = ‖L⁻¹ e_i‖², column by column via a triangular solve.
  const Matrix linv = llt_.matrixL().solve(Matrix::Identity(size(), size()));
  return linv.colwise().squaredNorm().transpose();
}

} // namespace wh
