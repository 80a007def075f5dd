#ifndef WH_LINALG_HPP
#define WH_LINALG_HPP

#include <Eigen/Dense>

#include <string>

namespace wh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

Matrix kron(const Matrix& a, const Matrix& b);

// Cholesky factorization of a symmetric positive definite system matrix.
// Construction throws SingularSystem when a non-positive pivot shows up;
// `context` is appended to the message so callers can name the condition
// that was violated.
class SpdFactor {
public:
  SpdFactor() = default;
  explicit SpdFactor(const Matrix& a, const std::string& context = {});

  Eigen::Index size() const { return llt_.rows(); }
  Vector solve(const Vector& b) const { return llt_.solve(b); }
  Matrix solve_matrix(const Matrix& b) const { return llt_.solve(b); }
  Matrix solve_lower(const Matrix& b) const { return llt_.matrixL().solve(b); } // L⁻¹b
  double log_det() const;
  Matrix inverse() const;
  Vector inverse_diagonal() const;

private:
  Eigen::LLT<Matrix> llt_;
};

} // namespace wh

#endif
