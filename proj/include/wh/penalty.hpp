#ifndef WH_PENALTY_HPP
#define WH_PENALTY_HPP

#include "wh/linalg.hpp"

#include <memory>
#include <vector>

namespace wh {

// (n-q) x n forward difference matrix of order q.
Matrix difference_matrix(int n, int q);

// Eigendecomposition of DᵀD for one grid axis. Eigenvalues are ascending;
// the q structural zeros are stored as exact zeros.
struct AxisSpectrum {
  int n = 0;
  int q = 0;
  Matrix diff;    // D, (n-q)×n
  Matrix gram;    // DᵀD
  Vector values;  // ascending
  Matrix vectors; // orthonormal columns matching `values`
};

// Spectra are computed once per (n, q) and shared process-wide.
std::shared_ptr<const AxisSpectrum> axis_spectrum(int n, int q);

// Relative threshold under which combined eigenvalues count as zero.
inline constexpr double kEigenZeroTol = 1e-10;

class PenaltyOperator;

// Grid dimensions and difference orders, without smoothing parameters.
// Vectorization is column stacking of the (x, z) table: x varies fastest,
// so cell (i, j) sits at index j * nx + i.
class PenaltyTemplate {
public:
  static PenaltyTemplate one_d(int n, int q);
  static PenaltyTemplate two_d(int nx, int nz, int qx, int qz);

  int dim() const { return static_cast<int>(axes_.size()); }
  int size() const;
  int nx() const { return axes_[0]->n; }
  int nz() const { return dim() == 2 ? axes_[1]->n : 1; }
  int qx() const { return axes_[0]->q; }
  int qz() const { return dim() == 2 ? axes_[1]->q : 1; }
  const AxisSpectrum& axis(int k) const { return *axes_.at(k); }

  // Unit-lambda penalty along axis k, embedded in the full grid:
  // 1D: DᵀD; 2D: I ⊗ DxᵀDx (k = 0) and DzᵀDz ⊗ I (k = 1).
  const Matrix& component(int k) const { return components_->at(k); }

  // Penalized combined eigenvalues for the given lambdas, in the ordering
  // of the Kronecker eigenbasis U = Uz ⊗ Ux.
  Vector combined_eigenvalues(const Vector& lambda) const;

  // Orthonormal basis of the unpenalized polynomial space (all lambdas > 0).
  Matrix null_space_basis() const;

  PenaltyOperator with(const Vector& lambda) const;

private:
  PenaltyTemplate() = default;
  std::vector<std::shared_ptr<const AxisSpectrum>> axes_;
  std::shared_ptr<const std::vector<Matrix>> components_;
};

// Assembled penalty P_λ. Dense at desk scale; callers only rely on
// matrix()/apply() so storage can change behind this interface.
class PenaltyOperator {
public:
  const PenaltyTemplate& structure() const { return structure_; }
  const Vector& lambda() const { return lambda_; }
  int size() const { return structure_.size(); }
  int dim() const { return structure_.dim(); }
  const Matrix& matrix() const { return p_; }
  // Both go through the difference matrices rather than P_λ itself: at large
  // λ, vᵀ(P_λv) loses every digit to cancellation when v is nearly polynomial.
  Vector apply(const Vector& v) const;
  double quadratic(const Vector& v) const;

  // Number of zero combined eigenvalues (q, or qx*qz when both lambdas > 0).
  int null_dim() const;
  // ln|P_λ|₊ from the cached per-axis spectra.
  double log_pdet() const;

private:
  friend class PenaltyTemplate;
  PenaltyOperator(PenaltyTemplate s, Vector lambda, Matrix p)
      : structure_(std::move(s)), lambda_(std::move(lambda)), p_(std::move(p)) {}
  PenaltyTemplate structure_;
  Vector lambda_;
  Matrix p_;
};

PenaltyOperator penalty_1d(int n, int q, double lambda);
PenaltyOperator penalty_2d(int nx, int nz, int qx, int qz, double lambda_x, double lambda_z);

} // namespace wh

#endif
