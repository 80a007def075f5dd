#ifndef WH_BASIS_HPP
#define WH_BASIS_HPP

#include "wh/linalg.hpp"
#include "wh/penalty.hpp"

#include <memory>
#include <string>

namespace wh {

// Leading eigenvectors of DᵀD per axis. In 2D the basis is Uz ⊗ Ux truncated
// per axis, so coefficient (i, j) sits at j * px + i.
struct EigenBasis {
  int axes = 1;
  int nx = 0, nz = 1, px = 0, pz = 1;
  Matrix ux, uz; // nx×px, nz×pz (uz empty in 1D)
  Vector sx, sz; // matching ascending eigenvalues

  int dim() const { return axes; }
  int size() const { return px * pz; }
  int grid_size() const { return nx * nz; }
  Matrix matrix() const;                       // U, n×p
  Vector combined_eigenvalues(const Vector& lambda) const;
  Vector apply(const Vector& beta) const;      // U β
  Vector apply_transpose(const Vector& v) const; // Uᵀ v
  Matrix weighted_gram(const Vector& w) const;  // UᵀWU
};

EigenBasis eigen_basis(const PenaltyTemplate& structure, int p);
EigenBasis eigen_basis(const PenaltyTemplate& structure, int px, int pz);
EigenBasis full_basis(const PenaltyTemplate& structure);

// W + P_λ factored in the full penalty eigenbasis: W + P_λ = U(UᵀWU + S)Uᵀ.
// Unlike a direct Cholesky of W + P_λ, the polynomial directions stay
// well conditioned for any λ, so solves and ln|W + P_λ| hold up to λ ~ 1e12
// and beyond.
class PenalizedSystem {
public:
  PenalizedSystem() = default;
  PenalizedSystem(const Vector& w, const PenaltyOperator& penalty, const std::string& context = "W + P_lambda");
  // Reuses a precomputed UᵀWU when only λ changes.
  PenalizedSystem(std::shared_ptr<const EigenBasis> basis, const Matrix& gram, const Vector& lambda,
                  const std::string& context = "W + P_lambda");

  Eigen::Index size() const { return factor_.size(); }
  const EigenBasis& basis() const { return *basis_; }
  const Vector& eigenvalues() const { return s_; } // S
  Vector coefficients(const Vector& b) const;      // (UᵀWU + S)⁻¹Uᵀb
  Vector solve(const Vector& b) const;             // (W + P_λ)⁻¹b
  double log_det() const { return factor_.log_det(); }
  Vector inverse_diagonal() const;
  Matrix inverse() const;

private:
  std::shared_ptr<const EigenBasis> basis_;
  Vector s_;
  SpdFactor factor_;
};

} // namespace wh

#endif
