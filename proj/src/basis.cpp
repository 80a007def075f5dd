#include "wh/basis.hpp"

#include "wh/error.hpp"

namespace wh {

namespace {

void check_rank(int p, int q, int n, const char* axis) {
  if (p < q)
    throw InvalidArgument(std::string("invalid reduction: p_") + axis + "=" + std::to_string(p) +
                          " is below the difference order " + std::to_string(q));
  if (p > n)
    throw InvalidArgument(std::string("invalid reduction: p_") + axis + "=" + std::to_string(p) +
                          " exceeds the grid length " + std::to_string(n));
}

Eigen::Map<const Matrix> as_table(const Vector& v, int rows, int cols) { return {v.data(), rows, cols}; }

} // namespace

Matrix EigenBasis::matrix() const { return axes == 1 ? ux : kron(uz, ux); }

Vector EigenBasis::combined_eigenvalues(const Vector& lambda) const {
  if (lambda.size() != axes) throw InvalidArgument("invalid parameter: wrong number of smoothing parameters");
  if (axes == 1) return lambda(0) * sx;
  Vector out(size());
  for (int j = 0; j < pz; ++j)
    for (int i = 0; i < px; ++i) out(j * px + i) = lambda(0) * sx(i) + lambda(1) * sz(j);
  return out;
}

Vector EigenBasis::apply(const Vector& beta) const {
  if (axes == 1) return ux * beta;
  const Matrix t = ux * as_table(beta, px, pz) * uz.transpose();
  return Eigen::Map<const Vector>(t.data(), t.size());
}

Vector EigenBasis::apply_transpose(const Vector& v) const {
  if (axes == 1) return ux.transpose() * v;
  const Matrix t = ux.transpose() * as_table(v, nx, nz) * uz;
  return Eigen::Map<const Vector>(t.data(), t.size());
}

Matrix EigenBasis::weighted_gram(const Vector& w) const {
  if (axes == 1) return ux.transpose() * w.asDiagonal() * ux;
  // Σ_b (uz_b uz_bᵀ) ⊗ (Uxᵀ diag(w_b) Ux), one z row b at a time.
  Matrix out = Matrix::Zero(size(), size());
  for (int b = 0; b < nz; ++b) {
    const auto wb = w.segment(static_cast<Eigen::Index>(b) * nx, nx);
    if ((wb.array() == 0.0).all()) continue;
    const Matrix g = ux.transpose() * wb.asDiagonal() * ux;
    for (int j = 0; j < pz; ++j)
      for (int l = 0; l < pz; ++l) {
        const double c = uz(b, j) * uz(b, l);
        if (c != 0.0) out.block(j * px, l * px, px, px) += c * g;
      }
  }
  return out;
}

EigenBasis eigen_basis(const PenaltyTemplate& structure, int p) {
  if (structure.dim() != 1) throw InvalidArgument("invalid reduction: 2D structures need (p_x, p_z)");
  check_rank(p, structure.qx(), structure.nx(), "x");
  const AxisSpectrum& ax = structure.axis(0);
  EigenBasis b;
  b.axes = 1;
  b.nx = ax.n;
  b.px = p;
  b.ux = ax.vectors.leftCols(p);
  b.sx = ax.values.head(p);
  return b;
}

EigenBasis eigen_basis(const PenaltyTemplate& structure, int px, int pz) {
  if (structure.dim() != 2) throw InvalidArgument("invalid reduction: 1D structures take a single p");
  check_rank(px, structure.qx(), structure.nx(), "x");
  check_rank(pz, structure.qz(), structure.nz(), "z");
  const AxisSpectrum& ax = structure.axis(0);
  const AxisSpectrum& az = structure.axis(1);
  EigenBasis b;
  b.axes = 2;
  b.nx = ax.n;
  b.nz = az.n;
  b.px = px;
  b.pz = pz;
  b.ux = ax.vectors.leftCols(px);
  b.uz = az.vectors.leftCols(pz);
  b.sx = ax.values.head(px);
  b.sz = az.values.head(pz);
  return b;
}

EigenBasis full_basis(const PenaltyTemplate& structure) {
  return structure.dim() == 1 ? eigen_basis(structure, structure.nx())
                              : eigen_basis(structure, structure.nx(), structure.nz());
}

PenalizedSystem::PenalizedSystem(const Vector& w, const PenaltyOperator& penalty, const std::string& context)
    : basis_(std::make_shared<const EigenBasis>(full_basis(penalty.structure()))),
      s_(basis_->combined_eigenvalues(penalty.lambda())) {
  if (w.size() != penalty.size()) throw InvalidArgument("invalid parameter: weight length does not match the penalty");
  Matrix m = basis_->weighted_gram(w);
  m.diagonal() += s_;
  factor_ = SpdFactor(m, context);
}

PenalizedSystem::PenalizedSystem(std::shared_ptr<const EigenBasis> basis, const Matrix& gram, const Vector& lambda,
                                 const std::string& context)
    : basis_(std::move(basis)), s_(basis_->combined_eigenvalues(lambda)) {
  Matrix m = gram;
  m.diagonal() += s_;
  factor_ = SpdFactor(m, context);
}

Vector PenalizedSystem::coefficients(const Vector& b) const { return factor_.solve(basis_->apply_transpose(b)); }

Vector PenalizedSystem::solve(const Vector& b) const { return basis_->apply(coefficients(b)); }

Vector PenalizedSystem::inverse_diagonal() const {
  // diag(U M⁻¹ Uᵀ)_i = ‖L⁻¹ Uᵀ e_i‖².
  const Matrix g = factor_.solve_lower(basis_->matrix().transpose());
  return g.colwise().squaredNorm().transpose();
}

Matrix PenalizedSystem::inverse() const {
  const Matrix u = basis_->matrix();
  return u * factor_.solve_matrix(u.transpose());
}

} // namespace wh
