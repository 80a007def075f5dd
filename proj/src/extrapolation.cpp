#include "wh/extrapolation.hpp"

#include "wh/error.hpp"

#include <algorithm>
#include <cmath>

namespace wh {

namespace {

void check_sub_range(AxisRange inner, AxisRange outer, const char* axis) {
  if (inner.lo > inner.hi || outer.lo > outer.hi || !outer.contains(inner))
    throw InvalidArgument(std::string("invalid embedding: original ") + axis + " range " + std::to_string(inner.lo) +
                          ".." + std::to_string(inner.hi) + " is not inside " + std::to_string(outer.lo) + ".." +
                          std::to_string(outer.hi));
}

GridEmbedding finish(GridEmbedding e) {
  const int nx = e.x.size(), nz = e.z ? e.z->size() : 1;
  const int nxp = e.nx_plus(), nzp = e.nz_plus();
  const int dx = e.x.lo - e.x_plus.lo;
  const int dz = e.z ? e.z->lo - e.z_plus->lo : 0;
  std::vector<bool> used(static_cast<std::size_t>(nxp) * nzp, false);
  for (int j = 0; j < nz; ++j)
    for (int i = 0; i < nx; ++i) {
      const int k = (j + dz) * nxp + (i + dx);
      e.inner.push_back(k);
      used[k] = true;
    }
  for (int k = 0; k < nxp * nzp; ++k)
    if (!used[k]) e.outer.push_back(k);
  return e;
}

std::vector<int> order(const GridEmbedding& e) {
  std::vector<int> perm = e.inner;
  perm.insert(perm.end(), e.outer.begin(), e.outer.end());
  return perm;
}

PenaltyOperator extended_operator(const GridEmbedding& e, const PenaltyOperator& penalty) {
  const PenaltyTemplate& s = penalty.structure();
  if (s.dim() != e.dim()) throw InvalidArgument("invalid embedding: dimension does not match the fit");
  if (s.size() != e.size()) throw InvalidArgument("invalid embedding: original grid does not match the fit");
  const PenaltyTemplate ext = e.dim() == 1 ? PenaltyTemplate::one_d(e.nx_plus(), s.qx())
                                           : PenaltyTemplate::two_d(e.nx_plus(), e.nz_plus(), s.qx(), s.qz());
  return ext.with(penalty.lambda());
}

void check_fit(const SmoothedFit& fit, const GridEmbedding& e) {
  const auto n = static_cast<Eigen::Index>(e.size());
  if (fit.y.size() != n || fit.w.size() != n || fit.y_hat.size() != n || fit.psi.rows() != n || fit.psi.cols() != n)
    throw InvalidArgument("invalid embedding: fit size does not match the original grid");
}

} // namespace

Matrix GridEmbedding::c() const {
  Matrix m = Matrix::Zero(size(), size_plus());
  for (int k = 0; k < size(); ++k) m(k, inner[k]) = 1.0;
  return m;
}

Matrix GridEmbedding::c_bar() const {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(outer.size()), size_plus());
  for (std::size_t k = 0; k < outer.size(); ++k) m(static_cast<Eigen::Index>(k), outer[k]) = 1.0;
  return m;
}

Matrix GridEmbedding::q() const {
  Matrix m(size_plus(), size_plus());
  m << c(), c_bar();
  return m;
}

Vector GridEmbedding::scatter(const Vector& v) const {
  Vector out = Vector::Zero(size_plus());
  for (int k = 0; k < size(); ++k) out(inner[k]) = v(k);
  return out;
}

Vector GridEmbedding::gather(const Vector& v_plus) const {
  Vector out(size());
  for (int k = 0; k < size(); ++k) out(k) = v_plus(inner[k]);
  return out;
}

Vector GridEmbedding::permute(const Vector& v_plus) const {
  const std::vector<int> perm = order(*this);
  Vector out(size_plus());
  for (int a = 0; a < size_plus(); ++a) out(a) = v_plus(perm[a]);
  return out;
}

Vector GridEmbedding::unpermute(const Vector& v) const {
  const std::vector<int> perm = order(*this);
  Vector out(size_plus());
  for (int a = 0; a < size_plus(); ++a) out(perm[a]) = v(a);
  return out;
}

GridEmbedding build_embedding(AxisRange x, AxisRange x_plus) {
  check_sub_range(x, x_plus, "x");
  GridEmbedding e;
  e.x = x;
  e.x_plus = x_plus;
  return finish(std::move(e));
}

GridEmbedding build_embedding(AxisRange x, AxisRange x_plus, AxisRange z, AxisRange z_plus) {
  check_sub_range(x, x_plus, "x");
  check_sub_range(z, z_plus, "z");
  GridEmbedding e;
  e.x = x;
  e.x_plus = x_plus;
  e.z = z;
  e.z_plus = z_plus;
  return finish(std::move(e));
}

ExtendedPenalty extended_penalty(const GridEmbedding& embedding, const PenaltyOperator& penalty) {
  ExtendedPenalty out;
  out.p_plus = extended_operator(embedding, penalty).matrix();
  const std::vector<int> perm = order(embedding);
  const int n = embedding.size(), m = embedding.size_plus() - n;
  Matrix qp(embedding.size_plus(), embedding.size_plus());
  for (int a = 0; a < embedding.size_plus(); ++a)
    for (int b = 0; b < embedding.size_plus(); ++b) qp(a, b) = out.p_plus(perm[a], perm[b]);
  out.p11 = qp.topLeftCorner(n, n) - penalty.matrix();
  out.p12 = qp.topRightCorner(n, m);
  out.p21 = qp.bottomLeftCorner(m, n);
  out.p22 = qp.bottomRightCorner(m, m);
  return out;
}

SmoothedFit SmoothedFit::from(const GaussianFit& fit) {
  return {fit.y, fit.w, fit.theta_hat, fit.system.inverse(), fit.penalty};
}

SmoothedFit SmoothedFit::from(const GeneralizedFit& fit) {
  const WorkingData wd = working_data(fit.theta_hat, fit.d, fit.ec);
  return {wd.z, wd.w, fit.theta_hat, fit.system.inverse(), fit.penalty};
}

ExtrapolationResult extrapolate_unconstrained(const SmoothedFit& fit, const GridEmbedding& embedding) {
  check_fit(fit, embedding);
  ExtrapolationResult out;
  out.mode = ExtrapolationMode::unconstrained;
  out.embedding = embedding;
  out.blocks = extended_penalty(embedding, fit.penalty);
  const Vector w_plus = embedding.scatter(fit.w);
  const Vector y_plus = embedding.scatter((fit.w.array() > 0.0).select(fit.y, 0.0));
  const PenalizedSystem system(w_plus, extended_operator(embedding, fit.penalty), "extended system W+ + P+");
  out.y_plus = system.solve(w_plus.cwiseProduct(y_plus));
  out.psi_plus = system.inverse();
  return out;
}

ExtrapolationResult extrapolate_constrained(const SmoothedFit& fit, const GridEmbedding& embedding) {
  check_fit(fit, embedding);
  ExtrapolationResult out;
  out.mode = ExtrapolationMode::constrained;
  out.embedding = embedding;
  out.blocks = extended_penalty(embedding, fit.penalty);
  const int n = embedding.size(), m = embedding.size_plus() - n;
  if (m == 0) {
    out.y_plus = fit.y_hat;
    out.psi_plus = fit.psi;
    out.psi_plus_no_innovation = fit.psi;
    return out;
  }
  const SpdFactor p22(out.blocks.p22, "new-position penalty block P22");
  const Matrix k = p22.solve_matrix(out.blocks.p21); // P22⁻¹P21
  Vector permuted(n + m);
  permuted << fit.y_hat, -k * fit.y_hat;
  out.y_plus = embedding.unpermute(permuted);

  Matrix cov(n + m, n + m);
  cov.topLeftCorner(n, n) = fit.psi;
  cov.topRightCorner(n, m) = -fit.psi * k.transpose();
  cov.bottomLeftCorner(m, n) = -k * fit.psi;
  cov.bottomRightCorner(m, m) = k * fit.psi * k.transpose();
  const std::vector<int> perm = order(embedding);
  auto unpermute_matrix = [&](const Matrix& a) {
    Matrix r(n + m, n + m);
    for (int i = 0; i < n + m; ++i)
      for (int j = 0; j < n + m; ++j) r(perm[i], perm[j]) = a(i, j);
    return r;
  };
  out.psi_plus_no_innovation = unpermute_matrix(cov);
  cov.bottomRightCorner(m, m) += p22.inverse();
  out.psi_plus = unpermute_matrix(cov);
  return out;
}

ExtrapolationResult extrapolate(const SmoothedFit& fit, const GridEmbedding& embedding, ExtrapolationMode mode) {
  return mode == ExtrapolationMode::constrained ? extrapolate_constrained(fit, embedding)
                                                : extrapolate_unconstrained(fit, embedding);
}

Vector lagrange_residual_term(const SmoothedFit& fit, const GridEmbedding& embedding) {
  check_fit(fit, embedding);
  const Vector w_plus = embedding.scatter(fit.w);
  const Matrix g = PenalizedSystem(w_plus, extended_operator(embedding, fit.penalty), "extended system W+ + P+").inverse();
  const Matrix c = embedding.c();
  const SpdFactor inner(c * g * c.transpose(), "C (W+ + P+)^-1 C'");
  const Vector v = w_plus.cwiseProduct(embedding.scatter((fit.w.array() > 0.0).select(fit.y, 0.0)));
  return g * (v - c.transpose() * inner.solve(c * (g * v)));
}

std::pair<Vector, Vector> credible_intervals_extended(const ExtrapolationResult& result, double alpha) {
  const double z = interval_multiplier(alpha);
  const Vector half = z * result.psi_plus.diagonal().cwiseMax(0.0).cwiseSqrt();
  return {result.y_plus - half, result.y_plus + half};
}

} // namespace wh
