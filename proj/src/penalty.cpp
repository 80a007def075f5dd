#include "wh/penalty.hpp"

#include "wh/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace wh {

namespace {

void check_order(int n, int q) {
  if (q < 1 || q >= n)
    throw InvalidArgument("invalid order: need 1 <= q < n, got q=" + std::to_string(q) +
                          ", n=" + std::to_string(n));
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("invalid parameter: smoothing parameter must be finite and >= 0");
}

std::shared_ptr<const AxisSpectrum> compute_spectrum(int n, int q) {
  auto spectrum = std::make_shared<AxisSpectrum>();
  spectrum->n = n;
  spectrum->q = q;
  spectrum->diff = difference_matrix(n, q);
  spectrum->gram = spectrum->diff.transpose() * spectrum->diff;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(spectrum->gram);
  if (solver.info() != Eigen::Success) throw NumericalFailure("eigendecomposition of DᵀD failed");
  spectrum->values = solver.eigenvalues();
  spectrum->vectors = solver.eigenvectors();
  const double tol = spectrum->values.maxCoeff() * kEigenZeroTol;
  for (int i = 0; i < n; ++i)
    if (std::abs(spectrum->values(i)) <= tol) spectrum->values(i) = 0.0;
  return spectrum;
}

} // namespace

Matrix difference_matrix(int n, int q) {
  check_order(n, q);
  // Row i holds C(q,k)(-1)^(q-k) at column i+k.
  Vector coeffs(q + 1);
  double binom = 1.0;
  for (int k = 0; k <= q; ++k) {
    coeffs(k) = ((q - k) % 2 == 0 ? 1.0 : -1.0) * binom;
    binom = binom * (q - k) / (k + 1);
  }
  Matrix d = Matrix::Zero(n - q, n);
  for (int i = 0; i < n - q; ++i) d.block(i, i, 1, q + 1) = coeffs.transpose();
  return d;
}

std::shared_ptr<const AxisSpectrum> axis_spectrum(int n, int q) {
  check_order(n, q);
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const AxisSpectrum>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({n, q}); it != cache.end()) return it->second;
  }
  auto spec = compute_spectrum(n, q);
  std::lock_guard lock(mutex);
  return cache.emplace(std::make_pair(n, q), std::move(spec)).first->second;
}

PenaltyTemplate PenaltyTemplate::one_d(int n, int q) {
  PenaltyTemplate t;
  t.axes_.push_back(axis_spectrum(n, q));
  t.components_ = std::make_shared<const std::vector<Matrix>>(std::vector<Matrix>{t.axes_[0]->gram});
  return t;
}

PenaltyTemplate PenaltyTemplate::two_d(int nx, int nz, int qx, int qz) {
  PenaltyTemplate t;
  t.axes_.push_back(axis_spectrum(nx, qx));
  t.axes_.push_back(axis_spectrum(nz, qz));
  std::vector<Matrix> comps;
  comps.push_back(kron(Matrix::Identity(nz, nz), t.axes_[0]->gram));
  comps.push_back(kron(t.axes_[1]->gram, Matrix::Identity(nx, nx)));
  t.components_ = std::make_shared<const std::vector<Matrix>>(std::move(comps));
  return t;
}

int PenaltyTemplate::size() const { return nx() * nz(); }

Vector PenaltyTemplate::combined_eigenvalues(const Vector& lambda) const {
  if (lambda.size() != dim())
    throw InvalidArgument("invalid parameter: expected " + std::to_string(dim()) + " smoothing parameter(s)");
  if (dim() == 1) return lambda(0) * axes_[0]->values;
  const Vector& sx = axes_[0]->values;
  const Vector& sz = axes_[1]->values;
  Vector out(size());
  for (int j = 0; j < nz(); ++j)
    for (int i = 0; i < nx(); ++i) out(j * nx() + i) = lambda(0) * sx(i) + lambda(1) * sz(j);
  return out;
}

Matrix PenaltyTemplate::null_space_basis() const {
  const Matrix ux = axes_[0]->vectors.leftCols(qx());
  if (dim() == 1) return ux;
  return kron(axes_[1]->vectors.leftCols(qz()), ux);
}

PenaltyOperator PenaltyTemplate::with(const Vector& lambda) const {
  if (lambda.size() != dim())
    throw InvalidArgument("invalid parameter: expected " + std::to_string(dim()) + " smoothing parameter(s)");
  for (double l : lambda) check_lambda(l);
  Matrix p = lambda(0) * component(0);
  if (dim() == 2) p += lambda(1) * component(1);
  return PenaltyOperator(*this, lambda, std::move(p));
}

Vector PenaltyOperator::apply(const Vector& v) const {
  const Matrix& dx = structure_.axis(0).diff;
  if (dim() == 1) return lambda_(0) * (dx.transpose() * (dx * v));
  const int nx = structure_.nx(), nz = structure_.nz();
  const Eigen::Map<const Matrix> table(v.data(), nx, nz);
  const Matrix& dz = structure_.axis(1).diff;
  const Matrix out = lambda_(0) * (dx.transpose() * (dx * table)) + lambda_(1) * ((table * dz.transpose()) * dz);
  return Eigen::Map<const Vector>(out.data(), out.size());
}

double PenaltyOperator::quadratic(const Vector& v) const {
  const Matrix& dx = structure_.axis(0).diff;
  if (dim() == 1) return lambda_(0) * (dx * v).squaredNorm();
  const Eigen::Map<const Matrix> table(v.data(), structure_.nx(), structure_.nz());
  return lambda_(0) * (dx * table).squaredNorm() + lambda_(1) * (table * structure_.axis(1).diff.transpose()).squaredNorm();
}

int PenaltyOperator::null_dim() const {
  const Vector ev = structure_.combined_eigenvalues(lambda_);
  const double tol = ev.maxCoeff() * kEigenZeroTol;
  return static_cast<int>((ev.array() <= tol).count());
}

double PenaltyOperator::log_pdet() const {
  if ((lambda_.array() <= 0.0).all())
    throw UndefinedPdet("undefined pseudo-determinant: all smoothing parameters are zero");
  const Vector ev = structure_.combined_eigenvalues(lambda_);
  const double tol = ev.maxCoeff() * kEigenZeroTol;
  double acc = 0.0;
  for (double e : ev)
    if (e > tol) acc += std::log(e);
  return acc;
}

PenaltyOperator penalty_1d(int n, int q, double lambda) {
  return PenaltyTemplate::one_d(n, q).with(Vector::Constant(1, lambda));
}

PenaltyOperator penalty_2d(int nx, int nz, int qx, int qz, double lambda_x, double lambda_z) {
  return PenaltyTemplate::two_d(nx, nz, qx, qz).with(Eigen::Vector2d(lambda_x, lambda_z));
}

} // namespace wh
