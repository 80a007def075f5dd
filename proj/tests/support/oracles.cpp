#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

namespace oracle {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

} // namespace

Matrix difference_matrix(int n, int q) {
  Matrix d = Matrix::Zero(n - q, n);
  for (int i = 0; i < n - q; ++i)
    for (int k = 0; k <= q; ++k) d(i, i + k) = ((q - k) % 2 ? -1.0 : 1.0) * binomial(q, k);
  return d;
}

Matrix penalty_1d(int n, int q, double lambda) {
  const Matrix d = difference_matrix(n, q);
  return lambda * d.transpose() * d;
}

Matrix penalty_2d(int nx, int nz, int qx, int qz, double lx, double lz) {
  const Matrix gx = penalty_1d(nx, qx, 1.0), gz = penalty_1d(nz, qz, 1.0);
  const int n = nx * nz;
  Matrix p = Matrix::Zero(n, n);
  for (int j = 0; j < nz; ++j)
    for (int i = 0; i < nx; ++i)
      for (int l = 0; l < nz; ++l)
        for (int k = 0; k < nx; ++k) {
          double v = 0.0;
          if (j == l) v += lx * gx(i, k);
          if (i == k) v += lz * gz(j, l);
          p(j * nx + i, l * nx + k) = v;
        }
  return p;
}

double log_pdet(const Matrix& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector ev = es.eigenvalues();
  const double tol = ev.cwiseAbs().maxCoeff() * rel_tol;
  double acc = 0.0;
  for (double e : ev)
    if (e > tol) acc += std::log(e);
  return acc;
}

int null_dim(const Matrix& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector ev = es.eigenvalues();
  const double tol = ev.cwiseAbs().maxCoeff() * rel_tol;
  return static_cast<int>((ev.array() <= tol).count());
}

Vector wls_polynomial(const Vector& y, const Vector& w, int degree) {
  const int n = static_cast<int>(y.size());
  Matrix x(n, degree + 1);
  const double mid = 0.5 * (n - 1);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k <= degree; ++k) x(i, k) = std::pow((i - mid) / std::max(mid, 1.0), k);
  const Vector sw = w.cwiseSqrt();
  const Vector beta = (sw.asDiagonal() * x).householderQr().solve(sw.cwiseProduct(y));
  return x * beta;
}

Vector wls_polynomial_2d(const Vector& y, const Vector& w, int nx, int nz, int qx, int qz) {
  const int n = nx * nz;
  Matrix x(n, qx * qz);
  const double mx = 0.5 * (nx - 1), mz = 0.5 * (nz - 1);
  for (int j = 0; j < nz; ++j)
    for (int i = 0; i < nx; ++i)
      for (int b = 0; b < qz; ++b)
        for (int a = 0; a < qx; ++a)
          x(j * nx + i, b * qx + a) = std::pow((i - mx) / std::max(mx, 1.0), a) * std::pow((j - mz) / std::max(mz, 1.0), b);
  const Vector sw = w.cwiseSqrt();
  const Vector beta = (sw.asDiagonal() * x).householderQr().solve(sw.cwiseProduct(y));
  return x * beta;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

Matrix fd_hessian(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  const Eigen::Index n = x.size();
  Matrix hs(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      auto at = [&](double si, double sj) {
        Vector v = x;
        v(i) += si * h;
        v(j) += sj * h;
        return f(v);
      };
      hs(i, j) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
    }
  return hs;
}

double log_integral(const std::function<double(const Vector&)>& g, const Vector& center, const Matrix& frame,
                    double half_width, int points) {
  const int n = static_cast<int>(center.size());
  std::vector<double> nodes, weights;
  gauss_legendre(points, nodes, weights);
  const double jac = std::abs(frame.determinant()) * std::pow(half_width, n);
  std::vector<int> idx(n, 0);
  // Two passes: the first finds the peak so the sum can be taken in a stable scale.
  std::vector<double> values;
  std::vector<double> ws;
  double peak = -INFINITY;
  while (true) {
    Vector u(n);
    double wprod = 1.0;
    for (int k = 0; k < n; ++k) {
      u(k) = half_width * nodes[idx[k]];
      wprod *= weights[idx[k]];
    }
    const double v = g(center + frame * u);
    values.push_back(v);
    ws.push_back(wprod);
    peak = std::max(peak, v);
    int k = 0;
    while (k < n && ++idx[k] == points) idx[k++] = 0;
    if (k == n) break;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += ws[i] * std::exp(values[i] - peak);
  return peak + std::log(acc * jac);
}

double gaussian_marginal_quadrature(const Vector& y, const Vector& w, const Matrix& p) {
  const int n = static_cast<int>(y.size());
  const int q = null_dim(p);
  int n_star = 0;
  double log_w = 0.0;
  for (int i = 0; i < n; ++i)
    if (w(i) > 0.0) ++n_star, log_w += std::log(w(i));
  const Vector yz = (w.array() > 0.0).select(y, 0.0);
  auto g = [&](const Vector& t) {
    const Vector r = yz - t;
    return -0.5 * (r.dot(w.cwiseProduct(r)) + t.dot(p * t));
  };
  Matrix h = p;
  h.diagonal() += w;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Matrix frame = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  const Vector center = h.ldlt().solve(w.cwiseProduct(yz));
  const double li = log_integral(g, center, frame, 12.0, 64);
  return li - 0.5 * (n_star * kLn2Pi - log_w) - 0.5 * ((n - q) * kLn2Pi - log_pdet(p));
}

double poisson_marginal_quadrature(const Vector& d, const Vector& ec, const Matrix& p) {
  const int n = static_cast<int>(d.size());
  const int q = null_dim(p);
  auto g = [&](const Vector& t) { return t.dot(d) - (t.array().exp() * ec.array()).sum() - 0.5 * t.dot(p * t); };
  // Mode by plain damped Newton on the dense system.
  Vector t = (d.array() / ec.array()).log().matrix();
  for (int it = 0; it < 200; ++it) {
    const Vector mu = (t.array().exp() * ec.array()).matrix();
    Matrix h = p;
    h.diagonal() += mu;
    const Vector step = h.ldlt().solve(d - mu - p * t);
    t += step;
    if (step.cwiseAbs().maxCoeff() < 1e-13) break;
  }
  Matrix h = p;
  h.diagonal() += (t.array().exp() * ec.array()).matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Matrix frame = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  const double li = log_integral(g, t, frame, 14.0, 96);
  return li + 0.5 * log_pdet(p) - 0.5 * (n - q) * kLn2Pi;
}

Vector uniform_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

} // namespace oracle
