#include "oracles.hpp"

#include "wh/error.hpp"
#include "wh/experiments.hpp"
#include "wh/extrapolation.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using wh::Matrix;
using wh::Vector;

namespace {

wh::SmoothedFit gaussian_fit_1d(int n, int q, double lambda, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vector y = oracle::uniform_vector(rng, n, -1, 1);
  const Vector w = oracle::uniform_vector(rng, n, 0.5, 3.0);
  return wh::SmoothedFit::from(wh::fit_gaussian(y, w, wh::penalty_1d(n, q, lambda)));
}

wh::SmoothedFit gaussian_fit_2d(int nx, int nz, double lx, double lz, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vector y = oracle::uniform_vector(rng, nx * nz, -1, 1);
  const Vector w = oracle::uniform_vector(rng, nx * nz, 0.5, 3.0);
  return wh::SmoothedFit::from(wh::fit_gaussian(y, w, wh::penalty_2d(nx, nz, 2, 2, lx, lz)));
}

// Value at position t of the degree-(k-1) polynomial through (xs[i], ys[i]).
double lagrange(const std::vector<double>& xs, const std::vector<double>& ys, double t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double l = 1.0;
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (j != i) l *= (t - xs[j]) / (xs[i] - xs[j]);
    acc += ys[i] * l;
  }
  return acc;
}

double min_eigenvalue(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (a + a.transpose())).eigenvalues()(0);
}

} // namespace

TEST_SUITE("extrapolation") {

TEST_CASE("embedding matrices") {
  const auto same = wh::build_embedding({0, 4}, {0, 4});
  CHECK((same.c() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(same.c_bar().rows() == 0);
  CHECK((same.q() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);

  const auto e = wh::build_embedding({2, 4}, {0, 6});
  const Matrix c = e.c();
  CHECK(c.rows() == 3);
  CHECK(c.cols() == 7);
  for (int k = 0; k < 3; ++k) CHECK(c(k, k + 2) == 1.0);
  CHECK((c * c.transpose() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  const Matrix q = e.q();
  CHECK((q * q.transpose() - Matrix::Identity(7, 7)).cwiseAbs().maxCoeff() == 0.0);
  const Vector v = Vector::LinSpaced(7, 1.0, 7.0);
  CHECK(e.unpermute(e.permute(v)) == v);
  CHECK(e.gather(e.scatter(Vector::Ones(3))) == Vector::Ones(3));

  CHECK_THROWS_AS(wh::build_embedding({2, 8}, {0, 6}), wh::InvalidArgument);
  CHECK_THROWS_AS(wh::build_embedding({0, 3}, {0, 5}, {1, 2}, {2, 4}), wh::InvalidArgument);
}

TEST_CASE("same grid leaves everything unchanged") {
  const auto fit = gaussian_fit_1d(12, 2, 5.0, 1);
  const auto e = wh::build_embedding({0, 11}, {0, 11});
  const auto blocks = wh::extended_penalty(e, fit.penalty);
  CHECK((blocks.p_plus - fit.penalty.matrix()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(blocks.p12.size() == 0);
  for (auto mode : {wh::ExtrapolationMode::constrained, wh::ExtrapolationMode::unconstrained}) {
    const auto r = wh::extrapolate(fit, e, mode);
    CHECK((r.y_plus - fit.y_hat).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((r.psi_plus - fit.psi).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("1D: fit preserved and polynomial continuation on both sides") {
  for (int q = 1; q <= 3; ++q) {
    const int n = 15;
    const auto fit = gaussian_fit_1d(n, q, 20.0, 10 + q);
    const auto e = wh::build_embedding({10, 10 + n - 1}, {5, 10 + n + 5});
    const double scale = 1.0 + fit.y_hat.cwiseAbs().maxCoeff();
    const auto un = wh::extrapolate_unconstrained(fit, e);
    const auto co = wh::extrapolate_constrained(fit, e);
    CHECK((e.gather(un.y_plus) - fit.y_hat).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    CHECK((e.gather(co.y_plus) - fit.y_hat).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    CHECK((un.y_plus - co.y_plus).cwiseAbs().maxCoeff() <= 1e-8 * scale);

    std::vector<double> lx, ly, rx, ry;
    for (int k = 0; k < q; ++k) {
      lx.push_back(k);
      ly.push_back(fit.y_hat(k));
      rx.push_back(n - q + k);
      ry.push_back(fit.y_hat(n - q + k));
    }
    for (int t = -5; t < 0; ++t) CHECK(std::abs(co.y_plus(t + 5) - lagrange(lx, ly, t)) < 1e-6);
    for (int t = n; t < n + 6; ++t) CHECK(std::abs(co.y_plus(t + 5) - lagrange(rx, ry, t)) < 1e-6);
  }
}

TEST_CASE("Schur complement vanishes in 1D but not in 2D") {
  const auto f1 = gaussian_fit_1d(10, 2, 3.0, 2);
  const auto e1 = wh::build_embedding({0, 9}, {-3, 13});
  const auto b1 = wh::extended_penalty(e1, f1.penalty);
  const Matrix s1 = b1.p11 - b1.p12 * b1.p22.ldlt().solve(b1.p21);
  CHECK(s1.cwiseAbs().maxCoeff() < 1e-8 * b1.p11.cwiseAbs().maxCoeff());

  const auto f2 = gaussian_fit_2d(6, 5, 3.0, 1.5, 3);
  const auto e2 = wh::build_embedding({0, 5}, {0, 8}, {0, 4}, {0, 6});
  const auto b2 = wh::extended_penalty(e2, f2.penalty);
  const Matrix s2 = b2.p11 - b2.p12 * b2.p22.ldlt().solve(b2.p21);
  CHECK(s2.cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("2D: constrained preserves, unconstrained moves the fit") {
  const auto fit = gaussian_fit_2d(8, 6, 2.0, 5.0, 4);
  const auto e = wh::build_embedding({0, 7}, {0, 10}, {0, 5}, {0, 8});
  const auto co = wh::extrapolate_constrained(fit, e);
  const auto un = wh::extrapolate_unconstrained(fit, e);
  const double scale = 1.0 + fit.y_hat.cwiseAbs().maxCoeff();
  CHECK((e.gather(co.y_plus) - fit.y_hat).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  CHECK((e.gather(un.y_plus) - fit.y_hat).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("covariance identities") {
  const auto fit = gaussian_fit_2d(7, 6, 4.0, 1.0, 5);
  const auto e = wh::build_embedding({1, 7}, {0, 9}, {0, 5}, {0, 7});
  const auto co = wh::extrapolate_constrained(fit, e);

  // Ψ*₊ W₊ y₊ = ŷ*₊
  const Vector w_plus = e.scatter(fit.w);
  const Vector y_plus = e.scatter(fit.y);
  CHECK((co.psi_plus * w_plus.cwiseProduct(y_plus) - co.y_plus).cwiseAbs().maxCoeff() < 1e-9);

  // Innovation term: PSD, zero on original rows and columns.
  const Matrix innov = co.psi_plus - co.psi_plus_no_innovation;
  CHECK(min_eigenvalue(innov) > -1e-10);
  for (int idx : e.inner) {
    CHECK(innov.row(idx).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(innov.col(idx).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Original block equals Ψ, so interval widths there are unchanged.
  CHECK((e.c() * co.psi_plus * e.c().transpose() - fit.psi).cwiseAbs().maxCoeff() < 1e-12);
  const auto [lo, hi] = wh::credible_intervals_extended(co, 0.05);
  const Vector half = 0.5 * (hi - lo);
  const Vector half_free = 1.959963984540054 * co.psi_plus_no_innovation.diagonal().cwiseMax(0.0).cwiseSqrt();
  for (int idx : e.outer) CHECK(half(idx) >= half_free(idx) - 1e-12);
}

TEST_CASE("same-grid intervals equal the Gaussian intervals") {
  std::mt19937_64 rng(6);
  const Vector y = oracle::uniform_vector(rng, 10, -1, 1);
  const auto g = wh::fit_gaussian(y, Vector::Ones(10), wh::penalty_1d(10, 2, 4.0));
  const auto r = wh::extrapolate_constrained(wh::SmoothedFit::from(g), wh::build_embedding({0, 9}, {0, 9}));
  const auto [a_lo, a_hi] = wh::credible_intervals_extended(r, 0.05);
  const auto [b_lo, b_hi] = wh::credible_intervals(g, 0.05);
  CHECK((a_lo - b_lo).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a_hi - b_hi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Lagrange first term is numerically zero") {
  const auto f1 = gaussian_fit_1d(12, 2, 8.0, 7);
  CHECK(wh::lagrange_residual_term(f1, wh::build_embedding({0, 11}, {-4, 15})).cwiseAbs().maxCoeff() < 1e-8);
  const auto f2 = gaussian_fit_2d(6, 5, 2.0, 2.0, 8);
  CHECK(wh::lagrange_residual_term(f2, wh::build_embedding({0, 5}, {0, 7}, {0, 4}, {0, 6})).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("generalized fit extrapolates through its working data") {
  const auto p = wh::ltc_portfolio(5000, 10, 6);
  const auto agg = p.draw(2);
  Vector lambda(2);
  lambda << 50.0, 5.0;
  const auto g = wh::newton_fit(agg.d, agg.ec, p.structure().with(lambda));
  const auto fit = wh::SmoothedFit::from(g);
  // The working-data Gaussian fit at the same λ reproduces θ̂.
  const auto refit = wh::fit_gaussian(fit.y, fit.w, g.penalty);
  CHECK((refit.theta_hat - g.theta_hat).cwiseAbs().maxCoeff() < 1e-6);

  const auto e = wh::build_embedding(agg.x, {agg.x.lo, agg.x.hi + 4}, *agg.z, {agg.z->lo, agg.z->hi + 3});
  const auto co = wh::extrapolate_constrained(fit, e);
  CHECK((e.gather(co.y_plus) - g.theta_hat).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + g.theta_hat.cwiseAbs().maxCoeff()));
  CHECK(min_eigenvalue(co.psi_plus - co.psi_plus_no_innovation) > -1e-10);
  CHECK(wh::lagrange_residual_term(fit, e).cwiseAbs().maxCoeff() < 1e-8);
}

}
