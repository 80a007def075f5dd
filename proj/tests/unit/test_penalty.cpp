#include "oracles.hpp"

#include "wh/basis.hpp"
#include "wh/error.hpp"
#include "wh/penalty.hpp"

#include <doctest.h>

#include <cmath>

using wh::Matrix;
using wh::Vector;

TEST_SUITE("penalty") {

TEST_CASE("difference matrix rows") {
  const Matrix d41 = wh::difference_matrix(4, 1);
  Matrix expected(3, 4);
  expected << -1, 1, 0, 0, 0, -1, 1, 0, 0, 0, -1, 1;
  CHECK((d41 - expected).cwiseAbs().maxCoeff() == 0.0);

  const Matrix d52 = wh::difference_matrix(5, 2);
  CHECK(d52.rows() == 3);
  Vector row(5);
  row << 1, -2, 1, 0, 0;
  CHECK((d52.row(0).transpose() - row).cwiseAbs().maxCoeff() == 0.0);

  for (int n = 3; n <= 9; ++n)
    for (int q = 1; q < n; ++q)
      CHECK((wh::difference_matrix(n, q) - oracle::difference_matrix(n, q)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("order-2 differences annihilate a line") {
  Vector theta(3);
  theta << 1.5, 1.5 + 0.25, 1.5 + 0.5;
  CHECK((wh::difference_matrix(3, 2) * theta).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("invalid orders and lambdas are rejected") {
  CHECK_THROWS_AS(wh::difference_matrix(3, 3), wh::InvalidArgument);
  CHECK_THROWS_AS(wh::difference_matrix(3, 0), wh::InvalidArgument);
  CHECK_THROWS_AS(wh::penalty_1d(5, 2, -1.0), wh::InvalidArgument);
  CHECK_THROWS_AS(wh::penalty_1d(5, 2, NAN), wh::InvalidArgument);
  CHECK_THROWS_AS(wh::penalty_2d(4, 4, 2, 2, 1.0, -0.5), wh::InvalidArgument);
  const auto s = wh::PenaltyTemplate::two_d(3, 3, 1, 1);
  CHECK_THROWS_AS(s.with(Vector::Ones(1)), wh::InvalidArgument);
}

TEST_CASE("penalty_1d small example and spectrum") {
  const auto p = wh::penalty_1d(3, 1, 1.0);
  Matrix expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((p.matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
  const auto& ax = p.structure().axis(0);
  CHECK(ax.values(0) == 0.0);
  CHECK(ax.values(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ax.values(2) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(wh::penalty_1d(6, 3, 0.0).matrix().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("penalty_2d matches the hand Kronecker expansion") {
  const auto p = wh::penalty_2d(2, 2, 1, 1, 1.0, 0.0);
  Matrix block(2, 2);
  block << 1, -1, -1, 1;
  Matrix expected = Matrix::Zero(4, 4);
  expected.topLeftCorner(2, 2) = block;
  expected.bottomRightCorner(2, 2) = block;
  CHECK((p.matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(wh::penalty_2d(4, 3, 2, 1, 0.0, 0.0).matrix().cwiseAbs().maxCoeff() == 0.0);

  const auto p2 = wh::penalty_2d(5, 4, 2, 3, 0.7, 3.1);
  CHECK((p2.matrix() - oracle::penalty_2d(5, 4, 2, 3, 0.7, 3.1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("null-space dimension") {
  const auto p = wh::penalty_2d(4, 4, 2, 1, 1.0, 1.0);
  CHECK(p.null_dim() == 2);
  CHECK(oracle::null_dim(p.matrix()) == 2);
  CHECK(wh::penalty_2d(6, 5, 2, 2, 1.0, 1.0).null_dim() == 4);
  CHECK(wh::penalty_1d(7, 3, 2.0).null_dim() == 3);
}

TEST_CASE("log pseudo-determinant") {
  CHECK(wh::penalty_1d(3, 1, 1.0).log_pdet() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(wh::penalty_1d(3, 1, 2.0).log_pdet() == doctest::Approx(std::log(12.0)).epsilon(1e-12));

  const auto p = wh::penalty_2d(3, 3, 1, 1, 1.0, 1.0);
  const double s[3] = {0.0, 1.0, 3.0};
  double expected = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i || j) expected += std::log(s[i] + s[j]);
  CHECK(p.log_pdet() == doctest::Approx(expected).epsilon(1e-10));
  CHECK(oracle::log_pdet(p.matrix()) == doctest::Approx(expected).epsilon(1e-10));

  const auto p3 = wh::penalty_2d(6, 5, 2, 2, 4.0, 0.3);
  CHECK(p3.log_pdet() == doctest::Approx(oracle::log_pdet(p3.matrix())).epsilon(1e-9));

  CHECK_THROWS_AS(wh::penalty_1d(4, 2, 0.0).log_pdet(), wh::UndefinedPdet);
  CHECK_THROWS_AS(wh::penalty_2d(4, 4, 2, 2, 0.0, 0.0).log_pdet(), wh::UndefinedPdet);
}

TEST_CASE("apply and quadratic agree with the assembled matrix") {
  std::mt19937_64 rng(11);
  const auto p = wh::penalty_2d(6, 4, 2, 1, 3.0, 0.5);
  for (int k = 0; k < 5; ++k) {
    const Vector v = oracle::uniform_vector(rng, p.size(), -1, 1);
    CHECK((p.apply(v) - p.matrix() * v).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(p.quadratic(v) == doctest::Approx(v.dot(p.matrix() * v)).epsilon(1e-12));
  }
  const auto p1 = wh::penalty_1d(9, 3, 2.0);
  const Vector v = oracle::uniform_vector(rng, 9, -1, 1);
  CHECK(p1.quadratic(v) == doctest::Approx(v.dot(p1.matrix() * v)).epsilon(1e-12));
}

TEST_CASE("combined eigenvalues reproduce P in the Kronecker basis") {
  const auto s = wh::PenaltyTemplate::two_d(5, 4, 2, 2);
  Vector lambda(2);
  lambda << 2.0, 0.25;
  const auto basis = wh::full_basis(s);
  const Matrix u = basis.matrix();
  const Matrix p = s.with(lambda).matrix();
  const Matrix back = u * s.combined_eigenvalues(lambda).asDiagonal() * u.transpose();
  CHECK((back - p).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((u.transpose() * u - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix n0 = s.null_space_basis();
  CHECK(n0.cols() == 4);
  CHECK((p * n0).cwiseAbs().maxCoeff() < 1e-11);
}

}
