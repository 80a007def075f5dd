#include "wh/gaussian.hpp"

#include "wh/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace wh {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

void check_inputs(const Vector& y, const Vector& w, int n) {
  if (y.size() != n || w.size() != n)
    throw InvalidArgument("invalid parameter: y and w must have length " + std::to_string(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(w(i) >= 0.0) || !std::isfinite(w(i))) throw InvalidArgument("invalid parameter: weights must be finite and >= 0");
    if (w(i) > 0.0 && !std::isfinite(y(i))) throw InvalidArgument("invalid parameter: y must be finite where w > 0");
  }
}

// Zero-weight cells may carry any placeholder; keep it out of every product.
Vector masked(const Vector& y, const Vector& w) { return (w.array() > 0.0).select(y, 0.0); }

struct Solve {
  PenalizedSystem system;
  Vector y_hat;
};

Solve solve(const Vector& y, const Vector& w, const PenaltyOperator& penalty) {
  check_invertible(w, penalty);
  Solve s{PenalizedSystem(w, penalty), {}};
  s.y_hat = s.system.solve(w.cwiseProduct(masked(y, w)));
  return s;
}

} // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("invalid parameter: quantile level must be in (0,1)");
  return boost::math::quantile(boost::math::normal(), p);
}

double interval_multiplier(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("invalid parameter: alpha must be in (0,1)");
  return normal_quantile(1.0 - alpha / 2.0);
}

double log_pdet_weights(const Vector& w) {
  double acc = 0.0;
  for (double v : w)
    if (v > 0.0) acc += std::log(v);
  return acc;
}

int count_nonzero(const Vector& w) { return static_cast<int>((w.array() > 0.0).count()); }

double to_lambda(double log10_lambda) { return std::pow(10.0, log10_lambda); }

void check_invertible(const Vector& w, const PenaltyOperator& penalty) {
  const PenaltyTemplate& s = penalty.structure();
  if ((penalty.lambda().array() <= 0.0).any()) return; // only the factorization can tell
  if (s.dim() == 1) {
    if (count_nonzero(w) < s.qx())
      throw SingularSystem("singular system: need at least q=" + std::to_string(s.qx()) + " nonzero weights");
    return;
  }
  std::set<int> rows, cols;
  for (int j = 0; j < s.nz(); ++j)
    for (int i = 0; i < s.nx(); ++i)
      if (w(j * s.nx() + i) > 0.0) rows.insert(i), cols.insert(j);
  if (count_nonzero(w) < s.qx() * s.qz() || static_cast<int>(rows.size()) < s.qx() ||
      static_cast<int>(cols.size()) < s.qz())
    throw SingularSystem("singular system: need at least qx*qz nonzero weights spread over qx x values and qz z values");
}

GaussianFit fit_gaussian(const Vector& y, const Vector& w, const PenaltyOperator& penalty) {
  check_inputs(y, w, penalty.size());
  Solve s = solve(y, w, penalty);
  GaussianFit fit{y, w, penalty, std::move(s.y_hat), std::move(s.system), {}, 0.0,
                  std::numeric_limits<double>::quiet_NaN(), count_nonzero(w)};
  fit.psi_diagonal = fit.system.inverse_diagonal();
  fit.edf = fit.psi_diagonal.dot(w);
  if ((penalty.lambda().array() > 0.0).any())
    fit.marginal_loglik = marginal_loglik_norm(y, w, penalty, fit.theta_hat, fit.system.log_det());
  return fit;
}

std::pair<Vector, Vector> credible_intervals(const GaussianFit& fit, double alpha) {
  const double z = interval_multiplier(alpha);
  const Vector half = z * fit.psi_diagonal.cwiseSqrt();
  return {fit.theta_hat - half, fit.theta_hat + half};
}

double marginal_loglik_norm(const Vector& y, const Vector& w, const PenaltyOperator& penalty,
                            const Vector& y_hat, double log_det_system) {
  const Vector r = masked(y, w) - y_hat;
  const double quad = r.dot(w.cwiseProduct(r)) + penalty.quadratic(y_hat);
  const int n_star = count_nonzero(w);
  const int q = penalty.null_dim();
  return -0.5 * (quad - log_pdet_weights(w) - penalty.log_pdet() + log_det_system + (n_star - q) * kLn2Pi);
}

double marginal_loglik_norm(const Vector& lambda, const Vector& y, const Vector& w,
                            const PenaltyTemplate& structure) {
  const PenaltyOperator penalty = structure.with(lambda);
  check_inputs(y, w, penalty.size());
  if ((lambda.array() <= 0.0).all())
    throw UndefinedPdet("undefined pseudo-determinant: all smoothing parameters are zero");
  const Solve s = solve(y, w, penalty);
  return marginal_loglik_norm(y, w, penalty, s.y_hat, s.system.log_det());
}

GaussianSelection select_lambda_norm(const Vector& y, const Vector& w, const PenaltyTemplate& structure,
                                     const SearchConfig& cfg) {
  check_inputs(y, w, structure.size());
  // W is fixed across probes, so UᵀWU and Uᵀ(Wy) are built once.
  const auto basis = std::make_shared<const EigenBasis>(full_basis(structure));
  const Matrix gram = basis->weighted_gram(w);
  const Vector wy = w.cwiseProduct(masked(y, w));
  auto objective = [&](const Vector& lambda) {
    try {
      if ((lambda.array() <= 0.0).all())
        throw UndefinedPdet("undefined pseudo-determinant: all smoothing parameters are zero");
      const PenaltyOperator penalty = structure.with(lambda);
      check_invertible(w, penalty);
      const PenalizedSystem system(basis, gram, lambda);
      return marginal_loglik_norm(y, w, penalty, system.solve(wy), system.log_det());
    } catch (const NumericalFailure&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto clamp = [&](double u) { return std::clamp(u, cfg.lower, cfg.upper); };

  Vector lambda(structure.dim());
  double best_f = 0.0;
  int evals = 0;
  bool hit_max_evals = false;
  if (structure.dim() == 1) {
    const ScalarResult r = brent_maximize([&](double u) { return objective(Vector::Constant(1, to_lambda(u))); }, cfg);
    lambda(0) = to_lambda(r.x);
    best_f = r.f;
    evals = r.evals;
    hit_max_evals = r.hit_max_evals;
  } else {
    const PlaneResult r = nelder_mead_maximize(
        [&](std::array<double, 2> u) {
          return objective(Eigen::Vector2d(to_lambda(clamp(u[0])), to_lambda(clamp(u[1]))));
        },
        cfg);
    lambda << to_lambda(clamp(r.x[0])), to_lambda(clamp(r.x[1]));
    best_f = r.f;
    evals = r.evals;
    hit_max_evals = r.hit_max_evals;
  }
  if (!std::isfinite(best_f))
    throw ConvergenceFailure("selection failed: marginal likelihood is not finite at any probe", {});
  return {lambda, fit_gaussian(y, w, structure.with(lambda)), evals, hit_max_evals};
}

double gcv(const Vector& lambda, const Vector& y, const Vector& w, const PenaltyTemplate& structure) {
  const GaussianFit fit = fit_gaussian(y, w, structure.with(lambda));
  const Vector r = masked(y, w) - fit.theta_hat;
  const double rss = r.dot(w.cwiseProduct(r));
  const double denom = fit.n_star - fit.edf;
  if (!(denom > 1e-8 * fit.n_star))
    throw NumericalFailure("GCV undefined: n* - tr(H) is numerically zero");
  return static_cast<double>(y.size()) * rss / (denom * denom);
}

} // namespace wh
