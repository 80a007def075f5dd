#include "wh/generalized.hpp"

#include "wh/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wh {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string describe(const Vector& lambda) {
  std::ostringstream os;
  os.precision(6);
  os << "lambda=(";
  for (Eigen::Index i = 0; i < lambda.size(); ++i) os << (i ? ", " : "") << lambda(i);
  os << ")";
  return os.str();
}

double stop_scale(const Vector& d) { return std::max(d.sum(), 1.0); }

Vector exposure_mean(const Vector& theta, const Vector& ec) {
  return (ec.array() > 0.0).select(theta.array().exp() * ec.array(), 0.0).matrix();
}

} // namespace

void check_counts(const Vector& d, const Vector& ec) {
  if (d.size() != ec.size()) throw InvalidArgument("invalid parameter: d and e_c lengths differ");
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d(i) >= 0.0) || !(ec(i) >= 0.0) || !std::isfinite(d(i)) || !std::isfinite(ec(i)))
      throw DataInconsistency("data inconsistency: d and e_c must be finite and >= 0 (cell " + std::to_string(i) + ")");
    if (d(i) > 0.0 && ec(i) == 0.0)
      throw DataInconsistency("data inconsistency: events without exposure (cell " + std::to_string(i) + ")");
  }
}

double loglik(const Vector& theta, const Vector& d, const Vector& ec) {
  return theta.dot(d) - exposure_mean(theta, ec).sum();
}

double penalized_loglik(const Vector& theta, const Vector& d, const Vector& ec, const PenaltyOperator& penalty) {
  check_counts(d, ec);
  return loglik(theta, d, ec) - 0.5 * penalty.quadratic(theta);
}

Vector penalized_gradient(const Vector& theta, const Vector& d, const Vector& ec, const PenaltyOperator& penalty) {
  return d - exposure_mean(theta, ec) - penalty.apply(theta);
}

Matrix penalized_hessian(const Vector& theta, const Vector& ec, const PenaltyOperator& penalty) {
  Matrix h = -penalty.matrix();
  h.diagonal() -= exposure_mean(theta, ec);
  return h;
}

Vector initial_theta(const Vector& d, const Vector& ec) {
  check_counts(d, ec);
  const double total_ec = ec.sum();
  const double global = total_ec > 0.0 && d.sum() > 0.0 ? std::log(d.sum() / total_ec)
                        : total_ec > 0.0                ? std::log(0.5 / (total_ec + 0.5))
                                                        : 0.0;
  Vector theta(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) > 0.0)
      theta(i) = std::log(d(i) / ec(i));
    else if (ec(i) > 0.0)
      theta(i) = std::log(0.5 / (ec(i) + 0.5));
    else
      theta(i) = global;
  }
  return theta;
}

WorkingData working_data(const Vector& theta, const Vector& d, const Vector& ec) {
  WorkingData out{exposure_mean(theta, ec), theta};
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (out.w(i) > 0.0) out.z(i) += (d(i) - out.w(i)) / out.w(i);
  return out;
}

Vector newton_step(const Vector& theta, const Vector& d, const Vector& ec, const PenaltyOperator& penalty) {
  const Vector mu = exposure_mean(theta, ec);
  check_invertible(mu, penalty);
  const PenalizedSystem system(mu, penalty, "W_k + P_lambda");
  return system.solve(mu.cwiseProduct(theta) + (d - mu));
}

GeneralizedFit newton_fit(const Vector& d, const Vector& ec, const PenaltyOperator& penalty, const NewtonConfig& cfg,
                          const Vector* theta0) {
  check_counts(d, ec);
  if (d.size() != penalty.size()) throw InvalidArgument("invalid parameter: data length does not match the penalty");
  Vector theta = theta0 ? *theta0 : initial_theta(d, ec);
  if (theta.size() != d.size()) throw InvalidArgument("invalid parameter: theta0 has the wrong length");

  const double threshold = cfg.eps_l * stop_scale(d);
  double lp = penalized_loglik(theta, d, ec, penalty);
  std::vector<double> trace{lp};
  bool converged = false;
  int it = 0;
  while (it < cfg.max_iter) {
    ++it;
    Vector next = newton_step(theta, d, ec, penalty);
    double lp_next = penalized_loglik(next, d, ec, penalty);
    for (int h = 0; h < cfg.max_halvings && !(lp_next >= lp); ++h) {
      next = 0.5 * (theta + next);
      lp_next = penalized_loglik(next, d, ec, penalty);
    }
    if (!(lp_next >= lp)) {
      // No ascent direction left at working precision.
      trace.push_back(lp);
      converged = true;
      break;
    }
    const double gain = lp_next - lp;
    theta = std::move(next);
    lp = lp_next;
    trace.push_back(lp);
    if (gain < threshold) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceFailure("Newton iteration did not converge in " + std::to_string(cfg.max_iter) +
                                 " iterations at " + describe(penalty.lambda()),
                             trace);

  const Vector w = exposure_mean(theta, ec);
  check_invertible(w, penalty);
  GeneralizedFit fit{d,  ec, penalty, theta, w, PenalizedSystem(w, penalty, "W_theta + P_lambda"),
                     {}, 0.0, lp,     kNaN,  it, converged, std::move(trace)};
  if (cfg.compute_covariance) {
    fit.psi_diagonal = fit.system.inverse_diagonal();
    fit.edf = fit.psi_diagonal.dot(w);
  }
  if ((penalty.lambda().array() > 0.0).any()) fit.laplace_marginal = laplace_marginal_loglik(fit);
  return fit;
}

double laplace_marginal_loglik(const GeneralizedFit& fit) {
  const PenaltyOperator& p = fit.penalty;
  return loglik(fit.theta_hat, fit.d, fit.ec) -
         0.5 * (p.quadratic(fit.theta_hat) - p.log_pdet() + fit.system.log_det() - p.null_dim() * kLn2Pi);
}

GeneralizedSelection select_lambda_outer(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                                         const SelectionConfig& cfg) {
  check_counts(d, ec);
  NewtonConfig inner = cfg.newton;
  inner.compute_covariance = false;
  std::optional<Vector> warm;
  auto objective = [&](const Vector& lambda) {
    const PenaltyOperator penalty = structure.with(lambda);
    try {
      const Vector* start = cfg.warm_start && warm ? &*warm : nullptr;
      const GeneralizedFit fit = newton_fit(d, ec, penalty, inner, start);
      warm = fit.theta_hat;
      return fit.laplace_marginal;
    } catch (const ConvergenceFailure& e) {
      throw ConvergenceFailure(std::string("outer iteration: ") + e.what(), e.trace());
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(std::string("outer iteration at ") + describe(lambda) + ": " + e.what());
    }
  };

  SearchConfig search = cfg.search;
  auto clamp = [&](double u) { return std::clamp(u, search.lower, search.upper); };
  Vector lambda(structure.dim());
  int evals = 0;
  double best = 0.0;
  if (structure.dim() == 1) {
    const ScalarResult r = brent_maximize([&](double u) { return objective(Vector::Constant(1, to_lambda(u))); }, search);
    lambda(0) = to_lambda(r.x);
    evals = r.evals;
    best = r.f;
  } else {
    search.ftol = cfg.eps_ml * stop_scale(d);
    const PlaneResult r = nelder_mead_maximize(
        [&](std::array<double, 2> u) { return objective(Eigen::Vector2d(to_lambda(clamp(u[0])), to_lambda(clamp(u[1])))); },
        search);
    lambda << to_lambda(clamp(r.x[0])), to_lambda(clamp(r.x[1]));
    evals = r.evals;
    best = r.f;
  }
  if (!std::isfinite(best))
    throw ConvergenceFailure("outer iteration: marginal likelihood is not finite at any probe", {});
  const Vector* start = cfg.warm_start && warm ? &*warm : nullptr;
  return {lambda, newton_fit(d, ec, structure.with(lambda), cfg.newton, start), evals, 0, {}};
}

GeneralizedSelection performance_iteration(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                                           const SelectionConfig& cfg, const InnerStep& inner) {
  check_counts(d, ec);
  if (d.size() != structure.size()) throw InvalidArgument("invalid parameter: data length does not match the penalty");
  const double threshold = cfg.newton.eps_l * stop_scale(d);
  Vector theta = initial_theta(d, ec);
  std::optional<Vector> prev_log10;
  std::vector<Vector> path;
  std::vector<double> trace;
  int decreases = 0;
  int evals = 0;
  bool converged = false;
  Vector lambda;
  for (int pass = 0; pass < cfg.max_iter; ++pass) {
    const WorkingData wd = working_data(theta, d, ec);
    InnerResult r = inner(wd.z, wd.w, prev_log10);
    evals += r.evals;
    lambda = r.lambda;
    path.push_back(lambda);
    prev_log10 = lambda.array().log10().matrix();
    const PenaltyOperator penalty = structure.with(lambda);
    // The gain is measured under the current λ_k. Across passes ℓ_P also
    // moves with λ_k itself, and that part only reflects search tolerance.
    const double lp_here = penalized_loglik(theta, d, ec, penalty);
    theta = std::move(r.theta);
    const double lp_next = penalized_loglik(theta, d, ec, penalty);
    trace.push_back(lp_next);
    const double gain = lp_next - lp_here;
    decreases = gain < -threshold ? decreases + 1 : 0;
    if (decreases >= 3)
      throw ConvergenceFailure(
          "performance iteration oscillates: Newton pass lowered the penalized log-likelihood 3 times in a row", trace);
    if (std::abs(gain) < threshold) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceFailure("performance iteration did not converge in " + std::to_string(cfg.max_iter) + " passes",
                             trace);
  GeneralizedFit fit = newton_fit(d, ec, structure.with(lambda), cfg.newton, &theta);
  return {lambda, std::move(fit), evals, static_cast<int>(path.size()), std::move(path)};
}

GeneralizedSelection select_lambda_performance(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                                               const SelectionConfig& cfg) {
  const double ftol = cfg.eps_ml * stop_scale(d);
  auto inner = [&](const Vector& z, const Vector& w, const std::optional<Vector>& prev) {
    SearchConfig search = cfg.search;
    if (structure.dim() == 2) {
      search.ftol = ftol;
      if (prev) search.start = {(*prev)(0), (*prev)(1)};
    }
    GaussianSelection s = select_lambda_norm(z, w, structure, search);
    return InnerResult{s.lambda, s.fit.theta_hat, s.evals};
  };
  return performance_iteration(d, ec, structure, cfg, inner);
}

Vector theta_infinity(const Vector& d, const Vector& ec, const PenaltyTemplate& structure, const NewtonConfig& cfg) {
  check_counts(d, ec);
  if (d.size() != structure.size()) throw InvalidArgument("invalid parameter: data length does not match the penalty");
  const Matrix u0 = structure.null_space_basis();
  const double total_ec = ec.sum();
  if (!(total_ec > 0.0) || !(d.sum() > 0.0))
    throw NumericalFailure("theta_infinity undefined: need positive total events and exposure");
  // Start from the constant-hazard fit, which lies in every null space.
  Vector beta = u0.transpose() * Vector::Constant(d.size(), std::log(d.sum() / total_ec));
  Vector theta = u0 * beta;
  double l = loglik(theta, d, ec);
  std::vector<double> trace{l};
  const double threshold = cfg.eps_l * stop_scale(d);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Vector mu = exposure_mean(theta, ec);
    const Matrix h = u0.transpose() * mu.asDiagonal() * u0;
    const SpdFactor factor(h, "null-space information matrix");
    Vector next_beta = beta + factor.solve(u0.transpose() * (d - mu));
    double l_next = loglik(u0 * next_beta, d, ec);
    for (int k = 0; k < cfg.max_halvings && !(l_next >= l); ++k) {
      next_beta = 0.5 * (beta + next_beta);
      l_next = loglik(u0 * next_beta, d, ec);
    }
    if (!(l_next >= l)) return theta;
    const double gain = l_next - l;
    beta = std::move(next_beta);
    theta = u0 * beta;
    l = l_next;
    trace.push_back(l);
    if (gain < threshold) return theta;
  }
  throw ConvergenceFailure("theta_infinity: Newton iteration did not converge", trace);
}

double ml_infinity(const Vector& d, const Vector& ec, const PenaltyTemplate& structure, const Vector& theta_inf) {
  const Matrix u0 = structure.null_space_basis();
  const Vector w = exposure_mean(theta_inf, ec);
  const SpdFactor factor(u0.transpose() * w.asDiagonal() * u0, "null-space information matrix");
  return loglik(theta_inf, d, ec) - 0.5 * (factor.log_det() - u0.cols() * kLn2Pi);
}

std::optional<double> delta_theta(double lp_probe, double lp_ml, double lp_inf) {
  const double denom = lp_ml - lp_inf;
  if (!(denom > 0.0)) return std::nullopt;
  return (lp_ml - lp_probe) / denom;
}

std::optional<double> delta_theta(const Vector& theta_probe, const Vector& theta_ml, const Vector& theta_inf,
                                  const Vector& d, const Vector& ec, const PenaltyOperator& penalty) {
  return delta_theta(penalized_loglik(theta_probe, d, ec, penalty), penalized_loglik(theta_ml, d, ec, penalty),
                     penalized_loglik(theta_inf, d, ec, penalty));
}

std::optional<double> delta_lambda(double ml_probe, double ml_outer, double ml_inf) {
  return delta_theta(ml_probe, ml_outer, ml_inf);
}

} // namespace wh
