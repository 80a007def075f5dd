#include "wh/rank_reduction.hpp"

#include "wh/error.hpp"
#include "wh/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wh {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

} // namespace

std::pair<int, int> choose_p(int nx, int nz, int p_max, int qx, int qz) {
  if (nx < 1 || nz < 1) throw InvalidArgument("invalid parameter: grid lengths must be positive");
  const double kappa = std::min(1.0, std::sqrt(static_cast<double>(p_max) / (static_cast<double>(nx) * nz)));
  // The small epsilon keeps exact products such as 0.5·30 from flooring to 14.
  const int px = static_cast<int>(std::floor(kappa * nx + 1e-9));
  const int pz = static_cast<int>(std::floor(kappa * nz + 1e-9));
  return {std::clamp(px, std::min(qx, nx), nx), std::clamp(pz, std::min(qz, nz), nz)};
}

namespace {

ReducedFit solve_reduced(const Matrix& gram, const Vector& utwy, const EigenBasis& basis, const Vector& lambda,
                         bool with_edf) {
  Matrix system = gram;
  system.diagonal() += basis.combined_eigenvalues(lambda);
  const SpdFactor factor(system, "reduced system U'WU + S");
  ReducedFit out;
  out.beta = factor.solve(utwy);
  out.y_hat = basis.apply(out.beta);
  out.log_det_system = factor.log_det();
  if (with_edf) {
    const Matrix f = factor.solve_matrix(gram);
    out.edf.per_component = f.diagonal();
    out.edf.total = out.edf.per_component.sum();
  }
  return out;
}

Vector masked_product(const Vector& y, const Vector& w) {
  return (w.array() > 0.0).select(w.cwiseProduct(y), 0.0);
}

double reduced_marginal(const Vector& lambda, const Vector& y, const Vector& w, const EigenBasis& basis,
                        const Matrix& gram, const Vector& utwy) {
  if ((lambda.array() <= 0.0).all())
    throw UndefinedPdet("undefined pseudo-determinant: all smoothing parameters are zero");
  const ReducedFit fit = solve_reduced(gram, utwy, basis, lambda, false);
  const Vector s = basis.combined_eigenvalues(lambda);
  const double tol = s.maxCoeff() * kEigenZeroTol;
  double log_pdet = 0.0;
  int null_dim = 0;
  for (double v : s) {
    if (v > tol)
      log_pdet += std::log(v);
    else
      ++null_dim;
  }
  const Vector r = (w.array() > 0.0).select(y - fit.y_hat, 0.0);
  const double quad = r.dot(w.cwiseProduct(r)) + fit.beta.dot(s.cwiseProduct(fit.beta));
  return -0.5 * (quad - log_pdet_weights(w) - log_pdet + fit.log_det_system +
                 (count_nonzero(w) - null_dim) * kLn2Pi);
}

} // namespace

ReducedFit fit_reduced(const Vector& y, const Vector& w, const EigenBasis& basis, const Vector& lambda,
                       bool with_edf) {
  if (y.size() != basis.grid_size() || w.size() != basis.grid_size())
    throw InvalidArgument("invalid parameter: data length does not match the basis");
  return solve_reduced(basis.weighted_gram(w), basis.apply_transpose(masked_product(y, w)), basis, lambda, with_edf);
}

double marginal_loglik_reduced(const Vector& lambda, const Vector& y, const Vector& w, const EigenBasis& basis) {
  if (y.size() != basis.grid_size() || w.size() != basis.grid_size())
    throw InvalidArgument("invalid parameter: data length does not match the basis");
  return reduced_marginal(lambda, y, w, basis, basis.weighted_gram(w), basis.apply_transpose(masked_product(y, w)));
}

GeneralizedSelection select_lambda_reduced(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                                           int p_max, const SelectionConfig& cfg) {
  EigenBasis basis;
  if (structure.dim() == 1) {
    basis = eigen_basis(structure, std::clamp(p_max, structure.qx(), structure.nx()));
  } else {
    const auto [px, pz] = choose_p(structure.nx(), structure.nz(), p_max, structure.qx(), structure.qz());
    basis = eigen_basis(structure, px, pz);
  }
  const double ftol = cfg.eps_ml * std::max(d.sum(), 1.0);
  auto inner = [&](const Vector& z, const Vector& w, const std::optional<Vector>& prev) {
    const Matrix gram = basis.weighted_gram(w);
    const Vector utwy = basis.apply_transpose(masked_product(z, w));
    auto objective = [&](const Vector& lambda) {
      try {
        return reduced_marginal(lambda, z, w, basis, gram, utwy);
      } catch (const NumericalFailure&) {
        return -std::numeric_limits<double>::infinity();
      }
    };
    SearchConfig search = cfg.search;
    auto clamp = [&](double u) { return std::clamp(u, search.lower, search.upper); };
    Vector lambda(structure.dim());
    double best = 0.0;
    int evals = 0;
    if (structure.dim() == 1) {
      const ScalarResult r =
          brent_maximize([&](double u) { return objective(Vector::Constant(1, to_lambda(u))); }, search);
      lambda(0) = to_lambda(r.x);
      best = r.f;
      evals = r.evals;
    } else {
      search.ftol = ftol;
      if (prev) search.start = {(*prev)(0), (*prev)(1)};
      const PlaneResult r = nelder_mead_maximize(
          [&](std::array<double, 2> u) {
            return objective(Eigen::Vector2d(to_lambda(clamp(u[0])), to_lambda(clamp(u[1]))));
          },
          search);
      lambda << to_lambda(clamp(r.x[0])), to_lambda(clamp(r.x[1]));
      best = r.f;
      evals = r.evals;
    }
    if (!std::isfinite(best))
      throw ConvergenceFailure("reduced selection: marginal likelihood is not finite at any probe", {});
    return InnerResult{lambda, solve_reduced(gram, utwy, basis, lambda, false).y_hat, evals};
  };
  return performance_iteration(d, ec, structure, cfg, inner);
}

} // namespace wh
