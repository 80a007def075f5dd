#ifndef WH_GAUSSIAN_HPP
#define WH_GAUSSIAN_HPP

#include "wh/basis.hpp"
#include "wh/linalg.hpp"
#include "wh/optimize.hpp"
#include "wh/penalty.hpp"

#include <utility>

namespace wh {

// Φ⁻¹(p) for 0 < p < 1.
double normal_quantile(double p);

// Half-width multiplier Φ⁻¹(1 − α/2); throws InvalidArgument unless 0 < α < 1.
double interval_multiplier(double alpha);

struct GaussianFit {
  Vector y;
  Vector w;
  PenaltyOperator penalty;
  Vector theta_hat;
  PenalizedSystem system;  // W + P_λ
  Vector psi_diagonal;     // diag((W + P_λ)⁻¹)
  double edf = 0.0;        // tr((W + P_λ)⁻¹W)
  double marginal_loglik;  // NaN when every λ is zero
  int n_star = 0;          // number of nonzero weights
};

// Throws SingularSystem when the nonzero-weight pattern cannot make W + P_λ
// invertible (at least q nonzero weights in 1D; in 2D at least qx·qz of
// them spread over qx distinct x values and qz distinct z values).
void check_invertible(const Vector& w, const PenaltyOperator& penalty);

GaussianFit fit_gaussian(const Vector& y, const Vector& w, const PenaltyOperator& penalty);

std::pair<Vector, Vector> credible_intervals(const GaussianFit& fit, double alpha);

// Log marginal likelihood of the Gaussian model including every constant:
// −½[(y−ŷ)ᵀW(y−ŷ) + ŷᵀPŷ − ln|W|₊ − ln|P|₊ + ln|W+P| + (n*−q)ln 2π]
// where q is the dimension of the penalty null space.
double marginal_loglik_norm(const Vector& lambda, const Vector& y, const Vector& w,
                            const PenaltyTemplate& structure);

// Same quantity from the pieces of an existing solve.
double marginal_loglik_norm(const Vector& y, const Vector& w, const PenaltyOperator& penalty,
                            const Vector& y_hat, double log_det_system);

struct GaussianSelection {
  Vector lambda;
  GaussianFit fit;
  int evals = 0;
  bool hit_max_evals = false;
};

// Maximizes the marginal likelihood over log10 λ: Brent on [lower, upper]
// in 1D, Nelder-Mead from `start` in 2D (coordinates clamped to the bracket).
GaussianSelection select_lambda_norm(const Vector& y, const Vector& w, const PenaltyTemplate& structure,
                                     const SearchConfig& cfg = {});

// Generalized cross-validation score n·RSS_w / (n* − tr H)². Diagnostic only.
double gcv(const Vector& lambda, const Vector& y, const Vector& w, const PenaltyTemplate& structure);

// Helpers shared with the other smoothers.
double log_pdet_weights(const Vector& w);
int count_nonzero(const Vector& w);
double to_lambda(double log10_lambda);

} // namespace wh

#endif
