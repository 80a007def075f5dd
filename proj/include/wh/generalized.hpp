#ifndef WH_GENERALIZED_HPP
#define WH_GENERALIZED_HPP

#include "wh/gaussian.hpp"
#include "wh/linalg.hpp"
#include "wh/optimize.hpp"
#include "wh/penalty.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace wh {

struct NewtonConfig {
  double eps_l = 1e-8;  // stop once the ℓ_P gain drops below eps_l·sum(d)
  int max_iter = 50;
  int max_halvings = 10;
  bool compute_covariance = true; // diag((W+P)⁻¹) and edf; selection loops skip it
};

struct GeneralizedFit {
  Vector d;
  Vector ec;
  PenaltyOperator penalty;
  Vector theta_hat;
  Vector weights;          // exp(θ̂)⊙e_c
  PenalizedSystem system;  // W_θ̂ + P_λ
  Vector psi_diagonal;     // empty unless compute_covariance
  double edf = 0.0;
  double penalized_loglik = 0.0;
  double laplace_marginal = 0.0; // NaN when every λ is zero
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace; // ℓ_P after each iterate, starting with θ₀
};

// Throws DataInconsistency unless d ≥ 0, e_c ≥ 0 and d = 0 wherever e_c = 0.
void check_counts(const Vector& d, const Vector& ec);

// Poisson-form log-likelihood θᵀd − exp(θ)ᵀe_c.
double loglik(const Vector& theta, const Vector& d, const Vector& ec);
double penalized_loglik(const Vector& theta, const Vector& d, const Vector& ec, const PenaltyOperator& penalty);
Vector penalized_gradient(const Vector& theta, const Vector& d, const Vector& ec, const PenaltyOperator& penalty);
Matrix penalized_hessian(const Vector& theta, const Vector& ec, const PenaltyOperator& penalty);

// ln(d/e_c) where d > 0; ln(0.5/(e_c+0.5)) where d = 0 < e_c; the global
// log crude rate where e_c = 0.
Vector initial_theta(const Vector& d, const Vector& ec);

// Working weights and pseudo-observations at θ: W = exp(θ)⊙e_c and
// z = θ + (d − W)/W (z = θ where W = 0).
struct WorkingData {
  Vector w;
  Vector z;
};
WorkingData working_data(const Vector& theta, const Vector& d, const Vector& ec);

// One undamped Newton iterate (W + P_λ)⁻¹W z.
Vector newton_step(const Vector& theta, const Vector& d, const Vector& ec, const PenaltyOperator& penalty);

// Penalized likelihood maximization with step halving. Throws
// ConvergenceFailure (carrying the trace) after max_iter iterations.
GeneralizedFit newton_fit(const Vector& d, const Vector& ec, const PenaltyOperator& penalty,
                          const NewtonConfig& cfg = {}, const Vector* theta0 = nullptr);

// ℓ(θ̂) − ½[θ̂ᵀPθ̂ − ln|P|₊ + ln|W_θ̂+P| − q ln 2π].
double laplace_marginal_loglik(const GeneralizedFit& fit);

struct SelectionConfig {
  NewtonConfig newton;
  double eps_ml = 1e-8;
  SearchConfig search;
  bool warm_start = false; // outer iteration: reuse the last θ̂ as θ₀
  int max_iter = 50;      // performance iteration passes
};

struct GeneralizedSelection {
  Vector lambda;
  GeneralizedFit fit;
  int evals = 0;                   // objective evaluations (all passes)
  int passes = 0;                  // performance iteration passes
  std::vector<Vector> lambda_path; // λ_k per performance pass
};

// λ as the outer loop: Brent (1D) / Nelder-Mead (2D) on log10 λ, a full
// Newton solve per probe.
GeneralizedSelection select_lambda_outer(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                                         const SelectionConfig& cfg = {});

// Inner step of the performance iteration: given pseudo-data (z, W) and the
// previous pass's log10 λ (absent on the first pass), return the selected λ
// and the next iterate.
struct InnerResult {
  Vector lambda;
  Vector theta;
  int evals = 0;
};
using InnerStep = std::function<InnerResult(const Vector& z, const Vector& w, const std::optional<Vector>& prev_log10)>;

// λ re-selected on the pseudo-data at every Newton pass; the returned fit is
// a full newton_fit at the final λ.
GeneralizedSelection performance_iteration(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                                           const SelectionConfig& cfg, const InnerStep& inner);

GeneralizedSelection select_lambda_performance(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                                               const SelectionConfig& cfg = {});

// Maximum likelihood fit restricted to the penalty null space (λ → ∞).
Vector theta_infinity(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                      const NewtonConfig& cfg = {});

// λ → ∞ limit of the Laplace marginal: ℓ(θ̂_∞) − ½[ln|U₀ᵀW_∞U₀| − q ln 2π]
// with U₀ an orthonormal null-space basis.
double ml_infinity(const Vector& d, const Vector& ec, const PenaltyTemplate& structure, const Vector& theta_inf);

// Relative losses; empty when the denominator is not positive.
std::optional<double> delta_theta(double lp_probe, double lp_ml, double lp_inf);
std::optional<double> delta_theta(const Vector& theta_probe, const Vector& theta_ml, const Vector& theta_inf,
                                  const Vector& d, const Vector& ec, const PenaltyOperator& penalty);
std::optional<double> delta_lambda(double ml_probe, double ml_outer, double ml_inf);

} // namespace wh

#endif
