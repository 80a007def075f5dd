#ifndef WH_RANK_REDUCTION_HPP
#define WH_RANK_REDUCTION_HPP

#include "wh/basis.hpp"
#include "wh/generalized.hpp"
#include "wh/linalg.hpp"
#include "wh/penalty.hpp"

#include <utility>

namespace wh {

// Per-axis ranks proportional to the axis lengths: κ = sqrt(p_max/(nx·nz)),
// p = floor(min(κ,1)·n), then raised to the difference order.
std::pair<int, int> choose_p(int nx, int nz, int p_max, int qx = 1, int qz = 1);

struct EdfReport {
  Vector per_component; // diag(F), F = (UᵀWU + S)⁻¹UᵀWU
  double total = 0.0;
};

struct ReducedFit {
  Vector beta;
  Vector y_hat;
  EdfReport edf;
  double log_det_system = 0.0; // ln|UᵀWU + S|
};

ReducedFit fit_reduced(const Vector& y, const Vector& w, const EigenBasis& basis, const Vector& lambda,
                       bool with_edf = true);

// Gaussian marginal likelihood with the smooth restricted to span(U). The
// constants keep the data-side count n*.
double marginal_loglik_reduced(const Vector& lambda, const Vector& y, const Vector& w, const EigenBasis& basis);

// Performance iteration whose inner solves all run in the reduced basis; the
// returned fit is the full-rank newton_fit at the selected λ.
GeneralizedSelection select_lambda_reduced(const Vector& d, const Vector& ec, const PenaltyTemplate& structure,
                                           int p_max, const SelectionConfig& cfg = {});

} // namespace wh

#endif
