#ifndef WH_EXTRAPOLATION_HPP
#define WH_EXTRAPOLATION_HPP

#include "wh/duration.hpp"
#include "wh/gaussian.hpp"
#include "wh/generalized.hpp"
#include "wh/linalg.hpp"
#include "wh/penalty.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace wh {

// Placement of an original grid inside an extended one. Q stacks the rows of
// C (original cells, original order) on top of those of C̄ (new cells,
// ascending), so QQᵀ = I and v = Qᵀ[Cv; C̄v].
struct GridEmbedding {
  AxisRange x, x_plus;
  std::optional<AxisRange> z, z_plus;
  std::vector<int> inner; // extended index of original cell k
  std::vector<int> outer; // extended indices of the new cells

  int dim() const { return z ? 2 : 1; }
  int size() const { return static_cast<int>(inner.size()); }
  int size_plus() const { return static_cast<int>(inner.size() + outer.size()); }
  int nx_plus() const { return x_plus.size(); }
  int nz_plus() const { return z_plus ? z_plus->size() : 1; }
  Matrix c() const;
  Matrix c_bar() const;
  Matrix q() const;
  Vector scatter(const Vector& v) const; // Cᵀv
  Vector gather(const Vector& v_plus) const; // Cv
  Vector permute(const Vector& v_plus) const; // Qv
  Vector unpermute(const Vector& v) const; // Qᵀv
};

GridEmbedding build_embedding(AxisRange x, AxisRange x_plus);
GridEmbedding build_embedding(AxisRange x, AxisRange x_plus, AxisRange z, AxisRange z_plus);

// Extended penalty P₊ with the original λ, and its blocks in the Q ordering:
// QP₊Qᵀ = [[P_λ + P11, P12], [P21, P22]].
struct ExtendedPenalty {
  Matrix p_plus;
  Matrix p11, p12, p21, p22;
};

ExtendedPenalty extended_penalty(const GridEmbedding& embedding, const PenaltyOperator& penalty);

// What extrapolation consumes from a fit: observations, weights, fitted
// values, covariance (W + P_λ)⁻¹ and the penalty.
struct SmoothedFit {
  Vector y;
  Vector w;
  Vector y_hat;
  Matrix psi;
  PenaltyOperator penalty;

  static SmoothedFit from(const GaussianFit& fit);
  // y is the working vector θ̂ + (d − μ̂)/W_θ̂ and W is W_θ̂.
  static SmoothedFit from(const GeneralizedFit& fit);
};

enum class ExtrapolationMode { unconstrained, constrained };

struct ExtrapolationResult {
  ExtrapolationMode mode = ExtrapolationMode::constrained;
  GridEmbedding embedding;
  ExtendedPenalty blocks;
  Vector y_plus;
  Matrix psi_plus;
  Matrix psi_plus_no_innovation; // constrained mode only: A*ΨA*ᵀ
};

ExtrapolationResult extrapolate_unconstrained(const SmoothedFit& fit, const GridEmbedding& embedding);
ExtrapolationResult extrapolate_constrained(const SmoothedFit& fit, const GridEmbedding& embedding);
ExtrapolationResult extrapolate(const SmoothedFit& fit, const GridEmbedding& embedding, ExtrapolationMode mode);

// The W₊y₊ term of the Lagrange solution, which should vanish because W₊ = CᵀWC.
Vector lagrange_residual_term(const SmoothedFit& fit, const GridEmbedding& embedding);

std::pair<Vector, Vector> credible_intervals_extended(const ExtrapolationResult& result, double alpha);

} // namespace wh

#endif
