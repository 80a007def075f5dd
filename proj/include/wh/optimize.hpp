#ifndef WH_OPTIMIZE_HPP
#define WH_OPTIMIZE_HPP

#include <array>
#include <functional>

namespace wh {

struct SearchConfig {
  double lower = -6.0;                    // Brent bracket
  double upper = 12.0;
  std::array<double, 2> start{2.0, 2.0}; // Nelder-Mead start
  double step = 1.0;                      // initial simplex edge per coordinate
  double tol = 1e-3;                      // absolute, in parameter space
  double ftol = 0.0;                      // NM also stops once the f spread is <= ftol
  int max_evals = 500;
};

struct ScalarResult {
  double x = 0.0;
  double f = 0.0;
  int evals = 0;
  bool hit_max_evals = false;
};

struct PlaneResult {
  std::array<double, 2> x{};
  double f = 0.0;
  int evals = 0;
  bool hit_max_evals = false;
};

// Brent's golden-section/parabolic search for a maximum on [lower, upper].
// Both bracket ends are probed too, so a monotone objective returns the
// boundary exactly. Non-finite values are treated as -inf.
ScalarResult brent_maximize(const std::function<double(double)>& f, const SearchConfig& cfg);

// Nelder-Mead maximization in the plane with coefficients (1, 2, 0.5, 0.5).
// Stops when every vertex lies within tol of the best one (or the f spread
// is within ftol, when ftol > 0).
PlaneResult nelder_mead_maximize(const std::function<double(std::array<double, 2>)>& f,
                                 const SearchConfig& cfg);

} // namespace wh

#endif
