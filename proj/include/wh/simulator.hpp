#ifndef WH_SIMULATOR_HPP
#define WH_SIMULATOR_HPP

#include "wh/duration.hpp"
#include "wh/linalg.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace wh {

// Piecewise-constant log-hazard, one value per unit cell.
class HazardLaw {
public:
  using Fn = std::function<double(int x, int z)>;
  HazardLaw(int dim, Fn log_hazard) : dim_(dim), fn_(std::move(log_hazard)) {}

  // ln μ(x) = a + b·x.
  static HazardLaw gompertz(double a = -9.0, double b = 0.085);
  // Gompertz with a mild quadratic bend, ln μ(x) = a + b·x + c·(x − 67)².
  // A purely log-linear law lies in the order-2 null space, where the
  // selected λ runs off to the search bound.
  static HazardLaw default_1d(double a = -9.0, double b = 0.085, double c = -2.5e-4);
  static HazardLaw constant(double mu, int dim = 1);
  // ln μ(x, z) = c + bx·x + bend·(x − x_mid)² + g(z); z beyond the table
  // reuses its last entry.
  static HazardLaw additive(double c, double bx, std::vector<double> g, double bend = 0.0, double x_mid = 0.0);
  // Default long-term-care style law: high early mortality decaying with z,
  // bent in x for the same reason as default_1d.
  static HazardLaw default_2d();

  int dim() const { return dim_; }
  double log_hazard(int x, int z = 0) const { return fn_(x, z); }
  Vector on_grid(AxisRange x, std::optional<AxisRange> z = {}) const;

private:
  int dim_;
  Fn fn_;
};

struct SimConfig {
  int dim = 1;
  long m = 1000;           // head count
  double x_entry_lo = 30.0; // entry age ~ U[x_entry_lo, x_entry_hi)
  double x_entry_hi = 100.0;
  double z_entry_lo = 0.0;  // 2D: entry duration ~ U[z_entry_lo, z_entry_hi]
  double z_entry_hi = 0.0;
  double censor_rate = 0.1; // exponential censoring; 0 disables it
  double horizon = 20.0;    // administrative end of observation
  std::uint64_t seed = 1;
};

// Exact piecewise-exponential sampling along each trajectory. Deterministic
// for a given seed.
std::vector<PortfolioRecord> simulate(const SimConfig& config, const HazardLaw& law);

// Order-independent per-replicate seed.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

} // namespace wh

#endif
