#include "wh/simulator.hpp"

#include "wh/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace wh {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void check_config(const SimConfig& c) {
  if (c.dim != 1 && c.dim != 2) throw InvalidArgument("invalid simulation config: dim must be 1 or 2");
  if (c.m < 1) throw InvalidArgument("invalid simulation config: m must be >= 1");
  if (!(c.x_entry_lo <= c.x_entry_hi) || !(c.z_entry_lo <= c.z_entry_hi))
    throw InvalidArgument("invalid simulation config: entry ranges are reversed");
  if (!(c.censor_rate >= 0.0) || !(c.horizon > 0.0))
    throw InvalidArgument("invalid simulation config: need censor_rate >= 0 and horizon > 0");
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace

HazardLaw HazardLaw::gompertz(double a, double b) {
  return HazardLaw(1, [a, b](int x, int) { return a + b * x; });
}

HazardLaw HazardLaw::default_1d(double a, double b, double c) {
  return HazardLaw(1, [a, b, c](int x, int) { return a + b * x + c * (x - 67.0) * (x - 67.0); });
}

HazardLaw HazardLaw::constant(double mu, int dim) {
  const double log_mu = mu > 0.0 ? std::log(mu) : -std::numeric_limits<double>::infinity();
  return HazardLaw(dim, [log_mu](int, int) { return log_mu; });
}

HazardLaw HazardLaw::additive(double c, double bx, std::vector<double> g, double bend, double x_mid) {
  if (g.empty()) throw InvalidArgument("invalid hazard law: empty z profile");
  return HazardLaw(2, [c, bx, g = std::move(g), bend, x_mid](int x, int z) {
    const auto k = static_cast<std::size_t>(std::clamp<long>(z, 0, static_cast<long>(g.size()) - 1));
    return c + bx * x + bend * (x - x_mid) * (x - x_mid) + g[k];
  });
}

HazardLaw HazardLaw::default_2d() {
  return additive(-6.7, 0.06, {1.2, 0.8, 0.5, 0.3, 0.15, 0.05, 0.0}, 1.5e-3, 82.0);
}

Vector HazardLaw::on_grid(AxisRange x, std::optional<AxisRange> z) const {
  const int nz = z ? z->size() : 1;
  Vector out(x.size() * nz);
  for (int j = 0; j < nz; ++j)
    for (int i = 0; i < x.size(); ++i) out(j * x.size() + i) = log_hazard(x.lo + i, z ? z->lo + j : 0);
  return out;
}

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

std::vector<PortfolioRecord> simulate(const SimConfig& config, const HazardLaw& law) {
  check_config(config);
  if (law.dim() != config.dim) throw InvalidArgument("invalid simulation config: law and config dimensions differ");
  std::mt19937_64 rng(config.seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::vector<PortfolioRecord> out;
  out.reserve(static_cast<std::size_t>(config.m));
  for (long i = 0; i < config.m; ++i) {
    PortfolioRecord r;
    r.x = uniform(rng, config.x_entry_lo, config.x_entry_hi);
    double z0 = 0.0;
    if (config.dim == 2) {
      z0 = uniform(rng, config.z_entry_lo, config.z_entry_hi);
      r.z = z0;
    }
    double limit = config.horizon;
    if (config.censor_rate > 0.0)
      limit = std::min(limit, std::exponential_distribution<double>(config.censor_rate)(rng));
    if (!(limit > 0.0)) limit = std::numeric_limits<double>::min();
    const double target = unit_exp(rng);

    // Walk the cells crossed by the trajectory until the cumulative hazard
    // reaches the exponential draw or observation stops.
    double u = 0.0, cum = 0.0;
    r.t = limit;
    r.delta = 0;
    while (u < limit) {
      const int cx = static_cast<int>(std::floor(r.x + u));
      double boundary = cx + 1.0 - r.x;
      int cz = 0;
      if (config.dim == 2) {
        cz = static_cast<int>(std::floor(z0 + u));
        boundary = std::min(boundary, cz + 1.0 - z0);
      }
      double end = std::min(boundary, limit);
      if (!(end > u)) end = std::nextafter(u, std::numeric_limits<double>::infinity());
      const double mu = std::exp(law.log_hazard(cx, cz));
      const double seg = mu * (end - u);
      if (mu > 0.0 && cum + seg >= target) {
        const double t = u + (target - cum) / mu;
        if (t < limit) {
          r.t = std::max(t, std::numeric_limits<double>::min());
          r.delta = 1;
        }
        break;
      }
      cum += seg;
      u = end;
    }
    out.push_back(r);
  }
  return out;
}

} // namespace wh
