#ifndef WH_DURATION_HPP
#define WH_DURATION_HPP

#include "wh/linalg.hpp"

#include <optional>
#include <span>
#include <vector>

namespace wh {

// Inclusive integer range of unit cells [lo, lo+1), ..., [hi, hi+1).
struct AxisRange {
  int lo = 0;
  int hi = 0;
  int size() const { return hi - lo + 1; }
  bool contains(const AxisRange& inner) const { return lo <= inner.lo && inner.hi <= hi; }
  bool operator==(const AxisRange&) const = default;
};

// One individual's observation. In 2D both axes advance on the same clock:
// after elapsed time u the individual sits at (x + u, z + u).
struct PortfolioRecord {
  double x = 0.0;
  std::optional<double> z;
  double t = 0.0;
  int delta = 0;
};

// Event counts and central exposures on a 1D or 2D grid, vectorized with
// x varying fastest.
struct AggregatedExposure {
  AxisRange x;
  std::optional<AxisRange> z;
  Vector d;
  Vector ec;

  int dim() const { return z ? 2 : 1; }
  int nx() const { return x.size(); }
  int nz() const { return z ? z->size() : 1; }
  int size() const { return nx() * nz(); }
  static AggregatedExposure zeros(AxisRange x, std::optional<AxisRange> z = {});
  AggregatedExposure& operator+=(const AggregatedExposure& other);
};

// Records are folded in fixed-size chunks whose partial sums are added in
// chunk order, so the result is bitwise identical for any thread count.
inline constexpr std::size_t kAggregationChunk = 4096;

AggregatedExposure aggregate_1d(std::span<const PortfolioRecord> records, int x_min, int x_max,
                                unsigned threads = 1);
AggregatedExposure aggregate_2d(std::span<const PortfolioRecord> records, int x_min, int x_max,
                                int z_min, int z_max, unsigned threads = 1);

// Time each record spends inside the grid window (the exposure it can contribute).
double time_in_window(const PortfolioRecord& r, AxisRange x, std::optional<AxisRange> z = {});

struct CrudeRates {
  Vector log_rate;          // NaN where undefined
  std::vector<bool> defined; // d > 0 and ec > 0
};

CrudeRates crude_rates(const AggregatedExposure& agg);

} // namespace wh

#endif
