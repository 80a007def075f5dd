#include "wh/duration.hpp"

#include "wh/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace wh {

namespace {

void check_range(int lo, int hi, const char* axis) {
  if (lo > hi) throw InvalidArgument(std::string("invalid grid: ") + axis + "_min > " + axis + "_max");
}

void check_record(const PortfolioRecord& r) {
  if (!(r.t > 0.0) || !std::isfinite(r.t)) throw InvalidArgument("invalid record: duration t must be > 0");
  if (r.delta != 0 && r.delta != 1) throw InvalidArgument("invalid record: delta must be 0 or 1");
}

// Cell holding the end point of [start, end): an end point on an integer
// boundary belongs to the cell below it.
int event_cell(double end) { return static_cast<int>(std::ceil(end)) - 1; }

void add_record_1d(const PortfolioRecord& r, AggregatedExposure& agg) {
  const int lo = std::max(agg.x.lo, static_cast<int>(std::floor(r.x)));
  const int hi = std::min(agg.x.hi, static_cast<int>(std::floor(r.x + r.t)));
  int last = -1; // last cell with positive exposure
  for (int x = lo; x <= hi; ++x) {
    const double e = std::min(r.t, x - r.x + 1.0) - std::max(0.0, x - r.x);
    if (e > 0.0) {
      agg.ec(x - agg.x.lo) += e;
      last = x - agg.x.lo;
    }
  }
  // An event on a cell boundary belongs to the cell it was exposed in, so
  // d > 0 never lands on a cell without exposure.
  if (r.delta == 1 && last >= 0) {
    const int cell = event_cell(r.x + r.t);
    if (cell >= agg.x.lo && cell <= agg.x.hi) agg.d(last) += 1.0;
  }
}

void add_record_2d(const PortfolioRecord& r, AggregatedExposure& agg) {
  const AxisRange& zr = *agg.z;
  const double z0 = *r.z;
  const int nx = agg.nx();
  const int xlo = std::max(agg.x.lo, static_cast<int>(std::floor(r.x)));
  const int xhi = std::min(agg.x.hi, static_cast<int>(std::floor(r.x + r.t)));
  int last = -1;
  for (int x = xlo; x <= xhi; ++x) {
    // z values reached while the trajectory is inside age band x.
    const double u_begin = std::max(0.0, x - r.x);
    const double u_end = std::min(r.t, x + 1.0 - r.x);
    const int zlo = std::max(zr.lo, static_cast<int>(std::floor(z0 + u_begin)));
    const int zhi = std::min(zr.hi, static_cast<int>(std::floor(z0 + u_end)));
    for (int z = zlo; z <= zhi; ++z) {
      const double e = std::min({r.t, x + 1.0 - r.x, z + 1.0 - z0}) - std::max({0.0, x - r.x, z - z0});
      if (e > 0.0) {
        agg.ec((z - zr.lo) * nx + (x - agg.x.lo)) += e;
        last = (z - zr.lo) * nx + (x - agg.x.lo);
      }
    }
  }
  if (r.delta == 1 && last >= 0) {
    const int cx = event_cell(r.x + r.t);
    const int cz = event_cell(z0 + r.t);
    if (cx >= agg.x.lo && cx <= agg.x.hi && cz >= zr.lo && cz <= zr.hi) agg.d(last) += 1.0;
  }
}

template <class AddFn>
AggregatedExposure fold(std::span<const PortfolioRecord> records, const AggregatedExposure& empty,
                        unsigned threads, AddFn add) {
  const std::size_t chunks = (records.size() + kAggregationChunk - 1) / kAggregationChunk;
  std::vector<AggregatedExposure> partial(chunks, empty);
  auto work = [&](std::size_t first_chunk, std::size_t stride) {
    for (std::size_t c = first_chunk; c < chunks; c += stride) {
      const std::size_t end = std::min(records.size(), (c + 1) * kAggregationChunk);
      for (std::size_t i = c * kAggregationChunk; i < end; ++i) add(records[i], partial[c]);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(chunks, 1))));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  AggregatedExposure total = empty;
  for (const auto& p : partial) total += p;
  return total;
}

} // namespace

AggregatedExposure AggregatedExposure::zeros(AxisRange x, std::optional<AxisRange> z) {
  AggregatedExposure agg;
  agg.x = x;
  agg.z = z;
  agg.d = Vector::Zero(agg.size());
  agg.ec = Vector::Zero(agg.size());
  return agg;
}

AggregatedExposure& AggregatedExposure::operator+=(const AggregatedExposure& other) {
  if (!(x == other.x) || z != other.z) throw InvalidArgument("cannot add aggregates over different grids");
  d += other.d;
  ec += other.ec;
  return *this;
}

AggregatedExposure aggregate_1d(std::span<const PortfolioRecord> records, int x_min, int x_max,
                                unsigned threads) {
  check_range(x_min, x_max, "x");
  for (const auto& r : records) check_record(r);
  return fold(records, AggregatedExposure::zeros({x_min, x_max}), threads, add_record_1d);
}

AggregatedExposure aggregate_2d(std::span<const PortfolioRecord> records, int x_min, int x_max,
                                int z_min, int z_max, unsigned threads) {
  check_range(x_min, x_max, "x");
  check_range(z_min, z_max, "z");
  for (const auto& r : records) {
    check_record(r);
    if (!r.z) throw InvalidArgument("invalid record: 2D aggregation needs a z value");
  }
  return fold(records, AggregatedExposure::zeros({x_min, x_max}, AxisRange{z_min, z_max}), threads,
              add_record_2d);
}

double time_in_window(const PortfolioRecord& r, AxisRange x, std::optional<AxisRange> z) {
  double begin = std::max(0.0, x.lo - r.x);
  double end = std::min(r.t, x.hi + 1.0 - r.x);
  if (z) {
    const double z0 = r.z.value_or(0.0);
    begin = std::max(begin, z->lo - z0);
    end = std::min(end, z->hi + 1.0 - z0);
  }
  return std::max(0.0, end - begin);
}

CrudeRates crude_rates(const AggregatedExposure& agg) {
  CrudeRates out;
  out.log_rate = Vector::Constant(agg.size(), std::numeric_limits<double>::quiet_NaN());
  out.defined.assign(agg.size(), false);
  for (int i = 0; i < agg.size(); ++i) {
    if (agg.d(i) > 0.0 && agg.ec(i) > 0.0) {
      out.log_rate(i) = std::log(agg.d(i) / agg.ec(i));
      out.defined[i] = true;
    }
  }
  return out;
}

} // namespace wh
