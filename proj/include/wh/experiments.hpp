#ifndef WH_EXPERIMENTS_HPP
#define WH_EXPERIMENTS_HPP

#include "wh/duration.hpp"
#include "wh/generalized.hpp"
#include "wh/simulator.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace wh {

// A simulated portfolio: generator, law, aggregation window and orders.
struct Portfolio {
  SimConfig sim;
  HazardLaw law;
  AxisRange x;
  std::optional<AxisRange> z;
  int qx = 2;
  int qz = 2;

  PenaltyTemplate structure() const;
  AggregatedExposure draw(std::uint64_t seed) const;
};

// Presets. Laws and generators are ours; head counts follow the experiments
// they back.
Portfolio annuity_portfolio(long m);       // 1D, ages 30..104
Portfolio ltc_portfolio(long m, int nx = 25, int nz = 12); // 2D, ages from 70 × duration from 0
Portfolio selection_portfolio();           // 1D, ages 50..99, about 100k person-years
Portfolio reduction_portfolio();           // 1D, ages 30..103 (74 cells)

// Δ(θ̂_norm): original WH on (ln(d/e_c), d) against the generalized fit, both
// at the λ selected by outer iteration.
struct BiasMetrics {
  Vector lambda;
  double delta_norm = 0.0;
};
BiasMetrics normal_bias(const AggregatedExposure& agg, const PenaltyTemplate& structure);

// Reference quantities for Δ(λ) on one dataset.
struct OuterReference {
  GeneralizedSelection outer;
  double ml_outer = 0.0;
  double ml_inf = 0.0;
  double seconds = 0.0;
};
OuterReference outer_reference(const AggregatedExposure& agg, const PenaltyTemplate& structure,
                               const SelectionConfig& cfg = {});
// Δ(λ) of a candidate λ against the reference (Laplace marginal via newton_fit).
std::optional<double> delta_lambda_at(const Vector& lambda, const AggregatedExposure& agg,
                                      const PenaltyTemplate& structure, const OuterReference& ref);

// p_max used by the 2D half of the rank-reduction sweep (25×12 grid → 15×7).
inline constexpr int kReduced2dPmax = 120;

struct MetricRow {
  std::string group;
  int replicate = 0;
  std::string metric;
  double value = 0.0;
};
struct TimingRow {
  std::string group;
  int replicate = 0;
  std::string label;
  double seconds = 0.0;
};
struct FailureRow {
  std::string group;
  int replicate = 0;
  std::string message;
};
struct MedianRow {
  std::string group;
  std::string metric;
  double value = 0.0;
  int count = 0;
};

struct ExperimentConfig {
  std::string id; // normal-approx-bias | outer-vs-performance | rank-reduction-sweep
  int replicates = 10;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::function<void(const std::string&)> progress; // called under a lock
};

struct ExperimentReport {
  std::string experiment;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<MetricRow> metrics; // job order, independent of thread count
  std::vector<TimingRow> timings;
  std::vector<FailureRow> failures;

  std::vector<MedianRow> medians() const;        // finite values only
  std::vector<MedianRow> timing_medians() const; // metric = timing label
};

std::vector<std::string> experiment_ids();
ExperimentReport replicate_experiment(const ExperimentConfig& config);

double median(std::vector<double> values);

} // namespace wh

#endif
