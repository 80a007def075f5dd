#ifndef WH_TOOLS_COMMANDS_HPP
#define WH_TOOLS_COMMANDS_HPP

#include "wh/duration.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace wh::cli {

// Parses "A..B" (integers, A <= B).
AxisRange parse_range(const std::string& text, const std::string& flag);

struct AggregateOptions {
  std::string input;
  std::optional<AxisRange> x, z;
  int dim = 0; // 0: from the header or from the presence of --z
  unsigned threads = 1;
  std::string out;
};

enum class Method { outer, performance };

struct FitOptions {
  std::string input;
  int dim = 0; // 0: from the header
  int q = 2;
  std::optional<int> qx, qz;
  std::optional<double> lambda, lambda_x, lambda_z; // all empty: automatic selection
  Method method = Method::performance;
  std::optional<int> p_max;
  double alpha = 0.05;
  bool compare_outer = false;
  std::string out;
};

struct ExtrapolateOptions {
  std::string fit_dir;
  std::optional<AxisRange> x, z;
  std::string mode = "constrained";
  double alpha = 0.05;
  bool ratio = false;
  std::string out;
};

struct ReplicateOptions {
  std::string experiment;
  int replicates = 10;
  std::uint64_t seed = 1;
  unsigned threads = 0; // 0: all cores, capped by WH_MAX_THREADS
  std::string out;
};

struct SimulateOptions {
  std::string preset = "annuity";
  std::optional<long> m;
  std::uint64_t seed = 1;
  std::string out;
};

// Each command writes its files under `out` (created if needed) and reports
// warnings and progress on `log`. Errors propagate as wh::Error.
void run_aggregate(const AggregateOptions& opt, std::ostream& log);
void run_fit(const FitOptions& opt, std::ostream& log);
void run_extrapolate(const ExtrapolateOptions& opt, std::ostream& log);
void run_replicate(const ReplicateOptions& opt, std::ostream& log);
void run_simulate(const SimulateOptions& opt, std::ostream& log);

// 2 for bad input, 3 for convergence failures, 4 for numerical failures.
int exit_code_for(const std::exception& e);

} // namespace wh::cli

#endif
