#include "commands.hpp"

#include "wh/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace wh::cli;

// CLI11 collects "A..B" as text; the range is parsed after the callback fires.
struct RangeFlag {
  std::string text;
  std::optional<wh::AxisRange> get(const std::string& flag) const {
    if (text.empty()) return std::nullopt;
    return parse_range(text, flag);
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whittaker-Henderson graduation of mortality and hazard tables"};
  app.require_subcommand(1);

  AggregateOptions agg;
  RangeFlag agg_x, agg_z;
  auto* aggregate = app.add_subcommand("aggregate", "Individual records -> event counts and central exposures");
  aggregate->add_option("records", agg.input, "CSV with header x,t,delta or x,z,t,delta")->required();
  aggregate->add_option("--x", agg_x.text, "Age window A..B (inclusive unit cells)")->required();
  aggregate->add_option("--z", agg_z.text, "Duration window A..B (2D)");
  aggregate->add_option("--dim", agg.dim, "1 or 2 (default: from the header)")->check(CLI::IsMember({1, 2}));
  aggregate->add_option("--threads", agg.threads, "Worker threads")->check(CLI::PositiveNumber);
  aggregate->add_option("--out", agg.out, "Output directory")->required();

  FitOptions fit;
  std::string method = "perf";
  bool auto_lambda = false;
  auto* fit_cmd = app.add_subcommand("fit", "Generalized smoothing of an aggregate table");
  fit_cmd->add_option("aggregates", fit.input, "CSV with header x,d,ec or x,z,d,ec")->required();
  fit_cmd->add_option("--dim", fit.dim, "Expected dimension")->check(CLI::IsMember({1, 2}));
  fit_cmd->add_option("--q", fit.q, "Difference order (both axes)")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--qx", fit.qx, "Difference order along x")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--qz", fit.qz, "Difference order along z")->check(CLI::PositiveNumber);
  auto* lambda_opt = fit_cmd->add_option("--lambda", fit.lambda, "Fixed smoothing parameter");
  auto* lx_opt = fit_cmd->add_option("--lambda-x", fit.lambda_x, "Fixed smoothing parameter along x");
  auto* lz_opt = fit_cmd->add_option("--lambda-z", fit.lambda_z, "Fixed smoothing parameter along z");
  auto* auto_opt = fit_cmd->add_flag("--auto", auto_lambda, "Select lambda by marginal likelihood (default)");
  auto_opt->excludes(lambda_opt)->excludes(lx_opt)->excludes(lz_opt);
  fit_cmd->add_option("--method", method, "Selection method: outer or perf")
      ->check(CLI::IsMember({"outer", "perf", "performance"}));
  fit_cmd->add_option("--pmax", fit.p_max, "Rank reduction: maximum number of eigenvectors")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--alpha", fit.alpha, "Credible interval level 1 - alpha");
  fit_cmd->add_flag("--compare-outer", fit.compare_outer, "Also run outer iteration and report delta_lambda");
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();

  ExtrapolateOptions ext;
  RangeFlag ext_x, ext_z;
  auto* ext_cmd = app.add_subcommand("extrapolate", "Extend a completed fit to a larger grid");
  ext_cmd->add_option("fit_dir", ext.fit_dir, "Directory holding fit.csv and diagnostics.json")->required();
  ext_cmd->add_option("--extend-x", ext_x.text, "Extended age range A..B");
  ext_cmd->add_option("--extend-z", ext_z.text, "Extended duration range A..B");
  ext_cmd->add_option("--mode", ext.mode, "constrained or unconstrained")
      ->check(CLI::IsMember({"constrained", "unconstrained"}));
  ext_cmd->add_option("--alpha", ext.alpha, "Credible interval level 1 - alpha");
  ext_cmd->add_flag("--ratio", ext.ratio, "Also write unconstrained/constrained hazard ratios");
  ext_cmd->add_option("--out", ext.out, "Output directory")->required();

  ReplicateOptions rep;
  auto* rep_cmd = app.add_subcommand("replicate", "Run a simulation study");
  rep_cmd->add_option("experiment", rep.experiment, "Experiment id")
      ->required()
      ->check(CLI::IsMember(wh::experiment_ids()));
  rep_cmd->add_option("--n", rep.replicates, "Replicates per group")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--seed", rep.seed, "Master seed");
  rep_cmd->add_option("--threads", rep.threads, "Worker threads (default: all cores, capped by WH_MAX_THREADS)");
  rep_cmd->add_option("--out", rep.out, "Output directory")->required();

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw a synthetic portfolio of individual records");
  sim_cmd->add_option("--preset", sim.preset, "annuity, ltc, selection or reduction");
  sim_cmd->add_option("--m", sim.m, "Head count");
  sim_cmd->add_option("--seed", sim.seed, "Seed");
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (aggregate->parsed()) {
      agg.x = agg_x.get("--x");
      agg.z = agg_z.get("--z");
      run_aggregate(agg, std::cerr);
    } else if (fit_cmd->parsed()) {
      fit.method = method == "outer" ? Method::outer : Method::performance;
      run_fit(fit, std::cerr);
    } else if (ext_cmd->parsed()) {
      ext.x = ext_x.get("--extend-x");
      ext.z = ext_z.get("--extend-z");
      run_extrapolate(ext, std::cerr);
    } else if (rep_cmd->parsed()) {
      run_replicate(rep, std::cerr);
    } else if (sim_cmd->parsed()) {
      run_simulate(sim, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
