#include "commands.hpp"

#include "wh/csv_io.hpp"
#include "wh/error.hpp"
#include "wh/experiments.hpp"
#include "wh/extrapolation.hpp"
#include "wh/generalized.hpp"
#include "wh/rank_reduction.hpp"
#include "wh/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

namespace wh::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Vector& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open input file '" + path + "'");
  return in;
}

fs::path output_dir(const std::string& out) {
  if (out.empty()) throw InvalidArgument("invalid parameter: --out DIR is required");
  fs::create_directories(out);
  return fs::path(out);
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot write '" + path.string() + "'");
  fn(os);
  if (!os) throw InvalidArgument("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

PenaltyTemplate make_structure(int dim, int nx, int nz, int qx, int qz) {
  return dim == 1 ? PenaltyTemplate::one_d(nx, qx) : PenaltyTemplate::two_d(nx, nz, qx, qz);
}

// Shared by fit and extrapolate so that both see bitwise identical Ψ.
SmoothedFit smoothed(const Vector& theta, const Vector& d, const Vector& ec, const PenaltyOperator& penalty) {
  const WorkingData wd = working_data(theta, d, ec);
  const PenalizedSystem system(wd.w, penalty, "W_theta + P_lambda");
  return {wd.z, wd.w, theta, system.inverse(), penalty};
}

struct Cell {
  int x = 0, z = 0;
};

Cell cell_of(int k, AxisRange x, std::optional<AxisRange> z) {
  return {x.lo + k % x.size(), z ? z->lo + k / x.size() : 0};
}

const char* fit_header(int dim) {
  return dim == 2 ? "x,z,d,ec,log_hazard,hazard,std_err,lower,upper" : "x,d,ec,log_hazard,hazard,std_err,lower,upper";
}

void write_estimate(std::ostream& os, double theta, double variance, double multiplier) {
  const double se = std::sqrt(std::max(variance, 0.0));
  os << format_double(theta) << ',' << format_double(std::exp(theta)) << ',' << format_double(se) << ','
     << format_double(theta - multiplier * se) << ',' << format_double(theta + multiplier * se);
}

// ---- fit artifacts ---------------------------------------------------------

struct FitArtifacts {
  AggregatedExposure agg;
  Vector theta;
  Vector lambda;
  int qx = 2, qz = 2;
};

FitArtifacts load_fit(const fs::path& dir) {
  json diag;
  {
    std::ifstream in = open_input((dir / "diagnostics.json").string());
    try {
      diag = json::parse(in);
    } catch (const json::exception& e) {
      throw InvalidArgument("diagnostics.json: " + std::string(e.what()));
    }
  }
  FitArtifacts art;
  try {
    if (diag.at("schema").get<int>() != 1) throw InvalidArgument("diagnostics.json: unsupported schema");
    if (diag.at("status").get<std::string>() != "ok")
      throw InvalidArgument("diagnostics.json: the fit did not complete (status '" +
                            diag.at("status").get<std::string>() + "')");
    const auto lambda = diag.at("lambda").get<std::vector<double>>();
    art.lambda = Eigen::Map<const Vector>(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
    art.qx = diag.at("qx").get<int>();
    art.qz = diag.value("qz", 2);
  } catch (const json::exception& e) {
    throw InvalidArgument("diagnostics.json: " + std::string(e.what()));
  }

  std::ifstream in = open_input((dir / "fit.csv").string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw InvalidArgument("fit.csv is empty");
  const auto header = split_csv_line(line);
  int dim = 0;
  if (header == split_csv_line(fit_header(1)))
    dim = 1;
  else if (header == split_csv_line(fit_header(2)))
    dim = 2;
  else
    throw InvalidArgument("fit.csv line 1: unexpected header");
  struct Row {
    int x, z;
    double d, ec, theta;
    std::size_t line_no;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw InvalidArgument("fit.csv line " + std::to_string(line_no) + ": wrong field count");
    rows.push_back({static_cast<int>(parse_double(f[0], line_no)), dim == 2 ? static_cast<int>(parse_double(f[1], line_no)) : 0,
                    parse_double(f[dim], line_no), parse_double(f[dim + 1], line_no), parse_double(f[dim + 2], line_no),
                    line_no});
  }
  if (rows.empty()) throw InvalidArgument("fit.csv has no data rows");
  auto [xmin, xmax] = std::minmax_element(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.x < b.x; });
  auto [zmin, zmax] = std::minmax_element(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.z < b.z; });
  art.agg = dim == 2 ? AggregatedExposure::zeros({xmin->x, xmax->x}, AxisRange{zmin->z, zmax->z})
                     : AggregatedExposure::zeros({xmin->x, xmax->x});
  if (static_cast<int>(rows.size()) != art.agg.size())
    throw InvalidArgument("fit.csv rows do not form a complete grid");
  art.theta = Vector::Zero(art.agg.size());
  std::vector<bool> seen(art.agg.size(), false);
  for (const Row& r : rows) {
    const int k = (r.z - (art.agg.z ? art.agg.z->lo : 0)) * art.agg.nx() + (r.x - art.agg.x.lo);
    if (seen[k]) throw InvalidArgument("fit.csv line " + std::to_string(r.line_no) + ": duplicate grid cell");
    seen[k] = true;
    art.agg.d(k) = r.d;
    art.agg.ec(k) = r.ec;
    art.theta(k) = r.theta;
  }
  if (art.lambda.size() != dim) throw InvalidArgument("diagnostics.json: lambda does not match the fit dimension");
  return art;
}

} // namespace

AxisRange parse_range(const std::string& text, const std::string& flag) {
  const auto pos = text.find("..");
  auto bad = [&] { return InvalidArgument("invalid parameter: " + flag + " expects A..B, got '" + text + "'"); };
  if (pos == std::string::npos) throw bad();
  auto parse = [&](std::string_view s) {
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) throw bad();
    return v;
  };
  const std::string_view sv(text);
  AxisRange r{parse(sv.substr(0, pos)), parse(sv.substr(pos + 2))};
  if (r.lo > r.hi) throw bad();
  return r;
}

// ---- aggregate --------------------------------------------------------------

void run_aggregate(const AggregateOptions& opt, std::ostream& log) {
  if (!opt.x) throw InvalidArgument("invalid parameter: --x A..B is required");
  std::ifstream in = open_input(opt.input);
  int file_dim = 0;
  const std::vector<PortfolioRecord> records = read_records(in, &file_dim);
  int dim = opt.dim ? opt.dim : (file_dim ? file_dim : (opt.z ? 2 : 1));
  if (file_dim && file_dim != dim)
    throw InvalidArgument("invalid parameter: --dim " + std::to_string(dim) + " but the file holds " +
                          std::to_string(file_dim) + "D records");
  if (dim == 2 && !opt.z) throw InvalidArgument("invalid parameter: 2D aggregation needs --z A..B");
  if (dim == 1 && opt.z) throw InvalidArgument("invalid parameter: --z given for 1D records");
  if (records.empty()) log << "warning: no records in '" << opt.input << "'; writing a zero table\n";
  const AggregatedExposure agg = dim == 2 ? aggregate_2d(records, opt.x->lo, opt.x->hi, opt.z->lo, opt.z->hi, opt.threads)
                                          : aggregate_1d(records, opt.x->lo, opt.x->hi, opt.threads);
  const fs::path dir = output_dir(opt.out);
  write_file(dir / "aggregates.csv", [&](std::ostream& os) { write_aggregates(os, agg); });
}

// ---- fit --------------------------------------------------------------------

void run_fit(const FitOptions& opt, std::ostream& log) {
  std::ifstream in = open_input(opt.input);
  const AggregatedExposure agg = read_aggregates(in);
  const int dim = agg.dim();
  if (opt.dim && opt.dim != dim)
    throw InvalidArgument("invalid parameter: --dim " + std::to_string(opt.dim) + " but the file is " +
                          std::to_string(dim) + "D");
  const int qx = opt.qx.value_or(opt.q);
  const int qz = dim == 2 ? opt.qz.value_or(opt.q) : 1;
  if (dim == 1 && opt.qz) throw InvalidArgument("invalid parameter: --qz given for 1D data");
  const PenaltyTemplate structure = make_structure(dim, agg.nx(), agg.nz(), qx, dim == 2 ? qz : 2);
  const double multiplier = interval_multiplier(opt.alpha);

  std::optional<Vector> fixed;
  if (opt.lambda || opt.lambda_x || opt.lambda_z) {
    if (dim == 1) {
      if (opt.lambda_x || opt.lambda_z) throw InvalidArgument("invalid parameter: use --lambda for 1D data");
      fixed = Vector::Constant(1, *opt.lambda);
    } else {
      const std::optional<double> lx = opt.lambda_x ? opt.lambda_x : opt.lambda;
      const std::optional<double> lz = opt.lambda_z ? opt.lambda_z : opt.lambda;
      if (!lx || !lz) throw InvalidArgument("invalid parameter: 2D needs both --lambda-x and --lambda-z (or --lambda)");
      fixed = Eigen::Vector2d(*lx, *lz);
    }
  }
  if (opt.p_max && (fixed || opt.method != Method::performance))
    throw InvalidArgument("invalid parameter: --pmax needs automatic selection with --method perf");
  if (opt.compare_outer && fixed) throw InvalidArgument("invalid parameter: --compare-outer needs automatic selection");

  const fs::path dir = output_dir(opt.out);
  json diag;
  diag["schema"] = 1;
  diag["command"] = "fit";
  diag["dim"] = dim;
  diag["grid"]["x"] = {agg.x.lo, agg.x.hi};
  if (agg.z) diag["grid"]["z"] = {agg.z->lo, agg.z->hi};
  diag["qx"] = qx;
  if (dim == 2) diag["qz"] = qz;
  diag["alpha"] = opt.alpha;
  diag["selection"] = fixed ? "fixed" : opt.method == Method::outer ? "outer" : opt.p_max ? "performance-reduced" : "performance";

  json timing;
  timing["schema"] = 1;
  const auto start = Clock::now();
  auto fail = [&](const char* status, const std::string& message, const std::vector<double>& trace) {
    diag["status"] = status;
    diag["error"] = message;
    json t = json::array();
    for (double v : trace) t.push_back(number(v));
    diag["trace"] = t;
    write_json(dir / "diagnostics.json", diag);
  };

  std::optional<GeneralizedSelection> selected;
  std::optional<OuterReference> reference;
  try {
    if (fixed) {
      selected = GeneralizedSelection{*fixed, newton_fit(agg.d, agg.ec, structure.with(*fixed)), 0, 0, {}};
    } else if (opt.method == Method::outer) {
      selected = select_lambda_outer(agg.d, agg.ec, structure);
    } else if (opt.p_max) {
      selected = select_lambda_reduced(agg.d, agg.ec, structure, *opt.p_max);
      if (dim == 1) {
        diag["rank"] = {{"p_max", *opt.p_max}, {"p", std::clamp(*opt.p_max, qx, agg.nx())}};
      } else {
        const auto [px, pz] = choose_p(agg.nx(), agg.nz(), *opt.p_max, qx, qz);
        diag["rank"] = {{"p_max", *opt.p_max}, {"px", px}, {"pz", pz}};
      }
    } else {
      selected = select_lambda_performance(agg.d, agg.ec, structure);
    }
    timing["selection_seconds"] = seconds_since(start);
    if (opt.compare_outer) {
      reference = outer_reference(agg, structure);
      timing["outer_reference_seconds"] = reference->seconds;
    }
  } catch (const ConvergenceFailure& e) {
    fail("convergence_failure", e.what(), e.trace());
    throw;
  } catch (const NumericalFailure& e) {
    fail("numerical_failure", e.what(), {});
    throw;
  }

  const GeneralizedSelection& sel = *selected;
  const GeneralizedFit& fit = sel.fit;
  const SmoothedFit sf = smoothed(fit.theta_hat, agg.d, agg.ec, fit.penalty);

  diag["status"] = "ok";
  diag["lambda"] = vector_json(sel.lambda);
  diag["edf"] = number(fit.edf);
  diag["penalized_loglik"] = number(fit.penalized_loglik);
  diag["laplace_marginal"] = number(fit.laplace_marginal);
  diag["newton_iterations"] = fit.iterations;
  diag["newton_trace"] = vector_json(Eigen::Map<const Vector>(fit.trace.data(), static_cast<Eigen::Index>(fit.trace.size())));
  if (!fixed) {
    diag["objective_evaluations"] = sel.evals;
    if (opt.method == Method::performance) {
      diag["passes"] = sel.passes;
      json path = json::array();
      for (const Vector& l : sel.lambda_path) path.push_back(vector_json(l));
      diag["lambda_path"] = path;
    }
  }
  if (reference) {
    const auto delta = delta_lambda(fit.laplace_marginal, reference->ml_outer, reference->ml_inf);
    diag["comparison"] = {{"lambda_outer", vector_json(reference->outer.lambda)},
                          {"laplace_marginal_outer", number(reference->ml_outer)},
                          {"laplace_marginal_infinity", number(reference->ml_inf)},
                          {"delta_lambda", delta ? number(*delta) : json(nullptr)}};
    if (delta) log << "delta_lambda vs outer iteration: " << *delta << '\n';
  }
  timing["total_seconds"] = seconds_since(start);

  write_file(dir / "fit.csv", [&](std::ostream& os) {
    os << fit_header(dim) << '\n';
    for (int k = 0; k < agg.size(); ++k) {
      const Cell c = cell_of(k, agg.x, agg.z);
      os << c.x << ',';
      if (dim == 2) os << c.z << ',';
      os << format_double(agg.d(k)) << ',' << format_double(agg.ec(k)) << ',';
      write_estimate(os, fit.theta_hat(k), sf.psi(k, k), multiplier);
      os << '\n';
    }
  });
  write_json(dir / "diagnostics.json", diag);
  write_json(dir / "timings.json", timing);
}

// ---- extrapolate ------------------------------------------------------------

void run_extrapolate(const ExtrapolateOptions& opt, std::ostream&) {
  ExtrapolationMode mode;
  if (opt.mode == "constrained")
    mode = ExtrapolationMode::constrained;
  else if (opt.mode == "unconstrained")
    mode = ExtrapolationMode::unconstrained;
  else
    throw InvalidArgument("invalid parameter: --mode must be constrained or unconstrained");
  const double multiplier = interval_multiplier(opt.alpha);

  const FitArtifacts art = load_fit(opt.fit_dir);
  const AggregatedExposure& agg = art.agg;
  const int dim = agg.dim();
  if (dim == 1 && opt.z) throw InvalidArgument("invalid parameter: --extend-z given for a 1D fit");
  const PenaltyTemplate structure = make_structure(dim, agg.nx(), agg.nz(), art.qx, dim == 2 ? art.qz : 2);
  const PenaltyOperator penalty = structure.with(art.lambda);
  const SmoothedFit sf = smoothed(art.theta, agg.d, agg.ec, penalty);

  const AxisRange x_plus = opt.x.value_or(agg.x);
  const GridEmbedding embedding = dim == 1 ? build_embedding(agg.x, x_plus)
                                           : build_embedding(agg.x, x_plus, *agg.z, opt.z.value_or(*agg.z));
  const ExtrapolationResult result = extrapolate(sf, embedding, mode);

  std::vector<int> original(embedding.size_plus(), -1);
  for (int k = 0; k < embedding.size(); ++k) original[embedding.inner[k]] = k;

  const fs::path dir = output_dir(opt.out);
  write_file(dir / "extrapolated.csv", [&](std::ostream& os) {
    os << fit_header(dim) << ",region\n";
    for (int k = 0; k < embedding.size_plus(); ++k) {
      const Cell c = cell_of(k, embedding.x_plus, embedding.z_plus);
      os << c.x << ',';
      if (dim == 2) os << c.z << ',';
      const int o = original[k];
      if (o >= 0)
        os << format_double(agg.d(o)) << ',' << format_double(agg.ec(o)) << ',';
      else
        os << ",,";
      write_estimate(os, result.y_plus(k), result.psi_plus(k, k), multiplier);
      os << ',' << (o >= 0 ? "initial" : "extrapolated") << '\n';
    }
  });

  if (opt.ratio) {
    const ExtrapolationResult cons = extrapolate(sf, embedding, ExtrapolationMode::constrained);
    const ExtrapolationResult unc = extrapolate(sf, embedding, ExtrapolationMode::unconstrained);
    write_file(dir / "ratio.csv", [&](std::ostream& os) {
      os << (dim == 2 ? "x,z," : "x,") << "region,hazard_constrained,hazard_unconstrained,ratio\n";
      for (int k = 0; k < embedding.size_plus(); ++k) {
        const Cell c = cell_of(k, embedding.x_plus, embedding.z_plus);
        os << c.x << ',';
        if (dim == 2) os << c.z << ',';
        const double hc = std::exp(cons.y_plus(k)), hu = std::exp(unc.y_plus(k));
        os << (original[k] >= 0 ? "initial" : "extrapolated") << ',' << format_double(hc) << ','
           << format_double(hu) << ',' << format_double(hu / hc) << '\n';
      }
    });
  }
}

// ---- replicate --------------------------------------------------------------

void run_replicate(const ReplicateOptions& opt, std::ostream& log) {
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("WH_MAX_THREADS"); cap && *cap) {
    int v = 0;
    const std::string_view s(cap);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 1)
      throw InvalidArgument("invalid parameter: WH_MAX_THREADS must be a positive integer");
    threads = std::min(threads, static_cast<unsigned>(v));
  }
  ExperimentConfig cfg;
  cfg.id = opt.experiment;
  cfg.replicates = opt.replicates;
  cfg.seed = opt.seed;
  cfg.threads = threads;
  cfg.progress = [&log](const std::string& line) { log << line << '\n' << std::flush; };
  const ExperimentReport report = replicate_experiment(cfg);

  const fs::path dir = output_dir(opt.out);
  write_file(dir / "metrics.csv", [&](std::ostream& os) {
    os << "group,replicate,metric,value\n";
    for (const auto& r : report.metrics)
      os << r.group << ',' << r.replicate << ',' << r.metric << ',' << format_double(r.value) << '\n';
  });
  json summary;
  summary["schema"] = 1;
  summary["experiment"] = report.experiment;
  summary["replicates"] = report.replicates;
  summary["seed"] = report.seed;
  json medians = json::array();
  for (const auto& m : report.medians())
    medians.push_back({{"group", m.group}, {"metric", m.metric}, {"median", number(m.value)}, {"count", m.count}});
  summary["medians"] = medians;
  json failures = json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"group", f.group}, {"replicate", f.replicate}, {"message", f.message}});
  summary["failures"] = failures;
  write_json(dir / "summary.json", summary);

  write_file(dir / "timings.csv", [&](std::ostream& os) {
    os << "group,replicate,label,seconds\n";
    for (const auto& t : report.timings)
      os << t.group << ',' << t.replicate << ',' << t.label << ',' << format_double(t.seconds) << '\n';
  });
  write_file(dir / "timings_summary.csv", [&](std::ostream& os) {
    os << "group,label,median_seconds,count\n";
    for (const auto& m : report.timing_medians())
      os << m.group << ',' << m.metric << ',' << format_double(m.value) << ',' << m.count << '\n';
  });
  for (const auto& m : report.medians())
    log << "median " << m.group << ' ' << m.metric << " = " << m.value << " (n=" << m.count << ")\n";
  if (!report.failures.empty()) log << report.failures.size() << " replicate job(s) failed; see summary.json\n";
}

// ---- simulate ---------------------------------------------------------------

void run_simulate(const SimulateOptions& opt, std::ostream& log) {
  if (opt.m && *opt.m < 1) throw InvalidArgument("invalid parameter: --m must be >= 1");
  Portfolio p = [&] {
    if (opt.preset == "annuity") return annuity_portfolio(opt.m.value_or(20000));
    if (opt.preset == "ltc") return ltc_portfolio(opt.m.value_or(5000));
    if (opt.preset == "selection") return selection_portfolio();
    if (opt.preset == "reduction") return reduction_portfolio();
    throw InvalidArgument("invalid parameter: unknown preset '" + opt.preset +
                          "' (annuity, ltc, selection, reduction)");
  }();
  if (opt.m) p.sim.m = *opt.m;
  p.sim.seed = opt.seed;
  const std::vector<PortfolioRecord> records = simulate(p.sim, p.law);
  const fs::path dir = output_dir(opt.out);
  write_file(dir / "records.csv", [&](std::ostream& os) { write_records(os, records, p.sim.dim); });
  log << "aggregation window: --x " << p.x.lo << ".." << p.x.hi;
  if (p.z) log << " --z " << p.z->lo << ".." << p.z->hi;
  log << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConvergenceFailure*>(&e)) return 3;
  if (dynamic_cast<const NumericalFailure*>(&e)) return 4;
  if (dynamic_cast<const InvalidArgument*>(&e)) return 2;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
  return 1;
}

} // namespace wh::cli
