#include "wh/experiments.hpp"

#include "wh/error.hpp"
#include "wh/gaussian.hpp"
#include "wh/rank_reduction.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

namespace wh {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct JobOutput {
  std::vector<MetricRow> metrics;
  std::vector<TimingRow> timings;
  std::vector<FailureRow> failures;
};

struct Job {
  std::string group;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::function<void(const Job&, JobOutput&)> run;
};

void add_lambda(JobOutput& out, const Job& job, const std::string& prefix, const Vector& lambda) {
  if (lambda.size() == 1) {
    out.metrics.push_back({job.group, job.replicate, prefix, lambda(0)});
  } else {
    out.metrics.push_back({job.group, job.replicate, prefix + "_x", lambda(0)});
    out.metrics.push_back({job.group, job.replicate, prefix + "_z", lambda(1)});
  }
}

double value_or_nan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

std::vector<Job> bias_jobs(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  const std::vector<std::pair<int, long>> sizes{{1, 20000}, {1, 100000}, {1, 500000},
                                                {2, 1000},  {2, 5000},   {2, 25000}};
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const auto [dim, m] = sizes[g];
    const std::string group = std::to_string(dim) + "d-" + std::to_string(m);
    for (int r = 0; r < cfg.replicates; ++r) {
      jobs.push_back({group, r, child_seed(child_seed(cfg.seed, g), r), [dim, m](const Job& job, JobOutput& out) {
                        const Portfolio p = dim == 1 ? annuity_portfolio(m) : ltc_portfolio(m);
                        const AggregatedExposure agg = p.draw(job.seed);
                        const auto start = Clock::now();
                        const BiasMetrics b = normal_bias(agg, p.structure());
                        out.timings.push_back({job.group, job.replicate, "fit", seconds_since(start)});
                        add_lambda(out, job, "lambda", b.lambda);
                        out.metrics.push_back({job.group, job.replicate, "delta_theta_norm", b.delta_norm});
                      }});
    }
  }
  return jobs;
}

std::vector<Job> outer_perf_jobs(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (int r = 0; r < cfg.replicates; ++r) {
    jobs.push_back({"1d", r, child_seed(cfg.seed, r), [](const Job& job, JobOutput& out) {
                      const Portfolio p = selection_portfolio();
                      const PenaltyTemplate s = p.structure();
                      const AggregatedExposure agg = p.draw(job.seed);
                      const OuterReference ref = outer_reference(agg, s);
                      const auto start = Clock::now();
                      const GeneralizedSelection perf = select_lambda_performance(agg.d, agg.ec, s);
                      const double t_perf = seconds_since(start);
                      const double ml_perf = perf.fit.laplace_marginal;
                      add_lambda(out, job, "lambda_outer", ref.outer.lambda);
                      add_lambda(out, job, "lambda_perf", perf.lambda);
                      out.metrics.push_back({job.group, job.replicate, "delta_lambda_perf",
                                             value_or_nan(delta_lambda(ml_perf, ref.ml_outer, ref.ml_inf))});
                      out.metrics.push_back({job.group, job.replicate, "perf_passes", double(perf.passes)});
                      out.timings.push_back({job.group, job.replicate, "outer", ref.seconds});
                      out.timings.push_back({job.group, job.replicate, "performance", t_perf});
                    }});
  }
  return jobs;
}

std::vector<Job> reduction_jobs(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (int r = 0; r < cfg.replicates; ++r) {
    jobs.push_back({"1d", r, child_seed(cfg.seed, r), [](const Job& job, JobOutput& out) {
                      const Portfolio p = reduction_portfolio();
                      const PenaltyTemplate s = p.structure();
                      const AggregatedExposure agg = p.draw(job.seed);
                      const OuterReference ref = outer_reference(agg, s);
                      out.timings.push_back({"outer", job.replicate, "select", ref.seconds});
                      const int n = s.size();
                      std::vector<int> ps{s.qx(), 4, 6, 8, 10, 15, 20, 30, 45, 60, n};
                      ps.erase(std::remove_if(ps.begin(), ps.end(), [&](int v) { return v < s.qx() || v > n; }),
                               ps.end());
                      ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
                      for (int pv : ps) {
                        const std::string group = "p=" + std::to_string(pv);
                        const auto start = Clock::now();
                        const GeneralizedSelection sel = select_lambda_reduced(agg.d, agg.ec, s, pv);
                        out.timings.push_back({group, job.replicate, "select", seconds_since(start)});
                        out.metrics.push_back({group, job.replicate, "lambda", sel.lambda(0)});
                        out.metrics.push_back({group, job.replicate, "delta_lambda",
                                               value_or_nan(delta_lambda(sel.fit.laplace_marginal, ref.ml_outer,
                                                                         ref.ml_inf))});
                      }
                    }});
    jobs.push_back({"2d", r, child_seed(child_seed(cfg.seed, 2), r), [](const Job& job, JobOutput& out) {
                      const Portfolio p = ltc_portfolio(25000);
                      const PenaltyTemplate s = p.structure();
                      const AggregatedExposure agg = p.draw(job.seed);
                      const OuterReference ref = outer_reference(agg, s);
                      auto start = Clock::now();
                      const GeneralizedSelection full = select_lambda_performance(agg.d, agg.ec, s);
                      out.timings.push_back({"2d-full", job.replicate, "select", seconds_since(start)});
                      start = Clock::now();
                      const GeneralizedSelection reduced = select_lambda_reduced(agg.d, agg.ec, s, kReduced2dPmax);
                      out.timings.push_back({"2d-reduced", job.replicate, "select", seconds_since(start)});
                      out.metrics.push_back({"2d-full", job.replicate, "delta_lambda",
                                             value_or_nan(delta_lambda(full.fit.laplace_marginal, ref.ml_outer,
                                                                       ref.ml_inf))});
                      out.metrics.push_back({"2d-reduced", job.replicate, "delta_lambda",
                                             value_or_nan(delta_lambda(reduced.fit.laplace_marginal, ref.ml_outer,
                                                                       ref.ml_inf))});
                    }});
  }
  return jobs;
}

template <class Row, class Key>
std::vector<MedianRow> group_medians(const std::vector<Row>& rows, Key key_of) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> values;
  for (const Row& r : rows) {
    auto key = key_of(r);
    if (!values.count(key)) order.push_back(key);
    auto& bucket = values[key];
    const double v = r.value;
    if (std::isfinite(v)) bucket.push_back(v);
  }
  std::vector<MedianRow> out;
  for (const auto& k : order) {
    const auto& v = values[k];
    out.push_back({k.first, k.second, median(v), static_cast<int>(v.size())});
  }
  return out;
}

} // namespace

PenaltyTemplate Portfolio::structure() const {
  return z ? PenaltyTemplate::two_d(x.size(), z->size(), qx, qz) : PenaltyTemplate::one_d(x.size(), qx);
}

AggregatedExposure Portfolio::draw(std::uint64_t seed) const {
  SimConfig c = sim;
  c.seed = seed;
  const std::vector<PortfolioRecord> records = simulate(c, law);
  return z ? aggregate_2d(records, x.lo, x.hi, z->lo, z->hi) : aggregate_1d(records, x.lo, x.hi);
}

Portfolio annuity_portfolio(long m) {
  SimConfig c;
  c.dim = 1;
  c.m = m;
  c.x_entry_lo = 30.0;
  c.x_entry_hi = 100.0;
  c.censor_rate = 0.1;
  c.horizon = 20.0;
  return {c, HazardLaw::default_1d(), {30, 104}, std::nullopt};
}

Portfolio ltc_portfolio(long m, int nx, int nz) {
  SimConfig c;
  c.dim = 2;
  c.m = m;
  c.x_entry_lo = 58.0;
  c.x_entry_hi = 70.0 + nx - 3;
  c.z_entry_lo = 0.0;
  c.z_entry_hi = 0.0;
  c.censor_rate = 0.05;
  c.horizon = 15.0;
  return {c, HazardLaw::default_2d(), {70, 70 + nx - 1}, AxisRange{0, nz - 1}};
}

Portfolio selection_portfolio() {
  SimConfig c;
  c.dim = 1;
  c.m = 30000;
  c.x_entry_lo = 50.0;
  c.x_entry_hi = 95.0;
  c.censor_rate = 0.2;
  c.horizon = 10.0;
  return {c, HazardLaw::default_1d(), {50, 99}, std::nullopt};
}

Portfolio reduction_portfolio() {
  Portfolio p = annuity_portfolio(50000);
  p.x = {30, 103};
  return p;
}

BiasMetrics normal_bias(const AggregatedExposure& agg, const PenaltyTemplate& structure) {
  const GeneralizedSelection sel = select_lambda_outer(agg.d, agg.ec, structure);
  const PenaltyOperator penalty = structure.with(sel.lambda);
  const CrudeRates crude = crude_rates(agg);
  const Vector y = (agg.d.array() > 0.0).select(crude.log_rate, 0.0);
  const GaussianFit norm = fit_gaussian(y, agg.d, penalty);
  const Vector theta_inf = theta_infinity(agg.d, agg.ec, structure);
  const auto delta = delta_theta(norm.theta_hat, sel.fit.theta_hat, theta_inf, agg.d, agg.ec, penalty);
  if (!delta) throw NumericalFailure("delta undefined: polynomial fit is already optimal");
  return {sel.lambda, *delta};
}

OuterReference outer_reference(const AggregatedExposure& agg, const PenaltyTemplate& structure,
                               const SelectionConfig& cfg) {
  const auto start = Clock::now();
  GeneralizedSelection outer = select_lambda_outer(agg.d, agg.ec, structure, cfg);
  const double seconds = seconds_since(start);
  const Vector theta_inf = theta_infinity(agg.d, agg.ec, structure);
  const double ml_inf = ml_infinity(agg.d, agg.ec, structure, theta_inf);
  const double ml_outer = outer.fit.laplace_marginal;
  return {std::move(outer), ml_outer, ml_inf, seconds};
}

std::optional<double> delta_lambda_at(const Vector& lambda, const AggregatedExposure& agg,
                                      const PenaltyTemplate& structure, const OuterReference& ref) {
  NewtonConfig nc;
  nc.compute_covariance = false;
  const GeneralizedFit fit = newton_fit(agg.d, agg.ec, structure.with(lambda), nc);
  return delta_lambda(fit.laplace_marginal, ref.ml_outer, ref.ml_inf);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<MedianRow> ExperimentReport::medians() const {
  return group_medians(metrics, [](const MetricRow& r) { return std::make_pair(r.group, r.metric); });
}

std::vector<MedianRow> ExperimentReport::timing_medians() const {
  std::vector<MetricRow> rows;
  for (const auto& t : timings) rows.push_back({t.group, t.replicate, t.label, t.seconds});
  return group_medians(rows, [](const MetricRow& r) { return std::make_pair(r.group, r.metric); });
}

std::vector<std::string> experiment_ids() {
  return {"normal-approx-bias", "outer-vs-performance", "rank-reduction-sweep"};
}

ExperimentReport replicate_experiment(const ExperimentConfig& config) {
  if (config.replicates < 1) throw InvalidArgument("invalid parameter: replicates must be >= 1");
  std::vector<Job> jobs;
  if (config.id == "normal-approx-bias")
    jobs = bias_jobs(config);
  else if (config.id == "outer-vs-performance")
    jobs = outer_perf_jobs(config);
  else if (config.id == "rank-reduction-sweep")
    jobs = reduction_jobs(config);
  else
    throw InvalidArgument("invalid parameter: unknown experiment '" + config.id + "'");

  std::vector<JobOutput> outputs(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  std::size_t done = 0;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        job.run(job, outputs[i]);
      } catch (const Error& e) {
        outputs[i] = JobOutput{};
        outputs[i].failures.push_back({job.group, job.replicate, e.what()});
      }
      std::lock_guard lock(progress_mutex);
      ++done;
      if (config.progress)
        config.progress("[" + std::to_string(done) + "/" + std::to_string(jobs.size()) + "] " + job.group +
                        " replicate " + std::to_string(job.replicate) +
                        (outputs[i].failures.empty() ? " done" : " failed: " + outputs[i].failures[0].message));
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentReport report;
  report.experiment = config.id;
  report.replicates = config.replicates;
  report.seed = config.seed;
  for (auto& o : outputs) {
    report.metrics.insert(report.metrics.end(), o.metrics.begin(), o.metrics.end());
    report.timings.insert(report.timings.end(), o.timings.begin(), o.timings.end());
    report.failures.insert(report.failures.end(), o.failures.begin(), o.failures.end());
  }
  return report;
}

} // namespace wh
