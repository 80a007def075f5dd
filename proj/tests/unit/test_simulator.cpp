#include "wh/duration.hpp"
#include "wh/error.hpp"
#include "wh/experiments.hpp"
#include "wh/simulator.hpp"

#include <algorithm>

#include <doctest.h>

#include <cmath>

TEST_SUITE("simulator") {

TEST_CASE("constant hazard: mean lifetime is 1/mu") {
  const double mu = 0.1;
  wh::SimConfig cfg;
  cfg.m = 20000;
  cfg.censor_rate = 0.0;
  cfg.horizon = 1e6;
  cfg.seed = 2;
  const auto recs = wh::simulate(cfg, wh::HazardLaw::constant(mu));
  double sum = 0.0;
  for (const auto& r : recs) {
    CHECK(r.delta == 1);
    sum += r.t;
  }
  const double mean = sum / cfg.m;
  const double se = (1.0 / mu) / std::sqrt(double(cfg.m));
  CHECK(std::abs(mean - 1.0 / mu) < 4.0 * se);
}

TEST_CASE("zero hazard: everyone is censored") {
  wh::SimConfig cfg;
  cfg.m = 500;
  const auto recs = wh::simulate(cfg, wh::HazardLaw::constant(0.0));
  for (const auto& r : recs) {
    CHECK(r.delta == 0);
    CHECK(r.t > 0.0);
    CHECK(r.t <= cfg.horizon);
  }
}

TEST_CASE("deterministic for a seed, different across seeds") {
  wh::SimConfig cfg;
  cfg.dim = 2;
  cfg.m = 2000;
  cfg.x_entry_lo = 70;
  cfg.x_entry_hi = 90;
  cfg.z_entry_hi = 2;
  cfg.seed = 42;
  const auto law = wh::HazardLaw::default_2d();
  const auto a = wh::simulate(cfg, law);
  const auto b = wh::simulate(cfg, law);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i)
    same = same && a[i].x == b[i].x && *a[i].z == *b[i].z && a[i].t == b[i].t && a[i].delta == b[i].delta;
  CHECK(same);
  cfg.seed = 43;
  const auto c = wh::simulate(cfg, law);
  CHECK(c[0].x != a[0].x);
  CHECK(wh::child_seed(1, 0) != wh::child_seed(1, 1));
  CHECK(wh::child_seed(1, 5) == wh::child_seed(1, 5));
}

TEST_CASE("records are consistent with the configuration") {
  wh::SimConfig cfg;
  cfg.m = 3000;
  cfg.horizon = 15.0;
  cfg.seed = 8;
  const auto recs = wh::simulate(cfg, wh::HazardLaw::default_1d());
  for (const auto& r : recs) {
    CHECK(r.x >= cfg.x_entry_lo);
    CHECK(r.x < cfg.x_entry_hi);
    CHECK(r.t > 0.0);
    CHECK(r.t <= cfg.horizon);
    CHECK(!r.z.has_value());
  }
}

TEST_CASE("aggregated hazard tracks the law on a large portfolio") {
  const auto p = wh::selection_portfolio();
  const auto agg = p.draw(1);
  const wh::Vector truth = p.law.on_grid(p.x, p.z);
  double z_sum = 0.0;
  int cells = 0;
  for (int i = 0; i < agg.size(); ++i) {
    if (agg.d(i) < 20) continue;
    const double se = 1.0 / std::sqrt(agg.d(i));
    z_sum += (std::log(agg.d(i) / agg.ec(i)) - truth(i)) / se;
    ++cells;
  }
  REQUIRE(cells > 10);
  // Mean standardized error close to zero.
  CHECK(std::abs(z_sum / cells) < 4.0 / std::sqrt(double(cells)));
}

TEST_CASE("fitted log-hazard approaches the law as the portfolio grows") {
  // About 5.8 person-years per head on this preset: roughly 5k, 50k, 500k.
  std::vector<double> medians;
  for (long m : {860L, 8600L, 86000L}) {
    const auto p = wh::annuity_portfolio(m);
    const wh::Vector truth = p.law.on_grid(p.x);
    std::vector<double> rmse;
    for (int r = 0; r < 10; ++r) {
      const auto agg = p.draw(wh::child_seed(11, r));
      const auto sel = wh::select_lambda_performance(agg.d, agg.ec, p.structure());
      rmse.push_back(std::sqrt((sel.fit.theta_hat - truth).squaredNorm() / truth.size()));
    }
    medians.push_back(wh::median(rmse));
  }
  CHECK(medians[0] > medians[1]);
  CHECK(medians[1] > medians[2]);
}

TEST_CASE("invalid configurations") {
  wh::SimConfig cfg;
  cfg.m = 0;
  CHECK_THROWS_AS(wh::simulate(cfg, wh::HazardLaw::constant(0.1)), wh::InvalidArgument);
  cfg.m = 10;
  cfg.dim = 2;
  CHECK_THROWS_AS(wh::simulate(cfg, wh::HazardLaw::constant(0.1)), wh::InvalidArgument);
  CHECK_THROWS_AS(wh::HazardLaw::additive(0, 0, {}), wh::InvalidArgument);
}

}
