#include "wh/optimize.hpp"

#include "wh/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double finite_or_neg_inf(double v) { return std::isfinite(v) ? v : kNegInf; }

void check_config(const SearchConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw InvalidArgument("invalid search config: tol must be > 0");
  if (cfg.max_evals < 1) throw InvalidArgument("invalid search config: max_evals must be >= 1");
}

} // namespace

ScalarResult brent_maximize(const std::function<double(double)>& f, const SearchConfig& cfg) {
  check_config(cfg);
  if (!(cfg.lower < cfg.upper)) throw InvalidArgument("invalid search config: need lower < upper");
  if (cfg.max_evals < 3) throw InvalidArgument("invalid search config: Brent needs max_evals >= 3");

  ScalarResult best;
  best.f = kNegInf;
  auto eval = [&](double x) {
    const double v = finite_or_neg_inf(f(x));
    ++best.evals;
    if (v > best.f || best.evals == 1) {
      best.x = x;
      best.f = v;
    }
    return -v; // minimized internally
  };

  eval(cfg.lower);
  eval(cfg.upper);

  const double golden = 0.5 * (3.0 - std::sqrt(5.0));
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  double a = cfg.lower, b = cfg.upper;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = eval(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  while (true) {
    const double xm = 0.5 * (a + b);
    const double tol1 = eps * std::abs(x) + cfg.tol / 3.0;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    if (best.evals >= cfg.max_evals) {
      best.hit_max_evals = true;
      break;
    }
    bool golden_step = true;
    if (std::abs(e) > tol1 && std::isfinite(fx) && std::isfinite(fw) && std::isfinite(fv)) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      r = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * r) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = x >= xm ? a - x : b - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d >= 0.0 ? tol1 : -tol1);
    const double fu = eval(u);
    if (fu <= fx) {
      (u >= x ? a : b) = x;
      v = w, fv = fw;
      w = x, fw = fx;
      x = u, fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w, fv = fw;
        w = u, fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u, fv = fu;
      }
    }
  }
  return best;
}

PlaneResult nelder_mead_maximize(const std::function<double(std::array<double, 2>)>& f,
                                 const SearchConfig& cfg) {
  check_config(cfg);
  if (cfg.max_evals < 3) throw InvalidArgument("invalid search config: Nelder-Mead needs max_evals >= 3");
  using Point = std::array<double, 2>;
  constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  PlaneResult out;
  auto eval = [&](const Point& p) {
    ++out.evals;
    return finite_or_neg_inf(f(p));
  };
  auto lerp = [](const Point& from, const Point& to, double t) {
    return Point{from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])};
  };

  std::array<Point, 3> xs{cfg.start, cfg.start, cfg.start};
  xs[1][0] += cfg.step;
  xs[2][1] += cfg.step;
  std::array<double, 3> fs{};
  for (int i = 0; i < 3; ++i) fs[i] = eval(xs[i]);

  while (true) {
    // Order vertices best (highest f) first; stable so ties keep their order.
    std::array<int, 3> idx{0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return fs[i] > fs[j]; });
    std::array<Point, 3> sx{xs[idx[0]], xs[idx[1]], xs[idx[2]]};
    std::array<double, 3> sf{fs[idx[0]], fs[idx[1]], fs[idx[2]]};
    xs = sx;
    fs = sf;

    double diameter = 0.0;
    for (int i = 1; i < 3; ++i)
      diameter = std::max({diameter, std::abs(xs[i][0] - xs[0][0]), std::abs(xs[i][1] - xs[0][1])});
    if (diameter <= cfg.tol) break;
    if (cfg.ftol > 0.0 && std::isfinite(fs[2]) && fs[0] - fs[2] <= cfg.ftol) break;
    if (out.evals + 2 > cfg.max_evals) {
      out.hit_max_evals = true;
      break;
    }

    const Point centroid{0.5 * (xs[0][0] + xs[1][0]), 0.5 * (xs[0][1] + xs[1][1])};
    const Point xr = lerp(centroid, xs[2], -alpha);
    const double fr = eval(xr);
    if (fr > fs[0]) {
      const Point xe = lerp(centroid, xr, gamma);
      const double fe = eval(xe);
      if (fe > fr) {
        xs[2] = xe, fs[2] = fe;
      } else {
        xs[2] = xr, fs[2] = fr;
      }
      continue;
    }
    if (fr > fs[1]) {
      xs[2] = xr, fs[2] = fr;
      continue;
    }
    bool accepted = false;
    if (fr > fs[2]) {
      const Point xc = lerp(centroid, xr, rho);
      const double fc = eval(xc);
      if (fc >= fr) xs[2] = xc, fs[2] = fc, accepted = true;
    } else {
      const Point xc = lerp(centroid, xs[2], rho);
      const double fc = eval(xc);
      if (fc > fs[2]) xs[2] = xc, fs[2] = fc, accepted = true;
    }
    if (accepted) continue;
    if (out.evals + 2 > cfg.max_evals) {
      out.hit_max_evals = true;
      break;
    }
    for (int i = 1; i < 3; ++i) {
      xs[i] = lerp(xs[0], xs[i], sigma);
      fs[i] = eval(xs[i]);
    }
  }
  const int b = static_cast<int>(std::max_element(fs.begin(), fs.end()) - fs.begin());
  out.x = xs[b];
  out.f = fs[b];
  return out;
}

} // namespace wh
