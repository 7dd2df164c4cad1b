#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dri/convolution.hpp"
#include "dri/density.hpp"
#include "dri/grid.hpp"
#include "dri/quadrature.hpp"
#include "dri/riemann.hpp"
#include "oracles.hpp"

using namespace dri;

namespace {

GridFunction indicator_unit(double h = 0.01) {
  std::vector<double> v(static_cast<std::size_t>(std::lround(1.0 / h)) + 1, 1.0);
  v.back() = 0.0;
  auto g = GridFunction::from_samples(0.0, h, std::move(v));
  g.vanishes_left = true;
  g.vanishes_right = true;
  g.extrema = [](double l, double r) -> std::pair<double, double> {
    const double sup = (r > 0.0 && l < 1.0) ? 1.0 : 0.0;
    const double inf = (l >= 0.0 && r <= 1.0) ? 1.0 : 0.0;
    return {sup, inf};
  };
  return g;
}

GridFunction triangle_grid(double h = 1.0 / 256.0) {
  auto u = discretize(DensitySpec::uniform(0.0, 1.0), -0.5, 1.5, h).grid;
  auto t = convolve(u, u);
  t.vanishes_left = true;
  t.vanishes_right = true;
  return t;
}

// piecewise-constant function with lattice breakpoints and an exact
// sup/inf oracle, the workhorse of the mesh-inequality property suite
struct StepFn {
  std::vector<double> edges;   // K+1 sorted breakpoints
  std::vector<double> levels;  // K values, levels[i] on [edges[i], edges[i+1])

  double sup_on(double l, double r) const {
    double s = 0.0;
    if (l < edges.front() || r > edges.back()) s = 0.0;  // zero outside
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (edges[i + 1] > l && edges[i] < r) s = std::max(s, levels[i]);
    return s;
  }
  double inf_on(double l, double r) const {
    double m = std::numeric_limits<double>::infinity();
    if (l < edges.front() || r > edges.back()) m = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (edges[i + 1] > l && edges[i] < r) m = std::min(m, levels[i]);
    return std::isfinite(m) ? m : 0.0;
  }
};

GridFunction make_step_grid(oracle::Lcg& rng, StepFn& out) {
  const double grain = 0.125;
  const int k = rng.integer(3, 10);  // 3..10 segments
  const int start = rng.integer(-28, -13);
  std::vector<double> edges{start * grain};
  std::vector<double> levels;
  for (int i = 0; i < k; ++i) {
    edges.push_back(edges.back() + grain * double(rng.integer(1, 6)));
    levels.push_back(double(rng.integer(0, 32)) / 8.0);
  }
  out.edges = edges;
  out.levels = levels;

  const double h = 1.0 / 64.0;
  const double lo = -6.0, hi = 6.0;
  const auto n = static_cast<std::size_t>(std::lround((hi - lo) / h));
  std::vector<double> v(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = lo + h * double(i);
    for (std::size_t s = 0; s < levels.size(); ++s)
      if (x >= edges[s] && x < edges[s + 1]) v[i] = levels[s];
  }
  auto g = GridFunction::from_samples(lo, h, std::move(v));
  g.vanishes_left = g.vanishes_right = true;
  StepFn fn = out;
  g.extrema = [fn](double l, double r) -> std::pair<double, double> {
    return {fn.sup_on(l, r), fn.inf_on(l, r)};
  };
  return g;
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("upper sum pins on the unit indicator") {
  auto g = indicator_unit();
  const auto env = TailEnvelope::zero_beyond(1.0);
  CHECK(upper_sum(g, env, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(upper_sum(g, env, 1.0, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("upper sum of the slowly decaying tail stays under the shifted-mass cap") {
  auto spec = DensitySpec::log_counterexample();
  auto d = discretize(spec, std::numbers::e, 1e5, 1.0 / 512.0);
  const double cap = 2.0 / std::numbers::e + 1.0 / std::log(3.0);
  const double s = upper_sum(d.grid, d.envelope, 1.0, 0.0);
  CHECK(std::isfinite(s));
  CHECK(s <= cap);
}

TEST_CASE("lower sum pins") {
  auto g = indicator_unit();
  const auto env = TailEnvelope::zero_beyond(1.0);
  CHECK(lower_sum(g, env, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lower_sum(g, env, 2.0, 0.0) == 0.0);

  auto tri = triangle_grid();
  const double s = lower_sum(tri, TailEnvelope::zero_beyond(2.0), 0.25, 0.0);
  CHECK(s >= 0.5);
  CHECK(s <= 1.0 + 1e-9);
}

TEST_CASE("upper and lower sums sandwich the mass") {
  auto tri = triangle_grid();
  const auto env = TailEnvelope::zero_beyond(2.0);
  for (double delta : {1.0, 0.5, 0.25, 0.125}) {
    for (double x : {0.0, 0.3, 1.7}) {
      CAPTURE(delta);
      CAPTURE(x);
      const double up = upper_sum(tri, env, delta, x);
      const double lo = lower_sum(tri, env, delta, x);
      CHECK(lo <= tri.mass + 1e-9);
      CHECK(up >= tri.mass - 1e-9);
      CHECK(up >= lo);
    }
  }
}

TEST_CASE("translation by a full mesh step leaves the sums unchanged") {
  auto g = indicator_unit();
  const auto env = TailEnvelope::zero_beyond(1.0);
  for (double x : {0.0, 0.25, 0.4}) {
    CAPTURE(x);
    CHECK(upper_sum(g, env, 0.5, x) ==
          doctest::Approx(upper_sum(g, env, 0.5, x + 0.5)).epsilon(1e-13));
    CHECK(lower_sum(g, env, 0.5, x) ==
          doctest::Approx(lower_sum(g, env, 0.5, x + 0.5)).epsilon(1e-13));
  }
}

TEST_CASE("verdict: continuous compact support certifies at tol 0.1") {
  auto tri = triangle_grid(1.0 / 1024.0);
  auto rep = dri_verdict(tri, TailEnvelope::zero_beyond(2.0), default_ladder(),
                         0.1);
  CHECK(rep.verdict == Verdict::DRI_verified);
  for (std::size_t i = 0; i < rep.mesh_ladder.size(); ++i)
    CHECK(rep.upper_sums[i] >= rep.lower_sums[i]);
  CHECK(rep.gap_at_finest + rep.tail_bounds.back() <= 0.1);
}

TEST_CASE("verdict: the integrable-but-slow tail still certifies") {
  auto d = discretize(DensitySpec::log_counterexample(), std::numbers::e, 1e5,
                      1.0 / 512.0);
  auto rep = dri_verdict(d.grid, d.envelope, default_ladder(), 0.1);
  CHECK(rep.verdict == Verdict::DRI_verified);
}

TEST_CASE("verdict: a flat non-integrable envelope diverges") {
  GridFunction flat;
  flat.origin = 0.0;
  flat.spacing = 0.01;
  flat.values.assign(101, 1.0);
  flat.refresh_mass();
  // declared majorant never decays, so beyond-window blocks never sum
  auto rep = dri_verdict(flat, TailEnvelope::power(1.0, 0.0, 1.0, 1.0),
                         default_ladder(3), 0.1);
  CHECK(rep.verdict == Verdict::UpperSumDiverges);
}

TEST_CASE("gap shrinks linearly with the mesh for smooth compact support") {
  auto tri = triangle_grid(1.0 / 1024.0);
  auto rep = dri_verdict(tri, TailEnvelope::zero_beyond(2.0), default_ladder(),
                         0.1);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.mesh_ladder.size(); ++i) {
    const double gap = rep.upper_sums[i] - rep.lower_sums[i];
    REQUIRE(gap > 0.0);
    lx.push_back(std::log(rep.mesh_ladder[i]));
    ly.push_back(std::log(gap));
  }
  const double slope = fit_slope(lx, ly);
  CHECK(slope > 0.8);
  CHECK(slope < 1.2);
}

TEST_CASE("mesh comparison on the unit indicator") {
  auto g = indicator_unit();
  auto r = mesh_inequality_check(g, TailEnvelope::zero_beyond(1.0), 1.0, 1.0,
                                 0.0, 0.0);
  CHECK(r.pass);
  CHECK(r.upper_lhs == doctest::Approx(1.0));
  CHECK(r.upper_rhs == doctest::Approx(3.0));
}

TEST_CASE("mesh comparison on the triangle with reported slack") {
  auto tri = triangle_grid();
  auto r = mesh_inequality_check(tri, TailEnvelope::zero_beyond(2.0), 2.0, 0.5,
                                 0.3, 0.0);
  CHECK(r.pass);
  CHECK(r.upper_lhs <= r.upper_rhs);
  CHECK(r.lower_lhs >= r.lower_rhs);
}

TEST_CASE("mesh comparison holds on 1000 seeded step functions") {
  oracle::Lcg rng(987654321u);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    StepFn fn;
    auto g = make_step_grid(rng, fn);
    const auto env = TailEnvelope::zero_beyond(6.0);
    const double d1 = rng.range(0.25, 4.0);
    const double d2 = rng.range(0.25, 4.0);
    const double x1 = rng.range(-2.0, 2.0);
    const double x2 = rng.range(-2.0, 2.0);
    auto r = mesh_inequality_check(g, env, d1, d2, x1, x2);
    if (!r.pass) {
      ++violations;
      CAPTURE(trial);
      CAPTURE(d1);
      CAPTURE(d2);
      CAPTURE(x1);
      CAPTURE(x2);
      CHECK(r.pass);
    }
  }
  CHECK(violations == 0);
}
