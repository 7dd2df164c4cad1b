#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dri/convolution.hpp"
#include "dri/density.hpp"
#include "dri/grid.hpp"
#include "dri/quadrature.hpp"
#include "oracles.hpp"

using namespace dri;

namespace {

GridFunction indicator_unit(double h = 0.01) {
  std::vector<double> v(static_cast<std::size_t>(std::lround(1.0 / h)) + 1, 1.0);
  v.back() = 0.0;  // half-open support [0,1)
  auto g = GridFunction::from_samples(0.0, h, std::move(v));
  g.vanishes_left = true;
  g.vanishes_right = true;
  return g;
}

}  // namespace

TEST_CASE("discretize: bounded support on a covering window") {
  auto d = discretize(DensitySpec::uniform(0.0, 1.0), -1.0, 2.0, 0.01);
  CHECK(d.grid.size() == 301);
  CHECK(d.grid.mass == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(d.truncated_mass == 0.0);
  CHECK(d.envelope.value(1.0 + 1e-9) == 0.0);
  CHECK(d.mass_envelope.value(1.1) == 0.0);
  CHECK(d.grid.vanishes_left);
  CHECK(d.grid.vanishes_right);
}

TEST_CASE("discretize: exponential window truncation is reported") {
  auto d = discretize(DensitySpec::exponential(1.0), 0.0, 40.0, 0.01);
  CHECK(d.grid.size() == 4001);
  CHECK(d.truncated_mass == doctest::Approx(std::exp(-40.0)).epsilon(1e-6));
  CHECK(d.envelope.kind == TailEnvelope::Kind::exp_decay);
  CHECK(d.envelope.value(5.0) == doctest::Approx(std::exp(-5.0)).epsilon(1e-12));
}

TEST_CASE("discretize: heavy tail carries a power mass envelope") {
  auto d = discretize(DensitySpec::pareto(0.5, 1.0), 0.0, 1e4, 0.25);
  CHECK(d.mass_envelope.value(4.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.mass_envelope.value(0.25) == 1.0);  // capped at total mass
  CHECK(d.truncated_mass == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(d.envelope.integrable());
}

TEST_CASE("discretize: large uncovered mass without an integrable envelope") {
  GridFunction flat;
  flat.origin = 0.0;
  flat.spacing = 0.01;
  flat.values.assign(101, 1.0);
  flat.refresh_mass();
  // declared majorant decays like 1/t: not integrable
  auto tab = DensitySpec::tabulated(flat, TailEnvelope::power(1.0, 1.0, 1.0, 1.0));
  CHECK_THROWS_AS(discretize(tab, 0.0, 0.5, 0.01), std::runtime_error);
  CHECK_NOTHROW(discretize(tab, 0.0, 1.0, 0.01));
}

TEST_CASE("lp_norm pins on the uniform grid") {
  auto d = discretize(DensitySpec::uniform(0.0, 1.0), -1.0, 2.0, 0.01);
  CHECK(lp_norm(d.grid, d.envelope, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(lp_norm(d.grid, d.envelope, 2.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(lp_norm(d.grid, d.envelope,
                std::numeric_limits<double>::infinity()) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lp_norm: heavy-tail grid stays finite with an integrable envelope") {
  auto d = discretize(DensitySpec::pareto(0.5, 1.0), 0.0, 1e4, 0.25);
  const double n1 = lp_norm(d.grid, d.envelope, 1.0);
  CHECK(std::isfinite(n1));
  CHECK(n1 == doctest::Approx(1.0).epsilon(0.02));
  // borderline exponent: p * decay = 1 diverges
  CHECK(std::isinf(lp_norm(d.grid, TailEnvelope::power(1.0, 1.0, 1.0, 1.0), 1.0)));
}

TEST_CASE("block extrema on the unit indicator") {
  auto g = indicator_unit();
  const auto env = TailEnvelope::zero_beyond(1.0);
  CHECK(block_sup(g, env, 0.0, 1.0) == 1.0);
  CHECK(block_inf(g, 0.0, 1.0) == 1.0);
  CHECK(block_inf(g, 0.0, 2.0) == 0.0);
  CHECK_THROWS_AS(block_sup(g, env, 0.0, 0.05), std::runtime_error);
}

TEST_CASE("block sup finds the triangle apex") {
  // the apex sits where both factors jump, so the sampled peak carries an
  // O(h) bias; the band reflects that
  auto u = discretize(DensitySpec::uniform(0.0, 1.0), -0.5, 1.5, 0.01).grid;
  auto tri = convolve(u, u);
  CHECK(block_sup(tri, TailEnvelope::zero_beyond(2.0), 0.9, 1.1) ==
        doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("block sup of a decreasing tail is dominated by the shifted mass") {
  auto spec = DensitySpec::log_counterexample();
  auto d = discretize(spec, std::numbers::e, 60.0, 0.01);
  for (int m = 4; m <= 40; m += 4) {
    CAPTURE(m);
    const double sup = block_sup(d.grid, d.envelope, m, m + 1.0);
    const double shifted =
        integrate([&](double x) { return spec.eval(x); }, m - 1.0, m, 1e-10);
    CHECK(sup <= shifted + 1e-12);
  }
}

TEST_CASE("blocks beyond the window fall back to the envelope") {
  auto d = discretize(DensitySpec::log_counterexample(), std::numbers::e, 60.0,
                      0.01);
  const double sup = block_sup(d.grid, d.envelope, 70.0, 71.0);
  CHECK(sup == doctest::Approx(d.envelope.value(70.0)).epsilon(1e-12));
  CHECK(block_inf(d.grid, 70.0, 71.0) == 0.0);
}

TEST_CASE("block sup dominates block inf on random blocks") {
  auto d = discretize(DensitySpec::exponential(1.0), 0.0, 20.0, 0.01);
  oracle::Lcg rng(42);
  double lo = 0.0, hi = 0.0;
  for (double v : d.grid.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (int i = 0; i < 200; ++i) {
    const double l = rng.range(0.0, 18.0);
    const double r = l + rng.range(0.1, 2.0);
    const double s = block_sup(d.grid, d.envelope, l, r);
    const double m = block_inf(d.grid, l, r);
    CHECK(s >= m);
    if (l >= d.grid.x_min() && r <= d.grid.x_max()) {
      CHECK(s <= hi + 1e-12);
      CHECK(m >= lo - 1e-12);
    }
  }
}

TEST_CASE("sample-based block sup never shrinks under refinement") {
  auto coarse = discretize(DensitySpec::exponential(1.0), 0.0, 10.0, 0.02).grid;
  auto fine = discretize(DensitySpec::exponential(1.0), 0.0, 10.0, 0.01).grid;
  coarse.extrema = nullptr;
  fine.extrema = nullptr;
  const auto env = TailEnvelope::exp_decay(1.0, 1.0, 0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double l = 0.16 * k;
    CHECK(block_sup(fine, env, l, l + 0.16) >=
          block_sup(coarse, env, l, l + 0.16) - 1e-15);
  }
}

TEST_CASE("grid values sit below the envelope beyond its cutoff") {
  for (const auto& spec : {DensitySpec::pareto(0.5, 1.0),
                           DensitySpec::exponential(1.0)}) {
    CAPTURE(spec.label());
    const double hi = spec.kind() == DensityKind::pareto ? 1e3 : 40.0;
    auto d = discretize(spec, 0.0, hi, 0.25);
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
      const double x = d.grid.x_at(i);
      if (x < d.envelope.cutoff) continue;
      CHECK(d.grid.values[i] <= d.envelope.value(x) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("mass cache coherence is observable") {
  auto g = indicator_unit();
  CHECK(g.mass_coherent());
  g.values[50] = 3.0;
  CHECK_FALSE(g.mass_coherent());
  g.refresh_mass();
  CHECK(g.mass_coherent());
}

TEST_CASE("envelope integrability by kind and exponent") {
  CHECK(TailEnvelope::power(1.0, 1.5, 1.0, 1.0).integrable());
  CHECK_FALSE(TailEnvelope::power(1.0, 1.0, 1.0, 1.0).integrable());
  CHECK_FALSE(TailEnvelope::power(1.0, 0.0, 1.0, 1.0).integrable());
  CHECK(TailEnvelope::exp_decay(1.0, 1.0, 0.0, 1.0).integrable());
  CHECK(TailEnvelope::zero_beyond(1.0).integrable());
  CHECK(TailEnvelope::log_power(1.0, 0.0, std::numbers::e, 1.0).integrable());
}

TEST_CASE("linear interpolation inside the window, zero outside") {
  auto g = GridFunction::from_samples(0.0, 1.0, {0.0, 2.0, 4.0});
  CHECK(g.interp(0.5) == doctest::Approx(1.0));
  CHECK(g.interp(1.75) == doctest::Approx(3.5));
  CHECK(g.interp(-0.1) == 0.0);
  CHECK(g.interp(2.1) == 0.0);
}
