#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dri/bounds.hpp"
#include "dri/convolution.hpp"
#include "dri/density.hpp"
#include "dri/grid.hpp"
#include "oracles.hpp"

using namespace dri;

namespace {

double sup_abs_diff_on_overlap(const GridFunction& a, const GridFunction& b) {
  double worst = 0.0;
  const double lo = std::max(a.x_min(), b.x_min());
  const double hi = std::min(a.x_max(), b.x_max());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.x_at(i);
    if (x < lo || x > hi) continue;
    worst = std::max(worst, std::fabs(a.values[i] - b.interp(x)));
  }
  return worst;
}

std::vector<DensitySpec> finite_moment_catalog() {
  return {DensitySpec::exponential(1.0), DensitySpec::uniform(0.0, 1.0),
          DensitySpec::gamma(2.0, 1.0),  DensitySpec::pareto(0.5, 1.0),
          DensitySpec::pareto(0.6, 1.0), DensitySpec::sqrt_singular(),
          DensitySpec::gaussian(0.0, 1.0)};
}

}  // namespace

TEST_CASE("two uniforms convolve to the unit triangle") {
  // the apex is a jump-aligned output, so its sampled value carries an
  // O(h) bias; h is chosen to keep that under the 1e-4 pin
  const double h = 2e-5;
  auto u = discretize(DensitySpec::uniform(0.0, 1.0), -0.25, 1.25, h).grid;
  auto tri = convolve(u, u);
  CHECK(tri.interp(1.0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(tri.interp(0.5) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(tri.mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("two unit exponentials convolve to Gamma(2,1)") {
  // window starts left of 0 so the support-edge jump is an interior sample
  auto e = discretize(DensitySpec::exponential(1.0), -1.0, 40.0, 0.005).grid;
  auto g2 = convolve(e, e);
  CHECK(g2.interp(1.0) ==
        doctest::Approx(oracle::gamma_pdf(2.0, 1.0, 1.0)).epsilon(1e-4));
  CHECK(g2.interp(3.0) ==
        doctest::Approx(oracle::gamma_pdf(2.0, 1.0, 3.0)).epsilon(1e-4));
}

TEST_CASE("convolving with a near-delta kernel shifts and preserves mass") {
  auto e = discretize(DensitySpec::exponential(1.0), -1.0, 30.0, 0.005).grid;
  const double h = e.spacing;
  GridFunction delta_like;
  delta_like.origin = 0.5 - h;
  delta_like.spacing = h;
  delta_like.values = {0.0, 1.0 / h, 0.0};
  delta_like.refresh_mass();
  auto shifted = convolve(e, delta_like);
  CHECK(shifted.mass == doctest::Approx(e.mass).epsilon(1e-6));
  for (double x : {1.0, 2.5, 10.0})
    CHECK(shifted.interp(x + 0.5) ==
          doctest::Approx(e.interp(x)).epsilon(1e-3));
}

TEST_CASE("spectral and direct convolution agree") {
  oracle::Lcg rng(777u);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 32 + rng.integer(0, 480);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = rng.unit();
    for (auto& v : b) v = rng.unit();
    auto ga = GridFunction::from_samples(-1.0, 0.01, a);
    auto gb = GridFunction::from_samples(0.5, 0.01, b);
    auto fast = convolve(ga, gb);
    auto slow = convolve_direct(ga, gb);
    REQUIRE(fast.size() == slow.size());
    CHECK(fast.origin == doctest::Approx(slow.origin));
    double worst = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i)
      worst = std::max(worst, std::fabs(fast.values[i] - slow.values[i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("commutativity within round-off") {
  auto u = discretize(DensitySpec::uniform(0.0, 1.0), -0.5, 1.5, 0.01).grid;
  auto e = discretize(DensitySpec::exponential(1.0), 0.0, 20.0, 0.01).grid;
  auto ab = convolve(u, e);
  auto ba = convolve(e, u);
  CHECK(sup_abs_diff_on_overlap(ab, ba) < 1e-12);
}

TEST_CASE("convolution powers of the exponential match the gamma family") {
  auto cp = convolve_power(DensitySpec::exponential(1.0), 3);
  CHECK(cp.grid.interp(2.0) ==
        doctest::Approx(oracle::gamma_pdf(3.0, 1.0, 2.0)).epsilon(1e-4));
  CHECK(cp.grid.interp(5.0) ==
        doctest::Approx(oracle::gamma_pdf(3.0, 1.0, 5.0)).epsilon(1e-4));
}

TEST_CASE("first power returns the discretized input") {
  auto cp = convolve_power(DensitySpec::uniform(0.0, 1.0), 1);
  CHECK(cp.k == 1);
  CHECK(cp.grid.interp(0.5) == doctest::Approx(1.0));
  CHECK(cp.mass_drift < 1e-9);
}

TEST_CASE("irwin-hall oracle pins the uniform powers") {
  for (int k : {2, 4, 8}) {
    CAPTURE(k);
    auto cp = convolve_power(DensitySpec::uniform(0.0, 1.0), k);
    for (double x : {0.5 * k, 0.25 * k, 0.5 * k + 0.9}) {
      CHECK(cp.grid.interp(x) ==
            doctest::Approx(oracle::irwin_hall_pdf(k, x)).epsilon(2e-4));
    }
  }
}

TEST_CASE("the square-root singularity flattens after one convolution") {
  auto cp = convolve_power(DensitySpec::sqrt_singular(), 2);
  double sup = 0.0;
  for (double v : cp.grid.values) sup = std::max(sup, v);
  const double quarter_pi = std::numbers::pi / 4.0;
  CHECK(sup <= quarter_pi + 1e-3);
  CHECK(sup >= quarter_pi - 1e-3);
  // interior values follow the arcsine-type closed form
  CHECK(cp.grid.interp(0.7) ==
        doctest::Approx(oracle::sqrt_conv2_pdf(0.7)).epsilon(1e-3));
  CHECK(cp.grid.interp(1.5) ==
        doctest::Approx(oracle::sqrt_conv2_pdf(1.5)).epsilon(1e-3));
}

TEST_CASE("semigroup property on the common window") {
  std::vector<ConvolutionPower> pow;
  for (int k = 1; k <= 8; ++k)
    pow.push_back(convolve_power(DensitySpec::uniform(0.0, 1.0), k));
  for (auto [i, j] : std::vector<std::pair<int, int>>{{1, 2}, {2, 2}, {3, 5}}) {
    CAPTURE(i);
    CAPTURE(j);
    auto direct = pow[std::size_t(i + j - 1)].grid;
    auto combined = convolve(pow[std::size_t(i - 1)].grid,
                             pow[std::size_t(j - 1)].grid);
    CHECK(sup_abs_diff_on_overlap(direct, combined) < 1e-8);
  }
}

TEST_CASE("sup norms contract under convolution with a density") {
  for (const auto& spec :
       {DensitySpec::exponential(1.0), DensitySpec::uniform(0.0, 1.0)}) {
    CAPTURE(spec.label());
    double prev_sup = -1.0;
    for (int k = 1; k <= 8; ++k) {
      auto cp = convolve_power(spec, k);
      double sup = 0.0;
      for (double v : cp.grid.values) sup = std::max(sup, v);
      if (k > 1) CHECK(sup <= prev_sup * 1.0 + 1e-6);
      prev_sup = sup;
    }
  }
}

TEST_CASE("mass drift stays reported and small for light tails") {
  for (const auto& spec :
       {DensitySpec::exponential(1.0), DensitySpec::uniform(0.0, 1.0),
        DensitySpec::gaussian(0.0, 1.0), DensitySpec::gamma(2.0, 1.0)}) {
    CAPTURE(spec.label());
    auto cp = convolve_power(spec, 8);
    CHECK(cp.mass_drift <= 1e-6);
  }
}

TEST_CASE("tail envelope of a power carries the advertised constant") {
  auto cp = convolve_power(DensitySpec::pareto(0.6, 1.0), 4);
  const double expect =
      std::pow(4.0, 1.0 + cp.eps_used) * cp.moment_constant;
  CHECK(cp.envelope.constant == doctest::Approx(expect).epsilon(1e-12));
  CHECK(cp.envelope.exponent == doctest::Approx(cp.eps_used).epsilon(1e-12));
}

TEST_CASE("tail mass of every power obeys the moment transfer bound") {
  for (const auto& spec : finite_moment_catalog()) {
    CAPTURE(spec.label());
    const double eps = *spec.epsilon();
    const double C = spec.moment_eps(eps);
    REQUIRE(std::isfinite(C));
    for (int k : {1, 2, 4, 8}) {
      auto cp = convolve_power(spec, k);
      const double kC = std::pow(double(k), 1.0 + eps) * C;
      for (int ti = 1; ti <= 100; ++ti) {
        const double t = 0.4 * ti;
        const double bound = std::min(1.0, kC / std::pow(t, eps));
        const double got = mass_beyond(cp.grid, cp.envelope, t).lower;
        CHECK(got <= bound + 1e-8);
      }
    }
  }
}

TEST_CASE("moment growth of powers follows the additive rule") {
  for (const auto& spec : finite_moment_catalog()) {
    CAPTURE(spec.label());
    const double eps = *spec.epsilon();
    const double C = spec.moment_eps(eps);
    for (int k : {2, 4, 8}) {
      auto cp = convolve_power(spec, k);
      // grid moment plus envelope tail, an upper estimate of int |x|^eps f_k
      double grid_part = 0.0;
      for (std::size_t i = 0; i < cp.grid.size(); ++i) {
        const double w = (i == 0 || i + 1 == cp.grid.size()) ? 0.5 : 1.0;
        grid_part += w * std::pow(std::fabs(cp.grid.x_at(i)), eps) *
                     cp.grid.values[i];
      }
      grid_part *= cp.grid.spacing;
      const double bound = std::pow(double(k), eps) * (double(k) * C);
      CHECK(grid_part <= bound + 1e-8);
    }
  }
}

TEST_CASE("fourier transform pins for the uniform") {
  auto g = discretize(DensitySpec::uniform(0.0, 1.0), -1.0, 2.0, 1e-3).grid;
  auto rep = fourier_norms(g, {1.0, 2.0});
  CHECK(rep.sup_norm == doctest::Approx(1.0).epsilon(1e-6));
  REQUIRE(rep.fit_ok);
  CHECK(rep.decay_exponent == doctest::Approx(-1.0).epsilon(0.15));
}

TEST_CASE("fourier decay of the square-root singularity") {
  auto g = discretize(DensitySpec::sqrt_singular(), 0.0, 1.0, 1e-4).grid;
  auto rep = fourier_norms(g, {2.0});
  REQUIRE(rep.fit_ok);
  CHECK(rep.decay_exponent == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("plancherel identity with the explicit convention factor") {
  for (const auto& spec :
       {DensitySpec::gaussian(0.0, 1.0), DensitySpec::gamma(4.0, 1.0)}) {
    CAPTURE(spec.label());
    const double lo = spec.kind() == DensityKind::gaussian ? -12.0 : 0.0;
    const double hi = spec.kind() == DensityKind::gaussian ? 12.0 : 60.0;
    auto g = discretize(spec, lo, hi, 1e-3).grid;
    auto rep = fourier_norms(g, {2.0});
    CHECK(rep.convention_factor == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(rep.plancherel_lhs ==
          doctest::Approx(rep.plancherel_rhs).epsilon(1e-6));
  }
}

TEST_CASE("boundedness index across the catalog") {
  auto u = boundedness_index(DensitySpec::uniform(0.0, 1.0));
  CHECK(u.k0 == 1);
  auto n = boundedness_index(DensitySpec::gaussian(0.0, 1.0));
  CHECK(n.k0 == 1);
  auto s = boundedness_index(DensitySpec::sqrt_singular());
  CHECK(s.k0 == 2);
  CHECK(s.sup_at_k0 <= std::numbers::pi / 4.0 + 1e-3);
  CHECK(s.cross_check_ok);
}

TEST_CASE("powers above the boundedness index are continuous and vanish") {
  CHECK(continuity_vanishing_check(DensitySpec::uniform(0.0, 1.0), 2).pass);
  CHECK(continuity_vanishing_check(DensitySpec::exponential(1.0), 2).pass);
  CHECK(continuity_vanishing_check(DensitySpec::sqrt_singular(), 3).pass);
}

TEST_CASE("local clt error shrinks along dyadic n for the uniform") {
  auto rep = local_clt_error(DensitySpec::uniform(0.0, 1.0), {2, 4, 8, 16});
  REQUIRE(rep.entries.size() == 4);
  CHECK(rep.decreasing);
  for (std::size_t i = 1; i < rep.entries.size(); ++i)
    CHECK(rep.entries[i].error < rep.entries[i - 1].error);
  CHECK(rep.entries.back().error < 0.02);
}

TEST_CASE("the gaussian is a fixed point of the rescaled convolution") {
  auto rep = local_clt_error(DensitySpec::gaussian(0.0, 1.0), {1, 2, 4});
  for (const auto& e : rep.entries) CHECK(e.error <= 1e-6);
}

TEST_CASE("half-line powers obey the shifted-argument sup bound") {
  auto spec = DensitySpec::exponential(1.0);
  std::vector<ConvolutionPower> pow;
  for (int k = 1; k <= 8; ++k) pow.push_back(convolve_power(spec, k));
  for (int n = 1; n <= 7; ++n) {
    CAPTURE(n);
    const auto& fn = pow[std::size_t(n - 1)].grid;
    const auto& fn1 = pow[std::size_t(n)].grid;
    for (double x : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      double rhs = 0.0;
      for (std::size_t i = 0; i < fn.size(); ++i) {
        const double y = fn.x_at(i);
        if (y < 0.5 * x) continue;
        rhs = std::max(rhs, spec.eval(y) + fn.values[i]);
      }
      CHECK(fn1.interp(x) <= rhs + 1e-3);
    }
  }
}
