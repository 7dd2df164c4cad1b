#include "dri/grid.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dri/density.hpp"

namespace dri {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TailEnvelope TailEnvelope::zero_beyond(double cutoff, double cap) {
  return {Kind::zero, cutoff, 0.0, 0.0, cap};
}
TailEnvelope TailEnvelope::power(double constant, double exponent, double cutoff,
                                 double cap) {
  return {Kind::power, cutoff, constant, exponent, cap};
}
TailEnvelope TailEnvelope::exp_decay(double constant, double rate, double cutoff,
                                     double cap) {
  return {Kind::exp_decay, cutoff, constant, rate, cap};
}
TailEnvelope TailEnvelope::log_power(double constant, double shift, double cutoff,
                                     double cap) {
  return {Kind::log_power, cutoff, constant, shift, cap};
}

double TailEnvelope::value(double t) const {
  t = std::abs(t);
  if (t < cutoff) return cap;
  double form;
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::power:
      form = (t == 0.0 && exponent > 0.0) ? kInf
                                          : constant * std::pow(t, -exponent);
      break;
    case Kind::exp_decay:
      form = constant * std::exp(-exponent * t);
      break;
    case Kind::log_power: {
      double lg = std::log(t) - exponent;
      form = (lg <= 0.0) ? kInf : constant / (t * lg * lg);
      break;
    }
    default:
      form = kInf;
  }
  return std::min(cap, form);
}

namespace {

// first point >= T where the decreasing form falls below the cap; forms are
// monotone beyond max(T, cutoff) so bisection is safe
double cap_crossover(const TailEnvelope& e, double T) {
  if (e.value(T) < e.cap) return T;
  double lo = T, hi = std::max(2.0 * T, 2.0);
  while (e.value(hi) >= e.cap && hi < 1e300) hi *= 2.0;
  if (hi >= 1e300) return kInf;  // form never crosses the cap
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (e.value(mid) >= e.cap ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

double TailEnvelope::integral_beyond(double T) const {
  T = std::max(T, 0.0);
  double head = 0.0;
  if (T < cutoff) {
    if (cap == 0.0) return integral_beyond(cutoff);
    head = cap * (cutoff - T);
    T = cutoff;
  }
  switch (kind) {
    case Kind::zero:
      return head;
    case Kind::power: {
      if (constant == 0.0) return head;
      if (exponent <= 1.0) return kInf;
      double tc = cap_crossover(*this, T);
      if (!std::isfinite(tc)) return kInf;
      return head + cap * (tc - T) +
             constant * std::pow(tc, 1.0 - exponent) / (exponent - 1.0);
    }
    case Kind::exp_decay: {
      if (constant == 0.0) return head;
      double tc = cap_crossover(*this, T);
      return head + cap * (tc - T) +
             (constant / exponent) * std::exp(-exponent * tc);
    }
    case Kind::log_power: {
      if (constant == 0.0) return head;
      double tc = cap_crossover(*this, T);
      if (!std::isfinite(tc)) return kInf;
      double lg = std::log(tc) - exponent;
      return head + cap * (tc - T) + constant / lg;
    }
  }
  return kInf;
}

double TailEnvelope::integral_pow_beyond(double T, double p) const {
  if (!(p >= 1.0)) throw std::invalid_argument("integral_pow_beyond: p >= 1 required");
  T = std::max(T, 0.0);
  double head = 0.0;
  if (T < cutoff) {
    if (cap == 0.0) return integral_pow_beyond(cutoff, p);
    head = std::pow(cap, p) * (cutoff - T);
    T = cutoff;
  }
  switch (kind) {
    case Kind::zero:
      return head;
    case Kind::power: {
      if (constant == 0.0) return head;
      if (exponent * p <= 1.0) return kInf;
      double tc = cap_crossover(*this, T);
      if (!std::isfinite(tc)) return kInf;
      return head + std::pow(cap, p) * (tc - T) +
             std::pow(constant, p) * std::pow(tc, 1.0 - exponent * p) /
                 (exponent * p - 1.0);
    }
    case Kind::exp_decay: {
      if (constant == 0.0) return head;
      double tc = cap_crossover(*this, T);
      return head + std::pow(cap, p) * (tc - T) +
             std::pow(constant, p) * std::exp(-exponent * p * tc) /
                 (exponent * p);
    }
    case Kind::log_power: {
      // value decreasing beyond tc: int v^p <= v(tc)^(p-1) * int v
      double tc = cap_crossover(*this, T);
      if (!std::isfinite(tc)) return kInf;
      double plain = integral_beyond(tc);
      return head + std::pow(cap, p) * (tc - T) +
             std::pow(value(tc), p - 1.0) * plain;
    }
  }
  return kInf;
}

bool TailEnvelope::integrable() const {
  return std::isfinite(integral_beyond(cutoff));
}

double TailEnvelope::weighted_integral_beyond(double T, double eps) const {
  if (eps < 0.0 || eps > 1.0)
    throw std::invalid_argument("weighted_integral_beyond: eps in [0,1] required");
  T = std::max(T, 0.0);
  if (eps == 0.0) {
    double v = integral_beyond(T);
    return std::isfinite(v) ? 2.0 * v : kInf;
  }
  double head = 0.0;
  auto cap_head = [&](double from, double to, double c) {
    return c * ((to - from) +
                (std::pow(to, 1.0 + eps) - std::pow(from, 1.0 + eps)) /
                    (1.0 + eps));
  };
  if (T < cutoff) {
    if (cap > 0.0) head = cap_head(T, cutoff, cap);
    T = cutoff;
  }
  switch (kind) {
    case Kind::zero:
      return head;
    case Kind::power: {
      if (constant == 0.0) return head;
      if (exponent <= 1.0 + eps) return kInf;
      double tc = cap_crossover(*this, T);
      if (!std::isfinite(tc)) return kInf;
      head += cap_head(T, tc, cap);
      double one = constant * std::pow(tc, 1.0 - exponent) / (exponent - 1.0);
      double weighted = constant * std::pow(tc, 1.0 + eps - exponent) /
                        (exponent - 1.0 - eps);
      return head + one + weighted;
    }
    case Kind::exp_decay: {
      if (constant == 0.0) return head;
      double tc = cap_crossover(*this, T);
      head += cap_head(T, tc, cap);
      double r = exponent;
      double one = (constant / r) * std::exp(-r * tc);
      // int_tc^inf t^eps e^{-rt} dt = Gamma(1+eps, r tc) / r^(1+eps)
      double weighted = constant * boost::math::tgamma(1.0 + eps, r * tc) /
                        std::pow(r, 1.0 + eps);
      return head + one + weighted;
    }
    case Kind::log_power:
      return kInf;  // t^eps / (t log^2 t) is not integrable for eps > 0
  }
  return kInf;
}

double GridFunction::interp(double x) const {
  if (values.empty()) return 0.0;
  if (x < x_min() || x > x_max()) return 0.0;
  double t = (x - origin) / spacing;
  auto i = static_cast<std::size_t>(t);
  if (i + 1 >= values.size()) return values.back();
  double fr = t - double(i);
  return values[i] + fr * (values[i + 1] - values[i]);
}

double GridFunction::recompute_mass() const {
  if (values.size() < 2) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += v;
  acc -= 0.5 * (values.front() + values.back());
  return acc * spacing;
}

bool GridFunction::mass_coherent(double rel_tol) const {
  double m = recompute_mass();
  return std::abs(mass - m) <= rel_tol * std::max(1.0, std::abs(m));
}

GridFunction GridFunction::from_samples(double origin, double spacing,
                                        std::vector<double> v, bool nonneg) {
  if (v.empty()) throw std::invalid_argument("GridFunction: values non-empty");
  if (!(spacing > 0.0)) throw std::invalid_argument("GridFunction: spacing > 0");
  GridFunction g;
  g.origin = origin;
  g.spacing = spacing;
  g.values = std::move(v);
  g.nonneg = nonneg;
  if (nonneg)
    for (double x : g.values)
      if (!(x >= 0.0))
        throw std::invalid_argument("GridFunction: negative value in non-negative grid");
  g.refresh_mass();
  return g;
}

Discretization discretize(const DensitySpec& spec, double a, double b, double h,
                          std::size_t max_samples) {
  if (!(b > a) || !(h > 0.0)) throw std::invalid_argument("discretize: need b > a, h > 0");
  auto n_cells = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
  if (n_cells + 1 > max_samples)
    throw std::invalid_argument("discretize: grid exceeds configured max size");

  std::vector<double> jumps = spec.jump_points();
  auto near = [](double x, double y) {
    return std::abs(x - y) <= 1e-9 * (1.0 + std::abs(y));
  };

  std::vector<double> v(n_cells + 1);
  for (std::size_t i = 0; i <= n_cells; ++i) {
    double x = a + h * double(i);
    double val = spec.eval(x);
    if (!std::isfinite(val)) {
      // integrable singularity: use the cell average from the CDF
      val = (spec.cdf(x + 0.5 * h) - spec.cdf(x - 0.5 * h)) / h;
    } else {
      for (double j : jumps) {
        if (!near(x, j)) continue;
        bool interior = (j > a + 0.5 * h) && (j < b - 0.5 * h);
        if (interior) {
          // half sum of the one-sided limits keeps the trapezoid mass exact
          double d = 1e-7 * (1.0 + std::abs(j));
          val = 0.5 * (spec.eval(j - d) + spec.eval(j + d));
        }
        // at the window edge the inward limit is eval itself
        break;
      }
    }
    v[i] = val;
  }

  Discretization out;
  out.grid = GridFunction::from_samples(a, h, std::move(v));
  out.grid.vanishes_left = spec.support_min() >= a - 1e-12;
  out.grid.vanishes_right = spec.support_max() <= b + 1e-12;
  if (spec.has_exact_extrema()) {
    DensitySpec copy = spec;
    out.grid.extrema = [copy](double l, double r) {
      return copy.range_extrema(l, r);
    };
  }
  out.envelope = spec.value_envelope();
  out.mass_envelope = spec.mass_envelope();
  out.truncated_mass = std::max(0.0, 1.0 - (spec.cdf(b) - spec.cdf(a)));
  if (out.truncated_mass > 1e-3 && !out.envelope.integrable())
    throw std::runtime_error("discretize: uncertified truncation");
  return out;
}

double lp_norm(const GridFunction& g, const TailEnvelope& env, double p) {
  double edge_r = std::abs(g.x_max());
  double edge_l = std::abs(g.x_min());
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : g.values) m = std::max(m, std::abs(v));
    if (!g.vanishes_right) m = std::max(m, env.value(edge_r));
    if (!g.vanishes_left) m = std::max(m, env.value(edge_l));
    return m;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p >= 1 required");
  double acc = 0.0;
  if (g.extrema) {
    // cellwise one-sided extrema: exact for piecewise-constant functions;
    // in particular a jump cell contributes its true power, not the
    // half-value stored at the jump sample.  The interval is shrunk to its
    // interior so a boundary spike of measure zero cannot leak in.
    const double nudge = 1e-9 * g.spacing;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      const auto [s, m] = g.extrema(g.x_at(i) + nudge, g.x_at(i + 1) - nudge);
      if (std::isfinite(s))
        acc += 0.5 * (std::pow(std::abs(s), p) + std::pow(std::abs(m), p));
      else
        acc += 0.5 * (std::pow(std::abs(g.values[i]), p) +
                      std::pow(std::abs(g.values[i + 1]), p));
    }
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) {
      double w = (i == 0 || i + 1 == g.size()) ? 0.5 : 1.0;
      acc += w * std::pow(std::abs(g.values[i]), p);
    }
  }
  acc *= g.spacing;
  double tail = 0.0;
  if (!g.vanishes_right) tail += env.integral_pow_beyond(edge_r, p);
  if (!g.vanishes_left) {
    if (g.x_min() > 0.0)
      throw std::invalid_argument("lp_norm: window must reach 0 unless the function vanishes on the left");
    tail += env.integral_pow_beyond(edge_l, p);
  }
  if (!std::isfinite(tail)) return kInf;
  return std::pow(acc + tail, 1.0 / p);
}

namespace {

// sample index range covering [l, r) within the grid, empty when none
std::pair<std::ptrdiff_t, std::ptrdiff_t> sample_range(const GridFunction& g,
                                                       double l, double r) {
  double tol = 1e-9;
  auto lo = static_cast<std::ptrdiff_t>(std::ceil((l - g.origin) / g.spacing - tol));
  auto hi = static_cast<std::ptrdiff_t>(std::ceil((r - g.origin) / g.spacing - tol)) - 1;
  lo = std::max<std::ptrdiff_t>(lo, 0);
  hi = std::min<std::ptrdiff_t>(hi, std::ptrdiff_t(g.size()) - 1);
  return {lo, hi};
}

}  // namespace

double block_sup(const GridFunction& g, const TailEnvelope& env, double l,
                 double r) {
  if (!(r > l)) throw std::invalid_argument("block_sup: need r > l");
  if (r - l < double(kMinSamplesPerBlock) * g.spacing * (1.0 - 1e-12))
    throw std::runtime_error("mesh too fine for grid");
  double xmin = g.x_min(), xmax = g.x_max();
  double sup = -kInf;
  bool overlaps = (l <= xmax) && (r > xmin);
  if (overlaps) {
    double il = std::max(l, xmin);
    double ir = std::min(r, xmax + g.spacing);  // half-open; xmax itself counts
    if (g.extrema) {
      sup = std::max(sup, g.extrema(il, std::min(ir, std::nextafter(xmax, kInf)))
                              .first);
    } else {
      auto [i0, i1] = sample_range(g, il, ir);
      for (auto i = i0; i <= i1; ++i)
        sup = std::max(sup, g.values[std::size_t(i)]);
      if (i1 < i0)
        sup = std::max({sup, g.interp(il), g.interp(std::min(r, xmax))});
    }
  }
  // parts beyond the window
  if (r > xmax && !g.vanishes_right)
    sup = std::max(sup, env.value(l > xmax ? std::min(std::abs(l), std::abs(r))
                                           : std::abs(xmax)));
  if (l < xmin && !g.vanishes_left)
    sup = std::max(sup, env.value(r < xmin ? std::min(std::abs(l), std::abs(r))
                                           : std::abs(xmin)));
  if (sup == -kInf) sup = 0.0;  // block lies where the function vanishes
  return sup;
}

double block_inf(const GridFunction& g, double l, double r) {
  if (!(r > l)) throw std::invalid_argument("block_inf: need r > l");
  if (r - l < double(kMinSamplesPerBlock) * g.spacing * (1.0 - 1e-12))
    throw std::runtime_error("mesh too fine for grid");
  double xmin = g.x_min(), xmax = g.x_max();
  if (l < xmin || r > xmax + g.spacing * 1e-9) return 0.0;  // beyond-window part: inf 0
  if (g.extrema) return g.extrema(l, r).second;
  auto [i0, i1] = sample_range(g, l, r);
  double inf = kInf;
  for (auto i = i0; i <= i1; ++i) inf = std::min(inf, g.values[std::size_t(i)]);
  if (i1 < i0) inf = std::min(g.interp(l), g.interp(std::min(r, xmax)));
  return inf;
}

}  // namespace dri
