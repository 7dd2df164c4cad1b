#include "dri/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dri/quadrature.hpp"

namespace dri {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact integral of the linear interpolant of g over [a, b] (clipped to the
// window; 0 outside).
double lin_integral(const GridFunction& g, double a, double b) {
  a = std::max(a, g.x_min());
  b = std::min(b, g.x_max());
  if (!(b > a) || g.size() < 2) return 0.0;
  const double sp = g.spacing;
  auto cell_of = [&](double x) {
    auto i = static_cast<long long>(std::floor((x - g.origin) / sp));
    return std::clamp(i, 0ll, static_cast<long long>(g.size()) - 2);
  };
  const long long i0 = cell_of(a), i1 = cell_of(b);
  if (i0 == i1) return (b - a) * 0.5 * (g.interp(a) + g.interp(b));
  double total = 0.0;
  const double x_first = g.x_at(static_cast<std::size_t>(i0) + 1);
  total += (x_first - a) * 0.5 * (g.interp(a) + g.values[i0 + 1]);
  for (long long i = i0 + 1; i < i1; ++i)
    total += sp * 0.5 * (g.values[i] + g.values[i + 1]);
  const double x_last = g.x_at(static_cast<std::size_t>(i1));
  total += (b - x_last) * 0.5 * (g.values[i1] + g.interp(b));
  return total;
}

// Per-cell upper sum: dominates the integral of anything the samples bracket.
double upper_cell_sum(const GridFunction& g) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i)
    total += g.spacing * std::max(g.values[i], g.values[i + 1]);
  return total;
}

double weighted_upper_cell_sum(const GridFunction& g, double eps) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double w =
        1.0 + std::pow(std::max(std::fabs(g.x_at(i)), std::fabs(g.x_at(i + 1))),
                       eps);
    total += g.spacing * w * std::max(g.values[i], g.values[i + 1]);
  }
  return total;
}

// P(|S_k| >= t) <= min(1, k * P(|X| >= t/k)): the union bound maps the base
// mass envelope through t -> t/k with an extra factor k.
TailEnvelope scale_mass_envelope(const TailEnvelope& e, int k) {
  const double kk = static_cast<double>(k);
  switch (e.kind) {
    case TailEnvelope::Kind::zero:
      return TailEnvelope::zero_beyond(kk * e.cutoff, 1.0);
    case TailEnvelope::Kind::power:
      return TailEnvelope::power(std::pow(kk, 1.0 + e.exponent) * e.constant,
                                 e.exponent, kk * e.cutoff, 1.0);
    case TailEnvelope::Kind::exp_decay:
      return TailEnvelope::exp_decay(kk * e.constant, e.exponent / kk,
                                     kk * e.cutoff, 1.0);
    case TailEnvelope::Kind::log_power:
      return TailEnvelope::log_power(kk * kk * e.constant,
                                     e.exponent + std::log(kk), kk * e.cutoff,
                                     1.0);
  }
  throw std::logic_error("scale_mass_envelope: unknown kind");
}

// Seed envelope: h_bar_1(x) = D * g_1(|x|/2) <= D * massenv(|x|/2).
TailEnvelope half_argument_envelope(const TailEnvelope& e, double factor) {
  switch (e.kind) {
    case TailEnvelope::Kind::zero:
      return TailEnvelope::zero_beyond(2.0 * e.cutoff, factor * e.cap);
    case TailEnvelope::Kind::power:
      return TailEnvelope::power(factor * std::pow(2.0, e.exponent) * e.constant,
                                 e.exponent, 2.0 * e.cutoff, factor * e.cap);
    case TailEnvelope::Kind::exp_decay:
      return TailEnvelope::exp_decay(factor * e.constant, e.exponent / 2.0,
                                     2.0 * e.cutoff, factor * e.cap);
    case TailEnvelope::Kind::log_power:
      return TailEnvelope::log_power(2.0 * factor * e.constant,
                                     e.exponent + std::log(2.0), 2.0 * e.cutoff,
                                     factor * e.cap);
  }
  throw std::logic_error("half_argument_envelope: unknown kind");
}

struct PowerTerm {
  double constant = 0.0;
  double exponent = 0.0;
};

// sum_i C_i t^{-p_i} <= (sum_i C_i cutoff^{p_min - p_i}) t^{-p_min} for
// t >= cutoff >= 1.
TailEnvelope merge_power_terms(const std::vector<PowerTerm>& terms,
                               double cutoff, double cap) {
  cutoff = std::max(cutoff, 1.0);
  double p_min = kInf;
  for (const auto& t : terms) p_min = std::min(p_min, t.exponent);
  double c = 0.0;
  for (const auto& t : terms)
    c += t.constant * std::pow(cutoff, p_min - t.exponent);
  return TailEnvelope::power(c, p_min, cutoff, cap);
}

// Pointwise majorant of (Phi_n h)(t) from a majorant of h, the mass envelope
// of f_n, and (heavy tails) the value envelope of f_n.  For t >= 6 the region
// |z| > (t-3)/2 splits at |x-z| = t/4: either h sits past t/4, or f_n sits
// past 3t/4.
TailEnvelope propagate_envelope(const TailEnvelope& env_h, double sup_cap,
                                double h_grid_upper, double h_l1_certified,
                                const TailEnvelope& mass_n,
                                const TailEnvelope& value_n) {
  const double cap = 2.0 * sup_cap;
  if (mass_n.kind == TailEnvelope::Kind::zero) {
    return TailEnvelope::zero_beyond(2.0 * mass_n.cutoff + 3.0, cap);
  }
  if (mass_n.kind == TailEnvelope::Kind::exp_decay) {
    // Phi(h)(t) <= 2 sup(h) g_n((t-3)/2)
    const double r = mass_n.exponent;
    return TailEnvelope::exp_decay(
        cap * mass_n.constant * std::exp(1.5 * r), r / 2.0,
        2.0 * mass_n.cutoff + 3.0, cap);
  }
  if (mass_n.kind != TailEnvelope::Kind::power ||
      env_h.kind != TailEnvelope::Kind::power ||
      value_n.kind != TailEnvelope::Kind::power) {
    throw std::logic_error(
        "propagate_envelope: unsupported envelope combination");
  }
  // Nearly log-divergent exponents are downgraded; the envelope only grows.
  double p = env_h.exponent;
  if (p > 0.95 && p < 1.05) p -= 0.1;
  const double pv = value_n.exponent;
  std::vector<PowerTerm> terms;
  const double lead = 2.0 * value_n.constant * std::pow(4.0 / 3.0, pv);
  if (p > 1.0 && std::isfinite(h_l1_certified)) {
    terms.push_back({lead * h_l1_certified, pv});
  } else {
    // int_{|w|<=r} h <= grid part + 2 C r^{1-p}/(1-p)
    terms.push_back({lead * h_grid_upper, pv});
    const double b = 2.0 * env_h.constant / (1.0 - std::min(p, 1.0 - 1e-9));
    terms.push_back({lead * b * std::pow(4.0, p - 1.0), pv + p - 1.0});
  }
  terms.push_back({2.0 * env_h.constant * std::pow(4.0, p) *
                       mass_n.constant * std::pow(4.0, mass_n.exponent),
                   p + mass_n.exponent});
  const double cutoff = std::max(
      {6.0, 4.0 * env_h.cutoff, (4.0 / 3.0) * value_n.cutoff,
       2.0 * mass_n.cutoff + 3.0});
  return merge_power_terms(terms, cutoff, cap);
}

// Least squares of log v against log x over the outer fraction of the
// positive axis.  exponent is the decay power (positive = decaying).
void fit_tail_exponent(const GridFunction& g, double frac, double& exponent,
                       double& r2) {
  exponent = 0.0;
  r2 = 0.0;
  const double x_hi = g.x_max();
  if (!(x_hi > 0.0)) return;
  const double x_lo = (1.0 - frac) * x_hi;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x_at(i);
    if (x < x_lo || x <= 0.0) continue;
    const double v = g.values[i];
    if (!(v > 0.0)) continue;
    const double lx = std::log(x), ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
    ++n;
  }
  if (n < 8) return;
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  if (!(std::fabs(den) > 0.0)) return;
  const double slope = (dn * sxy - sx * sy) / den;
  const double inter = (sy - slope * sx) / dn;
  const double ss_tot = syy - sy * sy / dn;
  double ss_res = 0.0;
  // Second pass for the residual sum.
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x_at(i);
    if (x < x_lo || x <= 0.0) continue;
    const double v = g.values[i];
    if (!(v > 0.0)) continue;
    const double e = std::log(v) - (inter + slope * std::log(x));
    ss_res += e * e;
  }
  exponent = -slope;
  r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

// sum over unit blocks of sup (1+|z|^eps)|f_k|, window blocks from the grid,
// tail blocks completed from the value envelope.
double weighted_unit_mesh_sum(const ConvolutionPower& fk, double eps) {
  const GridFunction& g = fk.grid;
  const TailEnvelope& env = fk.value_envelope;
  double total = 0.0;
  const auto m_lo = static_cast<long long>(std::floor(g.x_min()));
  const auto m_hi = static_cast<long long>(std::ceil(g.x_max()));
  for (long long m = m_lo; m < m_hi; ++m) {
    const double l = static_cast<double>(m), r = l + 1.0;
    const double w = 1.0 + std::pow(std::max(std::fabs(l), std::fabs(r)), eps);
    total += w * block_sup(g, env, l, r);
  }
  auto side_tail = [&](double from) {
    const double m0 = std::max(from, 1.0);
    return (1.0 + std::pow(m0 + 1.0, eps)) * env.value(m0) +
           std::pow(2.0, eps) * env.weighted_integral_beyond(m0, eps);
  };
  if (!g.vanishes_right) total += side_tail(static_cast<double>(m_hi));
  if (!g.vanishes_left) total += side_tail(-g.x_min());
  return total;
}

// c_eps = sup_a  sup_{[a-1,a+2]}(1+|z|^eps) / inf_{[a-1,a+2]}(1+|z|^eps).
// For eps in (0,1] the sup equals 1 + 3^eps: windows containing 0 peak at
// a in {-2, 1}; windows at distance m from 0 give
// (1+(m+3)^eps)/(1+m^eps) <= 1 + 3^eps since u^eps - v^eps <= (u-v)^eps.
double c_eps_scan(double eps) {
  if (eps <= 0.0) return 1.0;
  double best = 0.0;
  for (double a = -4.0; a <= 4.0 + 1e-12; a += 1.0 / 512.0) {
    const double lo = a - 1.0, hi = a + 2.0;
    const double far = std::max(std::fabs(lo), std::fabs(hi));
    const double sup = 1.0 + std::pow(far, eps);
    double inf = 1.0;
    if (lo > 0.0 || hi < 0.0)
      inf = 1.0 + std::pow(std::min(std::fabs(lo), std::fabs(hi)), eps);
    best = std::max(best, sup / inf);
  }
  return best;
}

double c_eps_analytic(double eps) {
  if (eps <= 0.0) return 1.0;
  return 1.0 + std::pow(3.0, eps);
}

// int |y|^eps f(y) dy extended to the degenerate eps = 0, where the weight
// collapses and the constant is the total mass.
double moment_or_mass(const DensitySpec& spec, double eps) {
  if (eps > 0.0) return spec.moment_eps(eps);
  return spec.kind() == DensityKind::tabulated ? spec.tabulated_grid().mass
                                               : 1.0;
}

}  // namespace

MassBeyond mass_beyond(const GridFunction& g, const TailEnvelope& mass_env,
                       double t) {
  MassBeyond out;
  if (t <= 0.0) {
    out.lower = g.mass;
  } else {
    out.lower = lin_integral(g, t, g.x_max());
    if (-t >= g.x_min()) out.lower += lin_integral(g, g.x_min(), -t);
  }
  out.lower = std::min(out.lower, 1.0);
  out.upper = out.lower + std::max(0.0, 1.0 - g.mass);
  if (!g.vanishes_right)
    out.upper += mass_env.value(std::max(t, g.x_max()));
  if (!g.vanishes_left)
    out.upper += mass_env.value(std::max(t, -g.x_min()));
  out.upper = std::min(out.upper, 1.0);
  out.upper = std::max(out.upper, out.lower);
  return out;
}

FellerReport feller_bound_check(const DensitySpec& spec, int k,
                                const ConvolvePowerOptions& opt) {
  if (k < 1) throw std::invalid_argument("feller_bound_check: k >= 1");
  const ConvolutionPower fk = convolve_power(spec, k, opt);
  const ConvolutionPower f2k = convolve_power(spec, 2 * k, opt);
  double sup_k = 0.0;
  for (double v : fk.grid.values) sup_k = std::max(sup_k, v);

  FellerReport rep;
  rep.worst_margin = -kInf;
  const std::size_t stride = std::max<std::size_t>(1, f2k.grid.size() / 4096);
  for (std::size_t i = 0; i < f2k.grid.size(); i += stride) {
    const double x = f2k.grid.x_at(i);
    const double lhs = f2k.grid.values[i];
    double tail_half;
    if (k == 1) {
      tail_half = spec.tail(std::fabs(x) / 2.0);
    } else {
      tail_half = mass_beyond(fk.grid, fk.envelope, std::fabs(x) / 2.0).lower;
    }
    const double rhs = 2.0 * sup_k * tail_half;
    const double margin = lhs - rhs;
    if (margin > rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_x = x;
    }
  }
  // the continuum inequality can hold with equality (uniform does, on the
  // whole upper support half), so allow one grid cell of sampling wiggle:
  // colliding jump samples shift either side by O(spacing) * sup
  rep.pass = rep.worst_margin <=
             1e-6 * (1.0 + sup_k) + sup_k * f2k.grid.spacing;

  const double window_edge =
      std::max(std::fabs(f2k.grid.x_min()), f2k.grid.x_max());
  const double t0 = std::max({1.5 * window_edge,
                              1.5 * f2k.value_envelope.cutoff,
                              3.0 * fk.envelope.cutoff});
  rep.far_field_ok = true;
  for (double mult : {1.0, 2.0, 4.0, 8.0}) {
    const double t = t0 * mult;
    const double lhs = f2k.value_envelope.value(t);
    const double rhs = 2.0 * sup_k * fk.envelope.value(t / 2.0);
    if (lhs > rhs * (1.0 + 1e-9) + 1e-300) rep.far_field_ok = false;
  }
  return rep;
}

GridFunction phi_apply(int n, const GridFunction& h, const TailEnvelope& h_env,
                       const ConvolutionPower& f_n, std::size_t max_output) {
  if (n != f_n.k) throw std::invalid_argument("phi_apply: n must match f_n.k");
  if (h.size() < 2 || f_n.grid.size() < 2)
    throw std::invalid_argument("phi_apply: degenerate grid");
  const GridFunction& fg = f_n.grid;
  const double sp = fg.spacing;
  double sup_h = h_env.cap;
  for (double v : h.values) sup_h = std::max(sup_h, v);

  auto h_read = [&](double y) {
    if (y >= h.x_min() && y <= h.x_max()) return h.interp(y);
    if (y < h.x_min()) return h.vanishes_left ? 0.0 : h_env.value(y);
    return h.vanishes_right ? 0.0 : h_env.value(y);
  };

  const std::size_t stride = (h.size() + max_output - 1) / max_output;
  const std::size_t n_out = (h.size() + stride - 1) / stride;
  GridFunction out;
  out.origin = h.origin;
  out.spacing = h.spacing * static_cast<double>(stride);
  out.values.resize(n_out);
  out.nonneg = true;
  out.vanishes_left = false;
  out.vanishes_right = false;

  for (std::size_t oi = 0; oi < n_out; ++oi) {
    const double x = h.x_at(oi * stride);
    const double c = (std::fabs(x) - 3.0) / 2.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < fg.size(); ++i) {
      const double f0 = fg.values[i], f1 = fg.values[i + 1];
      if (f0 == 0.0 && f1 == 0.0) continue;
      const double z0 = fg.x_at(i), z1 = z0 + sp;
      auto segment = [&](double u0, double u1) {
        if (!(u1 > u0)) return;
        const double fu0 = f0 + (f1 - f0) * (u0 - z0) / sp;
        const double fu1 = f0 + (f1 - f0) * (u1 - z0) / sp;
        acc += (u1 - u0) * 0.5 *
               (fu0 * h_read(x - u0) + fu1 * h_read(x - u1));
      };
      if (c <= 0.0) {
        segment(z0, z1);
      } else {
        if (z0 < -c) segment(z0, std::min(z1, -c));
        if (z1 > c) segment(std::max(z0, c), z1);
      }
    }
    // f_n beyond its window, restricted to |z| > c, bounded through the mass
    // envelope.  h(x - z) there lives at least zb - |x| away from the origin,
    // so once that distance clears the h window the h envelope replaces the
    // global sup; otherwise the sup stays.
    auto far_h_sup = [&](double zb) {
      const double t = zb - std::fabs(x);
      const double span = std::max(std::fabs(h.x_min()), std::fabs(h.x_max()));
      if (t > span) return std::min(sup_h, h_env.value(t));
      return sup_h;
    };
    double sides = 0.0;
    if (!fg.vanishes_right) {
      const double zb = std::max(c, fg.x_max());
      sides += far_h_sup(zb) * f_n.envelope.value(zb);
    }
    if (!fg.vanishes_left) {
      const double zb = std::max(c, -fg.x_min());
      sides += far_h_sup(zb) * f_n.envelope.value(zb);
    }
    out.values[oi] = std::max(0.0, 2.0 * (acc + sides));
  }
  out.refresh_mass();
  return out;
}

BlockBoundReport block_bound_check(const GridFunction& h,
                                   const TailEnvelope& h_env,
                                   const ConvolutionPower& f_l,
                                   const ConvolutionPower& f_2l,
                                   double a_lo, double a_hi, double a_step,
                                   double slack) {
  if (f_2l.k != 2 * f_l.k)
    throw std::invalid_argument("block_bound_check: need f_2l.k == 2*f_l.k");
  BlockBoundReport rep;
  rep.worst_hypothesis_margin = -kInf;
  rep.worst_conclusion_margin = -kInf;
  std::vector<double> a_grid;
  for (double a = a_lo; a <= a_hi + 1e-12; a += a_step) a_grid.push_back(a);

  for (double a : a_grid) {
    const double lhs = block_sup(f_l.grid, f_l.value_envelope, a, a + 1.0);
    const double rhs = lin_integral(h, a - 1.0, a + 2.0);
    const double margin = lhs - rhs;
    rep.worst_hypothesis_margin = std::max(rep.worst_hypothesis_margin, margin);
    if (margin > slack) rep.violating_a.push_back(a);
  }
  rep.hypothesis_ok = rep.violating_a.empty();
  if (!rep.hypothesis_ok) return rep;

  const GridFunction phi = phi_apply(f_l.k, h, h_env, f_l);
  for (double a : a_grid) {
    const double lhs = block_sup(f_2l.grid, f_2l.value_envelope, a, a + 1.0);
    const double rhs = lin_integral(phi, a - 1.0, a + 2.0);
    rep.worst_conclusion_margin =
        std::max(rep.worst_conclusion_margin, lhs - rhs);
  }
  rep.conclusion_ok = rep.worst_conclusion_margin <= slack;
  return rep;
}

namespace {

ConvolvePowerOptions chain_conv_options(const DensitySpec& spec, int n_max,
                                        const ConvolvePowerOptions& user) {
  if (user.window_lo != 0.0 || user.window_hi != 0.0 || user.spacing != 0.0)
    return user;
  ConvolvePowerOptions o;
  o.clip_to_window = true;
  const double K = static_cast<double>(1 << n_max);
  switch (spec.kind()) {
    case DensityKind::exponential: {
      const double rate = spec.params()[0];
      o.window_hi = (K + 40.0) / rate;
      o.spacing = o.window_hi / 8192.0;
      o.window_lo = -16.0 * o.spacing;
      break;
    }
    case DensityKind::gamma: {
      const double shape = spec.params()[0], rate = spec.params()[1];
      o.window_hi = (K * shape + 40.0) / rate;
      o.spacing = o.window_hi / 8192.0;
      o.window_lo = -16.0 * o.spacing;
      break;
    }
    case DensityKind::uniform: {
      const double a = spec.params()[0], b = spec.params()[1];
      o.spacing = (b - a) / 2048.0;
      o.window_lo = std::min(K * a, a) - 16.0 * o.spacing;
      o.window_hi = std::max(K * b, b) + 16.0 * o.spacing;
      break;
    }
    case DensityKind::pareto: {
      const double scale = spec.params()[1];
      o.spacing = scale / 16.0;
      o.window_lo = -16.0 * o.spacing;
      o.window_hi = 2000.0 * scale;
      break;
    }
    case DensityKind::gaussian: {
      const double m = spec.params()[0], sd = spec.params()[1];
      const double spread = 12.0 * sd * std::sqrt(K);
      o.window_lo = std::min(K * m, m) - spread;
      o.window_hi = std::max(K * m, m) + spread;
      o.spacing = sd / 128.0;
      break;
    }
    default: {
      const GridFunction& t = spec.tabulated_grid();
      o.spacing = t.spacing;
      o.window_lo = std::min(K * t.x_min(), t.x_min());
      o.window_hi = std::max(K * t.x_max(), t.x_max());
      break;
    }
  }
  const double span = o.window_hi - o.window_lo;
  const double max_n = static_cast<double>(std::size_t(1) << 20);
  if (span / o.spacing > max_n) o.spacing = span / max_n;
  return o;
}

struct LevelExtras {
  double upper_cell = 0.0;   // certified-direction grid part of ||h_bar||_1
  double l1_certified = kInf;  // upper_cell + envelope tail when finite
};

ChainLevel make_level(int level, GridFunction hbar, TailEnvelope env,
                      double sup_bound, double lq_exponent,
                      LevelExtras& extras) {
  ChainLevel L;
  L.level = level;
  L.hbar = std::move(hbar);
  L.envelope = env;
  L.sup_bound = sup_bound;
  L.l1_grid = L.hbar.mass;
  const double w0 = std::min(-L.hbar.x_min(), L.hbar.x_max());
  const bool vanishes = L.hbar.vanishes_left && L.hbar.vanishes_right;
  L.l1_tail = vanishes ? 0.0 : 2.0 * env.integral_beyond(w0);
  L.l1_total = L.l1_grid + L.l1_tail;
  L.l1_certified = std::isfinite(L.l1_tail);
  extras.upper_cell = upper_cell_sum(L.hbar);
  extras.l1_certified =
      L.l1_certified ? extras.upper_cell + L.l1_tail : kInf;
  L.lq_exponent = lq_exponent;
  double lq_grid = 0.0;
  for (std::size_t i = 0; i + 1 < L.hbar.size(); ++i)
    lq_grid += L.hbar.spacing *
               std::pow(std::max(L.hbar.values[i], L.hbar.values[i + 1]),
                        lq_exponent);
  const double lq_tail =
      vanishes ? 0.0 : 2.0 * env.integral_pow_beyond(w0, lq_exponent);
  L.lq_bound = lq_grid + lq_tail;
  fit_tail_exponent(L.hbar, 0.3, L.fitted_exponent, L.fit_r2);
  if (L.fit_r2 < 0.9) L.fitted_exponent = 0.0;  // unknown
  return L;
}

}  // namespace

EnvelopeChain build_envelope_chain(const DensitySpec& spec, int n_max,
                                   const ConvolvePowerOptions& opt) {
  if (n_max < 1 || n_max > 8)
    throw std::invalid_argument("envelope_chain: n_max must be in [1, 8]");
  if (!spec.epsilon().has_value())
    throw std::invalid_argument(
        "envelope_chain: density declares no finite moment exponent");
  EnvelopeChain ch;
  ch.spec = spec;
  ch.eps = std::min(*spec.epsilon(), 1.0);
  ch.sup_f = spec.sup_density();
  if (!std::isfinite(ch.sup_f))
    throw std::invalid_argument("envelope_chain: density must be bounded");
  ch.C = spec.moment_eps(ch.eps);
  if (!std::isfinite(ch.C))
    throw std::logic_error("envelope_chain: declared moment diverges");

  // B: infimum over a in [-2,1] (0.01 grid) of int_{a-1}^{a+2} 2||f|| g_1(|w|/2),
  // deflated 1% so the grid minimum stays a valid lower bound.
  double min_i = kInf;
  for (int s = 0; s <= 300; ++s) {
    const double a = -2.0 + 0.01 * s;
    // 1e-6 slack: the kink of the tail at the support edge caps the
    // quadrature error estimate well above machine precision, and the 1%
    // deflation below dominates it anyway.
    const double q = integrate(
        [&](double w) { return spec.tail(std::fabs(w) / 2.0); }, a - 1.0,
        a + 2.0, 1e-6);
    min_i = std::min(min_i, 2.0 * ch.sup_f * q);
  }
  ch.B = 0.99 * min_i;
  if (!(ch.B > 1e-12))
    throw std::runtime_error("envelope_chain: seed constant B vanished");
  ch.D = 2.0 * ch.sup_f * std::max(1.0, ch.sup_f / ch.B);

  const ConvolvePowerOptions copt = chain_conv_options(spec, n_max, opt);
  for (int i = 0; i <= n_max; ++i)
    ch.powers.push_back(convolve_power(spec, 1 << i, copt));

  // Seed grid h_bar_1 = D g_1(|x|/2), exact at grid points.
  const TailEnvelope base_mass = spec.mass_envelope();
  const double X = 32.0, hsp = 1.0 / 64.0;
  GridFunction h1;
  h1.origin = -X;
  h1.spacing = hsp;
  h1.values.resize(static_cast<std::size_t>(std::lround(2.0 * X / hsp)) + 1);
  for (std::size_t i = 0; i < h1.values.size(); ++i)
    h1.values[i] = ch.D * spec.tail(std::fabs(h1.x_at(i)) / 2.0);
  if (base_mass.kind == TailEnvelope::Kind::zero &&
      2.0 * base_mass.cutoff < X) {
    h1.vanishes_left = true;
    h1.vanishes_right = true;
  }
  h1.refresh_mass();

  std::vector<LevelExtras> extras(static_cast<std::size_t>(n_max));
  double lq = 2.0 / ch.eps;
  ch.levels.push_back(make_level(
      1, std::move(h1), half_argument_envelope(base_mass, ch.D), ch.D, lq,
      extras[0]));

  // Seed hypothesis, asserted on a probe grid before iterating.
  {
    const ConvolutionPower& f2 = ch.powers[1];
    for (double a = -8.0; a <= 8.0 + 1e-12; a += 0.5) {
      const double lhs =
          block_sup(f2.grid, f2.value_envelope, a, a + 1.0);
      const double rhs = lin_integral(ch.levels[0].hbar, a - 1.0, a + 2.0);
      if (lhs > rhs + 1e-6)
        throw std::logic_error("envelope_chain: seed hypothesis failed");
    }
  }

  for (int j = 1; j < n_max; ++j) {
    const ChainLevel& prev = ch.levels.back();
    const LevelExtras& pe = extras[static_cast<std::size_t>(j - 1)];
    const int n = 1 << j;
    GridFunction next =
        phi_apply(n, prev.hbar, prev.envelope, ch.powers[j], (1u << 12) + 1);
    const TailEnvelope mass_n = scale_mass_envelope(base_mass, n);
    const TailEnvelope env_next = propagate_envelope(
        prev.envelope, prev.sup_bound, pe.upper_cell, pe.l1_certified, mass_n,
        ch.powers[j].value_envelope);
    if (mass_n.kind == TailEnvelope::Kind::zero) {
      next.vanishes_left = next.vanishes_right = true;
    }
    lq = std::max(1.0, (1.0 - ch.eps / 2.0) * lq);
    ch.levels.push_back(make_level(j + 1, std::move(next), env_next,
                                   2.0 * prev.sup_bound, lq,
                                   extras[static_cast<std::size_t>(j)]));
  }

  for (std::size_t j = 0; j < ch.levels.size(); ++j) {
    if (ch.levels[j].l1_certified) {
      ch.l1_resolved_level = static_cast<int>(j + 1);
      break;
    }
  }

  // First n with a certified finite weighted integral of h_bar_n: either the
  // tail envelope pays the weight, or the closed form
  // 2 ||h_bar_{n-1}||_1 (1 + 6^eps + 4^eps * m^{1+eps} C) applies one level
  // past l1 resolution.
  for (std::size_t j = 0; j < ch.levels.size(); ++j) {
    const ChainLevel& L = ch.levels[j];
    const double w0 = std::min(-L.hbar.x_min(), L.hbar.x_max());
    const bool vanishes = L.hbar.vanishes_left && L.hbar.vanishes_right;
    const double wtail =
        vanishes ? 0.0 : 2.0 * L.envelope.weighted_integral_beyond(w0, ch.eps);
    double w_bound = kInf;
    if (std::isfinite(wtail))
      w_bound = weighted_upper_cell_sum(L.hbar, ch.eps) + wtail;
    if (j >= 1 && std::isfinite(extras[j - 1].l1_certified)) {
      // h_bar_{j+1} = Phi_{2^j}(h_bar_j): the transfer moment uses f_{2^j}.
      const double k_prev = static_cast<double>(1 << j);
      const double moment_k = std::pow(k_prev, 1.0 + ch.eps) * ch.C;
      const double closed =
          2.0 * extras[j - 1].l1_certified *
          (1.0 + std::pow(6.0, ch.eps) + std::pow(4.0, ch.eps) * moment_k);
      w_bound = std::min(w_bound, closed);
    }
    if (std::isfinite(w_bound)) {
      ch.weighted_resolved_n = static_cast<int>(j + 1);
      ch.weighted_bound = w_bound;
      break;
    }
  }
  return ch;
}

WeightedSumReport weighted_sum_check(const EnvelopeChain& chain, int k,
                                     double eps_query) {
  WeightedSumReport rep;
  int n = -1;
  for (int j = 1; j <= static_cast<int>(chain.levels.size()); ++j)
    if ((1 << j) == k) n = j;
  if (n < 0)
    throw std::invalid_argument(
        "weighted_sum_check: k must be 2^n for a built level");
  if (eps_query > chain.eps + 1e-12)
    throw std::invalid_argument("weighted_sum_check: eps exceeds chain eps");
  const ChainLevel& L = chain.levels[static_cast<std::size_t>(n - 1)];
  const ConvolutionPower& fk = chain.powers[static_cast<std::size_t>(n)];

  rep.c_eps = std::min(c_eps_scan(eps_query) * (1.0 + 1e-9) + 5e-3,
                       c_eps_analytic(eps_query));
  if (eps_query <= 0.0) rep.c_eps = 1.0;
  rep.c_eps_analytic = c_eps_analytic(eps_query);

  const double w0 = std::min(-L.hbar.x_min(), L.hbar.x_max());
  const bool vanishes = L.hbar.vanishes_left && L.hbar.vanishes_right;
  const double wtail =
      vanishes ? 0.0
               : 2.0 * L.envelope.weighted_integral_beyond(w0, eps_query);
  double w_bound = kInf;
  if (std::isfinite(wtail))
    w_bound = weighted_upper_cell_sum(L.hbar, eps_query) + wtail;
  if (n >= 2) {
    const ChainLevel& P = chain.levels[static_cast<std::size_t>(n - 2)];
    if (P.l1_certified) {
      const double w0p = std::min(-P.hbar.x_min(), P.hbar.x_max());
      const double p_l1 = upper_cell_sum(P.hbar) +
                          (P.hbar.vanishes_left && P.hbar.vanishes_right
                               ? 0.0
                               : 2.0 * P.envelope.integral_beyond(w0p));
      const double c_q = moment_or_mass(chain.spec, eps_query);
      const double moment_k =
          std::pow(static_cast<double>(1 << (n - 1)), 1.0 + eps_query) * c_q;
      const double closed =
          2.0 * p_l1 *
          (1.0 + std::pow(6.0, eps_query) +
           std::pow(4.0, eps_query) * moment_k);
      w_bound = std::min(w_bound, closed);
    }
  }
  rep.weighted_integral = w_bound;
  rep.bound = 3.0 * rep.c_eps * rep.c_eps * w_bound;
  rep.direct = weighted_unit_mesh_sum(fk, eps_query);
  rep.finite = std::isfinite(rep.bound);
  rep.certified = rep.finite;
  if (!rep.finite) {
    rep.diagnostic =
        "weighted tail not certified: envelope exponent " +
        std::to_string(L.envelope.exponent) + " needs > 1 + eps = " +
        std::to_string(1.0 + eps_query);
  }
  return rep;
}

WeightedSumReport weighted_sum_check(const DensitySpec& spec, int k,
                                     double eps_query) {
  int n = 0;
  while ((1 << n) < k) ++n;
  if ((1 << n) != k)
    throw std::invalid_argument("weighted_sum_check: k must be a power of two");
  const EnvelopeChain chain = build_envelope_chain(spec, std::max(1, n));
  return weighted_sum_check(chain, k, eps_query);
}

BootstrapReport bootstrap_check(const DensitySpec& spec, int k, double eps,
                                const ConvolvePowerOptions& opt) {
  if (k < 1) throw std::invalid_argument("bootstrap_check: k >= 1");
  BootstrapReport rep;
  const ConvolutionPower fk = convolve_power(spec, k, opt);
  const ConvolutionPower fk1 = convolve_power(spec, k + 1, opt);
  rep.s_k = weighted_unit_mesh_sum(fk, eps);
  rep.s_k1 = weighted_unit_mesh_sum(fk1, eps);
  const double c = moment_or_mass(spec, eps);
  rep.factor = 3.0 * std::pow(2.0, eps) * (1.0 + c);
  rep.pass = std::isfinite(rep.s_k) && std::isfinite(rep.s_k1) &&
             rep.s_k1 <= rep.factor * rep.s_k * (1.0 + 1e-9) + 1e-12;
  return rep;
}

}  // namespace dri
