#include "dri/convolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include "dri/quadrature.hpp"

namespace dri {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void fft(std::vector<std::complex<double>>& a, int sign) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / double(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

GridFunction convolve(const GridFunction& a, const GridFunction& b,
                      std::size_t max_samples) {
  if (a.values.empty() || b.values.empty())
    throw std::invalid_argument("convolve: empty grid");
  if (std::abs(a.spacing - b.spacing) >
      1e-12 * std::max(a.spacing, b.spacing))
    throw std::invalid_argument("convolve: spacing mismatch");
  const std::size_t n_out = a.size() + b.size() - 1;
  if (n_out > max_samples)
    throw std::invalid_argument("convolve: grid overflow");

  const std::size_t nfft = next_pow2(n_out);
  std::vector<std::complex<double>> fa(nfft), fb(nfft);
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a.values[i];
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b.values[i];
  fft(fa, -1);
  fft(fb, -1);
  for (std::size_t i = 0; i < nfft; ++i) fa[i] *= fb[i];
  fft(fa, +1);

  GridFunction out;
  out.origin = a.origin + b.origin;
  out.spacing = a.spacing;
  out.values.resize(n_out);
  const double scale = a.spacing / double(nfft);
  double vmax = 0.0;
  for (std::size_t i = 0; i < n_out; ++i) {
    out.values[i] = fa[i].real() * scale;
    vmax = std::max(vmax, std::abs(out.values[i]));
  }
  out.nonneg = a.nonneg && b.nonneg;
  if (out.nonneg) {
    const double floor_tol = 1e-10 * vmax + 1e-300;
    for (double& v : out.values) {
      if (v < 0.0) {
        if (v > -floor_tol)
          v = 0.0;
        else
          out.nonneg = false;
      }
    }
  }
  out.vanishes_left = a.vanishes_left && b.vanishes_left;
  out.vanishes_right = a.vanishes_right && b.vanishes_right;
  out.refresh_mass();
  return out;
}

GridFunction convolve_direct(const GridFunction& a, const GridFunction& b,
                             std::size_t max_samples) {
  if (std::abs(a.spacing - b.spacing) >
      1e-12 * std::max(a.spacing, b.spacing))
    throw std::invalid_argument("convolve_direct: spacing mismatch");
  const std::size_t n_out = a.size() + b.size() - 1;
  if (n_out > max_samples)
    throw std::invalid_argument("convolve_direct: grid overflow");
  GridFunction out;
  out.origin = a.origin + b.origin;
  out.spacing = a.spacing;
  out.values.assign(n_out, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.values[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j)
      out.values[i + j] += a.values[i] * b.values[j];
  }
  for (double& v : out.values) v *= a.spacing;
  out.nonneg = a.nonneg && b.nonneg;
  out.vanishes_left = a.vanishes_left && b.vanishes_left;
  out.vanishes_right = a.vanishes_right && b.vanishes_right;
  out.refresh_mass();
  return out;
}

TailEnvelope combine_value_envelopes(const TailEnvelope& a,
                                     const TailEnvelope& b) {
  using K = TailEnvelope::Kind;
  const double cap = std::min(a.cap, b.cap);
  if (a.kind == K::zero && b.kind == K::zero)
    return TailEnvelope::zero_beyond(a.cutoff + b.cutoff, cap);
  // Compact-support factor just shifts the other envelope outward.
  if (a.kind == K::zero || b.kind == K::zero) {
    const TailEnvelope& z = (a.kind == K::zero) ? a : b;
    const TailEnvelope& e = (a.kind == K::zero) ? b : a;
    TailEnvelope out = e;
    out.cap = cap;
    switch (e.kind) {
      case K::power:
        out.constant = e.constant * std::pow(2.0, e.exponent);
        out.cutoff = std::max(2.0 * z.cutoff, z.cutoff + e.cutoff);
        return out;
      case K::exp_decay:
        out.constant = e.constant * std::exp(e.exponent * z.cutoff);
        out.cutoff = z.cutoff + e.cutoff;
        return out;
      case K::log_power:
        out.constant = 2.0 * e.constant;
        out.exponent = e.exponent + std::numbers::ln2;
        out.cutoff = std::max({2.0 * z.cutoff, z.cutoff + e.cutoff,
                               std::exp(out.exponent) * 1.01});
        return out;
      default:
        break;
    }
    throw std::logic_error("combine_value_envelopes: unsupported kind pair");
  }
  if (a.kind != b.kind)
    throw std::logic_error("combine_value_envelopes: unsupported kind pair");
  switch (a.kind) {
    case K::power: {
      if (std::abs(a.exponent - b.exponent) >
          1e-9 * (1.0 + std::abs(a.exponent)))
        throw std::logic_error("combine_value_envelopes: mismatched exponents");
      return TailEnvelope::power(
          std::pow(2.0, a.exponent) * (a.constant + b.constant), a.exponent,
          std::max(1e-12, 2.0 * std::max(a.cutoff, b.cutoff)), cap);
    }
    case K::exp_decay:
      return TailEnvelope::exp_decay(a.constant + b.constant,
                                     0.5 * std::min(a.exponent, b.exponent),
                                     2.0 * std::max(a.cutoff, b.cutoff), cap);
    case K::log_power: {
      if (std::abs(a.exponent - b.exponent) > 1e-9)
        throw std::logic_error("combine_value_envelopes: mismatched shifts");
      const double shift = a.exponent + std::numbers::ln2;
      return TailEnvelope::log_power(
          2.0 * (a.constant + b.constant), shift,
          std::max(2.0 * std::max(a.cutoff, b.cutoff),
                   std::exp(shift) * 1.01),
          cap);
    }
    default:
      throw std::logic_error("combine_value_envelopes: unsupported kind pair");
  }
}

namespace {

struct ConvDefaults {
  double lo = 0.0, hi = 0.0, h = 0.0;
};

// Windows pad 16 cells past the support edge so that support-edge jumps land
// in the window interior and pick up the midpoint value; the plain product
// sum is then a correct trapezoid rule across the jump.
ConvDefaults conv_defaults(const DensitySpec& spec) {
  ConvDefaults d;
  switch (spec.kind()) {
    case DensityKind::exponential: {
      // Trapezoid mass bias is rate^2 h^2/12 per factor; this resolution keeps
      // the drift of an 8-fold power under 1e-6.
      const double rate = spec.params()[0];
      d.hi = 40.0 / rate;
      d.h = d.hi / 40960.0;
      d.lo = -16.0 * d.h;
      return d;
    }
    case DensityKind::uniform: {
      const double a = spec.params()[0], b = spec.params()[1];
      d.h = (b - a) / 4096.0;
      d.lo = a - 16.0 * d.h;
      d.hi = b + 16.0 * d.h;
      return d;
    }
    case DensityKind::gamma: {
      // the derivative kink at 0 leaves an h^2/12 trapezoid bias per factor;
      // this resolution keeps an 8-fold power under 1e-6 drift
      const double shape = spec.params()[0], rate = spec.params()[1];
      d.hi = (shape + 40.0) / rate;
      d.h = d.hi / 49152.0;
      d.lo = -16.0 * d.h;
      return d;
    }
    case DensityKind::pareto: {
      const double scale = spec.params()[1];
      d.h = scale / 16.0;
      d.lo = -16.0 * d.h;
      d.hi = 2000.0 * scale;
      return d;
    }
    case DensityKind::log_counterexample: {
      d.h = 1.0 / 64.0;
      d.lo = std::numbers::e - 16.0 * d.h;
      d.hi = 1.0e4;
      return d;
    }
    case DensityKind::sqrt_singular: {
      d.h = 1.0 / 8192.0;
      d.lo = -16.0 * d.h;
      d.hi = 1.0 + 16.0 * d.h;
      return d;
    }
    case DensityKind::gaussian: {
      const double m = spec.params()[0], sd = spec.params()[1];
      d.h = sd / 256.0;
      d.lo = m - 12.0 * sd;
      d.hi = m + 12.0 * sd;
      return d;
    }
    case DensityKind::tabulated: {
      const GridFunction& g = spec.tabulated_grid();
      d.lo = g.x_min();
      d.hi = g.x_max();
      d.h = g.spacing;
      return d;
    }
  }
  throw std::logic_error("conv_defaults: unhandled density kind");
}

// Restrict a freshly convolved grid back onto the base window; sample points
// stay aligned because every grid in a power chain shares the base origin.
GridFunction clip_to_base(const GridFunction& g, double base_lo,
                          std::size_t base_size) {
  const double h = g.spacing;
  const long idx0 = std::lround((base_lo - g.origin) / h);
  if (std::abs(g.origin + idx0 * h - base_lo) > 1e-9 * (1.0 + std::abs(base_lo)))
    throw std::logic_error("convolve_power: clip window not grid-aligned");
  GridFunction out;
  out.origin = base_lo;
  out.spacing = h;
  out.values.assign(base_size, 0.0);
  for (std::size_t j = 0; j < base_size; ++j) {
    const long src = idx0 + long(j);
    if (src >= 0 && src < long(g.size())) out.values[j] = g.values[src];
  }
  out.nonneg = g.nonneg;
  out.vanishes_left = g.vanishes_left;
  bool dropped_right = false;
  for (std::size_t j = std::size_t(std::max(0L, idx0)) + base_size;
       j < g.size(); ++j)
    if (std::abs(g.values[j]) > 1e-300) dropped_right = true;
  out.vanishes_right = g.vanishes_right && !dropped_right;
  out.refresh_mass();
  return out;
}

TailEnvelope mass_envelope_for_power(int k, double eps, double c_eps) {
  if (!std::isfinite(c_eps) || eps <= 0.0)
    return TailEnvelope::power(1.0, 0.0, 1e-12, 1.0);
  return TailEnvelope::power(std::pow(double(k), 1.0 + eps) * c_eps, eps,
                             1e-12, 1.0);
}

}  // namespace

ConvolutionPower convolve_power(const DensitySpec& spec, int k,
                                const ConvolvePowerOptions& opt) {
  if (k < 1) throw std::invalid_argument("convolve_power: k must be >= 1");
  ConvDefaults d = conv_defaults(spec);
  if (opt.window_hi > opt.window_lo) {
    d.lo = opt.window_lo;
    d.hi = opt.window_hi;
  }
  if (opt.spacing > 0.0) d.h = opt.spacing;

  const Discretization base = discretize(spec, d.lo, d.hi, d.h, opt.max_samples);
  // No declared moment exponent (the log counterexample) degrades the mass
  // envelope to the trivial cap 1, which integral_beyond reports as divergent.
  const double eps = spec.epsilon().value_or(0.0);
  const double c_eps =
      eps > 0.0 ? spec.moment_eps(eps) : std::numeric_limits<double>::infinity();

  ConvolutionPower acc;  // running result across the exponent bits
  ConvolutionPower sq;
  sq.k = 1;
  sq.grid = base.grid;
  sq.value_envelope = base.envelope;
  bool have_acc = false;

  const double base_lo = base.grid.x_min();
  const std::size_t base_size = base.grid.size();
  auto mult = [&](const ConvolutionPower& a, const ConvolutionPower& b) {
    ConvolutionPower out;
    out.k = a.k + b.k;
    out.grid = convolve(a.grid, b.grid, opt.max_samples);
    if (opt.clip_to_window) out.grid = clip_to_base(out.grid, base_lo, base_size);
    out.value_envelope =
        combine_value_envelopes(a.value_envelope, b.value_envelope);
    return out;
  };

  int rem = k;
  while (rem > 0) {
    if (rem & 1) {
      acc = have_acc ? mult(acc, sq) : sq;
      have_acc = true;
    }
    rem >>= 1;
    if (rem > 0) sq = mult(sq, sq);
  }

  acc.eps_used = eps;
  acc.moment_constant = c_eps;
  acc.envelope = mass_envelope_for_power(k, eps, c_eps);
  acc.mass_drift = std::abs(acc.grid.mass - 1.0);

  // Moment growth audit: the grid part of int |x|^eps f_k must respect
  // k^eps * (k C); violation indicates a convolution bug, not a math fact.
  if (std::isfinite(c_eps) && eps > 0.0) {
    double grid_moment = 0.0;
    const GridFunction& g = acc.grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = (i == 0 || i + 1 == g.size()) ? 0.5 : 1.0;
      grid_moment +=
          w * std::pow(std::abs(g.x_at(i)), eps) * std::abs(g.values[i]);
    }
    grid_moment *= g.spacing;
    const double bound = std::pow(double(k), eps) * (double(k) * c_eps);
    if (grid_moment > bound * (1.0 + 1e-7) + 1e-12)
      throw std::logic_error(
          "convolve_power: grid moment exceeds the k^{1+eps} bound");
  }
  return acc;
}

FourierReport fourier_norms(const GridFunction& g,
                            const std::vector<double>& p_list) {
  if (g.values.empty()) throw std::invalid_argument("fourier_norms: empty grid");
  const std::size_t n = g.size();
  const double h = g.spacing;
  std::size_t nfft = next_pow2(std::max<std::size_t>(8 * n, 1024));
  if (nfft > (1u << 22))
    throw std::invalid_argument("fourier_norms: grid too large");

  std::vector<std::complex<double>> a(nfft);
  for (std::size_t i = 0; i < n; ++i) a[i] = g.values[i];
  a[0] *= 0.5;
  a[n - 1] *= 0.5;
  fft(a, +1);  // sign + matches the e^{+i theta x} transform convention

  const std::size_t m_max = nfft / 2;
  std::vector<double> mag(m_max + 1);
  for (std::size_t m = 0; m <= m_max; ++m) mag[m] = h * std::abs(a[m]);
  const double dtheta = 2.0 * std::numbers::pi / (double(nfft) * h);

  // Stay well below the Nyquist frequency: past theta*h ~ pi/8 the sampled
  // transform visibly lags the continuous one (cell averaging damps exactly
  // the scales that drive a singularity's tail), which would bias the fit.
  const std::size_t m_hi = m_max / 8;
  const double theta_hi = dtheta * double(m_hi);

  FourierReport rep;
  rep.convention_factor = 2.0 * std::numbers::pi;
  rep.sup_norm = *std::max_element(mag.begin(), mag.end());

  // Log-spaced block maxima over [theta_hi/10, theta_hi].
  {
    const std::size_t m_lo = std::max<std::size_t>(4, m_hi / 10);
    const int bins = 40;
    std::vector<double> lx, ly;
    const double lgl = std::log(double(m_lo)), lgh = std::log(double(m_hi));
    for (int bin = 0; bin < bins; ++bin) {
      const std::size_t b0 = std::size_t(std::exp(lgl + (lgh - lgl) * bin / bins));
      const std::size_t b1 = std::min(
          m_hi, std::size_t(std::exp(lgl + (lgh - lgl) * (bin + 1) / bins)));
      if (b1 <= b0) continue;
      double best = 0.0;
      std::size_t best_m = b0;
      for (std::size_t m = b0; m < b1; ++m)
        if (mag[m] > best) best = mag[m], best_m = m;
      if (best <= 0.0) continue;
      lx.push_back(std::log(dtheta * double(best_m)));
      ly.push_back(std::log(best));
    }
    if (lx.size() >= 8) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double cnt = double(lx.size());
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
      }
      const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
      const double inter = (sy - slope * sx) / cnt;
      double ss_res = 0, ss_tot = 0;
      const double ymean = sy / cnt;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        const double pred = inter + slope * lx[i];
        ss_res += (ly[i] - pred) * (ly[i] - pred);
        ss_tot += (ly[i] - ymean) * (ly[i] - ymean);
      }
      rep.decay_exponent = slope;  // signed: decay shows as a negative fit
      rep.decay_r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
      rep.fit_ok = rep.decay_r2 >= 0.9 && rep.decay_exponent < 0.0;
    }
  }

  // Amplitude for the fitted tail: smallest A with A theta^-beta covering the
  // fit band, so the closed-form tail stays an upper bound.
  double tail_amp = 0.0;
  const double beta = -rep.decay_exponent;
  if (rep.fit_ok) {
    const std::size_t m_lo = std::max<std::size_t>(4, m_hi / 10);
    for (std::size_t m = m_lo; m <= m_hi; ++m) {
      const double th = dtheta * double(m);
      tail_amp = std::max(tail_amp, mag[m] * std::pow(th, beta));
    }
  }
  double last_decade_max = 0.0;
  for (std::size_t m = (9 * m_hi) / 10; m <= m_hi; ++m)
    last_decade_max = std::max(last_decade_max, mag[m]);

  rep.p_list = p_list;
  for (double p : p_list) {
    if (!(p >= 1.0))
      throw std::invalid_argument("fourier_norms: p must be >= 1");
    double head = 0.0;
    for (std::size_t m = 0; m <= m_hi; ++m) {
      const double w = (m == 0 || m == m_hi) ? 0.5 : 1.0;
      head += w * std::pow(mag[m], p);
    }
    head *= 2.0 * dtheta;  // |fhat(-theta)| = |fhat(theta)| for real input
    double tail;
    if (last_decade_max <= 1e-11 * (rep.sup_norm + 1e-300)) {
      // spectrum is below the transform's round-off floor at the band edge
      tail = 0.0;
    } else if (rep.fit_ok && beta * p > 1.0) {
      tail = 2.0 * std::pow(tail_amp, p) *
             std::pow(theta_hi, 1.0 - beta * p) / (beta * p - 1.0);
    } else {
      tail = kInf;
    }
    rep.norms.push_back(std::isfinite(tail) ? std::pow(head + tail, 1.0 / p)
                                            : kInf);
    if (p == 2.0 && std::isfinite(tail)) rep.plancherel_lhs = head + tail;
  }

  double sq_int = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    sq_int += w * g.values[i] * g.values[i];
  }
  rep.plancherel_rhs = rep.convention_factor * sq_int * h;
  return rep;
}

BoundednessReport boundedness_index(const DensitySpec& spec, int k_max) {
  BoundednessReport rep;
  rep.method = "sup-stability";
  const ConvDefaults d = conv_defaults(spec);

  auto sup_at = [&](int k, double h) {
    ConvolvePowerOptions o;
    o.spacing = h;
    const ConvolutionPower cp = convolve_power(spec, k, o);
    double s = 0.0;
    for (double v : cp.grid.values) s = std::max(s, v);
    return s;
  };

  for (int k = 1; k <= k_max && rep.k0 < 0; ++k) {
    const double s1 = sup_at(k, d.h * 4.0);
    const double s2 = sup_at(k, d.h * 2.0);
    const double s3 = sup_at(k, d.h);
    if (std::abs(s2 - s1) < 0.05 * std::abs(s2) &&
        std::abs(s3 - s2) < 0.05 * std::abs(s3)) {
      rep.k0 = k;
      rep.sup_at_k0 = s3;
    }
  }
  if (rep.k0 < 0)
    throw std::runtime_error("boundedness_index: not resolved within k_max");

  const Discretization f1 = discretize(spec, d.lo, d.hi, d.h);
  const FourierReport fr = fourier_norms(f1.grid, {});
  rep.decay_exponent = fr.decay_exponent;
  rep.decay_r2 = fr.decay_r2;
  if (fr.fit_ok) {
    rep.fourier_k0 = int(std::floor(-1.0 / fr.decay_exponent)) + 1;
    rep.cross_check_ok = rep.k0 <= rep.fourier_k0 &&
                         -2.0 * rep.k0 * fr.decay_exponent > 1.0;
  } else {
    rep.fourier_k0 = -1;
    rep.cross_check_ok = true;  // no power fit to cross against
  }
  return rep;
}

ContinuityReport continuity_vanishing_check(const DensitySpec& spec, int k) {
  const BoundednessReport b = boundedness_index(spec);
  if (k < b.k0 + 1)
    throw std::invalid_argument(
        "continuity_vanishing_check: k must exceed the boundedness index");
  const ConvDefaults d = conv_defaults(spec);

  auto modulus = [&](double h) {
    ConvolvePowerOptions o;
    o.spacing = h;
    const ConvolutionPower cp = convolve_power(spec, k, o);
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < cp.grid.size(); ++i)
      m = std::max(m, std::abs(cp.grid.values[i + 1] - cp.grid.values[i]));
    return std::pair<double, ConvolutionPower>(m, cp);
  };

  ContinuityReport rep;
  rep.modulus_coarse = modulus(d.h * 2.0).first;
  auto [mf, cp] = modulus(d.h);
  rep.modulus_fine = mf;
  rep.modulus_ratio =
      rep.modulus_coarse > 0.0 ? rep.modulus_fine / rep.modulus_coarse : 0.0;
  rep.boundary_left = std::abs(cp.grid.values.front());
  rep.boundary_right = std::abs(cp.grid.values.back());
  rep.boundary_env_left = cp.grid.vanishes_left
                              ? 0.0
                              : cp.value_envelope.value(std::abs(cp.grid.x_min()));
  rep.boundary_env_right =
      cp.grid.vanishes_right ? 0.0
                             : cp.value_envelope.value(std::abs(cp.grid.x_max()));
  const bool shrink = rep.modulus_ratio <= 0.8;
  const bool left_ok = rep.boundary_left <=
                       rep.boundary_env_left * (1.0 + 1e-6) + 1e-12;
  const bool right_ok = rep.boundary_right <=
                        rep.boundary_env_right * (1.0 + 1e-6) + 1e-12;
  rep.pass = shrink && left_ok && right_ok;
  return rep;
}

LocalCltReport local_clt_error(const DensitySpec& spec,
                               const std::vector<int>& n_list) {
  if (n_list.empty())
    throw std::invalid_argument("local_clt_error: empty n list");
  const double mu = spec.mean();
  const double sigma = std::sqrt(spec.variance());
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("local_clt_error: needs finite variance");

  // Standardized density sampled directly; jumps land mid-cell closely
  // enough for the O(h^2) behavior to survive, and the gaussian case has no
  // jumps at all.
  const double W = 12.0;
  const std::size_t half = 1 << 12;
  const double h = W / double(half);
  GridFunction f1;
  f1.origin = -W;
  f1.spacing = h;
  f1.values.resize(2 * half + 1);
  for (std::size_t i = 0; i < f1.values.size(); ++i) {
    const double x = f1.x_at(i);
    double v = sigma * spec.eval(sigma * x + mu);
    if (!std::isfinite(v))
      v = (spec.cdf(sigma * (x + 0.5 * h) + mu) -
           spec.cdf(sigma * (x - 0.5 * h) + mu)) /
          h;
    f1.values[i] = v;
  }
  // Support-edge jumps: replace by the midpoint of one-sided limits so the
  // product sum keeps trapezoid accuracy across them.
  for (double j : spec.jump_points()) {
    const double xj = (j - mu) / sigma;
    const long idx = std::lround((xj - f1.origin) / h);
    if (idx > 0 && idx + 1 < long(f1.size()) &&
        std::abs(f1.x_at(idx) - xj) < 1e-9 * (1.0 + std::abs(xj))) {
      const double dd = 1e-7 * (1.0 + std::abs(xj));
      const double lo = sigma * spec.eval(sigma * (xj - dd) + mu);
      const double hi = sigma * spec.eval(sigma * (xj + dd) + mu);
      f1.values[idx] = 0.5 * (lo + hi);
    }
  }
  f1.nonneg = true;
  f1.refresh_mass();

  std::map<int, GridFunction> memo;
  memo[1] = f1;
  std::function<const GridFunction&(int)> power = [&](int n) -> const GridFunction& {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    GridFunction g = (n % 2 == 0)
                         ? convolve(power(n / 2), power(n / 2))
                         : convolve(power(n - 1), power(1));
    return memo.emplace(n, std::move(g)).first->second;
  };

  LocalCltReport rep;
  const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int n : n_list) {
    if (n < 1) throw std::invalid_argument("local_clt_error: n must be >= 1");
    const GridFunction& fn = power(n);
    const double rt = std::sqrt(double(n));
    double err = 0.0;
    for (std::size_t i = 0; i < fn.size(); ++i) {
      const double y = fn.x_at(i);
      if (std::abs(y) > 8.0 * rt) continue;
      const double phi = inv_sqrt2pi * std::exp(-0.5 * (y / rt) * (y / rt));
      err = std::max(err, std::abs(rt * fn.values[i] - phi));
    }
    rep.entries.push_back({n, err});
  }
  for (std::size_t i = 1; i < rep.entries.size(); ++i)
    if (rep.entries[i].error > rep.entries[i - 1].error * 1.05 + 1e-12)
      rep.decreasing = false;
  return rep;
}

}  // namespace dri
