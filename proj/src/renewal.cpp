#include "dri/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dri/bounds.hpp"
#include "dri/convolution.hpp"
#include "dri/rng.hpp"

namespace dri {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrtConvSup = 0.78539816339744831;  // sup of the two-fold
// convolution of the square-root singularity: flat pi/4 below 1, smaller above

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// ||f_b||_inf with the order b of the first bounded convolution power.  The
// only unbounded catalog density is the square-root singularity, whose
// two-fold convolution is closed form.
struct BoundedPower {
  int b = 1;
  double sup = 0.0;
};

BoundedPower bounded_power(const DensitySpec& spec) {
  BoundedPower bp;
  double s = spec.sup_density();
  if (std::isfinite(s)) {
    bp.b = 1;
    bp.sup = s;
  } else {
    bp.b = 2;
    bp.sup = kSqrtConvSup;
  }
  return bp;
}

struct ChernoffFit {
  double bound = kInf;
  double theta = 0.0;
  double rho = 0.0;
};

// sum_{n>N} f_n(x) <= sup f_b * sum_{m>N-b} P(S_m <= x_max)
//                  <= sup f_b * e^{theta x_max} rho^{N+1-b} / (1 - rho)
// minimized over theta on a log grid; rho = E exp(-theta X) < 1.
ChernoffFit chernoff_remainder(const DensitySpec& spec, const BoundedPower& bp,
                               int N, double x_max) {
  ChernoffFit best;
  if (N + 1 - bp.b < 1) return best;
  double best_ln = kInf;
  const int steps = 192;
  for (int i = 0; i <= steps; ++i) {
    double theta = 1e-4 * std::pow(64.0 / 1e-4, double(i) / steps);
    double rho = spec.laplace(theta);
    if (!(rho > 0.0) || !(rho < 1.0)) continue;
    double ln = std::log(bp.sup) + theta * x_max +
                (N + 1 - bp.b) * std::log(rho) - std::log1p(-rho);
    if (ln < best_ln) {
      best_ln = ln;
      best.theta = theta;
      best.rho = rho;
    }
  }
  if (std::isfinite(best_ln)) best.bound = best_ln < -744.0 ? 0.0 : std::exp(best_ln);
  return best;
}

// Smallest N whose certified remainder on [0, x_max] is <= tol.
int chernoff_min_n(const DensitySpec& spec, const BoundedPower& bp,
                   double x_max, double tol) {
  double best = kInf;
  const int steps = 192;
  for (int i = 0; i <= steps; ++i) {
    double theta = 1e-4 * std::pow(64.0 / 1e-4, double(i) / steps);
    double rho = spec.laplace(theta);
    if (!(rho > 0.0) || !(rho < 1.0)) continue;
    double need = (std::log(bp.sup) + theta * x_max - std::log1p(-rho) -
                   std::log(tol)) /
                  -std::log(rho);
    double n = bp.b - 1 + std::max(1.0, std::ceil(need));
    best = std::min(best, n);
  }
  double smin = spec.support_min();
  if (smin > 0.0) {
    // past this length every S_n leaves the window, so the tail is zero
    best = std::min(best, std::ceil(x_max / smin) + bp.b);
  }
  if (!std::isfinite(best)) throw std::runtime_error(
      "renewal: no series length certifies the remainder on this window");
  return static_cast<int>(std::clamp(best, 8.0, 65536.0));
}

double trapezoid_between(const GridFunction& g, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  double h = g.spacing;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < g.values.size(); ++i) {
    double a = g.origin + h * double(i);
    double b = a + h;
    double l = std::max(a, lo), r = std::min(b, hi);
    if (!(r > l)) continue;
    acc += 0.5 * (g.interp(l) + g.interp(r)) * (r - l);
  }
  return acc;
}

}  // namespace

RenewalSeries renewal_density(const DensitySpec& spec, int N, double x_max,
                              double h, int store_powers) {
  if (!spec.nonnegative_support())
    throw std::invalid_argument("renewal_density: increments must be nonnegative");
  if (N < 1) throw std::invalid_argument("renewal_density: N must be positive");
  if (!(x_max > 0.0)) throw std::invalid_argument("renewal_density: x_max must be positive");
  if (store_powers < 0) store_powers = 0;

  if (!(h > 0.0)) {
    // 1/h integer keeps every catalog jump location on the lattice, so the
    // sampled convolutions stay second order.
    int m = std::max(32, int(std::ceil(8192.0 / x_max)));
    h = 1.0 / m;
  }

  RenewalSeries series;
  series.spec = spec;
  series.N = N;
  series.x_max = x_max;
  series.mu = spec.mean();

  BoundedPower bp = bounded_power(spec);
  double smin = spec.support_min();
  std::ostringstream note;
  if (smin > 0.0 && (double(N) + 1 - bp.b) * smin > x_max) {
    series.remainder_bound = 0.0;
    note << "support: S_n > " << x_max << " for every n > " << N
         << " because increments are >= " << smin;
  } else {
    ChernoffFit fit = chernoff_remainder(spec, bp, N, x_max);
    int halvings = 0;
    while (!std::isfinite(fit.bound) && halvings < 20) {
      x_max *= 0.5;
      ++halvings;
      fit = chernoff_remainder(spec, bp, N, x_max);
    }
    if (!std::isfinite(fit.bound))
      throw std::runtime_error(
          "renewal_density: remainder not certifiable on any window");
    if (halvings > 0) {
      series.window_truncated = true;
      series.x_max = x_max;
      note << "window truncated to [0, " << x_max << "]; ";
    }
    series.remainder_bound = fit.bound;
    note << "markov: sup f_" << bp.b << " = " << bp.sup << ", theta = "
         << fit.theta << ", rho = " << fit.rho;
  }
  series.remainder_note = note.str();

  const int pad = 16;
  double lo = -pad * h;
  Discretization d1 = discretize(spec, lo, series.x_max, h);
  GridFunction f1 = d1.grid;
  for (double& v : f1.values) v = std::max(0.0, v);
  // Sampling drifts the lattice mass off 1 by quadrature error (O(h^2) on
  // smooth shapes, O(sqrt h) at an integrable singularity), and the series
  // compounds the drift geometrically: a deficit eps shows up as a spurious
  // exp(-eps x / mu) envelope on u.  When the window holds the whole law the
  // deficit is pure noise, so renormalize; a truncating window keeps its
  // physical mass loss.
  if (d1.truncated_mass <= 1e-9) {
    double lat = 0.0;
    for (double v : f1.values) lat += v;
    lat *= h;
    if (lat > 0.0 && std::abs(lat - 1.0) < 0.1) {
      double s = 1.0 / lat;
      for (double& v : f1.values) v *= s;
    }
  }
  f1.refresh_mass();
  std::size_t n_base = f1.values.size();
  if (n_base < std::size_t(2 * pad + 8))
    throw std::invalid_argument("renewal_density: window too small for the lattice");

  std::size_t L = next_pow2(2 * n_base);
  std::vector<std::complex<double>> base_hat(L);
  for (std::size_t i = 0; i < n_base; ++i) base_hat[i] = f1.values[i];
  fft(base_hat, -1);

  std::vector<double> u_vals = f1.values;
  std::vector<double> cur = f1.values;
  series.powers.clear();
  if (store_powers >= 1) series.powers.push_back(f1);

  std::vector<std::complex<double>> work(L);
  const double scale = h / double(L);
  for (int n = 2; n <= N; ++n) {
    std::fill(work.begin(), work.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < n_base; ++i) work[i] = cur[i];
    fft(work, -1);
    for (std::size_t i = 0; i < L; ++i) work[i] *= base_hat[i];
    fft(work, +1);
    // slice back to the base lattice; exact for nonnegative support because
    // the dropped right overflow cannot reach any kept output point
    for (std::size_t m = 0; m < n_base; ++m)
      cur[m] = std::max(0.0, work[m + pad].real() * scale);
    for (std::size_t m = 0; m < n_base; ++m) u_vals[m] += cur[m];
    if (n <= store_powers) {
      GridFunction g;
      g.origin = f1.origin;
      g.spacing = h;
      g.values = cur;
      g.nonneg = true;
      g.vanishes_left = true;
      g.refresh_mass();
      series.powers.push_back(std::move(g));
    }
  }

  series.u.origin = f1.origin;
  series.u.spacing = h;
  series.u.values = std::move(u_vals);
  series.u.nonneg = true;
  series.u.vanishes_left = true;
  series.u.refresh_mass();
  return series;
}

DensityDefect density_defect(const RenewalSeries& series, int k,
                             double far_lo, double far_hi) {
  if (k < 1 || k > series.N)
    throw std::invalid_argument("density_defect: need 1 <= k <= N");
  if (std::size_t(k - 1) > series.powers.size())
    throw std::invalid_argument("density_defect: series stored too few powers");
  if (!(far_lo < far_hi) || far_lo < 0.0)
    throw std::invalid_argument("density_defect: bad far window");

  DensityDefect d;
  d.k = k;
  d.defect = series.u;
  for (int n = 1; n < k; ++n) {
    const GridFunction& p = series.powers[std::size_t(n - 1)];
    for (std::size_t i = 0; i < d.defect.values.size(); ++i)
      d.defect.values[i] = std::max(0.0, d.defect.values[i] - p.values[i]);
  }
  d.defect.refresh_mass();
  d.far_lo = far_lo;
  d.far_hi = far_hi;
  d.inv_mu = (std::isfinite(series.mu) && series.mu > 0.0) ? 1.0 / series.mu : 0.0;
  double sup_dev = 0.0;
  for (std::size_t i = 0; i < d.defect.values.size(); ++i) {
    double x = d.defect.origin + d.defect.spacing * double(i);
    if (x < far_lo || x > far_hi) continue;
    sup_dev = std::max(sup_dev, std::abs(d.defect.values[i] - d.inv_mu));
  }
  d.sup_far_dev = sup_dev;
  return d;
}

HeavyTailReport heavy_tail_check(const DensitySpec& spec,
                                 const std::vector<double>& probes,
                                 double h, int N) {
  if (spec.kind() != DensityKind::pareto)
    throw std::invalid_argument("heavy_tail_check: needs a Pareto density");
  double alpha = spec.params()[0];
  if (!(alpha < 1.0))
    throw std::invalid_argument("heavy_tail_check: needs an infinite mean (alpha < 1)");
  if (probes.empty())
    throw std::invalid_argument("heavy_tail_check: needs at least one probe");
  double xm = *std::max_element(probes.begin(), probes.end());
  if (!(xm > 0.0)) throw std::invalid_argument("heavy_tail_check: probes must be positive");

  HeavyTailReport rep;
  rep.alpha = alpha;
  rep.liminf_only = alpha <= 0.5;
  rep.target = 1.0 / (std::tgamma(alpha) * std::tgamma(2.0 - alpha));

  EnvelopeChain chain = build_envelope_chain(spec, 4);
  if (chain.weighted_resolved_n < 0) chain = build_envelope_chain(spec, 6);
  if (chain.weighted_resolved_n < 0)
    throw std::runtime_error("heavy_tail_check: regularization chain did not resolve");
  rep.k_bar = 1 << chain.weighted_resolved_n;

  BoundedPower bp = bounded_power(spec);
  if (N <= 0) N = chernoff_min_n(spec, bp, xm, 1e-9);
  N = std::max(N, rep.k_bar + 8);
  if (!(h > 0.0)) h = 1.0 / 32;

  RenewalSeries series = renewal_density(spec, N, xm, h, rep.k_bar);
  rep.N = series.N;
  rep.h = h;
  rep.remainder_bound = series.remainder_bound;

  for (double x : probes) {
    HeavyTailProbe p;
    p.x = x;
    p.m_x = spec.truncated_mean(x);
    double defect = series.u.interp(x);
    for (int n = 1; n < rep.k_bar; ++n)
      defect -= series.powers[std::size_t(n - 1)].interp(x);
    p.defect = std::max(0.0, defect);
    p.value = p.m_x * p.defect;
    p.ratio = rep.target != 0.0 ? p.value / rep.target : 0.0;
    p.remainder_band = p.m_x * series.remainder_bound;
    p.inconclusive = p.remainder_band > 0.1 * rep.target;
    rep.probes.push_back(p);
  }
  return rep;
}

KeyRenewalReport key_renewal_apply(const RenewalSeries& series,
                                   const GridFunction& g,
                                   const TailEnvelope& g_env,
                                   const RiemannReport& g_report,
                                   double far_lo, double far_hi) {
  if (g_report.verdict != Verdict::DRI_verified)
    throw std::invalid_argument("key_renewal_apply: g must carry a DRI_verified verdict");
  if (std::abs(g.spacing - series.u.spacing) >
      1e-12 * std::max(g.spacing, series.u.spacing))
    throw std::invalid_argument("key_renewal_apply: g must share the series lattice");
  if (!(far_lo < far_hi))
    throw std::invalid_argument("key_renewal_apply: bad far window");

  KeyRenewalReport rep;
  rep.far_lo = far_lo;
  rep.far_hi = far_hi;

  GridFunction conv = convolve(g, series.u);
  for (std::size_t i = 0; i < conv.values.size(); ++i) {
    double x = conv.origin + conv.spacing * double(i);
    conv.values[i] += g.interp(x);
  }
  conv.nonneg = g.nonneg;
  conv.refresh_mass();
  rep.out = std::move(conv);

  double lo = std::max(far_lo, rep.out.origin);
  double hi = std::min(far_hi, rep.out.origin +
                                   rep.out.spacing * double(rep.out.values.size() - 1));
  double width = hi - lo;
  rep.far_mean = width > 0.0 ? trapezoid_between(rep.out, lo, hi) / width : 0.0;

  double g_total = g.mass;
  double glo = g.origin;
  double ghi = g.origin + g.spacing * double(g.values.size() - 1);
  if (!g.vanishes_left) g_total += g_env.integral_beyond(std::abs(glo));
  if (!g.vanishes_right) g_total += g_env.integral_beyond(std::abs(ghi));
  rep.limit = (std::isfinite(series.mu) && series.mu > 0.0) ? g_total / series.mu : 0.0;
  return rep;
}

SimulationResult simulate_renewal_window(const DensitySpec& spec, double x,
                                         double delta, std::uint64_t paths,
                                         std::uint64_t seed) {
  if (!spec.nonnegative_support())
    throw std::invalid_argument("simulate_renewal_window: increments must be nonnegative");
  if (!(delta > 0.0) || x < 0.0)
    throw std::invalid_argument("simulate_renewal_window: need x >= 0 and delta > 0");
  if (paths == 0)
    throw std::invalid_argument("simulate_renewal_window: need at least one path");

  constexpr std::uint64_t kStepCap = 100000000ULL;
  SimulationResult res;
  res.paths = paths;
  res.seed = seed;

  double sum = 0.0, sumsq = 0.0;
  for (std::uint64_t i = 0; i < paths; ++i) {
    RngStream rng = RngStream::substream(seed, i);
    double s = 0.0;
    double count = (x <= 0.0 && 0.0 < x + delta) ? 1.0 : 0.0;  // S_0 = 0
    std::uint64_t steps = 0;
    while (s < x + delta) {
      if (steps >= kStepCap) {
        res.step_capped = true;
        break;
      }
      s += spec.quantile(rng.next_unit());
      ++steps;
      if (s >= x && s < x + delta) count += 1.0;
    }
    sum += count;
    sumsq += count * count;
  }
  double n = double(paths);
  res.estimate = sum / n;
  if (paths > 1) {
    double var = std::max(0.0, (sumsq - n * res.estimate * res.estimate) / (n - 1.0));
    res.std_error = std::sqrt(var / n);
  }
  return res;
}

}  // namespace dri
