#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace dri {

class DensitySpec;

// Closed-form majorant of a non-negative function beyond |t| >= cutoff.
// value(t) = min(cap, form(t)) where form depends on kind:
//   zero:      0
//   power:     constant * t^-exponent
//   exp_decay: constant * exp(-exponent * t)
//   log_power: constant / (t * (log t - exponent)^2)
// Below cutoff the form is not certified and value() returns cap.
struct TailEnvelope {
  enum class Kind { zero, power, exp_decay, log_power };

  Kind kind = Kind::zero;
  double cutoff = 0.0;
  double constant = 0.0;
  double exponent = 0.0;
  double cap = 0.0;

  static TailEnvelope zero_beyond(double cutoff, double cap = 0.0);
  static TailEnvelope power(double constant, double exponent, double cutoff,
                            double cap);
  static TailEnvelope exp_decay(double constant, double rate, double cutoff,
                                double cap);
  static TailEnvelope log_power(double constant, double shift, double cutoff,
                                double cap);

  double value(double t) const;  // evaluated at |t|
  // upper bound on int_T^inf value(t) dt (one-sided; +inf if divergent)
  double integral_beyond(double T) const;
  // upper bound on int_T^inf value(t)^p dt for p >= 1
  double integral_pow_beyond(double T, double p) const;
  bool integrable() const;
  // int_T^inf (1 + t^eps) * value(t) dt, +inf if divergent
  double weighted_integral_beyond(double T, double eps) const;
};

// Uniformly spaced samples v_i = g(origin + i*spacing).  Immutable once
// built; mass caches the trapezoid integral of the samples.
struct GridFunction {
  double origin = 0.0;
  double spacing = 1.0;
  std::vector<double> values;
  double mass = 0.0;
  bool nonneg = true;
  // the represented function is identically 0 left (resp. right) of the
  // window; lets one-sided supports drop the spurious symmetric tail
  bool vanishes_left = false;
  bool vanishes_right = false;

  // optional exact range oracle: {sup, inf} of the underlying function on
  // [l, r).  Set when the underlying function is piecewise monotone with
  // known breakpoints (catalog densities, test step functions); block
  // extrema then do not depend on sample placement.
  std::function<std::pair<double, double>(double, double)> extrema;

  std::size_t size() const { return values.size(); }
  double x_min() const { return origin; }
  double x_max() const {
    return values.empty() ? origin
                          : origin + spacing * double(values.size() - 1);
  }
  double x_at(std::size_t i) const { return origin + spacing * double(i); }

  // linear interpolation inside the window, 0 outside
  double interp(double x) const;

  double recompute_mass() const;  // trapezoid rule over the samples
  void refresh_mass() { mass = recompute_mass(); }
  // mass cache must track the samples; checked by consumers before use
  bool mass_coherent(double rel_tol = 1e-12) const;

  static GridFunction from_samples(double origin, double spacing,
                                   std::vector<double> v, bool nonneg = true);
};

struct Discretization {
  GridFunction grid;
  TailEnvelope envelope;       // pointwise majorant of the density values
  TailEnvelope mass_envelope;  // majorant of the mass tail P(|X| >= t)
  double truncated_mass = 0.0;  // mass of the density outside the window
};

inline constexpr std::size_t kDefaultMaxSamples = std::size_t(1) << 26;
inline constexpr int kMinSamplesPerBlock = 8;

// Sample a catalog density on [a, b] with step h.  Jump points interior to
// the window get the half sum of one-sided limits; jumps at the window edge
// take the inward limit; non-integrable sample points (sqrt singularity)
// are replaced by the cell average from the CDF.
Discretization discretize(const DensitySpec& spec, double a, double b,
                          double h, std::size_t max_samples = kDefaultMaxSamples);

// (int |g|^p + tail)^(1/p) with the tail integrated in closed form from the
// envelope; +inf when the envelope tail diverges.  p = inf -> sup estimate.
double lp_norm(const GridFunction& g, const TailEnvelope& env, double p);

// sup / inf of the represented function over [l, r).  In-window parts use
// the exact oracle when present, otherwise the samples; parts beyond the
// window use the envelope value at the block end nearest the origin (sup)
// and 0 (inf).  Requires r - l >= kMinSamplesPerBlock * spacing.
double block_sup(const GridFunction& g, const TailEnvelope& env, double l,
                 double r);
double block_inf(const GridFunction& g, double l, double r);

}  // namespace dri
