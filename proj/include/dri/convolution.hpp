#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "dri/density.hpp"
#include "dri/grid.hpp"

namespace dri {

// In-place iterative radix-2 FFT; n must be a power of two.
// sign = -1 forward (e^{-i...}), sign = +1 inverse without the 1/n factor.
void fft(std::vector<std::complex<double>>& a, int sign);

// Linear convolution of two uniform grids sharing the same spacing, scaled by
// h so the result approximates the convolution integral.  Sampling follows the
// discretize convention (jump points carry the midpoint value), which makes
// the plain product sum a trapezoid rule in disguise: exact error O(h^2) at
// smooth points, O(h) only where jump locations of both factors collide.
GridFunction convolve(const GridFunction& a, const GridFunction& b,
                      std::size_t max_samples = kDefaultMaxSamples);

// O(N^2) reference used by the tests to pin FFT output; N capped.
GridFunction convolve_direct(const GridFunction& a, const GridFunction& b,
                             std::size_t max_samples = 512 * 2);

struct ConvolutionPower {
  int k = 1;
  GridFunction grid;
  // Mass-tail majorant: P(|S_k| >= t) <= min(1, k^{1+eps} C / t^eps) shape,
  // exact constant k^{1+eps}*C.
  TailEnvelope envelope;
  // Pointwise majorant of the density beyond the grid window, propagated by
  // envelope doubling f_{i+j}(x) <= env_i(x/2) + env_j(x/2).
  TailEnvelope value_envelope;
  double mass_drift = 0.0;
  double eps_used = 0.0;
  double moment_constant = 0.0;  // C = int |x|^eps f(x) dx
};

struct ConvolvePowerOptions {
  double window_lo = 0.0, window_hi = 0.0;  // 0,0 = family default
  double spacing = 0.0;                     // 0 = family default
  bool clip_to_window = false;  // keep every power on the base window
  std::size_t max_samples = kDefaultMaxSamples;
};

ConvolutionPower convolve_power(const DensitySpec& spec, int k,
                                const ConvolvePowerOptions& opt = {});

// Same combination rule used internally; exposed for the bounds engine.
TailEnvelope combine_value_envelopes(const TailEnvelope& a,
                                     const TailEnvelope& b);

struct FourierReport {
  std::vector<double> p_list;
  std::vector<double> norms;       // ||fhat||_p, +inf when the tail diverges
  double sup_norm = 0.0;           // ||fhat||_inf
  double decay_exponent = 0.0;     // fitted log-log slope; -beta for a
                                   // |fhat| ~ theta^{-beta} tail
  double decay_r2 = 0.0;
  bool fit_ok = false;
  double plancherel_lhs = 0.0;     // int |fhat|^2
  double plancherel_rhs = 0.0;     // 2*pi*int f^2
  double convention_factor = 0.0;  // 2*pi, recorded explicitly
};

FourierReport fourier_norms(const GridFunction& g,
                            const std::vector<double>& p_list);

struct BoundednessReport {
  int k0 = -1;              // smallest k with a stable sup under refinement
  std::string method;       // "sup-stability"
  double sup_at_k0 = 0.0;   // finest-resolution sup estimate
  int fourier_k0 = -1;      // smallest k with k*beta > 1 (sufficient route)
  double decay_exponent = 0.0;
  double decay_r2 = 0.0;
  bool cross_check_ok = false;  // k0 <= fourier_k0 and 2*k0*beta > 1
};

BoundednessReport boundedness_index(const DensitySpec& spec, int k_max = 8);

struct ContinuityReport {
  bool pass = false;
  double modulus_coarse = 0.0, modulus_fine = 0.0;
  double modulus_ratio = 0.0;  // expect ~0.5 once f_k is Lipschitz-like
  double boundary_left = 0.0, boundary_right = 0.0;
  double boundary_env_left = 0.0, boundary_env_right = 0.0;
};

ContinuityReport continuity_vanishing_check(const DensitySpec& spec, int k);

struct LocalCltEntry {
  int n = 0;
  double error = 0.0;  // e_n = sup_x |sqrt(n) f_n(x) - phi(x/sqrt(n))|
};

struct LocalCltReport {
  std::vector<LocalCltEntry> entries;
  bool decreasing = true;
};

// Standardizes the density to mean 0 variance 1 by sampling sigma*f(sigma*x+mu)
// on a shared grid, convolves to f_n, and takes the sup over |x| <= 8*sqrt(n).
LocalCltReport local_clt_error(const DensitySpec& spec,
                               const std::vector<int>& n_list);

}  // namespace dri
