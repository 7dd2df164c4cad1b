#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dri/density.hpp"
#include "dri/grid.hpp"
#include "dri/riemann.hpp"

namespace dri {

struct RenewalSeries {
  DensitySpec spec;
  int N = 0;
  GridFunction u;                     // sum_{n=1}^{N} f_n on [0, x_max]
  double remainder_bound = 0.0;       // certified sup bound on the tail terms
  double mu = 0.0;
  double x_max = 0.0;
  std::vector<GridFunction> powers;   // f_1 .. f_{store_powers}
  std::string remainder_note;         // how the remainder was certified
  bool window_truncated = false;      // x_max shrunk to certify the remainder
};

// Increments are nonnegative, so each convolution clipped to [0, x_max] is
// exact there.  The remainder uses a Chernoff bound
// sum_{n>N} f_n(x) <= ||f_b||_inf * min_t e^{t x_max} rho(t)^{N+1-b} / (1-rho),
// and is exactly zero once (N+1-b) * support_min > x_max.
RenewalSeries renewal_density(const DensitySpec& spec, int N, double x_max,
                              double h, int store_powers = 8);

struct DensityDefect {
  int k = 0;
  GridFunction defect;    // u - sum_{n<k} f_n
  double far_lo = 0.0, far_hi = 0.0;
  double sup_far_dev = 0.0;  // sup over the far window of |defect - 1/mu|
  double inv_mu = 0.0;
};

DensityDefect density_defect(const RenewalSeries& series, int k,
                             double far_lo, double far_hi);

struct HeavyTailProbe {
  double x = 0.0;
  double m_x = 0.0;          // truncated mean at x
  double defect = 0.0;       // sum_{n>=k_bar} f_n(x), series minus low powers
  double value = 0.0;        // m(x) * defect
  double ratio = 0.0;        // value / target
  double remainder_band = 0.0;
  bool inconclusive = false;
};

struct HeavyTailReport {
  double alpha = 0.0;
  int k_bar = 0;             // 2^{weighted_resolved_n} from the chain
  double target = 0.0;       // 1 / (Gamma(alpha) Gamma(2 - alpha))
  int N = 0;                 // series length actually used
  double h = 0.0;
  double remainder_bound = 0.0;
  bool liminf_only = false;  // alpha <= 1/2: probe values, no convergence claim
  std::vector<HeavyTailProbe> probes;
};

// Requires a Pareto spec with alpha < 1 (infinite mean).  N = 0 picks the
// smallest N that zeroes the remainder on [0, max probe].
HeavyTailReport heavy_tail_check(const DensitySpec& spec,
                                 const std::vector<double>& probes,
                                 double h = 1.0 / 32, int N = 0);

struct KeyRenewalReport {
  GridFunction out;          // g + g * u on the grid of u
  double far_mean = 0.0;     // average of out over the far window
  double limit = 0.0;        // (1/mu) * int g
  double far_lo = 0.0, far_hi = 0.0;
};

// g must carry a DRI_verified verdict; throws otherwise.
KeyRenewalReport key_renewal_apply(const RenewalSeries& series,
                                   const GridFunction& g,
                                   const TailEnvelope& g_env,
                                   const RiemannReport& g_report,
                                   double far_lo, double far_hi);

struct SimulationResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;
  bool step_capped = false;  // a path hit the step cap (result untrusted)
};

// Counts renewal epochs in [x, x+delta); S_0 = 0 counts when x <= 0 < x+delta.
// Path i draws from substream(seed, i), so the estimate is independent of
// scheduling.
SimulationResult simulate_renewal_window(const DensitySpec& spec, double x,
                                         double delta, std::uint64_t paths,
                                         std::uint64_t seed);

}  // namespace dri
