#pragma once

#include <string>
#include <vector>

#include "dri/convolution.hpp"
#include "dri/density.hpp"
#include "dri/grid.hpp"

namespace dri {

// Grid mass beyond the threshold t (two-sided, trapezoid).  The lower estimate
// only counts in-window mass; the upper adds truncation slack and the envelope
// tail, so lower <= P(|X| >= t) <= upper whenever the envelopes are honest.
struct MassBeyond {
  double lower = 0.0;
  double upper = 0.0;
};
MassBeyond mass_beyond(const GridFunction& g, const TailEnvelope& mass_env,
                       double t);

struct FellerReport {
  bool pass = false;
  double worst_x = 0.0;
  double worst_margin = 0.0;  // max of lhs - rhs over probed x
  bool far_field_ok = false;  // envelope comparison beyond the window
};

// f_{2k}(x) <= 2 ||f_k||_inf P(|S_k| >= |x|/2).  The right side is evaluated
// with lower estimates (grid sup, in-window mass), so a pass certifies the
// true inequality.
FellerReport feller_bound_check(const DensitySpec& spec, int k,
                                const ConvolvePowerOptions& opt = {});

// (Phi_n h)(x) = 2 * int_{|z| > (|x|-3)/2} f_n(z) h(x - z) dz evaluated on the
// grid of h.  h is read through its own envelope beyond its window, keeping
// the output an upper bound; f_n beyond its window contributes a certified
// envelope term.  Cost O(Nx * Nz); Nx capped.
GridFunction phi_apply(int n, const GridFunction& h, const TailEnvelope& h_env,
                       const ConvolutionPower& f_n,
                       std::size_t max_output = (1u << 14) + 1);

struct BlockBoundReport {
  bool hypothesis_ok = false;
  bool conclusion_ok = false;
  double worst_hypothesis_margin = 0.0;  // max over a of sup - integral
  double worst_conclusion_margin = 0.0;
  std::vector<double> violating_a;  // hypothesis failures, if any
};

// Hypothesis: sup_{[a,a+1)} f_l <= int_{a-1}^{a+2} h for every a on the probe
// grid.  When it holds, checks the doubled version with Phi_l(h); when it
// fails, the report flags which a violated and skips the conclusion.
BlockBoundReport block_bound_check(const GridFunction& h,
                                   const TailEnvelope& h_env,
                                   const ConvolutionPower& f_l,
                                   const ConvolutionPower& f_2l,
                                   double a_lo = -5.0, double a_hi = 5.0,
                                   double a_step = 0.25, double slack = 1e-6);

struct ChainLevel {
  int level = 1;  // j: blocks of f_{2^j} obey sup_{[a,a+1)} <= int hbar_j
  GridFunction hbar;
  TailEnvelope envelope;  // certified pointwise majorant of hbar_j
  double sup_bound = 0.0;   // certified 2^{j-1} * D
  double l1_grid = 0.0;     // in-window trapezoid mass
  double l1_tail = 0.0;     // envelope tail, +inf when non-integrable
  double l1_total = 0.0;
  bool l1_certified = false;     // envelope tail integrable at this level
  double lq_exponent = 0.0;      // reported diagnostic: Holder-ladder q_j
  double lq_bound = 0.0;         // grid estimate of ||hbar_j||_q^q
  double fitted_exponent = 0.0;  // tail power fit of the grid values
  double fit_r2 = 0.0;
};

struct EnvelopeChain {
  DensitySpec spec;
  double sup_f = 0.0;
  double B = 0.0;  // deflated min over a of int_{a-1}^{a+2} 2||f|| g1(|w|/2)
  double D = 0.0;
  double eps = 0.0;
  double C = 0.0;  // int |x|^eps f
  std::vector<ChainLevel> levels;                // levels[j-1] holds hbar_j
  std::vector<ConvolutionPower> powers;          // powers[i] holds f_{2^i}
  int l1_resolved_level = -1;   // first j with ||hbar_j||_1 certified
  int weighted_resolved_n = -1; // first n with int (1+|w|^eps) hbar_n certified
  double weighted_bound = 0.0;  // certified value at weighted_resolved_n
};

EnvelopeChain build_envelope_chain(const DensitySpec& spec, int n_max,
                                   const ConvolvePowerOptions& opt = {});

struct WeightedSumReport {
  bool finite = false;
  bool certified = false;   // the infinite tail came from closed forms
  double direct = 0.0;      // sum of unit-block sups of (1+|z|^eps) f_k
  double bound = 0.0;       // 3 c_eps^2 * int (1+|w|^eps) hbar_n
  double c_eps = 0.0;
  double c_eps_analytic = 0.0;
  double weighted_integral = 0.0;
  std::string diagnostic;
};

// k must equal 2^n for a level n of the chain.  eps_query <= chain.eps;
// eps_query = 0 degenerates to twice the plain unit-mesh upper sum.
WeightedSumReport weighted_sum_check(const EnvelopeChain& chain, int k,
                                     double eps_query);
// Convenience form: builds the chain to n = log2(k) internally.
WeightedSumReport weighted_sum_check(const DensitySpec& spec, int k,
                                     double eps_query);

struct BootstrapReport {
  bool pass = false;
  double s_k = 0.0;
  double s_k1 = 0.0;
  double factor = 0.0;  // 3 * 2^eps * (1 + C)
};

// Unit-mesh weighted upper sums of (1+|z|^eps)|f_k| obey
// S_{k+1} <= 3 * 2^eps * (1 + C) * S_k.
BootstrapReport bootstrap_check(const DensitySpec& spec, int k, double eps,
                                const ConvolvePowerOptions& opt = {});

}  // namespace dri
