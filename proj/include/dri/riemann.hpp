#pragma once

#include <vector>

#include "dri/grid.hpp"

namespace dri {

// Translated Riemann sums over the partition [m*delta - x, (m+1)*delta - x).
// Upper sums add a certified envelope bound for all blocks beyond the grid
// window; lower sums count those blocks as 0.

struct RiemannSums {
  double upper_in_window = 0.0;
  double upper_tail = 0.0;  // certified bound on the beyond-window blocks
  double lower = 0.0;
  double upper_total() const { return upper_in_window + upper_tail; }
};

RiemannSums riemann_sums(const GridFunction& g, const TailEnvelope& env,
                         double delta, double x);

double upper_sum(const GridFunction& g, const TailEnvelope& env, double delta,
                 double x);
double lower_sum(const GridFunction& g, const TailEnvelope& env, double delta,
                 double x);

enum class Verdict { DRI_verified, Inconclusive, UpperSumDiverges };

struct RiemannReport {
  std::vector<double> mesh_ladder;
  std::vector<double> upper_sums;  // totals, envelope tail included
  std::vector<double> lower_sums;
  std::vector<double> tail_bounds;
  Verdict verdict = Verdict::Inconclusive;
  double gap_at_finest = 0.0;  // in-window upper minus lower at finest mesh
  double tolerance = 0.0;
};

// ladder must be decreasing and end >= 8h.  The verdict certifies
// gap_at_finest + tail_bounds.back() <= tol with every upper total finite.
RiemannReport dri_verdict(const GridFunction& g, const TailEnvelope& env,
                          const std::vector<double>& ladder, double tol);

std::vector<double> default_ladder(int j_max = 6);

struct MeshInequalityResult {
  bool pass = false;
  double upper_lhs = 0.0, upper_rhs = 0.0;  // S_d(x) vs (1+2d/d')S_d'(x')
  double lower_lhs = 0.0, lower_rhs = 0.0;  // s_d(x) vs (1-2d/d')s_d'(x')
};

MeshInequalityResult mesh_inequality_check(const GridFunction& g,
                                           const TailEnvelope& env,
                                           double delta, double delta_prime,
                                           double x, double x_prime);

}  // namespace dri
