#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dri/grid.hpp"
#include "dri/rng.hpp"

namespace dri {

enum class DensityKind {
  exponential,
  uniform,
  gamma,
  pareto,
  log_counterexample,  // 1 / (x log^2 x) on [e, inf)
  sqrt_singular,       // 1 / (2 sqrt(x)) on (0, 1]
  gaussian,
  tabulated,
};

std::string kind_name(DensityKind k);

// Probability density with closed-form tail/CDF/quantile machinery.
// epsilon() is the declared moment order used by the bound machinery; it is
// absent exactly when no positive absolute moment is finite.
class DensitySpec {
 public:
  // Resting value for report structs: the unit exponential.
  DensitySpec() : DensitySpec(DensityKind::exponential, {1.0}, 1.0) {}

  static DensitySpec exponential(double rate);
  static DensitySpec uniform(double a, double b);
  static DensitySpec gamma(double shape, double rate);
  // declared epsilon defaults to min(0.8*alpha, 1); must stay below alpha
  static DensitySpec pareto(double alpha, double scale,
                            std::optional<double> epsilon = std::nullopt);
  static DensitySpec log_counterexample();
  static DensitySpec sqrt_singular();
  static DensitySpec gaussian(double mean, double sd);
  static DensitySpec tabulated(GridFunction grid, TailEnvelope envelope,
                               std::optional<double> epsilon = std::nullopt);
  static DensitySpec tabulated_from_csv(const std::string& path,
                                        std::optional<double> epsilon = std::nullopt);

  DensityKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  std::string label() const;

  std::optional<double> epsilon() const { return epsilon_; }

  double eval(double x) const;
  double cdf(double x) const;
  double tail(double t) const;  // P(|X| >= t); 1 for t <= 0
  double quantile(double u) const;

  // E|X|^eps; +inf when divergent.  Closed form when available, otherwise
  // quadrature of the tail with the remainder completed from the envelope.
  double moment_eps(double eps) const;
  // int_0^x P(X > y) dy for non-negative-support densities
  double truncated_mean(double x) const;

  double mean() const;      // +inf when absent
  double variance() const;  // +inf when absent
  double sup_density() const;  // ess sup f; +inf for the sqrt singularity

  bool nonnegative_support() const;
  double support_min() const;
  double support_max() const;  // +inf when unbounded

  // inverse-CDF sampling; deterministic given the stream state
  std::vector<double> sample(RngStream& rng, std::size_t n) const;

  // discontinuities of f (finite jumps; the sqrt singularity reports 0)
  std::vector<double> jump_points() const;
  // {sup, inf} of f over [l, r), exact via piecewise monotonicity
  std::pair<double, double> range_extrema(double l, double r) const;
  bool has_exact_extrema() const;

  // pointwise majorant of f(t) for large |t|
  TailEnvelope value_envelope() const;
  // majorant of the mass tail P(|X| >= t); exact family form
  TailEnvelope mass_envelope() const;

  // Laplace transform E exp(-theta X) for non-negative support (upper bound
  // where only numeric evaluation is possible)
  double laplace(double theta) const;

  const GridFunction& tabulated_grid() const;

 private:
  DensitySpec(DensityKind k, std::vector<double> p,
              std::optional<double> eps);

  DensityKind kind_;
  std::vector<double> params_;
  std::optional<double> epsilon_;
  std::shared_ptr<const GridFunction> table_;       // tabulated only
  std::shared_ptr<const TailEnvelope> table_env_;   // tabulated only
  std::shared_ptr<const std::vector<double>> table_cdf_;  // cumulative trapezoid
};

}  // namespace dri
