#include "dri/density.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dri/quadrature.hpp"

namespace dri {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kE = std::numbers::e;

double gamma_pdf(double shape, double rate, double x) {
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (shape < 1.0) return kInf;
    if (shape == 1.0) return rate;
    return 0.0;
  }
  // exp/log form avoids overflow for large shape
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) -
                  rate * x - std::lgamma(shape));
}

// sup/inf over [l, r) of a function that vanishes below s, takes the value
// f(s) at s, and decreases on [s, inf).  at_s may be +inf.
std::pair<double, double> decreasing_extrema(
    double l, double r, double s, double at_s,
    const std::function<double(double)>& f) {
  if (r <= s) return {0.0, 0.0};
  double sup = (l <= s) ? at_s : f(l);
  double inf = (l < s) ? 0.0 : f(r);
  return {sup, inf};
}

}  // namespace

std::string kind_name(DensityKind k) {
  switch (k) {
    case DensityKind::exponential: return "exponential";
    case DensityKind::uniform: return "uniform";
    case DensityKind::gamma: return "gamma";
    case DensityKind::pareto: return "pareto";
    case DensityKind::log_counterexample: return "log_counterexample";
    case DensityKind::sqrt_singular: return "sqrt_singular";
    case DensityKind::gaussian: return "gaussian";
    case DensityKind::tabulated: return "tabulated";
  }
  return "unknown";
}

DensitySpec::DensitySpec(DensityKind k, std::vector<double> p,
                         std::optional<double> eps)
    : kind_(k), params_(std::move(p)), epsilon_(eps) {}

DensitySpec DensitySpec::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
  return DensitySpec(DensityKind::exponential, {rate}, 1.0);
}

DensitySpec DensitySpec::uniform(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("uniform: need a < b");
  return DensitySpec(DensityKind::uniform, {a, b}, 1.0);
}

DensitySpec DensitySpec::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma: shape and rate must be positive");
  return DensitySpec(DensityKind::gamma, {shape, rate}, 1.0);
}

DensitySpec DensitySpec::pareto(double alpha, double scale,
                                std::optional<double> epsilon) {
  if (!(alpha > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("pareto: alpha and scale must be positive");
  double eps = epsilon ? *epsilon : std::min(0.8 * alpha, 1.0);
  if (!(eps > 0.0) || eps > 1.0 || !(eps < alpha))
    throw std::invalid_argument("pareto: epsilon must lie in (0, min(alpha, 1)]");
  return DensitySpec(DensityKind::pareto, {alpha, scale}, eps);
}

DensitySpec DensitySpec::log_counterexample() {
  return DensitySpec(DensityKind::log_counterexample, {}, std::nullopt);
}

DensitySpec DensitySpec::sqrt_singular() {
  return DensitySpec(DensityKind::sqrt_singular, {}, 1.0);
}

DensitySpec DensitySpec::gaussian(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("gaussian: sd must be positive");
  return DensitySpec(DensityKind::gaussian, {mean, sd}, 1.0);
}

DensitySpec DensitySpec::tabulated(GridFunction grid, TailEnvelope envelope,
                                   std::optional<double> epsilon) {
  if (grid.values.size() < 2)
    throw std::invalid_argument("tabulated: need at least two samples");
  grid.refresh_mass();
  if (std::abs(grid.mass - 1.0) > 1e-3)
    throw std::invalid_argument("tabulated: density mass deviates from 1");
  for (double v : grid.values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("tabulated: negative or non-finite sample");
  DensitySpec d(DensityKind::tabulated, {}, epsilon);
  auto cum = std::make_shared<std::vector<double>>(grid.values.size(), 0.0);
  for (std::size_t i = 1; i < grid.values.size(); ++i)
    (*cum)[i] = (*cum)[i - 1] +
                0.5 * grid.spacing * (grid.values[i - 1] + grid.values[i]);
  d.table_ = std::make_shared<const GridFunction>(std::move(grid));
  d.table_env_ = std::make_shared<const TailEnvelope>(envelope);
  d.table_cdf_ = std::move(cum);
  return d;
}

DensitySpec DensitySpec::tabulated_from_csv(const std::string& path,
                                            std::optional<double> epsilon) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("tabulated_from_csv: cannot open " + path);
  std::vector<double> xs, vs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string fx, fv;
    if (!std::getline(row, fx, ',') || !std::getline(row, fv, ','))
      throw std::runtime_error("tabulated_from_csv: malformed row: " + line);
    try {
      xs.push_back(std::stod(fx));
      vs.push_back(std::stod(fv));
    } catch (const std::exception&) {
      if (xs.empty() && vs.empty()) continue;  // header row
      throw std::runtime_error("tabulated_from_csv: malformed row: " + line);
    }
  }
  if (xs.size() < 2) throw std::runtime_error("tabulated_from_csv: too few rows");
  double h = xs[1] - xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) {
    double step = xs[i] - xs[i - 1];
    if (std::abs(step - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw std::runtime_error("tabulated_from_csv: spacing not uniform");
  }
  GridFunction g = GridFunction::from_samples(xs.front(), h, std::move(vs));
  double cap = *std::max_element(g.values.begin(), g.values.end());
  double cutoff = std::max(std::abs(g.x_min()), std::abs(g.x_max()));
  // the table says nothing past its own window: edges at zero certify
  // compact support, anything else leaves the tail uncertified (a flat,
  // non-integrable envelope at the edge level); a declared epsilon can still
  // upgrade the mass tail through the Markov bound later
  double edge = std::max(g.values.front(), g.values.back());
  TailEnvelope env = edge <= 1e-9 * std::max(cap, 1.0)
                         ? TailEnvelope::zero_beyond(cutoff, cap)
                         : TailEnvelope::power(edge, 0.0, cutoff, edge);
  return tabulated(std::move(g), env, epsilon);
}

std::string DensitySpec::label() const {
  std::ostringstream s;
  s << kind_name(kind_);
  if (!params_.empty()) {
    s << "(";
    for (std::size_t i = 0; i < params_.size(); ++i)
      s << (i ? "," : "") << params_[i];
    s << ")";
  }
  return s.str();
}

double DensitySpec::eval(double x) const {
  switch (kind_) {
    case DensityKind::exponential: {
      double lam = params_[0];
      return x < 0.0 ? 0.0 : lam * std::exp(-lam * x);
    }
    case DensityKind::uniform: {
      double a = params_[0], b = params_[1];
      return (x >= a && x <= b) ? 1.0 / (b - a) : 0.0;
    }
    case DensityKind::gamma:
      return gamma_pdf(params_[0], params_[1], x);
    case DensityKind::pareto: {
      double al = params_[0], s = params_[1];
      if (x < s) return 0.0;
      return al * std::pow(s, al) * std::pow(x, -al - 1.0);
    }
    case DensityKind::log_counterexample: {
      if (x < kE) return 0.0;
      double lg = std::log(x);
      return 1.0 / (x * lg * lg);
    }
    case DensityKind::sqrt_singular: {
      if (x < 0.0 || x > 1.0) return 0.0;
      if (x == 0.0) return kInf;
      return 0.5 / std::sqrt(x);
    }
    case DensityKind::gaussian: {
      double m = params_[0], sd = params_[1];
      double z = (x - m) / sd;
      return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    }
    case DensityKind::tabulated: {
      if (x >= table_->x_min() && x <= table_->x_max()) return table_->interp(x);
      // the table holds all certified mass (gated at 1e-3); the envelope only
      // majorizes whatever might hide past the window, it is not a value
      return 0.0;
    }
  }
  return 0.0;
}

double DensitySpec::cdf(double x) const {
  switch (kind_) {
    case DensityKind::exponential:
      return x <= 0.0 ? 0.0 : -std::expm1(-params_[0] * x);
    case DensityKind::uniform: {
      double a = params_[0], b = params_[1];
      return std::clamp((x - a) / (b - a), 0.0, 1.0);
    }
    case DensityKind::gamma:
      return x <= 0.0 ? 0.0 : boost::math::gamma_p(params_[0], params_[1] * x);
    case DensityKind::pareto: {
      double al = params_[0], s = params_[1];
      return x <= s ? 0.0 : 1.0 - std::pow(s / x, al);
    }
    case DensityKind::log_counterexample:
      return x <= kE ? 0.0 : 1.0 - 1.0 / std::log(x);
    case DensityKind::sqrt_singular:
      return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : std::sqrt(x));
    case DensityKind::gaussian: {
      double z = (x - params_[0]) / (params_[1] * std::sqrt(2.0));
      return 0.5 * std::erfc(-z);
    }
    case DensityKind::tabulated: {
      const auto& g = *table_;
      if (x <= g.x_min()) return 0.0;
      if (x >= g.x_max()) return std::min(1.0, table_cdf_->back());
      double t = (x - g.origin) / g.spacing;
      auto i = static_cast<std::size_t>(t);
      double fr = t - double(i);
      // linear interpolation of the cumulative trapezoid table
      double c = (*table_cdf_)[i] +
                 fr * ((*table_cdf_)[i + 1] - (*table_cdf_)[i]);
      return std::min(1.0, c);
    }
  }
  return 0.0;
}

double DensitySpec::tail(double t) const {
  if (t <= 0.0) return 1.0;
  switch (kind_) {
    case DensityKind::uniform: {
      double a = params_[0], b = params_[1];
      double len = std::max(0.0, b - std::max(a, t)) +
                   std::max(0.0, std::min(b, -t) - a);
      return len / (b - a);
    }
    case DensityKind::gaussian: {
      double m = params_[0], sd = params_[1], rt2 = std::sqrt(2.0);
      return 0.5 * std::erfc((t - m) / (sd * rt2)) +
             0.5 * std::erfc((t + m) / (sd * rt2));
    }
    case DensityKind::tabulated: {
      const auto& g = *table_;
      double within = std::max(0.0, cdf(t) - cdf(-t));
      double beyond = table_env_->integral_beyond(
          std::max(t, std::max(std::abs(g.x_min()), std::abs(g.x_max()))));
      return std::clamp(g.mass - within + beyond, 0.0, 1.0);
    }
    default:
      // remaining families have non-negative support
      return 1.0 - cdf(t);
  }
}

double DensitySpec::quantile(double u) const {
  if (!(u >= 0.0) || !(u < 1.0))
    throw std::invalid_argument("quantile: u must lie in [0, 1)");
  switch (kind_) {
    case DensityKind::exponential:
      return -std::log1p(-u) / params_[0];
    case DensityKind::uniform:
      return params_[0] + (params_[1] - params_[0]) * u;
    case DensityKind::gamma:
      return u == 0.0 ? 0.0
                      : boost::math::gamma_p_inv(params_[0], u) / params_[1];
    case DensityKind::pareto:
      return params_[1] * std::pow(1.0 - u, -1.0 / params_[0]);
    case DensityKind::log_counterexample:
      return std::exp(1.0 / (1.0 - u));
    case DensityKind::sqrt_singular:
      return u * u;
    case DensityKind::gaussian:
      return params_[0] +
             params_[1] * std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
    case DensityKind::tabulated: {
      const auto& cum = *table_cdf_;
      double target = u * cum.back();
      auto it = std::lower_bound(cum.begin(), cum.end(), target);
      if (it == cum.begin()) return table_->x_min();
      std::size_t i = std::size_t(it - cum.begin()) - 1;
      double seg = cum[i + 1] - cum[i];
      double fr = seg > 0.0 ? (target - cum[i]) / seg : 0.0;
      return table_->x_at(i) + fr * table_->spacing;
    }
  }
  return 0.0;
}

double DensitySpec::moment_eps(double eps) const {
  if (!(eps > 0.0) || eps > 1.0)
    throw std::invalid_argument("moment_eps: eps must lie in (0, 1]");
  switch (kind_) {
    case DensityKind::exponential:
      return std::tgamma(1.0 + eps) / std::pow(params_[0], eps);
    case DensityKind::uniform: {
      double a = params_[0], b = params_[1], p = 1.0 + eps;
      auto prim = [&](double x) {
        return std::pow(std::abs(x), p) / p * (x < 0.0 ? -1.0 : 1.0);
      };
      return (prim(b) - prim(a)) / (b - a);
    }
    case DensityKind::gamma:
      return std::exp(std::lgamma(params_[0] + eps) - std::lgamma(params_[0]) -
                      eps * std::log(params_[1]));
    case DensityKind::pareto: {
      double al = params_[0], s = params_[1];
      if (eps >= al) return kInf;
      return al * std::pow(s, eps) / (al - eps);
    }
    case DensityKind::log_counterexample:
      return kInf;
    case DensityKind::sqrt_singular:
      return 1.0 / (2.0 * eps + 1.0);
    case DensityKind::gaussian: {
      double m = params_[0], sd = params_[1];
      if (m == 0.0) {
        return std::pow(sd, eps) * std::pow(2.0, eps / 2.0) *
               std::tgamma((1.0 + eps) / 2.0) / std::sqrt(std::numbers::pi);
      }
      // E|X|^eps = eps * int_0^inf t^(eps-1) P(|X| >= t) dt; the tail past
      // T = |m| + 14 sd contributes < 1e-40
      double T = std::abs(m) + 14.0 * sd;
      return integrate_singular(
          [&](double t) { return eps * std::pow(t, eps - 1.0) * tail(t); }, 0.0,
          T, 1e-11);
    }
    case DensityKind::tabulated: {
      const auto& g = *table_;
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        double x0 = g.x_at(i), x1 = g.x_at(i + 1);
        acc += 0.5 * g.spacing *
               (std::pow(std::abs(x0), eps) * g.values[i] +
                std::pow(std::abs(x1), eps) * g.values[i + 1]);
      }
      double edge = std::max(std::abs(g.x_min()), std::abs(g.x_max()));
      double w = table_env_->weighted_integral_beyond(edge, eps);
      double plain = table_env_->integral_beyond(edge);
      return acc + (std::isfinite(w) ? w - plain : kInf);
    }
  }
  return kInf;
}

double DensitySpec::truncated_mean(double x) const {
  if (!nonnegative_support())
    throw std::invalid_argument("truncated_mean: density has mass on the negative axis");
  if (x <= 0.0) return 0.0;
  switch (kind_) {
    case DensityKind::exponential:
      return -std::expm1(-params_[0] * x) / params_[0];
    case DensityKind::uniform: {
      double a = params_[0], b = params_[1];
      if (x <= a) return x;
      if (x >= b) return 0.5 * (a + b);
      return a + ((b - a) * (b - a) - (b - x) * (b - x)) / (2.0 * (b - a));
    }
    case DensityKind::gamma: {
      double s = params_[0], lam = params_[1];
      return (s / lam) * boost::math::gamma_p(s + 1.0, lam * x) +
             x * boost::math::gamma_q(s, lam * x);
    }
    case DensityKind::pareto: {
      double al = params_[0], s = params_[1];
      if (x <= s) return x;
      if (al == 1.0) return s + s * std::log(x / s);
      return s + std::pow(s, al) * (std::pow(x, 1.0 - al) - std::pow(s, 1.0 - al)) /
                     (1.0 - al);
    }
    case DensityKind::log_counterexample: {
      if (x <= kE) return x;
      return kE +
             integrate([](double y) { return 1.0 / std::log(y); }, kE, x, 1e-10);
    }
    case DensityKind::sqrt_singular:
      if (x >= 1.0) return 1.0 / 3.0;
      return x - (2.0 / 3.0) * std::pow(x, 1.5);
    case DensityKind::tabulated: {
      // int_0^x (1 - F) with F piecewise linear between samples
      const auto& g = *table_;
      double lo = std::max(0.0, g.x_min());
      double acc = std::min(x, lo);  // F = 0 below the window
      double prev_x = lo, prev_s = 1.0 - cdf(lo);
      if (x <= lo) return acc;
      for (std::size_t i = 0; i < g.size(); ++i) {
        double xi = g.x_at(i);
        if (xi <= lo) continue;
        double cx = std::min(xi, x);
        double sv = 1.0 - cdf(cx);
        acc += 0.5 * (prev_s + sv) * (cx - prev_x);
        prev_x = cx;
        prev_s = sv;
        if (xi >= x) break;
      }
      if (x > g.x_max()) acc += (1.0 - cdf(g.x_max())) * (x - g.x_max());
      return acc;
    }
    default:
      throw std::logic_error("truncated_mean: unhandled kind");
  }
}

double DensitySpec::mean() const {
  switch (kind_) {
    case DensityKind::exponential: return 1.0 / params_[0];
    case DensityKind::uniform: return 0.5 * (params_[0] + params_[1]);
    case DensityKind::gamma: return params_[0] / params_[1];
    case DensityKind::pareto:
      return params_[0] > 1.0
                 ? params_[0] * params_[1] / (params_[0] - 1.0)
                 : kInf;
    case DensityKind::log_counterexample: return kInf;
    case DensityKind::sqrt_singular: return 1.0 / 3.0;
    case DensityKind::gaussian: return params_[0];
    case DensityKind::tabulated: {
      const auto& g = *table_;
      if (!std::isfinite(table_env_->weighted_integral_beyond(
              std::max(std::abs(g.x_min()), std::abs(g.x_max())), 1.0)))
        return kInf;
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < g.size(); ++i)
        acc += 0.5 * g.spacing *
               (g.x_at(i) * g.values[i] + g.x_at(i + 1) * g.values[i + 1]);
      return acc;
    }
  }
  return kInf;
}

double DensitySpec::variance() const {
  switch (kind_) {
    case DensityKind::exponential: return 1.0 / (params_[0] * params_[0]);
    case DensityKind::uniform: {
      double w = params_[1] - params_[0];
      return w * w / 12.0;
    }
    case DensityKind::gamma: return params_[0] / (params_[1] * params_[1]);
    case DensityKind::pareto: {
      double al = params_[0], s = params_[1];
      if (al <= 2.0) return kInf;
      return al * s * s / ((al - 1.0) * (al - 1.0) * (al - 2.0));
    }
    case DensityKind::log_counterexample: return kInf;
    case DensityKind::sqrt_singular: return 1.0 / 5.0 - 1.0 / 9.0;
    case DensityKind::gaussian: return params_[1] * params_[1];
    case DensityKind::tabulated: {
      double m = mean();
      if (!std::isfinite(m)) return kInf;
      const auto& g = *table_;
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        double x0 = g.x_at(i), x1 = g.x_at(i + 1);
        acc += 0.5 * g.spacing *
               (x0 * x0 * g.values[i] + x1 * x1 * g.values[i + 1]);
      }
      return acc - m * m;
    }
  }
  return kInf;
}

double DensitySpec::sup_density() const {
  switch (kind_) {
    case DensityKind::exponential: return params_[0];
    case DensityKind::uniform: return 1.0 / (params_[1] - params_[0]);
    case DensityKind::gamma: {
      double s = params_[0], lam = params_[1];
      if (s < 1.0) return kInf;
      if (s == 1.0) return lam;
      return gamma_pdf(s, lam, (s - 1.0) / lam);
    }
    case DensityKind::pareto: return params_[0] / params_[1];
    case DensityKind::log_counterexample: return 1.0 / kE;
    case DensityKind::sqrt_singular: return kInf;
    case DensityKind::gaussian:
      return 1.0 / (params_[1] * std::sqrt(2.0 * std::numbers::pi));
    case DensityKind::tabulated: {
      double m = *std::max_element(table_->values.begin(), table_->values.end());
      return std::max(m, table_env_->cap);
    }
  }
  return kInf;
}

bool DensitySpec::nonnegative_support() const { return support_min() >= 0.0; }

double DensitySpec::support_min() const {
  switch (kind_) {
    case DensityKind::exponential: return 0.0;
    case DensityKind::uniform: return params_[0];
    case DensityKind::gamma: return 0.0;
    case DensityKind::pareto: return params_[1];
    case DensityKind::log_counterexample: return kE;
    case DensityKind::sqrt_singular: return 0.0;
    case DensityKind::gaussian: return -kInf;
    case DensityKind::tabulated:
      return table_env_->kind == TailEnvelope::Kind::zero ? table_->x_min()
                                                          : -kInf;
  }
  return -kInf;
}

double DensitySpec::support_max() const {
  switch (kind_) {
    case DensityKind::uniform: return params_[1];
    case DensityKind::sqrt_singular: return 1.0;
    case DensityKind::tabulated:
      return table_env_->kind == TailEnvelope::Kind::zero ? table_->x_max()
                                                          : kInf;
    default: return kInf;
  }
}

std::vector<double> DensitySpec::sample(RngStream& rng, std::size_t n) const {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(quantile(rng.next_unit()));
  return out;
}

std::vector<double> DensitySpec::jump_points() const {
  switch (kind_) {
    case DensityKind::exponential: return {0.0};
    case DensityKind::uniform: return {params_[0], params_[1]};
    case DensityKind::gamma:
      return params_[0] <= 1.0 ? std::vector<double>{0.0}
                               : std::vector<double>{};
    case DensityKind::pareto: return {params_[1]};
    case DensityKind::log_counterexample: return {kE};
    case DensityKind::sqrt_singular: return {0.0, 1.0};
    default: return {};
  }
}

bool DensitySpec::has_exact_extrema() const {
  return kind_ != DensityKind::tabulated;
}

std::pair<double, double> DensitySpec::range_extrema(double l, double r) const {
  if (!(l < r)) throw std::invalid_argument("range_extrema: need l < r");
  auto f = [this](double x) { return eval(x); };
  switch (kind_) {
    case DensityKind::exponential:
      return decreasing_extrema(l, r, 0.0, params_[0], f);
    case DensityKind::uniform: {
      double a = params_[0], b = params_[1], v = 1.0 / (b - a);
      // [l, r) meets [a, b] iff l <= b and r > a
      double sup = (l <= b && r > a) ? v : 0.0;
      double inf = (l >= a && r <= b) ? v : 0.0;
      return {sup, inf};
    }
    case DensityKind::gamma: {
      double s = params_[0];
      if (s <= 1.0) return decreasing_extrema(l, r, 0.0, f(0.0), f);
      double mode = (s - 1.0) / params_[1];
      if (r <= 0.0) return {0.0, 0.0};
      double l0 = std::max(l, 0.0);
      double sup;
      if (mode >= l0 && mode < r) sup = f(mode);
      else if (r <= mode) sup = f(r);
      else sup = f(l0);
      double inf = (l < 0.0) ? 0.0 : std::min(f(l0), f(r));
      return {sup, inf};
    }
    case DensityKind::pareto:
      return decreasing_extrema(l, r, params_[1], params_[0] / params_[1], f);
    case DensityKind::log_counterexample:
      return decreasing_extrema(l, r, kE, 1.0 / kE, f);
    case DensityKind::sqrt_singular: {
      if (r <= 0.0 || l >= 1.0) return {0.0, 0.0};
      double sup = (l <= 0.0) ? kInf : f(l);
      double inf = (l < 0.0 || r > 1.0) ? 0.0 : f(std::min(r, 1.0));
      return {sup, inf};
    }
    case DensityKind::gaussian: {
      double m = params_[0];
      double sup;
      if (m >= l && m < r) sup = f(m);
      else if (r <= m) sup = f(r);
      else sup = f(l);
      return {sup, std::min(f(l), f(r))};
    }
    case DensityKind::tabulated:
      throw std::logic_error("range_extrema: tabulated density has no exact oracle");
  }
  return {0.0, 0.0};
}

TailEnvelope DensitySpec::value_envelope() const {
  switch (kind_) {
    case DensityKind::exponential: {
      double lam = params_[0];
      return TailEnvelope::exp_decay(lam, lam, 0.0, lam);
    }
    case DensityKind::uniform:
      return TailEnvelope::zero_beyond(
          std::max(std::abs(params_[0]), std::abs(params_[1])),
          1.0 / (params_[1] - params_[0]));
    case DensityKind::gamma: {
      double s = params_[0], lam = params_[1];
      double t0 = std::max(2.0 * s / lam, 1.0 / lam);
      if (s >= 1.0) {
        // tangent of the log-concave log-density at t0
        double r = lam - (s - 1.0) / t0;
        double c = gamma_pdf(s, lam, t0) * std::exp(r * t0);
        return TailEnvelope::exp_decay(c, r, t0, gamma_pdf(s, lam, t0));
      }
      // s < 1: t^(s-1) decreasing, freeze it at t0
      double c = std::exp(s * std::log(lam) + (s - 1.0) * std::log(t0) -
                          std::lgamma(s));
      return TailEnvelope::exp_decay(c, lam, t0, gamma_pdf(s, lam, t0));
    }
    case DensityKind::pareto: {
      double al = params_[0], s = params_[1];
      return TailEnvelope::power(al * std::pow(s, al), al + 1.0, s, al / s);
    }
    case DensityKind::log_counterexample:
      return TailEnvelope::log_power(1.0, 0.0, kE, 1.0 / kE);
    case DensityKind::sqrt_singular:
      return TailEnvelope::zero_beyond(1.0, kInf);
    case DensityKind::gaussian: {
      double m = std::abs(params_[0]), sd = params_[1];
      double t0 = m + 2.0 * sd;
      double r = (t0 - m) / (sd * sd);
      double v0 = std::exp(-0.5 * (t0 - m) * (t0 - m) / (sd * sd)) /
                  (sd * std::sqrt(2.0 * std::numbers::pi));
      return TailEnvelope::exp_decay(v0 * std::exp(r * t0), r, t0, sup_density());
    }
    case DensityKind::tabulated:
      return *table_env_;
  }
  return TailEnvelope::zero_beyond(0.0, kInf);
}

TailEnvelope DensitySpec::mass_envelope() const {
  switch (kind_) {
    case DensityKind::exponential:
      return TailEnvelope::exp_decay(1.0, params_[0], 0.0, 1.0);
    case DensityKind::uniform:
      return TailEnvelope::zero_beyond(
          std::max(std::abs(params_[0]), std::abs(params_[1])), 1.0);
    case DensityKind::gamma: {
      // Chernoff at theta = rate/2: P(X >= t) <= 2^shape exp(-rate t / 2)
      double s = params_[0], lam = params_[1];
      return TailEnvelope::exp_decay(std::pow(2.0, s), 0.5 * lam, 0.0, 1.0);
    }
    case DensityKind::pareto:
      return TailEnvelope::power(std::pow(params_[1], params_[0]), params_[0],
                                 params_[1], 1.0);
    case DensityKind::log_counterexample:
      // P(X >= t) = 1 / log t: no integrable majorant exists
      return TailEnvelope::power(1.0, 0.0, kE, 1.0);
    case DensityKind::sqrt_singular:
      return TailEnvelope::zero_beyond(1.0, 1.0);
    case DensityKind::gaussian: {
      double m = std::abs(params_[0]), sd = params_[1];
      double t0 = m + 2.0 * sd;
      double r = (t0 - m) / (sd * sd);
      double v0 = std::exp(-0.5 * (t0 - m) * (t0 - m) / (sd * sd));
      return TailEnvelope::exp_decay(2.0 * v0 * std::exp(r * t0), r, t0, 1.0);
    }
    case DensityKind::tabulated: {
      if (table_env_->kind == TailEnvelope::Kind::zero)
        return TailEnvelope::zero_beyond(table_env_->cutoff, 1.0);
      if (epsilon_) {
        double c = moment_eps(*epsilon_);
        if (std::isfinite(c)) {
          double cross = std::pow(c, 1.0 / *epsilon_);
          return TailEnvelope::power(c, *epsilon_, cross, 1.0);
        }
      }
      return TailEnvelope::power(1.0, 0.0, 0.0, 1.0);  // no certified decay
    }
  }
  return TailEnvelope::power(1.0, 0.0, 0.0, 1.0);
}

double DensitySpec::laplace(double theta) const {
  if (theta < 0.0) throw std::invalid_argument("laplace: theta must be >= 0");
  if (theta == 0.0) return 1.0;
  switch (kind_) {
    case DensityKind::exponential:
      return params_[0] / (params_[0] + theta);
    case DensityKind::uniform: {
      double a = params_[0], b = params_[1];
      return (std::exp(-theta * a) - std::exp(-theta * b)) / (theta * (b - a));
    }
    case DensityKind::gamma:
      return std::pow(params_[1] / (params_[1] + theta), params_[0]);
    case DensityKind::pareto: {
      // Integration by parts against the tail gives the closed form
      //   E e^{-theta X} = e^{-z} - z^alpha Gamma(1-alpha, z),  z = theta*s,
      // with the upper incomplete gamma continued to non-positive
      // parameters by the downward recurrence Gamma(a,z) =
      // (Gamma(a+1,z) - z^a e^{-z}) / a.
      const double alpha = params_[0], s = params_[1];
      const double z = theta * s;
      double a = 1.0 - alpha;
      int steps = 0;
      while (a + steps <= 0.0) ++steps;
      double g = boost::math::tgamma(a + steps, z);
      for (int j = steps - 1; j >= 0; --j) {
        const double aj = a + j;
        g = (g - std::pow(z, aj) * std::exp(-z)) / aj;
      }
      return std::exp(-z) - std::pow(z, alpha) * g;
    }
    case DensityKind::log_counterexample: {
      // Dyadic segments keep each quadrature panel certifiable even when
      // small theta stretches the effective window past 10^5.
      const double T = kE + 60.0 / theta;
      double head = 0.0, lo = kE;
      while (lo < T) {
        const double hi = std::min(2.0 * lo, T);
        head += integrate(
            [&](double x) { return std::exp(-theta * x) * eval(x); }, lo, hi,
            1e-11);
        lo = hi;
      }
      return head + std::exp(-theta * T) * tail(T);
    }
    case DensityKind::sqrt_singular: {
      double rt = std::sqrt(theta);
      return 0.5 * std::sqrt(std::numbers::pi) / rt * std::erf(rt);
    }
    case DensityKind::gaussian:
      return std::exp(-theta * params_[0] +
                      0.5 * theta * theta * params_[1] * params_[1]);
    case DensityKind::tabulated: {
      const auto& g = *table_;
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < g.size(); ++i)
        acc += 0.5 * g.spacing *
               (std::exp(-theta * g.x_at(i)) * g.values[i] +
                std::exp(-theta * g.x_at(i + 1)) * g.values[i + 1]);
      if (g.x_min() < 0.0)
        throw std::invalid_argument("laplace: tabulated window extends below 0");
      return acc + std::exp(-theta * g.x_max()) *
                       table_env_->integral_beyond(g.x_max());
    }
  }
  return 1.0;
}

const GridFunction& DensitySpec::tabulated_grid() const {
  if (kind_ != DensityKind::tabulated)
    throw std::logic_error("tabulated_grid: not a tabulated density");
  return *table_;
}

}  // namespace dri
