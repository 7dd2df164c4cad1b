// Closed-form and high-precision references used to pin the numeric kernels.
// Everything here is computed by a route independent of the library code it
// checks.
#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// n-fold convolution of Uniform(0,1): the Irwin-Hall density
// f_n(x) = 1/(n-1)! * sum_{k=0}^{floor(x)} (-1)^k C(n,k) (x-k)^{n-1}.
inline double irwin_hall_pdf(int n, double x) {
  if (x <= 0.0 || x >= double(n)) return 0.0;
  double binom = 1.0;  // C(n, k)
  double acc = 0.0;
  for (int k = 0; k <= int(x); ++k) {
    acc += (k % 2 == 0 ? 1.0 : -1.0) * binom * std::pow(x - k, n - 1);
    binom *= double(n - k) / double(k + 1);
  }
  double fact = 1.0;
  for (int i = 2; i < n; ++i) fact *= double(i);
  return acc / fact;
}

// k-fold convolution of Exponential(rate): the Gamma(k, rate) density.
inline double gamma_pdf(double shape, double rate, double x) {
  if (x <= 0.0) return 0.0;
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) -
                  rate * x - std::lgamma(shape));
}

inline double gaussian_pdf(double x, double mean = 0.0, double sd = 1.0) {
  double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(8.0 * std::atan(1.0)));
}

// Gamma function through 50-digit arithmetic, rounded once at the end.
inline double hp_gamma(double x) {
  using boost::multiprecision::cpp_bin_float_50;
  return static_cast<double>(boost::math::tgamma(cpp_bin_float_50(x)));
}

// Two-fold convolution of f(x) = 1/(2 sqrt(x)) on (0,1]:
// f_2(x) = pi/4 on (0,1]; on (1,2) it is (pi/4 - asin-type corner) computed
// from the closed antiderivative asin(2y/x - 1)/2.
inline double sqrt_conv2_pdf(double x) {
  if (x <= 0.0 || x >= 2.0) return 0.0;
  const double pi = 4.0 * std::atan(1.0);
  if (x <= 1.0) return pi / 4.0;
  // integrate y over [x-1, 1]: (1/4) * [asin(2y/x - 1)] / 2 evaluated there
  auto anti = [&](double y) { return std::asin(2.0 * y / x - 1.0) / 2.0; };
  return 0.5 * (anti(1.0) - anti(x - 1.0));
}

// Renewal density of Uniform(0,1) increments on [0,1): u(x) = e^x.
inline double uniform_renewal_u(double x) { return std::exp(x); }

// Plain O(n^2) trapezoid convolution used to pin the FFT route.
inline std::vector<double> direct_conv(const std::vector<double>& a,
                                       const std::vector<double>& b, double h) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j] * h;
  return out;
}

// Deterministic generator for property suites, independent of the library's
// stream so a library RNG bug cannot hide itself.
struct Lcg {
  std::uint64_t s;
  explicit Lcg(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return s >> 16;
  }
  double unit() { return double(next() % (1ULL << 48)) * 0x1p-48; }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int integer(int lo, int hi) { return lo + int(next() % std::uint64_t(hi - lo + 1)); }
};

}  // namespace oracle
