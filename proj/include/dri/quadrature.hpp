#pragma once

#include <functional>

namespace dri {

// Adaptive Gauss-Kronrod integral of f over [a, b].  Throws std::runtime_error
// if the requested absolute tolerance cannot be certified from the error
// estimate.  Endpoints may be +-inf.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

// tanh-sinh rule for integrands with an integrable endpoint singularity
// (e.g. x^{-1/2} at a).  Same tolerance contract as integrate().
double integrate_singular(const std::function<double(double)>& f, double a,
                          double b, double abs_tol = 1e-10);

}  // namespace dri
