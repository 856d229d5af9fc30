#pragma once

#include "varsode/jets.hpp"

#include <functional>

namespace varsode {

/// Adaptive 15-point Gauss-Kronrod quadrature on [a, b]. Intervals are
/// bisected until the Kronrod and embedded Gauss estimates agree to
/// tol * (1 + |estimate|) in every jet coefficient, scaled by the interval's
/// share of [a, b]. Throws EvalError when max_depth bisections do not suffice.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                 int max_depth = 24);
Jet1 integrate(const std::function<Jet1(double)>& f, double a, double b, double tol = 1e-10,
               int max_depth = 24);
Jet2 integrate(const std::function<Jet2(double)>& f, double a, double b, double tol = 1e-10,
               int max_depth = 24);

}  // namespace varsode
