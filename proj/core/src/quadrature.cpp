#include "varsode/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace varsode {

namespace {

double norm(double v) { return std::abs(v); }
double norm(const Jet1& j) { return std::max(std::abs(j.value()), j.grad().lpNorm<Eigen::Infinity>()); }
double norm(const Jet2& j) {
  return std::max({std::abs(j.value()), j.grad().lpNorm<Eigen::Infinity>(),
                   j.hess().lpNorm<Eigen::Infinity>()});
}

template <class T>
struct Estimate {
  T kronrod;
  double error;
};

// Nodes and weights come from Boost; the Gauss nodes sit at the even
// positions of the Kronrod abscissae.
template <class T>
Estimate<T> rule(const std::function<T(double)>& f, double a, double b) {
  using K = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = K::abscissa();
  const auto& wk = K::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T f0 = f(c);
  T k = f0 * wk[0];
  T g = f0 * wg[0];
  for (std::size_t i = 1; i < xk.size(); ++i) {
    T s = f(c - h * xk[i]);
    s += f(c + h * xk[i]);
    k += s * wk[i];
    if (i % 2 == 0) g += s * wg[i / 2];
  }
  k *= h;
  g *= h;
  T diff = k;
  diff -= g;
  return {std::move(k), norm(diff)};
}

template <class T>
T adapt(const std::function<T(double)>& f, double a, double b, double tol, double share,
        int depth) {
  auto e = rule(f, a, b);
  if (e.error <= tol * share * (1.0 + norm(e.kronrod))) return std::move(e.kronrod);
  if (depth <= 0) throw EvalError("integrate", "no convergence within the bisection limit");
  const double c = 0.5 * (a + b);
  T left = adapt(f, a, c, tol, 0.5 * share, depth - 1);
  left += adapt(f, c, b, tol, 0.5 * share, depth - 1);
  return left;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 int max_depth) {
  return adapt(f, a, b, tol, 1.0, max_depth);
}

Jet1 integrate(const std::function<Jet1(double)>& f, double a, double b, double tol, int max_depth) {
  return adapt(f, a, b, tol, 1.0, max_depth);
}

Jet2 integrate(const std::function<Jet2(double)>& f, double a, double b, double tol, int max_depth) {
  return adapt(f, a, b, tol, 1.0, max_depth);
}

}  // namespace varsode
