#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace varsode {

using Index = Eigen::Index;

/// Raised when a jet or expression leaves the domain of an operation.
class EvalError : public std::runtime_error {
 public:
  EvalError(std::string operation, const std::string& detail);

  const std::string& operation() const noexcept { return operation_; }

 private:
  std::string operation_;
};

/// Raised when a linear solve meets a numerically singular matrix.
class DegenerateError : public EvalError {
 public:
  DegenerateError(std::string operation, double condition);

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Value and gradient of a scalar with respect to d active variables.
class Jet1 {
 public:
  Jet1() = default;
  Jet1(double value, Eigen::VectorXd grad);

  static Jet1 constant(double value, Index dim);
  static Jet1 variable(double value, Index dim, Index index);

  double value() const { return value_; }
  const Eigen::VectorXd& grad() const { return grad_; }
  Index dim() const { return grad_.size(); }

  Jet1& operator+=(const Jet1& rhs);
  Jet1& operator-=(const Jet1& rhs);
  Jet1& operator*=(const Jet1& rhs);
  Jet1& operator/=(const Jet1& rhs);
  Jet1& operator+=(double rhs);
  Jet1& operator-=(double rhs);
  Jet1& operator*=(double rhs);

 private:
  double value_ = 0.0;
  Eigen::VectorXd grad_;
};

/// Value, gradient and symmetric Hessian of a scalar with respect to d
/// active variables.
class Jet2 {
 public:
  Jet2() = default;
  /// The Hessian is symmetrized on construction.
  Jet2(double value, Eigen::VectorXd grad, Eigen::MatrixXd hess);

  static Jet2 constant(double value, Index dim);
  static Jet2 variable(double value, Index dim, Index index);

  double value() const { return value_; }
  const Eigen::VectorXd& grad() const { return grad_; }
  const Eigen::MatrixXd& hess() const { return hess_; }
  Index dim() const { return grad_.size(); }

  Jet2& operator+=(const Jet2& rhs);
  Jet2& operator-=(const Jet2& rhs);
  Jet2& operator*=(const Jet2& rhs);
  Jet2& operator/=(const Jet2& rhs);
  Jet2& operator+=(double rhs);
  Jet2& operator-=(double rhs);
  Jet2& operator*=(double rhs);

 private:
  double value_ = 0.0;
  Eigen::VectorXd grad_;
  Eigen::MatrixXd hess_;
};

Jet1 operator-(const Jet1& a);
Jet1 operator+(Jet1 a, const Jet1& b);
Jet1 operator-(Jet1 a, const Jet1& b);
Jet1 operator*(Jet1 a, const Jet1& b);
Jet1 operator/(Jet1 a, const Jet1& b);
Jet1 operator+(Jet1 a, double b);
Jet1 operator+(double a, Jet1 b);
Jet1 operator-(Jet1 a, double b);
Jet1 operator-(double a, const Jet1& b);
Jet1 operator*(Jet1 a, double b);
Jet1 operator*(double a, Jet1 b);
Jet1 operator/(const Jet1& a, double b);
Jet1 operator/(double a, const Jet1& b);

Jet2 operator-(const Jet2& a);
Jet2 operator+(Jet2 a, const Jet2& b);
Jet2 operator-(Jet2 a, const Jet2& b);
Jet2 operator*(Jet2 a, const Jet2& b);
Jet2 operator/(Jet2 a, const Jet2& b);
Jet2 operator+(Jet2 a, double b);
Jet2 operator+(double a, Jet2 b);
Jet2 operator-(Jet2 a, double b);
Jet2 operator-(double a, const Jet2& b);
Jet2 operator*(Jet2 a, double b);
Jet2 operator*(double a, Jet2 b);
Jet2 operator/(const Jet2& a, double b);
Jet2 operator/(double a, const Jet2& b);

/// Applies a scalar function given its value and first two derivatives at
/// a.value().
Jet2 chain(const Jet2& a, double f0, double f1, double f2);
Jet1 chain(const Jet1& a, double f0, double f1);

Jet1 sin(const Jet1& a);
Jet1 cos(const Jet1& a);
Jet1 exp(const Jet1& a);
Jet1 log(const Jet1& a);
Jet1 sqrt(const Jet1& a);
Jet1 pow(const Jet1& a, double p);

Jet2 sin(const Jet2& a);
Jet2 cos(const Jet2& a);
Jet2 exp(const Jet2& a);
Jet2 log(const Jet2& a);
Jet2 sqrt(const Jet2& a);
Jet2 pow(const Jet2& a, double p);

/// Domain-checked scalar kernels shared by the double evaluation path.
double checked_div(double a, double b);
double checked_log(double a);
double checked_sqrt(double a);
double checked_pow(double a, double p);

/// Drops the Hessian.
Jet1 truncate(const Jet2& a);

/// First partial derivative ∂a/∂v_k as a first-order jet.
Jet1 partial(const Jet2& a, Index k);

/// Zero-pads a jet over the leading variables of a larger layout.
Jet2 embed(const Jet2& a, Index dim);
Jet1 embed(const Jet1& a, Index dim);

/// Chain rule for outer(u_1..u_k) with u_j = inner[j](v). The outer jet is
/// taken with respect to u and must have dim k.
Jet2 compose(const Jet2& outer, std::span<const Jet2> inner);
Jet1 compose(const Jet1& outer, std::span<const Jet1> inner);

/// Solves A x = b for a square system of jets by Gaussian elimination with
/// partial pivoting on the values. `a` is row-major. Throws DegenerateError
/// when the value matrix has condition number above max_condition.
std::vector<Jet2> solve(std::span<const Jet2> a, std::span<const Jet2> b,
                        double max_condition = 1e12);

/// Named evaluation point.
class EvalContext {
 public:
  EvalContext(std::vector<std::string> names, std::vector<double> point);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& point() const { return point_; }
  Index dim() const { return static_cast<Index>(names_.size()); }

  /// Index of a variable name, or -1.
  Index find(std::string_view name) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> point_;
};

/// Coordinate function `index` of the context as a jet.
Jet2 seed(const EvalContext& ctx, Index index);

}  // namespace varsode
