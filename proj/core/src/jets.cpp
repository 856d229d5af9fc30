#include "varsode/jets.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace varsode {

namespace {

void require_same_dim(Index a, Index b) {
  if (a != b) {
    std::ostringstream os;
    os << "jet dimension mismatch (" << a << " vs " << b << ")";
    throw std::invalid_argument(os.str());
  }
}

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

EvalError::EvalError(std::string operation, const std::string& detail)
    : std::runtime_error(operation + ": " + detail),
      operation_(std::move(operation)) {}

DegenerateError::DegenerateError(std::string operation, double condition)
    : EvalError(std::move(operation),
                "singular matrix (condition number " + format_value(condition) +
                    ")"),
      condition_(condition) {}

double checked_div(double a, double b) {
  if (b == 0.0) throw EvalError("div", "division by zero");
  return a / b;
}

double checked_log(double a) {
  if (!(a > 0.0)) throw EvalError("log", "non-positive argument " + format_value(a));
  return std::log(a);
}

double checked_sqrt(double a) {
  if (a < 0.0) throw EvalError("sqrt", "negative argument " + format_value(a));
  return std::sqrt(a);
}

double checked_pow(double a, double p) {
  if (a < 0.0 && p != std::floor(p)) {
    throw EvalError("pow", "negative base " + format_value(a) +
                               " with non-integer exponent");
  }
  if (a == 0.0 && p < 0.0) throw EvalError("pow", "zero base with negative exponent");
  return std::pow(a, p);
}

// ---------------------------------------------------------------- Jet1

Jet1::Jet1(double value, Eigen::VectorXd grad) : value_(value), grad_(std::move(grad)) {}

Jet1 Jet1::constant(double value, Index dim) {
  return Jet1(value, Eigen::VectorXd::Zero(dim));
}

Jet1 Jet1::variable(double value, Index dim, Index index) {
  if (index < 0 || index >= dim) throw std::out_of_range("jet variable index out of range");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  g[index] = 1.0;
  return Jet1(value, std::move(g));
}

Jet1& Jet1::operator+=(const Jet1& rhs) {
  require_same_dim(dim(), rhs.dim());
  value_ += rhs.value_;
  grad_ += rhs.grad_;
  return *this;
}

Jet1& Jet1::operator-=(const Jet1& rhs) {
  require_same_dim(dim(), rhs.dim());
  value_ -= rhs.value_;
  grad_ -= rhs.grad_;
  return *this;
}

Jet1& Jet1::operator*=(const Jet1& rhs) {
  require_same_dim(dim(), rhs.dim());
  grad_ = grad_ * rhs.value_ + rhs.grad_ * value_;
  value_ *= rhs.value_;
  return *this;
}

Jet1& Jet1::operator/=(const Jet1& rhs) {
  require_same_dim(dim(), rhs.dim());
  const double q = checked_div(value_, rhs.value_);
  grad_ = (grad_ - rhs.grad_ * q) / rhs.value_;
  value_ = q;
  return *this;
}

Jet1& Jet1::operator+=(double rhs) {
  value_ += rhs;
  return *this;
}

Jet1& Jet1::operator-=(double rhs) {
  value_ -= rhs;
  return *this;
}

Jet1& Jet1::operator*=(double rhs) {
  value_ *= rhs;
  grad_ *= rhs;
  return *this;
}

Jet1 operator-(const Jet1& a) { return Jet1(-a.value(), -a.grad()); }
Jet1 operator+(Jet1 a, const Jet1& b) { return a += b; }
Jet1 operator-(Jet1 a, const Jet1& b) { return a -= b; }
Jet1 operator*(Jet1 a, const Jet1& b) { return a *= b; }
Jet1 operator/(Jet1 a, const Jet1& b) { return a /= b; }
Jet1 operator+(Jet1 a, double b) { return a += b; }
Jet1 operator+(double a, Jet1 b) { return b += a; }
Jet1 operator-(Jet1 a, double b) { return a -= b; }
Jet1 operator-(double a, const Jet1& b) { return -b + a; }
Jet1 operator*(Jet1 a, double b) { return a *= b; }
Jet1 operator*(double a, Jet1 b) { return b *= a; }
Jet1 operator/(const Jet1& a, double b) { return a / Jet1::constant(b, a.dim()); }
Jet1 operator/(double a, const Jet1& b) { return Jet1::constant(a, b.dim()) / b; }

Jet1 chain(const Jet1& a, double f0, double f1) { return Jet1(f0, a.grad() * f1); }

Jet1 sin(const Jet1& a) { return chain(a, std::sin(a.value()), std::cos(a.value())); }
Jet1 cos(const Jet1& a) { return chain(a, std::cos(a.value()), -std::sin(a.value())); }

Jet1 exp(const Jet1& a) {
  const double e = std::exp(a.value());
  return chain(a, e, e);
}

Jet1 log(const Jet1& a) { return chain(a, checked_log(a.value()), 1.0 / a.value()); }

Jet1 sqrt(const Jet1& a) {
  const double s = checked_sqrt(a.value());
  if (s == 0.0) throw EvalError("sqrt", "derivative undefined at 0");
  return chain(a, s, 0.5 / s);
}

// ---------------------------------------------------------------- Jet2

Jet2::Jet2(double value, Eigen::VectorXd grad, Eigen::MatrixXd hess)
    : value_(value), grad_(std::move(grad)) {
  if (hess.rows() != grad_.size() || hess.cols() != grad_.size()) {
    throw std::invalid_argument("jet Hessian shape does not match gradient");
  }
  hess_ = (hess + hess.transpose()) * 0.5;
}

Jet2 Jet2::constant(double value, Index dim) {
  return Jet2(value, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim));
}

Jet2 Jet2::variable(double value, Index dim, Index index) {
  if (index < 0 || index >= dim) throw std::out_of_range("jet variable index out of range");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  g[index] = 1.0;
  return Jet2(value, std::move(g), Eigen::MatrixXd::Zero(dim, dim));
}

Jet2& Jet2::operator+=(const Jet2& rhs) {
  require_same_dim(dim(), rhs.dim());
  value_ += rhs.value_;
  grad_ += rhs.grad_;
  hess_ += rhs.hess_;
  return *this;
}

Jet2& Jet2::operator-=(const Jet2& rhs) {
  require_same_dim(dim(), rhs.dim());
  value_ -= rhs.value_;
  grad_ -= rhs.grad_;
  hess_ -= rhs.hess_;
  return *this;
}

Jet2& Jet2::operator*=(const Jet2& rhs) {
  require_same_dim(dim(), rhs.dim());
  // o + oᵀ is bit-symmetric, unlike g·rᵀ + r·gᵀ evaluated term by term.
  const Eigen::MatrixXd o = grad_ * rhs.grad_.transpose();
  hess_ = hess_ * rhs.value_ + rhs.hess_ * value_ + (o + o.transpose());
  grad_ = grad_ * rhs.value_ + rhs.grad_ * value_;
  value_ *= rhs.value_;
  return *this;
}

Jet2& Jet2::operator/=(const Jet2& rhs) {
  require_same_dim(dim(), rhs.dim());
  const double q = checked_div(value_, rhs.value_);
  const double inv = 1.0 / rhs.value_;
  grad_ = (grad_ - rhs.grad_ * q) * inv;
  const Eigen::MatrixXd o = grad_ * rhs.grad_.transpose();
  hess_ = (hess_ - rhs.hess_ * q - (o + o.transpose())) * inv;
  value_ = q;
  return *this;
}

Jet2& Jet2::operator+=(double rhs) {
  value_ += rhs;
  return *this;
}

Jet2& Jet2::operator-=(double rhs) {
  value_ -= rhs;
  return *this;
}

Jet2& Jet2::operator*=(double rhs) {
  value_ *= rhs;
  grad_ *= rhs;
  hess_ *= rhs;
  return *this;
}

Jet2 operator-(const Jet2& a) { return a * -1.0; }
Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
Jet2 operator*(Jet2 a, const Jet2& b) { return a *= b; }
Jet2 operator/(Jet2 a, const Jet2& b) { return a /= b; }
Jet2 operator+(Jet2 a, double b) { return a += b; }
Jet2 operator+(double a, Jet2 b) { return b += a; }
Jet2 operator-(Jet2 a, double b) { return a -= b; }
Jet2 operator-(double a, const Jet2& b) { return -b + a; }
Jet2 operator*(Jet2 a, double b) { return a *= b; }
Jet2 operator*(double a, Jet2 b) { return b *= a; }
Jet2 operator/(const Jet2& a, double b) { return a / Jet2::constant(b, a.dim()); }
Jet2 operator/(double a, const Jet2& b) { return Jet2::constant(a, b.dim()) / b; }

Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
  Eigen::MatrixXd h = a.hess() * f1 + (a.grad() * a.grad().transpose()) * f2;
  return Jet2(f0, a.grad() * f1, std::move(h));
}

Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.value());
  return chain(a, s, std::cos(a.value()), -s);
}

Jet2 cos(const Jet2& a) {
  const double c = std::cos(a.value());
  return chain(a, c, -std::sin(a.value()), -c);
}

Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.value());
  return chain(a, e, e, e);
}

Jet2 log(const Jet2& a) {
  const double l = checked_log(a.value());
  const double inv = 1.0 / a.value();
  return chain(a, l, inv, -inv * inv);
}

Jet2 sqrt(const Jet2& a) {
  const double s = checked_sqrt(a.value());
  if (s == 0.0) throw EvalError("sqrt", "derivative undefined at 0");
  return chain(a, s, 0.5 / s, -0.25 / (s * a.value()));
}

namespace {

void pow_derivatives(double a, double p, double& f0, double& f1, double& f2) {
  f0 = checked_pow(a, p);
  f1 = p == 0.0 ? 0.0 : p * std::pow(a, p - 1.0);
  f2 = (p == 0.0 || p == 1.0) ? 0.0 : p * (p - 1.0) * std::pow(a, p - 2.0);
  if (!std::isfinite(f1) || !std::isfinite(f2)) {
    throw EvalError("pow", "derivative undefined at base " + format_value(a));
  }
}

}  // namespace

Jet1 pow(const Jet1& a, double p) {
  double f0, f1, f2;
  pow_derivatives(a.value(), p, f0, f1, f2);
  return chain(a, f0, f1);
}

Jet2 pow(const Jet2& a, double p) {
  double f0, f1, f2;
  pow_derivatives(a.value(), p, f0, f1, f2);
  return chain(a, f0, f1, f2);
}

// ---------------------------------------------------------------- helpers

Jet1 truncate(const Jet2& a) { return Jet1(a.value(), a.grad()); }

Jet1 partial(const Jet2& a, Index k) {
  if (k < 0 || k >= a.dim()) throw std::out_of_range("partial index out of range");
  return Jet1(a.grad()[k], a.hess().row(k).transpose());
}

Jet2 embed(const Jet2& a, Index dim) {
  if (dim < a.dim()) throw std::invalid_argument("embed into a smaller layout");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  g.head(a.dim()) = a.grad();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  h.topLeftCorner(a.dim(), a.dim()) = a.hess();
  return Jet2(a.value(), std::move(g), std::move(h));
}

Jet1 embed(const Jet1& a, Index dim) {
  if (dim < a.dim()) throw std::invalid_argument("embed into a smaller layout");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  g.head(a.dim()) = a.grad();
  return Jet1(a.value(), std::move(g));
}

Jet2 compose(const Jet2& outer, std::span<const Jet2> inner) {
  const Index k = static_cast<Index>(inner.size());
  require_same_dim(outer.dim(), k);
  if (k == 0) return outer;
  const Index d = inner.front().dim();
  Eigen::MatrixXd jac(k, d);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (Index j = 0; j < k; ++j) {
    require_same_dim(inner[j].dim(), d);
    jac.row(j) = inner[j].grad().transpose();
    h += inner[j].hess() * outer.grad()[j];
  }
  h += jac.transpose() * outer.hess() * jac;
  return Jet2(outer.value(), jac.transpose() * outer.grad(), std::move(h));
}

Jet1 compose(const Jet1& outer, std::span<const Jet1> inner) {
  const Index k = static_cast<Index>(inner.size());
  require_same_dim(outer.dim(), k);
  if (k == 0) return outer;
  const Index d = inner.front().dim();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  for (Index j = 0; j < k; ++j) {
    require_same_dim(inner[j].dim(), d);
    g += inner[j].grad() * outer.grad()[j];
  }
  return Jet1(outer.value(), std::move(g));
}

std::vector<Jet2> solve(std::span<const Jet2> a, std::span<const Jet2> b,
                        double max_condition) {
  const std::size_t n = b.size();
  if (a.size() != n * n) throw std::invalid_argument("solve: matrix is not square");
  if (n == 0) return {};

  Eigen::MatrixXd values(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) values(r, c) = a[r * n + c].value();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(values);
  const auto& sv = svd.singularValues();
  const double cond = sv[static_cast<Index>(n) - 1] > 0.0
                          ? sv[0] / sv[static_cast<Index>(n) - 1]
                          : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition)) throw DegenerateError("solve", cond);

  std::vector<Jet2> m(a.begin(), a.end());
  std::vector<Jet2> x(b.begin(), b.end());
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(m[r * n + k].value()) > std::abs(m[pivot * n + k].value())) pivot = r;
    if (pivot != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m[k * n + c], m[pivot * n + c]);
      std::swap(x[k], x[pivot]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      if (m[r * n + k].value() == 0.0 && m[r * n + k].grad().isZero(0.0) &&
          m[r * n + k].hess().isZero(0.0))
        continue;
      const Jet2 factor = m[r * n + k] / m[k * n + k];
      for (std::size_t c = k + 1; c < n; ++c) m[r * n + c] -= factor * m[k * n + c];
      x[r] -= factor * x[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    for (std::size_t c = k + 1; c < n; ++c) x[k] -= m[k * n + c] * x[c];
    x[k] = x[k] / m[k * n + k];
  }
  return x;
}

// ---------------------------------------------------------------- context

EvalContext::EvalContext(std::vector<std::string> names, std::vector<double> point)
    : names_(std::move(names)), point_(std::move(point)) {
  if (names_.size() != point_.size()) {
    throw std::invalid_argument("evaluation context: point length does not match names");
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) {
      throw std::invalid_argument("evaluation context: duplicate variable '" + n + "'");
    }
  }
}

Index EvalContext::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<Index>(i);
  return -1;
}

Jet2 seed(const EvalContext& ctx, Index index) {
  if (index < 0 || index >= ctx.dim()) throw std::out_of_range("seed index out of range");
  return Jet2::variable(ctx.point()[static_cast<std::size_t>(index)], ctx.dim(), index);
}

}  // namespace varsode
