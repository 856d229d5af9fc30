#pragma once

#include "varsode/expr.hpp"
#include "varsode/jets.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace varsode {

/// Scalar field over an ordered coordinate layout. Either symbolic (an
/// expression compiled against variable names) or computed by a callback.
class ScalarField {
 public:
  using JetFn = std::function<Jet2(std::span<const double>)>;
  using ValueFn = std::function<double(std::span<const double>)>;

  /// The zero field of arity 0.
  ScalarField();
  /// Throws UnboundVariable when `e` uses a name outside `variables`.
  ScalarField(Expr e, std::vector<std::string> variables);

  static ScalarField from_jet(std::size_t arity, JetFn fn);
  /// A field without derivatives; jet() and jet1() throw std::logic_error.
  static ScalarField from_value(std::size_t arity, ValueFn fn);

  std::size_t arity() const;
  bool has_jet() const;
  /// The expression, or null for computed fields.
  const Expr* expr() const;
  /// Variable names of a symbolic field; empty for computed fields.
  const std::vector<std::string>& variables() const;

  double value(std::span<const double> at) const;
  Jet1 jet1(std::span<const double> at) const;
  Jet2 jet(std::span<const double> at) const;

  /// Evaluates with jets seeded by the caller, e.g. composed coordinates.
  /// Only symbolic fields support this.
  Jet2 jet(std::span<const Jet2> args) const;
  Jet1 jet1(std::span<const Jet1> args) const;

  class Impl;

 private:
  explicit ScalarField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// An ordered family of scalar fields over one layout, optionally evaluated
/// in a single batch.
class FieldVector {
 public:
  using BatchFn = std::function<std::vector<Jet2>(std::span<const double>)>;

  FieldVector() = default;
  explicit FieldVector(std::vector<ScalarField> components);
  FieldVector(const std::vector<Expr>& exprs, const std::vector<std::string>& variables);

  static FieldVector from_batch(std::size_t size, std::size_t arity, BatchFn fn);

  std::size_t size() const { return size_; }
  std::size_t arity() const { return arity_; }
  /// True when every component carries an expression.
  bool symbolic() const;
  std::vector<Expr> exprs() const;

  std::vector<Jet2> jets(std::span<const double> at) const;
  std::vector<double> values(std::span<const double> at) const;
  ScalarField component(std::size_t i) const;

 private:
  std::size_t size_ = 0;
  std::size_t arity_ = 0;
  std::vector<ScalarField> components_;
  BatchFn batch_;
};

/// Largest deviation between the field's jet and central differences with
/// step h: gradient entries against differences of values, Hessian entries
/// against differences of first-order jets.
double fd_check(const ScalarField& field, const EvalContext& ctx, double h);

}  // namespace varsode
