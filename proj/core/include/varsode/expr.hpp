#pragma once

#include "varsode/jets.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace varsode {

enum class BinaryOp { add, sub, mul, div };
enum class Func { sin, cos, exp, log, sqrt };

std::string_view func_name(Func f);

/// Immutable expression tree with shared nodes.
///
/// The static constructors build nodes verbatim. The free operators and
/// functions below fold numeric subtrees and drop additive zeros and
/// multiplicative ones, which keeps symbolic derivatives small.
class Expr {
 public:
  struct Number;
  struct Variable;
  struct Negate;
  struct Binary;
  struct Power;
  struct Call;
  using Node = std::variant<Number, Variable, Negate, Binary, Power, Call>;

  /// The number 0.
  Expr();
  Expr(double value);  // NOLINT(google-explicit-constructor)

  static Expr number(double value);
  static Expr variable(std::string name);
  static Expr negate(Expr operand);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr power(Expr base, double exponent);
  static Expr call(Func func, Expr arg);

  const Node& node() const;

  /// True for a number literal; stores its value when `value` is non-null.
  bool is_number(double* value = nullptr) const;
  bool is_zero() const;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Expr::Number {
  double value;
};
struct Expr::Variable {
  std::string name;
};
struct Expr::Negate {
  Expr operand;
};
struct Expr::Binary {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
};
struct Expr::Power {
  Expr base;
  double exponent;
};
struct Expr::Call {
  Func func;
  Expr arg;
};

inline const Expr::Node& Expr::node() const { return *node_; }

/// Structural equality.
bool operator==(const Expr& a, const Expr& b);

Expr operator-(const Expr& a);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& base, double exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, std::string expected, std::string excerpt);

  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }
  /// The source line containing the offset.
  const std::string& excerpt() const noexcept { return excerpt_; }

 private:
  std::size_t offset_;
  std::string expected_;
  std::string excerpt_;
};

/// Raised when an expression references a name missing from the layout.
class UnboundVariable : public std::invalid_argument {
 public:
  explicit UnboundVariable(std::string name);

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Parses an expression. Precedence from low to high: + -, * /, unary
/// minus, ^ (right associative, literal exponent), atoms.
Expr parse(std::string_view source);

/// Canonical text form; parse(to_string(e)) == e for parsed trees.
std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

std::set<std::string> free_vars(const Expr& e);

/// Symbolic partial derivative.
Expr diff(const Expr& e, std::string_view variable);

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& bindings);

/// Postfix form of an expression bound to an ordered variable layout.
class Program {
 public:
  Program() = default;
  /// Throws UnboundVariable when `e` references a name outside `variables`.
  Program(const Expr& e, std::span<const std::string> variables);

  std::size_t arity() const { return arity_; }
  /// True when the program is a single number literal.
  bool is_constant(double* value = nullptr) const;

  double eval(std::span<const double> args) const;
  /// `dim` is the jet dimension for programs without arguments; by default
  /// it is taken from the first argument.
  Jet1 eval(std::span<const Jet1> args, Index dim = -1) const;
  Jet2 eval(std::span<const Jet2> args, Index dim = -1) const;

 private:
  enum class Op : std::uint8_t { number, load, neg, add, sub, mul, div, pow, sin, cos, exp, log, sqrt };
  struct Instr {
    Op op;
    std::uint32_t index;
    double number;
  };

  template <class T>
  T run(std::span<const T> args, Index dim) const;

  std::vector<Instr> code_;
  std::size_t arity_ = 0;
};

/// Evaluates an expression as a jet in all context variables.
Jet2 eval(const Expr& e, const EvalContext& ctx);

}  // namespace varsode
