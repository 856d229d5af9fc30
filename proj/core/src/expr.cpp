#include "varsode/expr.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <unordered_map>

namespace varsode {

std::string_view func_name(Func f) {
  switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sqrt: return "sqrt";
  }
  return "?";
}

// ---------------------------------------------------------------- nodes

Expr::Expr() : Expr(0.0) {}
Expr::Expr(double value) : node_(std::make_shared<const Node>(Number{value})) {}

Expr Expr::number(double value) { return Expr(value); }

Expr Expr::variable(std::string name) {
  return Expr(std::make_shared<const Node>(Variable{std::move(name)}));
}

Expr Expr::negate(Expr operand) {
  return Expr(std::make_shared<const Node>(Negate{std::move(operand)}));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const Node>(Binary{op, std::move(lhs), std::move(rhs)}));
}

Expr Expr::power(Expr base, double exponent) {
  return Expr(std::make_shared<const Node>(Power{std::move(base), exponent}));
}

Expr Expr::call(Func func, Expr arg) {
  return Expr(std::make_shared<const Node>(Call{func, std::move(arg)}));
}

bool Expr::is_number(double* value) const {
  const auto* n = std::get_if<Number>(node_.get());
  if (n && value) *value = n->value;
  return n != nullptr;
}

bool Expr::is_zero() const {
  double v;
  return is_number(&v) && v == 0.0;
}

bool operator==(const Expr& a, const Expr& b) {
  if (&a.node() == &b.node()) return true;
  if (a.node().index() != b.node().index()) return false;
  return std::visit(
      [&](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const auto& nb = std::get<T>(b.node());
        if constexpr (std::is_same_v<T, Expr::Number>) {
          return na.value == nb.value;
        } else if constexpr (std::is_same_v<T, Expr::Variable>) {
          return na.name == nb.name;
        } else if constexpr (std::is_same_v<T, Expr::Negate>) {
          return na.operand == nb.operand;
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          return na.op == nb.op && na.lhs == nb.lhs && na.rhs == nb.rhs;
        } else if constexpr (std::is_same_v<T, Expr::Power>) {
          return na.exponent == nb.exponent && na.base == nb.base;
        } else {
          return na.func == nb.func && na.arg == nb.arg;
        }
      },
      a.node());
}

// ---------------------------------------------------------------- folding builders

namespace {

bool is_one(const Expr& e) {
  double v;
  return e.is_number(&v) && v == 1.0;
}

double apply_func(Func f, double x) {
  switch (f) {
    case Func::sin: return std::sin(x);
    case Func::cos: return std::cos(x);
    case Func::exp: return std::exp(x);
    case Func::log: return checked_log(x);
    case Func::sqrt: return checked_sqrt(x);
  }
  return x;
}

}  // namespace

Expr operator-(const Expr& a) {
  double v;
  if (a.is_number(&v)) return Expr(-v);
  if (const auto* n = std::get_if<Expr::Negate>(&a.node())) return n->operand;
  return Expr::negate(a);
}

Expr operator+(const Expr& a, const Expr& b) {
  double va, vb;
  const bool na = a.is_number(&va), nb = b.is_number(&vb);
  if (na && nb) return Expr(va + vb);
  if (na && va == 0.0) return b;
  if (nb && vb == 0.0) return a;
  return Expr::binary(BinaryOp::add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  double va, vb;
  const bool na = a.is_number(&va), nb = b.is_number(&vb);
  if (na && nb) return Expr(va - vb);
  if (na && va == 0.0) return -b;
  if (nb && vb == 0.0) return a;
  return Expr::binary(BinaryOp::sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  double va, vb;
  const bool na = a.is_number(&va), nb = b.is_number(&vb);
  if (na && nb) return Expr(va * vb);
  if ((na && va == 0.0) || (nb && vb == 0.0)) return Expr(0.0);
  if (na && va == 1.0) return b;
  if (nb && vb == 1.0) return a;
  if (na && va == -1.0) return -b;
  if (nb && vb == -1.0) return -a;
  return Expr::binary(BinaryOp::mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  double va, vb;
  const bool na = a.is_number(&va), nb = b.is_number(&vb);
  if (na && nb && vb != 0.0) return Expr(va / vb);
  if (na && va == 0.0) return Expr(0.0);
  if (is_one(b)) return a;
  return Expr::binary(BinaryOp::div, a, b);
}

Expr pow(const Expr& base, double exponent) {
  double v;
  if (exponent == 0.0) return Expr(1.0);
  if (exponent == 1.0) return base;
  if (base.is_number(&v)) {
    const double r = std::pow(v, exponent);
    if (std::isfinite(r)) return Expr(r);
  }
  return Expr::power(base, exponent);
}

namespace {

Expr fold_call(Func f, const Expr& a) {
  double v;
  if (a.is_number(&v)) {
    try {
      const double r = apply_func(f, v);
      if (std::isfinite(r)) return Expr(r);
    } catch (const EvalError&) {
    }
  }
  return Expr::call(f, a);
}

}  // namespace

Expr sin(const Expr& a) { return fold_call(Func::sin, a); }
Expr cos(const Expr& a) { return fold_call(Func::cos, a); }
Expr exp(const Expr& a) { return fold_call(Func::exp, a); }
Expr log(const Expr& a) { return fold_call(Func::log, a); }
Expr sqrt(const Expr& a) { return fold_call(Func::sqrt, a); }

// ---------------------------------------------------------------- errors

ParseError::ParseError(std::size_t offset, std::string expected, std::string excerpt)
    : std::runtime_error("parse error at offset " + std::to_string(offset) + ": expected " +
                         expected + " in '" + excerpt + "'"),
      offset_(offset),
      expected_(std::move(expected)),
      excerpt_(std::move(excerpt)) {}

UnboundVariable::UnboundVariable(std::string name)
    : std::invalid_argument("unbound variable '" + name + "'"), name_(std::move(name)) {}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse_all() {
    Expr e = parse_additive();
    skip_ws();
    if (pos_ != src_.size()) fail("operator or end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) const {
    const std::size_t nl = src_.substr(0, pos_).rfind('\n');
    const std::size_t begin = nl == std::string_view::npos ? 0 : nl + 1;
    std::size_t end = src_.find('\n', pos_);
    if (end == std::string_view::npos) end = src_.size();
    throw ParseError(pos_, expected, std::string(src_.substr(begin, end - begin)));
  }

  void skip_ws() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(BinaryOp::add, lhs, parse_multiplicative());
      } else if (accept('-')) {
        lhs = Expr::binary(BinaryOp::sub, lhs, parse_multiplicative());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(BinaryOp::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expr::binary(BinaryOp::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::negate(parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (accept('^')) return Expr::power(base, parse_exponent());
    return base;
  }

  double parse_exponent() {
    const double sign = accept('-') ? -1.0 : 1.0;
    skip_ws();
    double v;
    if (!scan_number(v)) fail("numeric literal exponent");
    if (accept('^')) v = std::pow(v, parse_exponent());
    return sign * v;
  }

  bool scan_number(double& out) {
    const std::size_t start = pos_;
    std::size_t p = pos_;
    auto digits = [&] {
      const std::size_t s = p;
      while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
      return p - s;
    };
    std::size_t mantissa = digits();
    if (p < src_.size() && src_[p] == '.') {
      ++p;
      mantissa += digits();
    }
    if (mantissa == 0) return false;
    if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
      p = q;
      if (digits() == 0) {
        pos_ = q;
        fail("exponent digits");
      }
    }
    const auto res = std::from_chars(src_.data() + start, src_.data() + p, out);
    if (res.ec != std::errc() || res.ptr != src_.data() + p) {
      fail("finite number");
    }
    pos_ = p;
    return true;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("number, variable, function call or '('");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_additive();
      if (!accept(')')) fail("')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v;
      if (!scan_number(v)) fail("number");
      return Expr::number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      std::string name(src_.substr(start, pos_ - start));
      const std::size_t after = pos_;
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') {
        static const std::pair<std::string_view, Func> known[] = {
            {"sin", Func::sin}, {"cos", Func::cos}, {"exp", Func::exp},
            {"log", Func::log}, {"sqrt", Func::sqrt}};
        for (const auto& [fname, f] : known) {
          if (name == fname) {
            ++pos_;
            Expr arg = parse_additive();
            if (!accept(')')) fail("')'");
            return Expr::call(f, arg);
          }
        }
        pos_ = start;
        fail("known function (sin, cos, exp, log, sqrt)");
      }
      pos_ = after;
      return Expr::variable(std::move(name));
    }
    fail("number, variable, function call or '('");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view source) { return Parser(source).parse_all(); }

// ---------------------------------------------------------------- printer

namespace {

void print_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

bool is_atom(const Expr& e) {
  double v;
  if (e.is_number(&v)) return !std::signbit(v);
  return std::holds_alternative<Expr::Variable>(e.node()) ||
         std::holds_alternative<Expr::Call>(e.node());
}

void print(std::string& out, const Expr& e, bool top) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Expr::Number>) {
          print_number(out, n.value);
        } else if constexpr (std::is_same_v<T, Expr::Variable>) {
          out += n.name;
        } else if constexpr (std::is_same_v<T, Expr::Negate>) {
          out += '-';
          double v;
          const bool wrap = n.operand.is_number(&v) && std::signbit(v);
          if (wrap) out += '(';
          print(out, n.operand, false);
          if (wrap) out += ')';
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          static constexpr const char* ops[] = {" + ", " - ", " * ", " / "};
          if (!top) out += '(';
          print(out, n.lhs, false);
          out += ops[static_cast<int>(n.op)];
          print(out, n.rhs, false);
          if (!top) out += ')';
        } else if constexpr (std::is_same_v<T, Expr::Power>) {
          const bool wrap = !is_atom(n.base) && !std::holds_alternative<Expr::Binary>(n.base.node());
          if (wrap) out += '(';
          print(out, n.base, false);
          if (wrap) out += ')';
          out += '^';
          print_number(out, n.exponent);
        } else {
          out += func_name(n.func);
          out += '(';
          print(out, n.arg, true);
          out += ')';
        }
      },
      e.node());
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(out, e, true);
  return out;
}

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

// ---------------------------------------------------------------- analysis

namespace {

void collect(const Expr& e, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Expr::Variable>) {
          out.insert(n.name);
        } else if constexpr (std::is_same_v<T, Expr::Negate>) {
          collect(n.operand, out);
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          collect(n.lhs, out);
          collect(n.rhs, out);
        } else if constexpr (std::is_same_v<T, Expr::Power>) {
          collect(n.base, out);
        } else if constexpr (std::is_same_v<T, Expr::Call>) {
          collect(n.arg, out);
        }
      },
      e.node());
}

}  // namespace

std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect(e, out);
  return out;
}

Expr diff(const Expr& e, std::string_view var) {
  return std::visit(
      [&](const auto& n) -> Expr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Expr::Number>) {
          return Expr(0.0);
        } else if constexpr (std::is_same_v<T, Expr::Variable>) {
          return Expr(n.name == var ? 1.0 : 0.0);
        } else if constexpr (std::is_same_v<T, Expr::Negate>) {
          return -diff(n.operand, var);
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          const Expr da = diff(n.lhs, var);
          const Expr db = diff(n.rhs, var);
          switch (n.op) {
            case BinaryOp::add: return da + db;
            case BinaryOp::sub: return da - db;
            case BinaryOp::mul: return da * n.rhs + n.lhs * db;
            case BinaryOp::div:
              if (db.is_zero()) return da / n.rhs;
              return (da * n.rhs - n.lhs * db) / pow(n.rhs, 2.0);
          }
          return Expr(0.0);
        } else if constexpr (std::is_same_v<T, Expr::Power>) {
          const Expr db = diff(n.base, var);
          if (db.is_zero()) return Expr(0.0);
          return Expr(n.exponent) * pow(n.base, n.exponent - 1.0) * db;
        } else {
          const Expr da = diff(n.arg, var);
          if (da.is_zero()) return Expr(0.0);
          switch (n.func) {
            case Func::sin: return cos(n.arg) * da;
            case Func::cos: return -(sin(n.arg) * da);
            case Func::exp: return exp(n.arg) * da;
            case Func::log: return da / n.arg;
            case Func::sqrt: return da / (Expr(2.0) * sqrt(n.arg));
          }
          return Expr(0.0);
        }
      },
      e.node());
}

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& bindings) {
  return std::visit(
      [&](const auto& n) -> Expr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Expr::Number>) {
          return e;
        } else if constexpr (std::is_same_v<T, Expr::Variable>) {
          const auto it = bindings.find(n.name);
          return it == bindings.end() ? e : it->second;
        } else if constexpr (std::is_same_v<T, Expr::Negate>) {
          return -substitute(n.operand, bindings);
        } else if constexpr (std::is_same_v<T, Expr::Binary>) {
          const Expr a = substitute(n.lhs, bindings);
          const Expr b = substitute(n.rhs, bindings);
          switch (n.op) {
            case BinaryOp::add: return a + b;
            case BinaryOp::sub: return a - b;
            case BinaryOp::mul: return a * b;
            case BinaryOp::div: return a / b;
          }
          return e;
        } else if constexpr (std::is_same_v<T, Expr::Power>) {
          return pow(substitute(n.base, bindings), n.exponent);
        } else {
          return fold_call(n.func, substitute(n.arg, bindings));
        }
      },
      e.node());
}

// ---------------------------------------------------------------- program

Program::Program(const Expr& e, std::span<const std::string> variables)
    : arity_(variables.size()) {
  std::unordered_map<std::string_view, std::uint32_t> index;
  for (std::size_t i = 0; i < variables.size(); ++i)
    index.emplace(variables[i], static_cast<std::uint32_t>(i));

  auto emit = [&](auto&& self, const Expr& x) -> void {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Expr::Number>) {
            code_.push_back({Op::number, 0, n.value});
          } else if constexpr (std::is_same_v<T, Expr::Variable>) {
            const auto it = index.find(n.name);
            if (it == index.end()) throw UnboundVariable(n.name);
            code_.push_back({Op::load, it->second, 0.0});
          } else if constexpr (std::is_same_v<T, Expr::Negate>) {
            self(self, n.operand);
            code_.push_back({Op::neg, 0, 0.0});
          } else if constexpr (std::is_same_v<T, Expr::Binary>) {
            self(self, n.lhs);
            self(self, n.rhs);
            static constexpr Op ops[] = {Op::add, Op::sub, Op::mul, Op::div};
            code_.push_back({ops[static_cast<int>(n.op)], 0, 0.0});
          } else if constexpr (std::is_same_v<T, Expr::Power>) {
            self(self, n.base);
            code_.push_back({Op::pow, 0, n.exponent});
          } else {
            self(self, n.arg);
            static constexpr Op ops[] = {Op::sin, Op::cos, Op::exp, Op::log, Op::sqrt};
            code_.push_back({ops[static_cast<int>(n.func)], 0, 0.0});
          }
        },
        x.node());
  };
  emit(emit, e);
}

bool Program::is_constant(double* value) const {
  if (code_.size() != 1 || code_[0].op != Op::number) return false;
  if (value) *value = code_[0].number;
  return true;
}

namespace {

template <class T>
T make_constant(double v, Index dim) {
  if constexpr (std::is_same_v<T, double>) {
    (void)dim;
    return v;
  } else {
    return T::constant(v, dim);
  }
}

template <class T>
double value_of(const T& t) {
  if constexpr (std::is_same_v<T, double>) {
    return t;
  } else {
    return t.value();
  }
}

}  // namespace

template <class T>
T Program::run(std::span<const T> args, Index dim) const {
  if (args.size() != arity_) throw std::invalid_argument("program arity mismatch");
  std::vector<T> stack;
  stack.reserve(code_.size());
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::number: stack.push_back(make_constant<T>(in.number, dim)); continue;
      case Op::load: stack.push_back(args[in.index]); continue;
      default: break;
    }
    if (in.op >= Op::add && in.op <= Op::div) {
      T rhs = std::move(stack.back());
      stack.pop_back();
      T& lhs = stack.back();
      switch (in.op) {
        case Op::add: lhs = lhs + rhs; break;
        case Op::sub: lhs = lhs - rhs; break;
        case Op::mul: lhs = lhs * rhs; break;
        default:
          if (value_of(rhs) == 0.0) throw EvalError("div", "division by zero");
          lhs = lhs / rhs;
          break;
      }
      continue;
    }
    T& a = stack.back();
    using std::cos;
    using std::exp;
    using std::sin;
    switch (in.op) {
      case Op::neg: a = -a; break;
      case Op::pow:
        if constexpr (std::is_same_v<T, double>) {
          a = checked_pow(a, in.number);
        } else {
          a = pow(a, in.number);
        }
        break;
      case Op::sin: a = sin(a); break;
      case Op::cos: a = cos(a); break;
      case Op::exp: a = exp(a); break;
      case Op::log:
        if constexpr (std::is_same_v<T, double>) {
          a = checked_log(a);
        } else {
          a = log(a);
        }
        break;
      case Op::sqrt:
        if constexpr (std::is_same_v<T, double>) {
          a = checked_sqrt(a);
        } else {
          a = sqrt(a);
        }
        break;
      default: break;
    }
  }
  T result = std::move(stack.back());
  if (!std::isfinite(value_of(result))) throw EvalError("eval", "non-finite result");
  return result;
}

double Program::eval(std::span<const double> args) const { return run<double>(args, 0); }

Jet1 Program::eval(std::span<const Jet1> args, Index dim) const {
  return run<Jet1>(args, dim >= 0 ? dim : (args.empty() ? 0 : args.front().dim()));
}

Jet2 Program::eval(std::span<const Jet2> args, Index dim) const {
  return run<Jet2>(args, dim >= 0 ? dim : (args.empty() ? 0 : args.front().dim()));
}

Jet2 eval(const Expr& e, const EvalContext& ctx) {
  const Program program(e, ctx.names());
  std::vector<Jet2> args;
  args.reserve(ctx.names().size());
  for (Index i = 0; i < ctx.dim(); ++i) args.push_back(seed(ctx, i));
  return program.eval(std::span<const Jet2>(args));
}

}  // namespace varsode
