#include "varsode/field.hpp"

#include <algorithm>
#include <cmath>

namespace varsode {

class ScalarField::Impl {
 public:
  virtual ~Impl() = default;
  virtual std::size_t arity() const = 0;
  virtual bool has_jet() const { return true; }
  virtual const Expr* expr() const { return nullptr; }
  virtual const std::vector<std::string>& variables() const {
    static const std::vector<std::string> none;
    return none;
  }
  virtual double value(std::span<const double> at) const = 0;
  virtual Jet1 jet1(std::span<const double> at) const = 0;
  virtual Jet2 jet(std::span<const double> at) const = 0;
  virtual Jet2 jet(std::span<const Jet2>) const {
    throw std::logic_error("field does not support composed evaluation");
  }
  virtual Jet1 jet1(std::span<const Jet1>) const {
    throw std::logic_error("field does not support composed evaluation");
  }
};

namespace {

void check_arity(std::size_t expected, std::size_t got) {
  if (expected != got) throw std::invalid_argument("field evaluated with wrong number of coordinates");
}

class SymbolicImpl final : public ScalarField::Impl {
 public:
  SymbolicImpl(Expr e, std::vector<std::string> vars)
      : expr_(std::move(e)), vars_(std::move(vars)), program_(expr_, vars_) {
    program_.is_constant(&constant_);
    is_constant_ = program_.is_constant();
  }

  std::size_t arity() const override { return vars_.size(); }
  const Expr* expr() const override { return &expr_; }
  const std::vector<std::string>& variables() const override { return vars_; }

  double value(std::span<const double> at) const override {
    check_arity(vars_.size(), at.size());
    return program_.eval(at);
  }

  Jet1 jet1(std::span<const double> at) const override {
    check_arity(vars_.size(), at.size());
    const Index d = static_cast<Index>(at.size());
    if (is_constant_) return Jet1::constant(constant_, d);
    std::vector<Jet1> args;
    args.reserve(at.size());
    for (Index i = 0; i < d; ++i) args.push_back(Jet1::variable(at[i], d, i));
    return program_.eval(std::span<const Jet1>(args));
  }

  Jet2 jet(std::span<const double> at) const override {
    check_arity(vars_.size(), at.size());
    const Index d = static_cast<Index>(at.size());
    if (is_constant_) return Jet2::constant(constant_, d);
    std::vector<Jet2> args;
    args.reserve(at.size());
    for (Index i = 0; i < d; ++i) args.push_back(Jet2::variable(at[i], d, i));
    return program_.eval(std::span<const Jet2>(args));
  }

  Jet2 jet(std::span<const Jet2> args) const override {
    check_arity(vars_.size(), args.size());
    if (is_constant_) return Jet2::constant(constant_, args.empty() ? 0 : args.front().dim());
    return program_.eval(args);
  }

  Jet1 jet1(std::span<const Jet1> args) const override {
    check_arity(vars_.size(), args.size());
    if (is_constant_) return Jet1::constant(constant_, args.empty() ? 0 : args.front().dim());
    return program_.eval(args);
  }

 private:
  Expr expr_;
  std::vector<std::string> vars_;
  Program program_;
  bool is_constant_ = false;
  double constant_ = 0.0;
};

class JetImpl final : public ScalarField::Impl {
 public:
  JetImpl(std::size_t arity, ScalarField::JetFn fn) : arity_(arity), fn_(std::move(fn)) {}
  std::size_t arity() const override { return arity_; }
  double value(std::span<const double> at) const override { return jet(at).value(); }
  Jet1 jet1(std::span<const double> at) const override { return truncate(jet(at)); }
  Jet2 jet(std::span<const double> at) const override {
    check_arity(arity_, at.size());
    return fn_(at);
  }

 private:
  std::size_t arity_;
  ScalarField::JetFn fn_;
};

class ValueImpl final : public ScalarField::Impl {
 public:
  ValueImpl(std::size_t arity, ScalarField::ValueFn fn) : arity_(arity), fn_(std::move(fn)) {}
  std::size_t arity() const override { return arity_; }
  bool has_jet() const override { return false; }
  double value(std::span<const double> at) const override {
    check_arity(arity_, at.size());
    return fn_(at);
  }
  Jet1 jet1(std::span<const double>) const override {
    throw std::logic_error("field has no derivatives");
  }
  Jet2 jet(std::span<const double>) const override {
    throw std::logic_error("field has no derivatives");
  }

 private:
  std::size_t arity_;
  ScalarField::ValueFn fn_;
};

}  // namespace

ScalarField::ScalarField() : ScalarField(Expr(0.0), {}) {}

ScalarField::ScalarField(Expr e, std::vector<std::string> variables)
    : impl_(std::make_shared<SymbolicImpl>(std::move(e), std::move(variables))) {}

ScalarField ScalarField::from_jet(std::size_t arity, JetFn fn) {
  return ScalarField(std::make_shared<JetImpl>(arity, std::move(fn)));
}

ScalarField ScalarField::from_value(std::size_t arity, ValueFn fn) {
  return ScalarField(std::make_shared<ValueImpl>(arity, std::move(fn)));
}

std::size_t ScalarField::arity() const { return impl_->arity(); }
bool ScalarField::has_jet() const { return impl_->has_jet(); }
const Expr* ScalarField::expr() const { return impl_->expr(); }
const std::vector<std::string>& ScalarField::variables() const { return impl_->variables(); }
double ScalarField::value(std::span<const double> at) const { return impl_->value(at); }
Jet1 ScalarField::jet1(std::span<const double> at) const { return impl_->jet1(at); }
Jet2 ScalarField::jet(std::span<const double> at) const { return impl_->jet(at); }
Jet2 ScalarField::jet(std::span<const Jet2> args) const { return impl_->jet(args); }
Jet1 ScalarField::jet1(std::span<const Jet1> args) const { return impl_->jet1(args); }

// ---------------------------------------------------------------- FieldVector

FieldVector::FieldVector(std::vector<ScalarField> components)
    : size_(components.size()),
      arity_(components.empty() ? 0 : components.front().arity()),
      components_(std::move(components)) {
  for (const auto& c : components_) check_arity(arity_, c.arity());
}

FieldVector::FieldVector(const std::vector<Expr>& exprs, const std::vector<std::string>& variables)
    : size_(exprs.size()), arity_(variables.size()) {
  components_.reserve(exprs.size());
  for (const auto& e : exprs) components_.emplace_back(e, variables);
}

FieldVector FieldVector::from_batch(std::size_t size, std::size_t arity, BatchFn fn) {
  FieldVector v;
  v.size_ = size;
  v.arity_ = arity;
  v.batch_ = std::move(fn);
  return v;
}

bool FieldVector::symbolic() const {
  if (batch_) return false;
  return std::all_of(components_.begin(), components_.end(),
                     [](const ScalarField& f) { return f.expr() != nullptr; });
}

std::vector<Expr> FieldVector::exprs() const {
  if (!symbolic()) throw std::logic_error("field vector is not symbolic");
  std::vector<Expr> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(*c.expr());
  return out;
}

std::vector<Jet2> FieldVector::jets(std::span<const double> at) const {
  check_arity(arity_, at.size());
  if (batch_) {
    std::vector<Jet2> out = batch_(at);
    if (out.size() != size_) throw std::logic_error("batch field returned wrong component count");
    return out;
  }
  std::vector<Jet2> out;
  out.reserve(size_);
  for (const auto& c : components_) out.push_back(c.jet(at));
  return out;
}

std::vector<double> FieldVector::values(std::span<const double> at) const {
  check_arity(arity_, at.size());
  std::vector<double> out;
  out.reserve(size_);
  if (batch_) {
    for (const auto& j : jets(at)) out.push_back(j.value());
    return out;
  }
  for (const auto& c : components_) out.push_back(c.value(at));
  return out;
}

ScalarField FieldVector::component(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("field component out of range");
  if (!batch_) return components_[i];
  BatchFn fn = batch_;
  return ScalarField::from_jet(arity_, [fn, i](std::span<const double> at) { return fn(at)[i]; });
}

// ---------------------------------------------------------------- fd_check

double fd_check(const ScalarField& field, const EvalContext& ctx, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_check: step must be positive");
  if (static_cast<std::size_t>(ctx.dim()) != field.arity()) {
    throw std::invalid_argument("fd_check: context does not match field arity");
  }
  const std::vector<double>& x0 = ctx.point();
  const Jet2 j = field.jet(std::span<const double>(x0));
  const Index d = ctx.dim();
  double dev = 0.0;
  std::vector<double> xp = x0, xm = x0;
  for (Index i = 0; i < d; ++i) {
    const auto k = static_cast<std::size_t>(i);
    xp[k] = x0[k] + h;
    xm[k] = x0[k] - h;
    const double g = (field.value(std::span<const double>(xp)) -
                      field.value(std::span<const double>(xm))) / (2.0 * h);
    dev = std::max(dev, std::abs(g - j.grad()[i]));
    const Jet1 jp = field.jet1(std::span<const double>(xp));
    const Jet1 jm = field.jet1(std::span<const double>(xm));
    const Eigen::VectorXd row = (jp.grad() - jm.grad()) / (2.0 * h);
    dev = std::max(dev, (row - j.hess().row(i).transpose()).cwiseAbs().maxCoeff());
    xp[k] = x0[k];
    xm[k] = x0[k];
  }
  return dev;
}

}  // namespace varsode
