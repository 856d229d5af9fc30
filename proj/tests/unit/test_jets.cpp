#include <doctest.h>

#include "varsode/field.hpp"
#include "varsode/jets.hpp"

#include <cmath>
#include <random>

using namespace varsode;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("seed produces coordinate functions") {
  const EvalContext ctx({"a", "b"}, {3.0, 5.0});
  const Jet2 a = seed(ctx, 0);
  CHECK(a.value() == 3.0);
  CHECK(a.grad() == Eigen::Vector2d(1.0, 0.0));
  CHECK(a.hess().isZero(0.0));
  const Jet2 b = seed(ctx, 1);
  CHECK(b.value() == 5.0);
  CHECK(b.grad() == Eigen::Vector2d(0.0, 1.0));

  const EvalContext one({"t"}, {0.0});
  CHECK(seed(one, 0).grad()[0] == 1.0);
  CHECK_THROWS_AS(seed(one, 1), std::out_of_range);
}

TEST_CASE("context rejects duplicate names and length mismatch") {
  CHECK_THROWS_AS(EvalContext({"a", "a"}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(EvalContext({"a"}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("product and unary rules") {
  const Jet2 x = Jet2::variable(2.0, 1, 0);
  const Jet2 sq = x * x;
  CHECK(sq.value() == 4.0);
  CHECK(sq.grad()[0] == 4.0);
  CHECK(sq.hess()(0, 0) == 2.0);

  const Jet2 s = sin(Jet2::variable(0.0, 1, 0));
  CHECK(s.value() == 0.0);
  CHECK(s.grad()[0] == 1.0);
  CHECK(s.hess()(0, 0) == 0.0);

  const Jet2 p = Jet2::variable(2.0, 2, 0) * Jet2::variable(3.0, 2, 1);
  CHECK(p.value() == 6.0);
  CHECK(p.grad() == Eigen::Vector2d(3.0, 2.0));
  CHECK(p.hess() == mat2(0, 1, 1, 0));
}

TEST_CASE("quotient, pow, log, sqrt and exp against hand derivatives") {
  const double x0 = 0.7;
  const Jet2 x = Jet2::variable(x0, 1, 0);
  const Jet2 q = 1.0 / x;
  CHECK(q.grad()[0] == doctest::Approx(-1.0 / (x0 * x0)).epsilon(1e-15));
  CHECK(q.hess()(0, 0) == doctest::Approx(2.0 / (x0 * x0 * x0)).epsilon(1e-15));
  const Jet2 p = pow(x, 2.5);
  CHECK(p.grad()[0] == doctest::Approx(2.5 * std::pow(x0, 1.5)).epsilon(1e-15));
  CHECK(p.hess()(0, 0) == doctest::Approx(2.5 * 1.5 * std::pow(x0, 0.5)).epsilon(1e-15));
  const Jet2 l = log(x);
  CHECK(l.hess()(0, 0) == doctest::Approx(-1.0 / (x0 * x0)).epsilon(1e-15));
  const Jet2 r = sqrt(x);
  CHECK(r.hess()(0, 0) == doctest::Approx(-0.25 * std::pow(x0, -1.5)).epsilon(1e-14));
  const Jet2 e = exp(x);
  CHECK(e.hess()(0, 0) == doctest::Approx(std::exp(x0)).epsilon(1e-15));
  const Jet2 c = cos(x);
  CHECK(c.grad()[0] == doctest::Approx(-std::sin(x0)).epsilon(1e-15));
}

TEST_CASE("domain violations raise evaluation errors naming the operation") {
  const Jet2 z = Jet2::variable(0.0, 1, 0);
  const Jet2 n = Jet2::variable(-1.0, 1, 0);
  try {
    (void)(Jet2::constant(1.0, 1) / z);
    FAIL("expected error");
  } catch (const EvalError& e) {
    CHECK(e.operation() == "div");
  }
  try {
    (void)log(n);
    FAIL("expected error");
  } catch (const EvalError& e) {
    CHECK(e.operation() == "log");
  }
  CHECK_THROWS_AS(sqrt(n), EvalError);
  CHECK_THROWS_AS(pow(n, 0.5), EvalError);
  CHECK_NOTHROW(pow(n, 3.0));
  CHECK(pow(n, 3.0).value() == -1.0);
}

TEST_CASE("mixing jet dimensions is an error") {
  CHECK_THROWS_AS(Jet2::variable(1.0, 1, 0) + Jet2::variable(1.0, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(Jet1::variable(1.0, 1, 0) * Jet1::variable(1.0, 2, 0), std::invalid_argument);
}

TEST_CASE("Hessians stay bit-symmetric through long products") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Index d = 5;
  std::vector<Jet2> v;
  for (Index i = 0; i < d; ++i) v.push_back(Jet2::variable(u(rng), d, i));
  Jet2 acc = Jet2::constant(1.0, d);
  for (int k = 0; k < 40; ++k) {
    const Jet2& a = v[static_cast<std::size_t>(k) % v.size()];
    const Jet2& b = v[static_cast<std::size_t>(k * 3 + 1) % v.size()];
    acc = acc * (a + 0.3 * sin(b)) / (2.0 + cos(a * b));
    acc = acc + exp(0.1 * b) * a;
  }
  CHECK(acc.hess() == acc.hess().transpose());
}

TEST_CASE("jet arithmetic is deterministic") {
  auto run = [] {
    const Jet2 x = Jet2::variable(0.3, 2, 0);
    const Jet2 y = Jet2::variable(-0.4, 2, 1);
    return exp(x * y) / (1.0 + x * x) - sin(y) * cos(x);
  };
  const Jet2 a = run();
  const Jet2 b = run();
  CHECK(a.value() == b.value());
  CHECK(a.grad() == b.grad());
  CHECK(a.hess() == b.hess());
}

TEST_CASE("compose agrees with direct evaluation") {
  const Jet2 v0 = Jet2::variable(0.4, 2, 0);
  const Jet2 v1 = Jet2::variable(-1.2, 2, 1);
  const Jet2 direct = sin(v0 * v1) * exp(v1) + v0;

  // outer(u1, u2, u3) = u1 * u2 + u3 with u = (sin(v0 v1), exp(v1), v0)
  const std::vector<Jet2> inner = {sin(v0 * v1), exp(v1), v0};
  const Jet2 u1 = Jet2::variable(inner[0].value(), 3, 0);
  const Jet2 u2 = Jet2::variable(inner[1].value(), 3, 1);
  const Jet2 u3 = Jet2::variable(inner[2].value(), 3, 2);
  const Jet2 outer = u1 * u2 + u3;
  const Jet2 composed = compose(outer, inner);
  CHECK(composed.value() == doctest::Approx(direct.value()).epsilon(1e-15));
  CHECK((composed.grad() - direct.grad()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((composed.hess() - direct.hess()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(composed.hess() == composed.hess().transpose());

  const std::vector<Jet1> inner1 = {truncate(inner[0]), truncate(inner[1]), truncate(inner[2])};
  const Jet1 c1 = compose(truncate(outer), inner1);
  CHECK((c1.grad() - direct.grad()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("partial and embed") {
  const Jet2 x = Jet2::variable(2.0, 2, 0);
  const Jet2 y = Jet2::variable(3.0, 2, 1);
  const Jet2 f = x * x * y;
  const Jet1 fx = partial(f, 0);
  CHECK(fx.value() == 12.0);
  CHECK(fx.grad() == Eigen::Vector2d(6.0, 4.0));
  const Jet2 e = embed(f, 4);
  CHECK(e.dim() == 4);
  CHECK(e.grad()[3] == 0.0);
  CHECK(e.hess()(0, 1) == 4.0);
}

TEST_CASE("jet linear solve differentiates through the solution") {
  // A(t) = [[2+t, 1], [1, 3]], b(t) = [t, 1]; compare with the closed form.
  auto solve_closed = [](double t) {
    const double det = (2 + t) * 3 - 1;
    return Eigen::Vector2d((3 * t - 1) / det, ((2 + t) - t) / det);
  };
  const Jet2 t = Jet2::variable(0.5, 1, 0);
  const std::vector<Jet2> a = {2.0 + t, Jet2::constant(1, 1), Jet2::constant(1, 1),
                               Jet2::constant(3, 1)};
  const std::vector<Jet2> b = {t, Jet2::constant(1, 1)};
  const auto x = solve(a, b);
  const double h = 1e-4;
  for (int k = 0; k < 2; ++k) {
    const double f0 = solve_closed(0.5)[k];
    const double fp = solve_closed(0.5 + h)[k];
    const double fm = solve_closed(0.5 - h)[k];
    CHECK(x[static_cast<std::size_t>(k)].value() == doctest::Approx(f0).epsilon(1e-14));
    CHECK(x[static_cast<std::size_t>(k)].grad()[0] ==
          doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-7));
    CHECK(x[static_cast<std::size_t>(k)].hess()(0, 0) ==
          doctest::Approx((fp - 2 * f0 + fm) / (h * h)).epsilon(1e-4));
  }

  const std::vector<Jet2> singular = {Jet2::constant(1, 1), Jet2::constant(2, 1),
                                      Jet2::constant(2, 1), Jet2::constant(4, 1)};
  CHECK_THROWS_AS(solve(singular, b), DegenerateError);
}

TEST_CASE("fd_check on polynomial, exponential and constant fields") {
  const ScalarField poly(parse("x^2*y"), {"x", "y"});
  CHECK(fd_check(poly, EvalContext({"x", "y"}, {1.0, 2.0}), 1e-5) < 1e-6);
  const ScalarField ex(parse("exp(x)"), {"x"});
  CHECK(fd_check(ex, EvalContext({"x"}, {0.0}), 1e-5) < 1e-6);
  const ScalarField c(parse("4.25"), {"x", "y"});
  CHECK(fd_check(c, EvalContext({"x", "y"}, {0.3, -2.0}), 1e-5) < 1e-9);
}

TEST_CASE("computed fields") {
  const ScalarField j = ScalarField::from_jet(1, [](std::span<const double> at) {
    const Jet2 x = Jet2::variable(at[0], 1, 0);
    return x * x * x;
  });
  CHECK(j.has_jet());
  CHECK(j.value(std::vector<double>{2.0}) == 8.0);
  CHECK(j.jet1(std::vector<double>{2.0}).grad()[0] == 12.0);
  CHECK(fd_check(j, EvalContext({"x"}, {0.5}), 1e-5) < 1e-6);

  const ScalarField v = ScalarField::from_value(1, [](std::span<const double> at) { return at[0]; });
  CHECK_FALSE(v.has_jet());
  CHECK_THROWS_AS(v.jet(std::vector<double>{1.0}), std::logic_error);
}
