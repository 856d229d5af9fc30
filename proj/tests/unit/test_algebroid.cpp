#include <doctest.h>

#include "models.hpp"
#include "varsode/algebroid.hpp"

#include <cmath>

using namespace varsode;
using namespace varsode::testing;

namespace {

// Brute-force cyclic sum for constant structure, independent of the library loops.
double jacobi_oracle(std::size_t n, const std::vector<double>& c) {
  auto C = [&](std::size_t g, std::size_t a, std::size_t b) { return c[(g * n + a) * n + b]; };
  double worst = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t d = 0; d < n; ++d)
        for (std::size_t v = 0; v < n; ++v) {
          double s = 0.0;
          for (std::size_t u = 0; u < n; ++u)
            s += C(v, a, u) * C(u, b, d) + C(v, b, u) * C(u, d, a) + C(v, d, u) * C(u, a, b);
          worst = std::max(worst, std::abs(s));
        }
  return worst;
}

Points base_points(std::size_t m, std::size_t count = 50, std::uint64_t seed = 7) {
  return halton_points(Box::symmetric(m), count, seed);
}

}  // namespace

TEST_CASE("builders satisfy the structure equations") {
  for (std::size_t m = 1; m <= 4; ++m) {
    const auto rep = validate_structure(tangent_bundle(m), base_points(m));
    CHECK(rep.pass());
    CHECK(rep.max_abs() == 0.0);
  }
  for (const auto& a : lie_algebra_catalog()) {
    CAPTURE(a.name);
    CHECK(jacobi_oracle(a.n, a.c) == 0.0);
    const auto rep = validate_structure(lie_algebra(a.n, a.c), {{}});
    CHECK(rep.pass());
    CHECK(rep.max_abs() < 1e-14);
  }
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto D = random_atiyah(rng);
    const auto E = atiyah_algebroid(D);
    const auto rep = validate_structure(E, base_points(D.m));
    CHECK(rep.pass());
    CHECK(rep.max_abs() < 1e-10);
  }
}

TEST_CASE("a Jacobi-breaking perturbation of se(2) is detected") {
  auto c = se2_constants();
  // [e2,e3] = e1 + 0.1 e3
  c[(2 * 3 + 1) * 3 + 2] = 0.1;
  c[(2 * 3 + 2) * 3 + 1] = -0.1;
  const double oracle = jacobi_oracle(3, c);
  CHECK(oracle == doctest::Approx(0.1));
  const auto rep = validate_structure(lie_algebra(3, c), {{}});
  CHECK_FALSE(rep.pass("jacobi"));
  CHECK(rep.max_abs("jacobi") == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(rep.pass("anchor"));
}

TEST_CASE("rescaling [e2,e3] in se(2) keeps the Jacobi identity") {
  auto c = se2_constants();
  c[(0 * 3 + 1) * 3 + 2] = 1.1;
  c[(0 * 3 + 2) * 3 + 1] = -1.1;
  CHECK(jacobi_oracle(3, c) == 0.0);
  CHECK(validate_structure(lie_algebra(3, c), {{}}).pass());
}

TEST_CASE("an anchor that is not a homomorphism fails the anchor block") {
  // rho(e1) = d/dx1, rho(e2) = x1 d/dx1 with an abelian bracket.
  const LieAlgebroid E(1, 2, {Expr(1.0), parse("x1")}, {});
  const auto rep = validate_structure(E, base_points(1, 5));
  CHECK_FALSE(rep.pass("anchor"));
  CHECK(rep.max_abs("anchor") == doctest::Approx(1.0));
  const LieAlgebroid F(1, 2, {Expr(1.0), parse("x1")}, {{0, 0, 1, Expr(1.0)}});
  CHECK(validate_structure(F, base_points(1, 5)).pass());
}

TEST_CASE("model errors at construction") {
  CHECK_THROWS_AS(LieAlgebroid(1, 2, {Expr(1.0), Expr()}, {{0, 0, 1, parse("y1")}}), ModelError);
  CHECK_THROWS_AS(LieAlgebroid(1, 2, {parse("y2"), Expr()}, {}), ModelError);
  CHECK_THROWS_AS(LieAlgebroid(0, 2, {}, {{0, 0, 0, Expr(1.0)}}), ModelError);
  CHECK_THROWS_AS(LieAlgebroid(0, 2, {}, {{0, 0, 1, Expr(1.0)}, {0, 1, 0, Expr(1.0)}}), ModelError);
  CHECK_THROWS_AS(LieAlgebroid(0, 2, {}, {{2, 0, 1, Expr(1.0)}}), ModelError);
  CHECK_THROWS_AS(LieAlgebroid(1, 2, {Expr(1.0)}, {}), ModelError);
  std::vector<double> bad(8, 0.0);
  bad[(0 * 2 + 0) * 2 + 1] = 1.0;
  CHECK_THROWS_AS(lie_algebra(2, bad), ModelError);
  AtiyahData D{1, 3, {Expr(), Expr(), Expr()}, se2_constants()};
  D.c[(2 * 3 + 1) * 3 + 2] = 0.1;
  D.c[(2 * 3 + 2) * 3 + 1] = -0.1;
  CHECK_THROWS_AS(atiyah_algebroid(D), ModelError);
}

TEST_CASE("mirrored bracket entries carry the opposite sign") {
  const LieAlgebroid E(0, 3, {}, {{1, 2, 0, parse("2")}});
  const auto s = E.values({});
  CHECK(s.C(1, 2, 0) == 2.0);
  CHECK(s.C(1, 0, 2) == -2.0);
  for (std::size_t g = 0; g < 3; ++g)
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) CHECK(s.C(g, a, b) == -s.C(g, b, a));
}

TEST_CASE("dE_function examples") {
  const auto T2 = tangent_bundle(2);
  const auto th = dE_function(T2, ScalarField(parse("x1"), base_names(2)));
  CHECK(th.values(std::vector<double>{0.3, -0.2}) == std::vector<double>{1.0, 0.0});

  const auto g = lie_algebra(3, se2_constants());
  const auto z = dE_function(g, ScalarField(parse("7"), {}));
  CHECK(z.values(std::vector<double>{}) == std::vector<double>{0.0, 0.0, 0.0});

  // rho^1_1 = t on TR; f = t gives theta_1 = t.
  const LieAlgebroid ex1(1, 1, {parse("x1")}, {});
  const auto t = dE_function(ex1, ScalarField(parse("x1"), base_names(1)));
  for (double v : {-0.7, 0.0, 0.4}) CHECK(t.values(std::vector<double>{v})[0] == v);

  CHECK_THROWS_AS(dE_function(T2, ScalarField::from_value(2, [](auto) { return 0.0; })),
                  ModelError);
}

TEST_CASE("dE_one_section examples") {
  const auto T2 = tangent_bundle(2);
  const OneSection th({parse("x2"), Expr()}, base_names(2));
  const auto d = dE_one_section(T2, th, std::vector<double>{0.1, 0.2});
  CHECK(d(0, 1) == -1.0);
  CHECK(d(1, 0) == 1.0);

  const auto g = lie_algebra(3, se2_constants());
  const OneSection e3({Expr(), Expr(), Expr(1.0)}, {});
  CHECK(dE_one_section(g, e3, std::vector<double>{}).isZero(0.0));
  // e^1 is not closed: d e^1 = -C^1_23 e^2 ^ e^3.
  const OneSection e1({Expr(1.0), Expr(), Expr()}, {});
  CHECK(dE_one_section(g, e1, std::vector<double>{})(1, 2) == -1.0);
}

TEST_CASE("d^E composed with d^E vanishes on every builder") {
  std::mt19937_64 rng(2024);
  for (const auto& E : builder_algebroids(rng)) {
    const auto x = base_names(E.m());
    for (int k = 0; k < 3; ++k) {
      const ScalarField f(random_polynomial(rng, x, 3), x);
      const auto th = dE_function(E, f);
      for (const auto& p : base_points(E.m(), 10, static_cast<std::uint64_t>(k))) {
        CHECK(dE_one_section(E, th, p).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
  }
}

TEST_CASE("kernel_basis") {
  const auto g = lie_algebra(3, se2_constants());
  auto kb = kernel_basis(g, std::vector<double>{});
  CHECK(kb.rank == 0);
  CHECK(kb.basis == Eigen::MatrixXd::Identity(3, 3));

  kb = kernel_basis(tangent_bundle(3), std::vector<double>{0.1, 0.2, 0.3});
  CHECK(kb.rank == 3);
  CHECK(kb.basis.cols() == 0);

  AtiyahData D{2, 3, {parse("x2"), Expr(), Expr(), parse("x1^2"), Expr(), Expr()}, se2_constants()};
  kb = kernel_basis(atiyah_algebroid(D), std::vector<double>{0.5, -0.5});
  CHECK(kb.rank == 2);
  REQUIRE(kb.basis.cols() == 3);
  for (Index a = 0; a < 3; ++a) CHECK(kb.basis(2 + a, a) == 1.0);

  // Numeric kernel of rho = (1, x1) without declared indices.
  const LieAlgebroid E(1, 2, {Expr(1.0), parse("x1")}, {{0, 0, 1, Expr(1.0)}});
  for (const auto& p : base_points(1, 10)) {
    kb = kernel_basis(E, p);
    CHECK(kb.rank + kb.basis.cols() == 2);
    CHECK((E.anchor_matrix(p) * kb.basis).norm() < 1e-14);
  }
}

TEST_CASE("local exactness of e3 on se(2) and of exact sections") {
  const auto g = lie_algebra(3, se2_constants());
  const OneSection e3({Expr(), Expr(), Expr(1.0)}, {});
  const auto rep = local_exactness_check(g, e3, {{}});
  CHECK(rep.pass("closed"));
  CHECK(rep.max_abs("closed") < 1e-12);
  CHECK_FALSE(rep.pass("kernel"));
  CHECK(rep.max_abs("kernel") == 1.0);

  const auto T2 = tangent_bundle(2);
  const auto pts = base_points(2, 20);
  CHECK(local_exactness_check(T2, dE_function(T2, ScalarField(parse("x1*x2"), base_names(2))), pts)
            .pass());
  const auto bad = local_exactness_check(T2, OneSection({parse("x2"), Expr()}, base_names(2)), pts);
  CHECK_FALSE(bad.pass("closed"));
  CHECK(bad.max_abs("closed") == 1.0);
  CHECK(bad.count("kernel") == 0);
}

TEST_CASE("exact sections pass both clauses on every builder") {
  std::mt19937_64 rng(99);
  for (const auto& E : builder_algebroids(rng)) {
    const auto x = base_names(E.m());
    const ScalarField f(random_polynomial(rng, x, 3), x);
    CHECK(local_exactness_check(E, dE_function(E, f), base_points(E.m(), 10)).pass());
  }
}

TEST_CASE("a rank jump is a regularity violation") {
  const LieAlgebroid ex1(1, 1, {parse("x1")}, {});
  const Points pts = {{-1.0}, {-0.5}, {0.0}, {0.5}, {1.0}};
  try {
    (void)local_exactness_check(ex1, OneSection({parse("x1")}, base_names(1)), pts);
    FAIL("expected a regularity violation");
  } catch (const RegularityViolation& e) {
    CHECK(e.ranks() == std::vector<int>{1, 1, 0, 1, 1});
    CHECK(e.jump_point() == 2);
  }
  CHECK(check_regular(ex1, {{-1.0}, {0.5}}) == std::vector<int>{1, 1});
}

TEST_CASE("Atiyah curvature") {
  AtiyahData D{2, 1, {parse("x2"), Expr()}, {0.0}};
  const auto B = atiyah_curvature(D, std::vector<double>{0.3, 0.7});
  CHECK(B[(0 * 2 + 0) * 2 + 1] == -1.0);
  CHECK(B[(0 * 2 + 1) * 2 + 0] == 1.0);
  const auto E = atiyah_algebroid(D);
  CHECK(E.values(std::vector<double>{0.3, 0.7}).C(2, 0, 1) == 1.0);
  CHECK(E.kernel_indices() == std::vector<std::size_t>{2});

  const AtiyahData flat{2, 1, {Expr(0.5), Expr(-2.0)}, {0.0}};
  for (double b : atiyah_curvature(flat, std::vector<double>{0.1, 0.2})) CHECK(b == 0.0);

  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const auto R = random_atiyah(rng);
    for (const auto& p : base_points(R.m, 5)) {
      const auto b = atiyah_curvature(R, p);
      for (std::size_t c = 0; c < R.ng; ++c)
        for (std::size_t i = 0; i < R.m; ++i)
          for (std::size_t j = 0; j < R.m; ++j)
            CHECK(b[(c * R.m + i) * R.m + j] == -b[(c * R.m + j) * R.m + i]);
    }
  }
}

TEST_CASE("Atiyah builder on trivial data is a direct product") {
  const AtiyahData D{2, 2, {Expr(), Expr(), Expr(), Expr()}, std::vector<double>(8, 0.0)};
  const auto E = atiyah_algebroid(D);
  const auto s = E.values(std::vector<double>{0.2, 0.4});
  for (double c : s.c) CHECK(c == 0.0);
  CHECK(E.anchor_matrix(std::vector<double>{0.2, 0.4}) ==
        (Eigen::MatrixXd(2, 4) << 1, 0, 0, 0, 0, 1, 0, 0).finished());

  const AtiyahData S{1, 3, {Expr(), Expr(), Expr()}, se2_constants()};
  const auto Es = atiyah_algebroid(S);
  const auto v = Es.values(std::vector<double>{0.5});
  CHECK(v.C(1 + 1, 1 + 0, 1 + 2) == -1.0);
  CHECK(v.C(1 + 0, 1 + 1, 1 + 2) == 1.0);
  CHECK(validate_structure(Es, base_points(1, 10)).pass());
}

TEST_CASE("sampling is reproducible and honours the fiber exclusion") {
  const auto a = bundle_points(2, 3, 64, 42);
  const auto b = bundle_points(2, 3, 64, 42);
  CHECK(a == b);
  CHECK(a != bundle_points(2, 3, 64, 43));
  for (const auto& p : a) {
    REQUIRE(p.size() == 5);
    double r2 = 0.0;
    for (std::size_t k = 2; k < 5; ++k) {
      CHECK(std::abs(p[k]) <= 1.0);
      r2 += p[k] * p[k];
    }
    CHECK(std::sqrt(r2) >= 0.1);
  }
  CHECK(halton_points(Box::symmetric(0), 3, 1) == Points(3));
}
