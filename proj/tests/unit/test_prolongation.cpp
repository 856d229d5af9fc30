#include <doctest.h>

#include "models.hpp"
#include "varsode/prolongation.hpp"
#include "varsode/sode.hpp"

#include <cmath>

using namespace varsode;
using namespace varsode::testing;

namespace {

LieAlgebroid se2() { return lie_algebra(3, se2_constants()); }

FieldVector se2_gamma() { return bundle_fields(0, 3, {"y2*y3", "-y1*y3", "1"}); }

FieldVector identity_map(std::size_t m, std::size_t n) {
  std::vector<std::string> s;
  for (std::size_t a = 1; a <= n; ++a) s.push_back("y" + std::to_string(a));
  return bundle_fields(m, n, s);
}

double max_abs(const std::vector<double>& v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

}  // namespace

TEST_CASE("prolongation structure tables") {
  const auto P2 = prolong_structure(tangent_bundle(2));
  CHECK(P2.m() == 4);
  CHECK(P2.n() == 4);
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) CHECK(P2.structure(g, a, b).is_zero());

  const auto P = prolong_structure(se2());
  const auto s = P.values(std::vector<double>{0.3, -0.2, 0.7});
  // [T~2, T~3] = T~1
  CHECK(s.C(0, 1, 2) == 1.0);
  CHECK(s.C(1, 0, 2) == -1.0);
  for (std::size_t g = 0; g < 6; ++g)
    for (std::size_t a = 3; a < 6; ++a)
      for (std::size_t b = 0; b < 6; ++b) CHECK(s.C(g, a, b) == 0.0);
  // rho(V~_a) = d/dy^a
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < 3; ++i) CHECK(s.r(i, 3 + a) == (i == a ? 1.0 : 0.0));
}

TEST_CASE("the prolongation of every builder is a Lie algebroid") {
  std::mt19937_64 rng(21);
  for (const auto& E : builder_algebroids(rng)) {
    const auto P = prolong_structure(E);
    const auto rep = validate_structure(P, bundle_points(E.m(), E.n(), 20, 3));
    CHECK(rep.pass());
  }
}

TEST_CASE("vertical endomorphism and Euler section") {
  std::mt19937_64 rng(5);
  const std::size_t m = 2;
  const std::size_t n = 3;
  const auto pts = bundle_points(m, n, 20, 1);
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<std::string> t(n, "0");
    t[a] = "1";
    const ProlongSection T{bundle_fields(m, n, t), bundle_fields(m, n, {"0", "0", "0"})};
    const auto ST = vertical_endo(T);
    const ProlongSection V{bundle_fields(m, n, {"0", "0", "0"}), bundle_fields(m, n, t)};
    const auto SV = vertical_endo(V);
    for (const auto& p : pts) {
      CHECK(max_abs(ST.t.values(p)) == 0.0);
      CHECK(ST.v.values(p)[a] == 1.0);
      CHECK(max_abs(SV.t.values(p)) == 0.0);
      CHECK(max_abs(SV.v.values(p)) == 0.0);
    }
  }
  for (int k = 0; k < 10; ++k) {
    const ProlongSection X{random_fields(rng, m, n, 2), random_fields(rng, m, n, 2)};
    const auto SS = vertical_endo(vertical_endo(X));
    for (const auto& p : pts) {
      CHECK(max_abs(SS.t.values(p)) == 0.0);
      CHECK(max_abs(SS.v.values(p)) == 0.0);
    }
  }
  const auto E = tangent_bundle(m);
  const auto D = euler_section(E);
  for (const auto& p : bundle_points(m, m, 20, 1)) {
    CHECK(max_abs(D.t.values(p)) == 0.0);
    const auto v = D.v.values(p);
    for (std::size_t a = 0; a < m; ++a) CHECK(v[a] == p[m + a]);
  }
}

TEST_CASE("S(Gamma) = Delta holds for SODE sections only") {
  std::mt19937_64 rng(8);
  for (const auto& E : builder_algebroids(rng)) {
    const auto pts = bundle_points(E.m(), E.n(), 16, 2);
    const auto G = random_fields(rng, E.m(), E.n(), 2);
    CHECK(sode_check(E, sode_section(E, G), pts).pass());
    // T-part y + 0.5 is not the Euler section
    std::vector<std::string> t;
    for (std::size_t a = 1; a <= E.n(); ++a) t.push_back("y" + std::to_string(a) + " + 0.5");
    const ProlongSection bad{bundle_fields(E.m(), E.n(), t), G};
    const auto rep = sode_check(E, bad, pts);
    CHECK_FALSE(rep.pass());
    CHECK(rep.max_abs("S") == doctest::Approx(0.5));
  }
}

TEST_CASE("horizontal lifts") {
  const auto pts = bundle_points(0, 2, 10, 4);
  {
    const auto E = lie_algebra(2, std::vector<double>(8, 0.0));
    const auto H = horizontal_lift_basis(E, bundle_fields(0, 2, {"0", "0"}));
    for (const auto& h : H)
      for (const auto& p : pts) CHECK(max_abs(h.v.values(p)) == 0.0);
  }
  {
    const auto E = tangent_bundle(2);
    const auto H = horizontal_lift_basis(E, bundle_fields(2, 2, {"-2*y1", "-2*y2"}));
    for (const auto& p : bundle_points(2, 2, 10, 4))
      for (std::size_t a = 0; a < 2; ++a) {
        const auto v = H[a].v.values(p);
        for (std::size_t g = 0; g < 2; ++g) CHECK(v[g] == (g == a ? -1.0 : 0.0));
      }
  }
  {
    // Hand expansion for se(2): Lambda^1_3 = y2, Lambda^2_3 = -y1, all others zero.
    const auto H = horizontal_lift_basis(se2(), se2_gamma());
    for (const auto& p : bundle_points(0, 3, 20, 6)) {
      CHECK(max_abs(H[0].v.values(p)) == 0.0);
      CHECK(max_abs(H[1].v.values(p)) == 0.0);
      const auto v = H[2].v.values(p);
      CHECK(v[0] == doctest::Approx(p[1]).epsilon(1e-15));
      CHECK(v[1] == doctest::Approx(-p[0]).epsilon(1e-15));
      CHECK(v[2] == 0.0);
    }
  }
  std::mt19937_64 rng(12);
  for (const auto& E : builder_algebroids(rng)) {
    const auto G = random_fields(rng, E.m(), E.n(), 2);
    const auto H = horizontal_lift_basis(E, G);
    for (const auto& p : bundle_points(E.m(), E.n(), 8, 9)) {
      const auto q = connection_quantities(E, G, p);
      for (std::size_t a = 0; a < E.n(); ++a) {
        const auto t = H[a].t.values(p);
        const auto v = H[a].v.values(p);
        for (std::size_t g = 0; g < E.n(); ++g) {
          CHECK(t[g] == (g == a ? 1.0 : 0.0));
          CHECK(v[g] == doctest::Approx(q.Lambda(Index(g), Index(a))).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("Tulczyjew map") {
  const auto E2 = tangent_bundle(2);
  const std::vector<double> x{0.1, 0.2}, ys{1, 2}, z{3, 4}, v{5, 6};
  const auto a = tulczyjew_map(E2, x, ys, z, v);
  CHECK(a.x == x);
  CHECK(a.z == z);
  CHECK(a.w == v);
  CHECK(a.ystar == ys);

  const auto E = se2();
  const std::vector<double> none, zero{0, 0, 0};
  // C^1_a3 picks a = 2: [e2, e3] = e1
  auto w = tulczyjew_map(E, none, std::vector<double>{1, 0, 0}, std::vector<double>{0, 0, 1}, zero).w;
  CHECK(w == std::vector<double>{0, 1, 0});
  // C^2_a3 picks a = 1: [e1, e3] = -e2
  w = tulczyjew_map(E, none, std::vector<double>{0, 1, 0}, std::vector<double>{0, 0, 1}, zero).w;
  CHECK(w == std::vector<double>{-1, 0, 0});
  w = tulczyjew_map(E, none, std::vector<double>{0, 0, 1}, std::vector<double>{0, 1, 0}, zero).w;
  CHECK(w == zero);
  CHECK_THROWS_AS(tulczyjew_map(E, none, zero, zero, std::vector<double>{0}), ModelError);
}

TEST_CASE("lift map against directional differences") {
  {
    const auto E = tangent_bundle(2);
    const ProlongVector p{{{0.1, 0.2}, {0.3, 0.4}}, {1, 2}, {3, 4}};
    const auto l = lift_map(E, identity_map(2, 2), p);
    CHECK(l.ystar == p.p.y);
    CHECK(l.z == p.z);
    CHECK(l.w == p.v);
  }
  std::mt19937_64 rng(31);
  for (const auto& E : builder_algebroids(rng)) {
    const std::size_t m = E.m();
    const std::size_t n = E.n();
    const auto F = random_fields(rng, m, n, 3);
    for (const auto& xy : bundle_points(m, n, 6, 5)) {
      ProlongVector p{PointE::split(xy, m), {}, {}};
      for (std::size_t a = 0; a < n; ++a) {
        p.z.push_back(uniform(rng, -1, 1));
        p.v.push_back(uniform(rng, -1, 1));
      }
      const auto l = lift_map(E, F, p);
      // direction (rho z, v) in (x, y)
      const auto s = E.values(p.p.x);
      std::vector<double> dir(m + n, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t b = 0; b < n; ++b) dir[i] += s.r(i, b) * p.z[b];
      for (std::size_t b = 0; b < n; ++b) dir[m + b] = p.v[b];
      const double h = 1e-5;
      auto shifted = [&](double t) {
        auto q = xy;
        for (std::size_t k = 0; k < q.size(); ++k) q[k] += t * dir[k];
        return F.values(q);
      };
      const auto fp = shifted(h);
      const auto fm = shifted(-h);
      for (std::size_t a = 0; a < n; ++a) CHECK(l.w[a] == doctest::Approx((fp[a] - fm[a]) / (2 * h)).epsilon(1e-7));
    }
  }
}

TEST_CASE("Theta as a composition matches the direct formula") {
  {
    const auto E = se2();
    for (const auto& p : bundle_points(0, 3, 20, 1)) {
      const auto t = theta_composition(E, se2_gamma(), identity_map(0, 3), p);
      CHECK(std::abs(t.theta[0]) < 1e-12);
      CHECK(std::abs(t.theta[1]) < 1e-12);
      CHECK(std::abs(t.theta[2] - 1.0) < 1e-12);
      CHECK(t.F == p);
    }
  }
  {
    const auto E = tangent_bundle(2);
    for (const auto& p : bundle_points(2, 2, 10, 1)) {
      const auto t = theta_composition(E, bundle_fields(2, 2, {"0", "0"}), identity_map(2, 2), p);
      CHECK(max_abs(t.theta) == 0.0);
    }
  }
  std::mt19937_64 rng(41);
  for (const auto& E : builder_algebroids(rng)) {
    const auto G = random_fields(rng, E.m(), E.n(), 2);
    const auto F = random_fields(rng, E.m(), E.n(), 2);
    for (const auto& p : bundle_points(E.m(), E.n(), 100, 17)) {
      const auto a = theta_composition(E, G, F, p);
      const auto b = theta_components(E, G, F, p);
      for (std::size_t k = 0; k < E.n(); ++k) {
        CHECK(std::abs(a.theta[k] - b.theta[k]) < 1e-12);
        CHECK(a.F[k] == b.F[k]);
      }
    }
  }
}

TEST_CASE("closedness blocks agree with d of the prolongation algebroid") {
  std::mt19937_64 rng(57);
  for (const auto& E : builder_algebroids(rng)) {
    const std::size_t m = E.m();
    const std::size_t n = E.n();
    const auto P = prolong_structure(E);
    const auto names = base_names(m + n);
    std::vector<Expr> mu, nu, all;
    for (std::size_t a = 0; a < n; ++a) mu.push_back(random_polynomial(rng, names, 2));
    for (std::size_t a = 0; a < n; ++a) nu.push_back(random_polynomial(rng, names, 2));
    all = mu;
    all.insert(all.end(), nu.begin(), nu.end());
    const ProlongCovector c{FieldVector(mu, names), FieldVector(nu, names)};
    const FieldVector theta(all, names);
    for (const auto& xy : bundle_points(m, n, 8, 23)) {
      Report rep(1e-8);
      rep.add_point(xy);
      add_closedness(E, covector_jets(c, xy), xy, rep, 0);
      const auto d = dE_one_section(P, theta, xy);
      for (const auto& e : rep.entries()) {
        const auto b = static_cast<Index>(e.indices[0] - 1);
        const auto g = static_cast<Index>(e.indices[1] - 1);
        const auto N = static_cast<Index>(n);
        double expect = 0.0;
        if (e.block == "R1") expect = -d(N + b, N + g);
        if (e.block == "R2") expect = -d(g, N + b);
        if (e.block == "R3") expect = d(b, g);
        CAPTURE(e.block);
        CHECK(e.residual == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("closedness entries carry kernel labels") {
  AtiyahData D;
  D.m = 1;
  D.ng = 3;
  D.A = std::vector<Expr>(3);
  D.c = se2_constants();
  const auto E = atiyah_algebroid(D);
  const std::vector<double> xy{0.1, 0.2, 0.3, 0.4, 0.5};
  Report rep(1e-8);
  rep.add_point(xy);
  CovectorJets c;
  for (std::size_t a = 0; a < 4; ++a) {
    c.mu.push_back(Jet1::constant(0.0, 5));
    c.nu.push_back(Jet1::constant(0.0, 5));
  }
  add_closedness(E, c, xy, rep, 0);
  for (const auto& e : rep.entries()) {
    const int v = int(e.indices[0] > 1) + int(e.indices[1] > 1);
    CHECK(e.label == (v == 0 ? "HH" : v == 1 ? "HV" : "VV"));
  }
}
