#include <doctest.h>

#include "models.hpp"
#include "varsode/morphism.hpp"
#include "varsode/variational.hpp"

#include <cmath>

using namespace varsode;
using namespace varsode::testing;

namespace {

double max_abs(const std::vector<double>& v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

std::vector<double> diff_vec(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return d;
}

/// f = (x1 + 0.3 x2^2, x2 - 0.2 x1), a diffeomorphism of the square.
AlgebroidMorphism shear_lift() { return tangent_lift(2, {parse("x1 + 0.3*x2^2"), parse("x2 - 0.2*x1")}); }

AtiyahData se2_connection(std::mt19937_64& rng, std::size_t m) {
  AtiyahData D;
  D.m = m;
  D.ng = 3;
  D.c = se2_constants();
  for (std::size_t k = 0; k < m * 3; ++k) D.A.push_back(random_polynomial(rng, base_names(m), 2, 0.5));
  return D;
}

ProlongVector random_element(std::mt19937_64& rng, const LieAlgebroid& E) {
  ProlongVector Z;
  for (std::size_t i = 0; i < E.m(); ++i) Z.p.x.push_back(uniform(rng, -1, 1));
  for (std::size_t a = 0; a < E.n(); ++a) {
    Z.p.y.push_back(uniform(rng, -1, 1));
    Z.z.push_back(uniform(rng, -1, 1));
    Z.v.push_back(uniform(rng, -1, 1));
  }
  return Z;
}

ProlongCovector random_covector(std::mt19937_64& rng, const LieAlgebroid& E) {
  return {random_fields(rng, E.m(), E.n(), 2), random_fields(rng, E.m(), E.n(), 2)};
}

struct Pair {
  AlgebroidMorphism psi;
  SodeSection gamma;
  SodeSection gamma_target;
  MultiplierMap F_target;
};

/// Gamma_L and Gamma'_L' for L = L' . Psi; these are Psi-related.
Pair lagrangian_pair(const AlgebroidMorphism& psi, const Expr& Lt) {
  const auto& E = psi.source();
  const auto& Et = psi.target();
  const Lagrangian L(pull_back_lagrangian(psi, Lt), bundle_names(E.m(), E.n()));
  const Lagrangian Lp(Lt, bundle_names(Et.m(), Et.n()));
  return {psi, sode_from_lagrangian(E, L), sode_from_lagrangian(Et, Lp), legendre(Et, Lp)};
}

std::vector<AlgebroidMorphism> fixtures() {
  std::mt19937_64 rng(17);
  std::vector<AlgebroidMorphism> out;
  out.push_back(identity_morphism(atiyah_algebroid(se2_connection(rng, 2))));
  out.push_back(shear_lift());
  out.push_back(se2_trivialization());
  out.push_back(se2_quotient(se2_connection(rng, 2)));
  return out;
}

}  // namespace

TEST_CASE("morphism construction errors") {
  const auto E = tangent_bundle(2);
  CHECK_THROWS_AS(AlgebroidMorphism(E, E, {parse("x1")}, std::vector<Expr>(4)), ModelError);
  CHECK_THROWS_AS(AlgebroidMorphism(E, E, {parse("x1"), parse("x2")}, std::vector<Expr>(3)), ModelError);
  CHECK_THROWS_AS(AlgebroidMorphism(E, E, {parse("x1"), parse("x3")}, std::vector<Expr>(4)), ModelError);
  CHECK_THROWS_AS(AlgebroidMorphism(E, E, {parse("x1"), parse("x2")}, {parse("y1"), 0.0, 0.0, 1.0}), ModelError);
  CHECK_THROWS_AS(compose(se2_trivialization(), shear_lift()), ModelError);
  CHECK_THROWS_AS(check_morphism(shear_lift(), {{0.1, 0.2, 0.3}}), ModelError);
}

TEST_CASE("identity morphism") {
  std::mt19937_64 rng(3);
  for (const auto& E : builder_algebroids(rng)) {
    const auto id = identity_morphism(E);
    const auto pts = bundle_points(E.m(), E.n(), 16, 5);
    const auto rep = check_morphism(id, pts, 1e-12);
    CHECK(rep.pass());
    CHECK(rep.max_abs() == 0.0);

    const auto Z = random_element(rng, E);
    const auto L = prolong_map(id, Z);
    CHECK(L.p.flat() == Z.p.flat());
    CHECK(L.z == Z.z);
    CHECK(L.v == Z.v);

    const auto th = random_covector(rng, E);
    const auto c = pullback_covector(id, th, pts[0]);
    CHECK(c.mu == th.mu.values(pts[0]));
    CHECK(c.nu == th.nu.values(pts[0]));

    const auto G = random_fields(rng, E.m(), E.n(), 2);
    CHECK(sode_related(id, G, G, pts, 1e-14).max_abs() == 0.0);
  }
}

TEST_CASE("identity reduction is classification") {
  std::mt19937_64 rng(8);
  const auto E = atiyah_algebroid(se2_connection(rng, 2));
  const auto pts = bundle_points(E.m(), E.n(), 20, 2);
  const Lagrangian L(random_reduced_lagrangian(rng, E.m(), E.n()), bundle_names(E.m(), E.n()));
  const auto G = sode_from_lagrangian(E, L);
  const auto F = legendre(E, L);
  const auto red = reduction_check(identity_morphism(E), G, G, F, pts);
  const auto cls = classify(E, G, F, pts);
  CHECK(red.target.classification == Classification::variational);
  CHECK(cls.classification == Classification::variational);
  CHECK(red.hypothesis);
  CHECK(red.pass());
  for (const char* b : {"R1", "R2", "R3", "K"}) {
    CHECK(red.pulled.count(b) == cls.report.count(b));
    CHECK(red.pulled.max_abs(b) == doctest::Approx(cls.report.max_abs(b)).epsilon(1e-12));
  }
}

TEST_CASE("tangent lift of a diffeomorphism") {
  const auto T = shear_lift();
  const auto pts = bundle_points(2, 2, 32, 11);
  const auto rep = check_morphism(T, pts, 1e-9);
  CHECK(rep.pass());
  CHECK(rep.count("anchor") == 32 * 4);
  CHECK(rep.count("pullback_function") == 32 * 4);
  CHECK(rep.count("pullback_one_section") == 32 * 2);
  CHECK(rep.max_abs() < 1e-12);

  // Scaling the Jacobian breaks anchor compatibility.
  auto bad = T.fiber_map();
  bad[0] = 2.0 * bad[0];
  const AlgebroidMorphism wrong(T.source(), T.target(), T.base_map(), bad);
  const auto r2 = check_morphism(wrong, pts, 1e-9);
  CHECK_FALSE(r2.pass("anchor"));
  CHECK_FALSE(r2.pass("pullback_function"));
}

TEST_CASE("prolonged map is the tangent map of the image") {
  // rho'(L Psi Z) = T Psi(rho^t Z): the V~' components are the y'-part of the
  // derivative of (x, y) -> (f(x), Psi(x) y) along (rho z, v).
  std::mt19937_64 rng(21);
  const double h = 1e-5;
  for (const auto& psi : fixtures()) {
    const auto& E = psi.source();
    for (int k = 0; k < 10; ++k) {
      const auto Z = random_element(rng, E);
      const auto s = E.values(Z.p.x);
      std::vector<double> dir(E.m() + E.n(), 0.0);
      for (std::size_t i = 0; i < E.m(); ++i)
        for (std::size_t a = 0; a < E.n(); ++a) dir[i] += s.r(i, a) * Z.z[a];
      for (std::size_t a = 0; a < E.n(); ++a) dir[E.m() + a] = Z.v[a];
      auto plus = Z.p.flat();
      auto minus = Z.p.flat();
      for (std::size_t k2 = 0; k2 < dir.size(); ++k2) {
        plus[k2] += h * dir[k2];
        minus[k2] -= h * dir[k2];
      }
      const auto ip = psi.image(plus);
      const auto im = psi.image(minus);
      const auto L = prolong_map(psi, Z);
      const std::size_t mt = psi.target().m();
      for (std::size_t t = 0; t < psi.target().n(); ++t)
        CHECK(std::abs(L.v[t] - (ip[mt + t] - im[mt + t]) / (2 * h)) < 1e-8);
      const auto P = psi.fiber_matrix(Z.p.x);
      const Eigen::VectorXd z = P * Eigen::Map<const Eigen::VectorXd>(Z.z.data(), Eigen::Index(E.n()));
      for (std::size_t t = 0; t < psi.target().n(); ++t) CHECK(L.z[t] == doctest::Approx(z[Eigen::Index(t)]).epsilon(1e-14));
      CHECK(L.p.flat() == psi.image(Z.p.flat()));
    }
  }
}

TEST_CASE("prolonged map intertwines the vertical endomorphisms") {
  std::mt19937_64 rng(4);
  for (const auto& psi : fixtures()) {
    for (int k = 0; k < 5; ++k) {
      const auto Z = random_element(rng, psi.source());
      // S(Z) = (0, z)
      ProlongVector SZ = Z;
      SZ.v = Z.z;
      std::fill(SZ.z.begin(), SZ.z.end(), 0.0);
      const auto lhs = prolong_map(psi, SZ);
      const auto img = prolong_map(psi, Z);
      CHECK(max_abs(lhs.z) == 0.0);
      CHECK(max_abs(diff_vec(lhs.v, img.z)) < 1e-14);
    }
  }
}

TEST_CASE("prolonged morphisms are algebroid morphisms") {
  for (const auto& psi : fixtures()) {
    CHECK(check_morphism(psi, bundle_points(psi.source().m(), psi.source().n(), 16, 9), 1e-9).pass());
    const auto LP = prolong_morphism(psi);
    const auto& P = LP.source();
    const auto pts = bundle_points(P.m(), P.n(), 16, 9);
    const auto rep = check_morphism(LP, pts, 1e-9);
    CHECK(rep.pass());
    CHECK(rep.max_abs() < 1e-9);

    // its fiber matrix is the coordinate form of prolong_map
    std::mt19937_64 rng(2);
    const auto Z = random_element(rng, psi.source());
    const auto L = prolong_map(psi, Z);
    const auto M = LP.fiber_matrix(Z.p.flat());
    Eigen::VectorXd zv(Eigen::Index(2 * Z.z.size()));
    for (std::size_t a = 0; a < Z.z.size(); ++a) {
      zv[Eigen::Index(a)] = Z.z[a];
      zv[Eigen::Index(Z.z.size() + a)] = Z.v[a];
    }
    const Eigen::VectorXd out = M * zv;
    const std::size_t nt = psi.target().n();
    for (std::size_t t = 0; t < nt; ++t) {
      CHECK(out[Eigen::Index(t)] == doctest::Approx(L.z[t]).epsilon(1e-13));
      CHECK(out[Eigen::Index(nt + t)] == doctest::Approx(L.v[t]).epsilon(1e-13));
    }
  }
}

TEST_CASE("a constant map into se(2) is not a morphism") {
  std::vector<Expr> id(9);
  for (std::size_t a = 0; a < 3; ++a) id[a * 3 + a] = Expr(1.0);
  const AlgebroidMorphism psi(tangent_bundle(3), lie_algebra(3, se2_constants()), {}, id);
  const auto rep = check_morphism(psi, bundle_points(3, 3, 8, 1), 1e-9);
  CHECK(rep.pass("anchor"));
  CHECK_FALSE(rep.pass("pullback_one_section"));
  // d e^1 pulled back is -C^1_23 e^2 ^ e^3, the source side is 0
  CHECK(rep.max_abs("pullback_one_section") == doctest::Approx(1.0));
}

TEST_CASE("left trivialization of T(SE(2))") {
  const auto psi = se2_trivialization();
  const auto pts = bundle_points(3, 3, 64, 7);
  const auto rep = check_morphism(psi, pts, 1e-9);
  CHECK(rep.pass());
  CHECK(rep.count("pullback_one_section") == 64 * 9);
  CHECK(rep.max_abs() < 1e-12);

  const auto G = bundle_fields(3, 3, {"0", "0", "1"});
  const auto Gp = bundle_fields(0, 3, {"y2*y3", "-y1*y3", "1"});
  const auto related = sode_related(psi, G, Gp, pts, 1e-9);
  CHECK(related.pass());
  CHECK(related.max_abs("T") == 0.0);
  CHECK(related.max_abs("V") < 1e-12);

  // the geodesic spray is not related to the se(2) SODE
  const auto wrong = sode_related(psi, G, bundle_fields(0, 3, {"0", "0", "1"}), pts, 1e-9);
  CHECK(wrong.pass("T"));
  CHECK_FALSE(wrong.pass("V"));

  const auto Fp = bundle_fields(0, 3, {"y1", "y2", "y3"});
  const auto red = reduction_check(psi, G, Gp, Fp, pts, 1e-8);
  CHECK(red.target.classification == Classification::weak_variational);
  CHECK(red.hypothesis);
  CHECK(red.pulled.count("K") == 0);
  CHECK(red.pulled.max_abs() < 1e-8);
  CHECK(red.pass());

  // pulled back, nu = Psi^T Psi y = y and mu = (0, 0, 1)
  const ProlongCovector th{FieldVector(std::vector<Expr>{0.0, 0.0, 1.0}, bundle_names(0, 3)), Fp};
  const auto c = pullback_covector(psi, th, pts[3]);
  const std::vector<double> y(pts[3].begin() + 3, pts[3].end());
  CHECK(max_abs(diff_vec(c.nu, y)) < 1e-15);
  CHECK(max_abs(diff_vec(c.mu, {0.0, 0.0, 1.0})) < 1e-15);
}

TEST_CASE("quotient of T(R^m x SE(2)) by SE(2)") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t m = 1 + std::size_t(trial % 2);
    const auto psi = se2_quotient(se2_connection(rng, m));
    const auto& E = psi.source();
    const auto pts = bundle_points(E.m(), E.n(), 24, std::uint64_t(trial + 1));
    const auto rep = check_morphism(psi, pts, 1e-9);
    CHECK(rep.pass());
    CHECK(rep.max_abs() < 1e-9);

    const auto pair = lagrangian_pair(psi, random_reduced_lagrangian(rng, m, m + 3));
    const auto related = sode_related(psi, pair.gamma, pair.gamma_target, pts, 1e-9);
    CHECK(related.pass());
    const auto red = reduction_check(psi, pair.gamma, pair.gamma_target, pair.F_target, pts, 1e-9);
    CHECK(red.target.classification == Classification::variational);
    CHECK(red.pulled.pass());
    CHECK(red.pulled.count("K") == 0);
    CHECK(red.pass());
  }
}

TEST_CASE("tangent lift relates Lagrangian SODEs") {
  std::mt19937_64 rng(12);
  const auto T = shear_lift();
  const auto pts = bundle_points(2, 2, 32, 4);
  for (int trial = 0; trial < 4; ++trial) {
    const auto pair = lagrangian_pair(T, random_reduced_lagrangian(rng, 2, 2));
    CHECK(sode_related(T, pair.gamma, pair.gamma_target, pts, 1e-9).pass());
    const auto red = reduction_check(T, pair.gamma, pair.gamma_target, pair.F_target, pts, 1e-9);
    CHECK(red.hypothesis);
    CHECK(red.pass());

    // a perturbed target SODE is neither related nor accepted
    auto e = pair.gamma_target;
    const auto bumped = FieldVector::from_batch(2, 4, [e](std::span<const double> p) {
      auto j = e.jets(p);
      j[0] += 0.1;
      return j;
    });
    const auto bad = reduction_check(T, pair.gamma, bumped, pair.F_target, pts, 1e-9);
    CHECK_FALSE(bad.related.pass());
    CHECK_FALSE(bad.pass());
  }
}

TEST_CASE("pullback pairs with the prolonged map") {
  std::mt19937_64 rng(5);
  for (const auto& psi : fixtures()) {
    const auto& E = psi.source();
    const auto th = random_covector(rng, psi.target());
    for (int k = 0; k < 5; ++k) {
      auto Z = random_element(rng, E);
      const auto xy = Z.p.flat();
      const auto c = pullback_covector(psi, th, xy);
      const auto L = prolong_map(psi, Z);
      const auto mu = th.mu.values(L.p.flat());
      const auto nu = th.nu.values(L.p.flat());
      double lhs = 0.0;
      double rhs = 0.0;
      for (std::size_t a = 0; a < E.n(); ++a) lhs += c.mu[a] * Z.z[a] + c.nu[a] * Z.v[a];
      for (std::size_t t = 0; t < psi.target().n(); ++t) rhs += mu[t] * L.z[t] + nu[t] * L.v[t];
      CHECK(std::abs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("pullback with a constant fiber map") {
  const AlgebroidMorphism A(tangent_bundle(2), tangent_bundle(2), {parse("2*x1 + x2"), parse("x1 - x2")},
                            {2.0, 1.0, 1.0, -1.0});
  CHECK(check_morphism(A, bundle_points(2, 2, 8, 1), 1e-12).pass());
  const ProlongCovector th{bundle_fields(2, 2, {"3", "-1"}), bundle_fields(2, 2, {"0.5", "2"})};
  const auto c = pullback_covector(A, th, std::vector<double>{0.3, -0.2, 0.7, 0.1});
  // Psi^T (3, -1) = (5, 4); Psi^T (0.5, 2) = (3, -1.5)
  CHECK(c.mu == std::vector<double>{5.0, 4.0});
  CHECK(c.nu == std::vector<double>{3.0, -1.5});
}

TEST_CASE("pullback jets") {
  std::mt19937_64 rng(6);
  const double h = 1e-6;
  for (const auto& psi : fixtures()) {
    const auto& E = psi.source();
    const auto th = random_covector(rng, psi.target());
    const CovectorJetFn fn = [&](std::span<const double> X) { return covector_jets(th, X); };
    for (const auto& xy : bundle_points(E.m(), E.n(), 4, 3)) {
      const auto j = pullback_covector(psi, fn, xy);
      const auto v = pullback_covector(psi, th, xy);
      for (std::size_t a = 0; a < E.n(); ++a) {
        CHECK(j.mu[a].value() == doctest::Approx(v.mu[a]).epsilon(1e-13));
        CHECK(j.nu[a].value() == doctest::Approx(v.nu[a]).epsilon(1e-13));
      }
      for (std::size_t k = 0; k < xy.size(); ++k) {
        auto p = xy;
        auto q = xy;
        p[k] += h;
        q[k] -= h;
        const auto vp = pullback_covector(psi, th, p);
        const auto vq = pullback_covector(psi, th, q);
        for (std::size_t a = 0; a < E.n(); ++a) {
          CHECK(std::abs(j.mu[a].grad()[Eigen::Index(k)] - (vp.mu[a] - vq.mu[a]) / (2 * h)) < 1e-7);
          CHECK(std::abs(j.nu[a].grad()[Eigen::Index(k)] - (vp.nu[a] - vq.nu[a]) / (2 * h)) < 1e-7);
        }
      }
    }
  }
}

TEST_CASE("pullback along a composition") {
  std::mt19937_64 rng(10);
  // TR^3 --Tf--> TR^3 --trivialization--> se(2)
  const auto first = tangent_lift(3, {parse("x1 + 0.2*x3^2"), parse("x2 - 0.1*x1*x3"), parse("x3 + 0.3*x1")});
  const auto second = se2_trivialization();
  const auto both = compose(second, first);
  const auto pts = bundle_points(3, 3, 16, 8);
  CHECK(check_morphism(first, pts, 1e-9).pass());
  CHECK(check_morphism(both, pts, 1e-9).pass());

  const auto th = random_covector(rng, second.target());
  const CovectorJetFn outer = [&](std::span<const double> X) { return covector_jets(th, X); };
  const CovectorJetFn middle = [&](std::span<const double> X) { return pullback_covector(second, outer, X); };
  for (const auto& xy : pts) {
    const auto stacked = pullback_covector(first, middle, xy);
    const auto direct = pullback_covector(both, outer, xy);
    for (std::size_t a = 0; a < 3; ++a) {
      CHECK(std::abs(stacked.mu[a].value() - direct.mu[a].value()) < 1e-12);
      CHECK(std::abs(stacked.nu[a].value() - direct.nu[a].value()) < 1e-12);
      CHECK((stacked.mu[a].grad() - direct.mu[a].grad()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((stacked.nu[a].grad() - direct.nu[a].grad()).cwiseAbs().maxCoeff() < 1e-12);
    }
    ProlongVector Z;
    Z.p = PointE::split(xy, 3);
    Z.z = {0.3, -0.4, 0.5};
    Z.v = {0.1, 0.2, -0.6};
    const auto a = prolong_map(second, prolong_map(first, Z));
    const auto b = prolong_map(both, Z);
    CHECK(max_abs(diff_vec(a.z, b.z)) < 1e-12);
    CHECK(max_abs(diff_vec(a.v, b.v)) < 1e-12);
  }
}
