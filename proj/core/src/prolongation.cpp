#include "varsode/prolongation.hpp"

#include <algorithm>
#include <cmath>

namespace varsode {

namespace {

void check_point(const LieAlgebroid& E, std::span<const double> xy) {
  if (xy.size() != E.m() + E.n()) throw ModelError("point of E has the wrong length");
}

FieldVector zeros(std::size_t n, std::size_t m) {
  return FieldVector(std::vector<Expr>(n), bundle_names(m, n));
}

std::string pair_label(const LieAlgebroid& E, std::size_t a, std::size_t b) {
  const auto& k = E.kernel_indices();
  if (!k) return {};
  auto vertical = [&](std::size_t i) { return std::find(k->begin(), k->end(), i) != k->end(); };
  const int v = int(vertical(a)) + int(vertical(b));
  return v == 0 ? "HH" : v == 1 ? "HV" : "VV";
}

}  // namespace

LieAlgebroid prolong_structure(const LieAlgebroid& E) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const std::size_t M = m + n;
  const std::size_t N = 2 * n;
  std::vector<Expr> anchor(M * N);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < n; ++a) anchor[i * N + a] = E.anchor(i, a);
  for (std::size_t a = 0; a < n; ++a) anchor[(m + a) * N + n + a] = Expr(1.0);
  std::vector<BracketEntry> br;
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (!E.structure(g, a, b).is_zero()) br.push_back({g, a, b, E.structure(g, a, b)});
  LieAlgebroid::Options o;
  o.kind = AlgebroidKind::prolongation;
  return LieAlgebroid(M, N, std::move(anchor), br, std::move(o));
}

ProlongSection vertical_endo(const ProlongSection& s) {
  const std::size_t d = s.t.arity();
  if (s.t.symbolic() && s.t.size() > 0)
    return {FieldVector(std::vector<Expr>(s.t.size()), s.t.component(0).variables()), s.t};
  std::vector<ScalarField> t;
  for (std::size_t a = 0; a < s.t.size(); ++a)
    t.push_back(ScalarField::from_jet(
        d, [d](std::span<const double>) { return Jet2::constant(0.0, static_cast<Index>(d)); }));
  return {FieldVector(std::move(t)), s.t};
}

ProlongSection euler_section(const LieAlgebroid& E) {
  const auto names = bundle_names(E.m(), E.n());
  std::vector<Expr> y;
  for (std::size_t a = 0; a < E.n(); ++a) y.push_back(Expr::variable(names[E.m() + a]));
  return {zeros(E.n(), E.m()), FieldVector(y, names)};
}

ProlongSection sode_section(const LieAlgebroid& E, const FieldVector& gamma) {
  if (gamma.size() != E.n() || gamma.arity() != E.m() + E.n())
    throw ModelError("SODE components have the wrong shape");
  return {euler_section(E).v, gamma};
}

Report sode_check(const LieAlgebroid& E, const ProlongSection& X, const Points& points,
                  double tol) {
  const std::size_t m = E.m();
  const auto S = vertical_endo(X);
  Report rep(tol);
  rep.declare("S");
  for (const auto& xy : points) {
    check_point(E, xy);
    const auto p = rep.add_point(xy);
    try {
      const auto st = S.t.values(xy);
      const auto sv = S.v.values(xy);
      for (std::size_t a = 0; a < E.n(); ++a) {
        rep.add("S", {int(a + 1)}, p, st[a], std::abs(st[a]), "T");
        Residual r;
        r.add(sv[a]);
        r.sub(xy[m + a]);
        rep.add("S", {int(a + 1)}, p, r, "V");
      }
    } catch (const EvalError& e) {
      rep.add_error("S", p, e.what());
    }
  }
  return rep;
}

std::vector<ProlongSection> horizontal_lift_basis(const LieAlgebroid& E, const FieldVector& gamma) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const auto names = bundle_names(m, n);
  std::vector<ProlongSection> out;
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<Expr> t(n);
    t[a] = Expr(1.0);
    ProlongSection h{FieldVector(t, names), {}};
    if (gamma.symbolic()) {
      const auto G = gamma.exprs();
      std::vector<Expr> lam(n);
      for (std::size_t g = 0; g < n; ++g) {
        Expr c;
        for (std::size_t b = 0; b < n; ++b) c = c + E.structure(g, a, b) * Expr::variable(names[m + b]);
        lam[g] = Expr(0.5) * (diff(G[g], names[m + a]) - c);
      }
      h.v = FieldVector(lam, names);
    } else {
      std::vector<ScalarField> lam;
      for (std::size_t g = 0; g < n; ++g)
        lam.push_back(ScalarField::from_value(m + n, [E, gamma, a, g, m, n](std::span<const double> xy) {
          const auto G = gamma.jets(xy);
          const auto s = E.values(xy.first(m));
          double c = 0.0;
          for (std::size_t b = 0; b < n; ++b) c += s.C(g, a, b) * xy[m + b];
          return 0.5 * (G[g].grad()[static_cast<Index>(m + a)] - c);
        }));
      h.v = FieldVector(std::move(lam));
    }
    out.push_back(std::move(h));
  }
  return out;
}

TulczyjewImage tulczyjew_map(const LieAlgebroid& E, std::span<const double> x,
                             std::span<const double> ystar, std::span<const double> z,
                             std::span<const double> v) {
  const std::size_t n = E.n();
  if (x.size() != E.m() || ystar.size() != n || z.size() != n || v.size() != n)
    throw ModelError("Tulczyjew map arguments have the wrong lengths");
  const auto s = E.values(x);
  TulczyjewImage out{{x.begin(), x.end()}, {z.begin(), z.end()}, {v.begin(), v.end()},
                     {ystar.begin(), ystar.end()}};
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t g = 0; g < n; ++g)
      for (std::size_t b = 0; b < n; ++b) out.w[a] += s.C(g, a, b) * ystar[g] * z[b];
  return out;
}

LiftImage lift_map(const LieAlgebroid& E, const FieldVector& F, const ProlongVector& p) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  if (p.p.x.size() != m || p.p.y.size() != n || p.z.size() != n || p.v.size() != n)
    throw ModelError("prolongation vector has the wrong shape");
  const auto xy = p.p.flat();
  const auto f = F.jets(xy);
  const auto s = E.values(p.p.x);
  LiftImage out{p.p.x, {}, p.z, std::vector<double>(n, 0.0)};
  for (std::size_t a = 0; a < n; ++a) {
    out.ystar.push_back(f[a].value());
    const auto& g = f[a].grad();
    for (std::size_t i = 0; i < m; ++i) {
      double rz = 0.0;
      for (std::size_t b = 0; b < n; ++b) rz += s.r(i, b) * p.z[b];
      out.w[a] += rz * g[static_cast<Index>(i)];
    }
    for (std::size_t b = 0; b < n; ++b) out.w[a] += p.v[b] * g[static_cast<Index>(m + b)];
  }
  return out;
}

ThetaSection theta_composition(const LieAlgebroid& E, const FieldVector& gamma,
                               const FieldVector& F, std::span<const double> xy) {
  check_point(E, xy);
  const auto pe = PointE::split(xy, E.m());
  ProlongVector g{pe, pe.y, gamma.values(xy)};
  const auto lf = lift_map(E, F, g);
  const auto a = tulczyjew_map(E, lf.x, lf.ystar, lf.z, lf.w);
  return {a.w, a.ystar};
}

void add_closedness(const LieAlgebroid& E, const CovectorJets& c, std::span<const double> xy,
                    Report& rep, std::size_t point) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const auto s = E.values(xy.first(m));
  auto dx = [&](const Jet1& j, std::size_t i) { return j.grad()[static_cast<Index>(i)]; };
  auto dy = [&](const Jet1& j, std::size_t b) { return j.grad()[static_cast<Index>(m + b)]; };
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t g = b + 1; g < n; ++g) {
      Residual r;
      r.add(dy(c.nu[b], g));
      r.sub(dy(c.nu[g], b));
      rep.add("R1", {int(b + 1), int(g + 1)}, point, r, pair_label(E, b, g));
    }
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t g = 0; g < n; ++g) {
      Residual r;
      r.add(dy(c.mu[g], b));
      for (std::size_t i = 0; i < m; ++i) r.sub(s.r(i, g) * dx(c.nu[b], i));
      rep.add("R2", {int(b + 1), int(g + 1)}, point, r, pair_label(E, b, g));
    }
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t g = b + 1; g < n; ++g) {
      Residual r;
      for (std::size_t i = 0; i < m; ++i) {
        r.add(s.r(i, b) * dx(c.mu[g], i));
        r.sub(s.r(i, g) * dx(c.mu[b], i));
      }
      for (std::size_t a = 0; a < n; ++a) r.sub(c.mu[a].value() * s.C(a, b, g));
      rep.add("R3", {int(b + 1), int(g + 1)}, point, r, pair_label(E, b, g));
    }
}

Report closedness_report(const LieAlgebroid& E, const CovectorJetFn& c, const Points& points,
                         double tol) {
  Report rep(tol);
  for (const char* b : {"R1", "R2", "R3"}) rep.declare(b);
  for (const auto& xy : points) {
    check_point(E, xy);
    const auto p = rep.add_point(xy);
    try {
      add_closedness(E, c(xy), xy, rep, p);
    } catch (const EvalError& e) {
      rep.add_error("R", p, e.what());
    }
  }
  return rep;
}

CovectorJets covector_jets(const ProlongCovector& c, std::span<const double> xy) {
  CovectorJets out;
  for (const auto& j : c.mu.jets(xy)) out.mu.push_back(truncate(j));
  for (const auto& j : c.nu.jets(xy)) out.nu.push_back(truncate(j));
  return out;
}

}  // namespace varsode
