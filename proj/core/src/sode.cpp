#include "varsode/sode.hpp"

#include <cmath>
#include <limits>

namespace varsode {

namespace {

void check_inputs(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap* F) {
  const std::size_t d = E.m() + E.n();
  if (gamma.size() != E.n() || gamma.arity() != d)
    throw ModelError("SODE components have the wrong shape");
  if (F && (F->size() != E.n() || F->arity() != d))
    throw ModelError("multiplier components have the wrong shape");
}

void check_point(const LieAlgebroid& E, std::span<const double> xy) {
  if (xy.size() != E.m() + E.n()) throw ModelError("point of E has the wrong length");
}

Index idx(std::size_t k) { return static_cast<Index>(k); }

/// dF_a/dy^b from Jet2 components.
Eigen::MatrixXd fiber_jacobian(const std::vector<Jet2>& F, std::size_t m) {
  const auto n = idx(F.size());
  Eigen::MatrixXd g(n, n);
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b) g(a, b) = F[static_cast<std::size_t>(a)].grad()[idx(m) + b];
  return g;
}

double condition_number(const Eigen::MatrixXd& g) {
  if (g.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  const auto& s = svd.singularValues();
  const double lo = s[s.size() - 1];
  return lo > 0.0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

CovectorJets theta_from(const LieAlgebroid& E, const std::vector<Jet2>& Fj,
                        const std::vector<Jet2>& Gj, std::span<const double> xy) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const auto D = idx(m + n);
  const auto s = E.jets1(xy.first(m), D);
  std::vector<Jet1> y;
  for (std::size_t b = 0; b < n; ++b) y.push_back(Jet1::variable(xy[m + b], D, idx(m + b)));
  // u^i = rho^i_b y^b
  std::vector<Jet1> u(m, Jet1::constant(0.0, D));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t b = 0; b < n; ++b)
      if (s.r_live(i, b)) u[i] += s.r(i, b) * y[b];
  CovectorJets out;
  for (const auto& f : Fj) out.nu.push_back(truncate(f));
  for (std::size_t a = 0; a < n; ++a) {
    Jet1 t = Jet1::constant(0.0, D);
    for (std::size_t i = 0; i < m; ++i) t += partial(Fj[a], idx(i)) * u[i];
    for (std::size_t b = 0; b < n; ++b) t += partial(Fj[a], idx(m + b)) * truncate(Gj[b]);
    for (std::size_t g = 0; g < n; ++g) {
      Jet1 cy = Jet1::constant(0.0, D);
      bool any = false;
      for (std::size_t b = 0; b < n; ++b)
        if (s.C_live(g, a, b)) {
          cy += s.C(g, a, b) * y[b];
          any = true;
        }
      if (any) t += cy * out.nu[g];
    }
    out.mu.push_back(std::move(t));
  }
  return out;
}

struct PointData {
  std::vector<Jet2> F;
  std::vector<Jet2> G;
  CovectorJets theta;
  double condition = 1.0;
};

PointData evaluate(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                   std::span<const double> xy) {
  PointData d;
  d.F = F.jets(xy);
  d.G = gamma.jets(xy);
  d.theta = theta_from(E, d.F, d.G, xy);
  d.condition = condition_number(fiber_jacobian(d.F, E.m()));
  return d;
}

void add_kernel(const LieAlgebroid& E, const CovectorJets& th, std::span<const double> xy,
                Report& rep, std::size_t p) {
  const std::size_t n = E.n();
  if (const auto& k = E.kernel_indices()) {
    for (auto I : *k) rep.add("K", {int(I + 1)}, p, th.mu[I].value(), std::abs(th.mu[I].value()));
    return;
  }
  const auto kb = kernel_basis(E, xy.first(E.m()));
  for (Index c = 0; c < kb.basis.cols(); ++c) {
    Residual r;
    for (std::size_t a = 0; a < n; ++a) r.add(th.mu[a].value() * kb.basis(idx(a), c));
    rep.add("K", {int(c + 1)}, p, r);
  }
}

Points base_parts(const LieAlgebroid& E, const Points& points) {
  Points xs;
  xs.reserve(points.size());
  for (const auto& p : points) {
    check_point(E, p);
    xs.emplace_back(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(E.m()));
  }
  return xs;
}

HelmholtzReport run(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                    const Points& points, double tol, bool with_kernel) {
  check_inputs(E, gamma, &F);
  if (with_kernel && !E.kernel_indices()) check_regular(E, base_parts(E, points));
  HelmholtzReport out;
  out.report = Report(tol);
  for (const char* b : {"R1", "R2", "R3"}) out.report.declare(b);
  if (with_kernel) out.report.declare("K");
  std::vector<CovectorJets> thetas;
  for (const auto& xy : points) {
    check_point(E, xy);
    const auto p = out.report.add_point(xy);
    try {
      auto d = evaluate(E, gamma, F, xy);
      out.condition.push_back(d.condition);
      if (!(d.condition <= degenerate_condition)) out.degenerate = true;
      add_closedness(E, d.theta, xy, out.report, p);
      if (with_kernel) add_kernel(E, d.theta, xy, out.report, p);
      thetas.push_back(std::move(d.theta));
    } catch (const EvalError& e) {
      out.condition.push_back(std::numeric_limits<double>::quiet_NaN());
      out.report.add_error("eval", p, e.what());
      thetas.emplace_back();
    }
  }
  const Report& r = out.report;
  const bool closed = r.pass("R1") && r.pass("R2") && r.pass("R3") && r.pass("eval");
  if (out.degenerate)
    out.classification = Classification::degenerate;
  else if (!closed)
    out.classification = Classification::fails;
  else if (!with_kernel || r.pass("K"))
    out.classification = Classification::variational;
  else
    out.classification = Classification::weak_variational;

  const auto& k = E.kernel_indices();
  if (closed && k && !k->empty()) {
    Report diag(tol);
    diag.declare("theta_I_y");
    for (std::size_t q = 0; q < points.size(); ++q) {
      const auto p = diag.add_point(points[q]);
      if (thetas[q].mu.empty()) continue;
      for (auto I : *k)
        for (std::size_t b = 0; b < E.n(); ++b) {
          const double v = thetas[q].mu[I].grad()[idx(E.m() + b)];
          diag.add("theta_I_y", {int(I + 1), int(b + 1)}, p, v, std::abs(v));
        }
    }
    out.diagnostics = std::move(diag);
  }
  return out;
}

}  // namespace

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::variational: return "variational";
    case Classification::weak_variational: return "weak_variational";
    case Classification::fails: return "fails";
    case Classification::degenerate: return "degenerate";
  }
  return "fails";
}

double sode_derivative(const LieAlgebroid& E, const SodeSection& gamma, const ScalarField& f,
                       std::span<const double> xy) {
  check_inputs(E, gamma, nullptr);
  check_point(E, xy);
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const Jet1 j = f.jet1(xy);
  const auto G = gamma.values(xy);
  const auto s = E.values(xy.first(m));
  double out = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < m; ++i) out += xy[m + a] * s.r(i, a) * j.grad()[idx(i)];
    out += G[a] * j.grad()[idx(m + a)];
  }
  return out;
}

CovectorJets theta_jets(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                        std::span<const double> xy) {
  check_inputs(E, gamma, &F);
  check_point(E, xy);
  return theta_from(E, F.jets(xy), gamma.jets(xy), xy);
}

ThetaSection theta_components(const LieAlgebroid& E, const SodeSection& gamma,
                              const MultiplierMap& F, std::span<const double> xy) {
  const auto j = theta_jets(E, gamma, F, xy);
  ThetaSection out;
  for (const auto& t : j.mu) out.theta.push_back(t.value());
  for (const auto& f : j.nu) out.F.push_back(f.value());
  return out;
}

HelmholtzReport helmholtz_residuals(const LieAlgebroid& E, const SodeSection& gamma,
                                    const MultiplierMap& F, const Points& points, double tol) {
  return run(E, gamma, F, points, tol, false);
}

Report kernel_condition(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                        const Points& points, double tol) {
  check_inputs(E, gamma, &F);
  if (!E.kernel_indices()) check_regular(E, base_parts(E, points));
  Report rep(tol);
  rep.declare("K");
  for (const auto& xy : points) {
    check_point(E, xy);
    const auto p = rep.add_point(xy);
    try {
      add_kernel(E, theta_jets(E, gamma, F, xy), xy, rep, p);
    } catch (const EvalError& e) {
      rep.add_error("K", p, e.what());
    }
  }
  return rep;
}

HelmholtzReport classify(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                         const Points& points, double tol) {
  return run(E, gamma, F, points, tol, true);
}

namespace {

struct Connection {
  Eigen::MatrixXd Lambda;
  Eigen::MatrixXd D;
  Eigen::MatrixXd Phi;
};

Connection connection_at(const LieAlgebroid& E, const std::vector<Jet2>& G,
                         std::span<const double> xy) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const auto D = idx(m + n);
  const auto s = E.jets1(xy.first(m), D);
  auto y = [&](std::size_t b) { return xy[m + b]; };
  auto dG = [&](std::size_t g, std::size_t k) { return G[g].grad()[idx(k)]; };
  auto hG = [&](std::size_t g, std::size_t k, std::size_t l) { return G[g].hess()(idx(k), idx(l)); };
  auto C = [&](std::size_t g, std::size_t a, std::size_t b) {
    return s.C_live(g, a, b) ? s.C(g, a, b).value() : 0.0;
  };
  auto dC = [&](std::size_t g, std::size_t a, std::size_t b, std::size_t i) {
    return s.C_live(g, a, b) ? s.C(g, a, b).grad()[idx(i)] : 0.0;
  };
  auto rho = [&](std::size_t i, std::size_t a) { return s.r_live(i, a) ? s.r(i, a).value() : 0.0; };

  Connection q;
  q.Lambda.resize(idx(n), idx(n));
  q.D.resize(idx(n), idx(n));
  q.Phi.resize(idx(n), idx(n));
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t a = 0; a < n; ++a) {
      double cy = 0.0;
      double yc = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        cy += C(g, a, b) * y(b);
        yc += y(b) * C(g, b, a);
      }
      q.Lambda(idx(g), idx(a)) = 0.5 * (dG(g, m + a) - cy);
      q.D(idx(g), idx(a)) = 0.5 * (yc - dG(g, m + a));
    }
  // v^i = y^a rho^i_a
  std::vector<double> v(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < n; ++a) v[i] += y(a) * rho(i, a);
  const auto Gv = [&] {
    std::vector<double> out;
    for (const auto& j : G) out.push_back(j.value());
    return out;
  }();
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t e = 0; e < n; ++e) {
      double phi = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double dCy = 0.0;
        for (std::size_t b = 0; b < n; ++b) dCy += dC(g, e, b, i) * y(b);
        phi += v[i] * 0.5 * (hG(g, i, m + e) - dCy);
      }
      for (std::size_t a = 0; a < n; ++a) phi += Gv[a] * 0.5 * (hG(g, m + a, m + e) - C(g, e, a));
      for (std::size_t u = 0; u < n; ++u) {
        const double lue = q.Lambda(idx(u), idx(e));
        phi += lue * q.Lambda(idx(g), idx(u));
        phi -= lue * dG(g, m + u);
      }
      for (std::size_t i = 0; i < m; ++i) phi -= rho(i, e) * dG(g, i);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t u = 0; u < n; ++u) phi += y(a) * C(u, e, a) * q.Lambda(idx(g), idx(u));
      q.Phi(idx(g), idx(e)) = phi;
    }
  return q;
}

}  // namespace

ConnectionQuantities connection_quantities(const LieAlgebroid& E, const SodeSection& gamma,
                                           std::span<const double> xy) {
  check_inputs(E, gamma, nullptr);
  check_point(E, xy);
  auto q = connection_at(E, gamma.jets(xy), xy);
  return {std::move(q.Lambda), std::move(q.D), std::move(q.Phi)};
}

Report pop_residuals(const LieAlgebroid& E, const SodeSection& gamma, const MultiplierMap& F,
                     const Points& points, double tol) {
  check_inputs(E, gamma, &F);
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  Report rep(tol);
  for (const char* b : {"P1", "P2", "P3", "P4"}) rep.declare(b);
  for (const auto& xy : points) {
    check_point(E, xy);
    const auto p = rep.add_point(xy);
    try {
      const auto Fj = F.jets(xy);
      const auto G = gamma.jets(xy);
      const auto q = connection_at(E, G, xy);
      const auto s = E.values(std::span<const double>(xy).first(m));
      auto g = [&](std::size_t a, std::size_t b) { return Fj[a].grad()[idx(m + b)]; };
      auto dxF = [&](std::size_t a, std::size_t i) { return Fj[a].grad()[idx(i)]; };
      // A_ca as its list of terms
      auto A = [&](Residual& r, double sign, std::size_t c, std::size_t a) {
        for (std::size_t i = 0; i < m; ++i) r.add(sign * s.r(i, c) * dxF(a, i));
        for (std::size_t u = 0; u < n; ++u) r.add(sign * q.Lambda(idx(u), idx(c)) * g(a, u));
        for (std::size_t u = 0; u < n; ++u) r.add(-sign * 0.5 * Fj[u].value() * s.C(u, c, a));
      };
      std::vector<double> v(m, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < n; ++a) v[i] += xy[m + a] * s.r(i, a);

      for (std::size_t e = 0; e < n; ++e)
        for (std::size_t b = e + 1; b < n; ++b) {
          Residual r1;
          r1.add(g(b, e));
          r1.sub(g(e, b));
          rep.add("P1", {int(e + 1), int(b + 1)}, p, r1);
          Residual r2;
          A(r2, 1.0, e, b);
          A(r2, -1.0, b, e);
          rep.add("P2", {int(e + 1), int(b + 1)}, p, r2);
          Residual r3;
          for (std::size_t c = 0; c < n; ++c) {
            r3.add(g(b, c) * q.Phi(idx(c), idx(e)));
            r3.sub(g(e, c) * q.Phi(idx(c), idx(b)));
          }
          rep.add("P3", {int(e + 1), int(b + 1)}, p, r3);
        }
      for (std::size_t e = 0; e < n; ++e)
        for (std::size_t b = 0; b < n; ++b) {
          Residual r4;
          const auto& H = Fj[e].hess();
          for (std::size_t i = 0; i < m; ++i) r4.add(v[i] * H(idx(i), idx(m + b)));
          for (std::size_t a = 0; a < n; ++a) r4.add(G[a].value() * H(idx(m + a), idx(m + b)));
          for (std::size_t c = 0; c < n; ++c) {
            r4.sub(g(c, b) * q.D(idx(c), idx(e)));
            r4.sub(g(e, c) * q.D(idx(c), idx(b)));
          }
          rep.add("P4", {int(e + 1), int(b + 1)}, p, r4);
        }
    } catch (const EvalError& e) {
      rep.add_error("eval", p, e.what());
    }
  }
  return rep;
}

AtiyahReducedReport atiyah_reduced_residuals(const LieAlgebroid& E, const SodeSection& gamma,
                                             const MultiplierMap& F, const Points& points,
                                             double tol) {
  const AtiyahData* D = E.atiyah();
  if (!D) throw ModelError("reduced conditions need an Atiyah algebroid");
  check_inputs(E, gamma, &F);
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const std::size_t ng = D->ng;
  const auto xnames = base_names(m);
  std::vector<Program> A;
  for (const auto& e : D->A) A.emplace_back(e, xnames);
  auto c = [&](std::size_t g, std::size_t a, std::size_t b) { return D->c[(g * ng + a) * ng + b]; };

  AtiyahReducedReport out{Report(tol), Report(tol), true};
  for (const char* b : {"symmetry", "mixed", "horizontal", "vertical"}) out.reduced.declare(b);
  for (const char* b : {"implied_dy", "implied_dx", "implied_c"}) out.implied.declare(b);
  for (const auto& xy : points) {
    check_point(E, xy);
    const auto p = out.reduced.add_point(xy);
    out.implied.add_point(xy);
    try {
      const auto th = theta_jets(E, gamma, F, xy);
      auto dy = [&](const Jet1& j, std::size_t b) { return j.grad()[idx(m + b)]; };
      auto dx = [&](const Jet1& j, std::size_t i) { return j.grad()[idx(i)]; };
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t g = b + 1; g < n; ++g) {
          Residual r;
          r.add(dy(th.nu[b], g));
          r.sub(dy(th.nu[g], b));
          out.reduced.add("symmetry", {int(b + 1), int(g + 1)}, p, r);
        }
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t b = 0; b < n; ++b) {
          Residual r;
          r.add(dy(th.mu[j], b));
          r.sub(dx(th.nu[b], j));
          out.reduced.add("mixed", {int(j + 1), int(b + 1)}, p, r);
        }
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
          Residual r;
          r.add(dx(th.mu[i], j));
          r.sub(dx(th.mu[j], i));
          out.reduced.add("horizontal", {int(i + 1), int(j + 1)}, p, r);
        }
      for (std::size_t a = 0; a < ng; ++a) {
        const double v = th.mu[m + a].value();
        out.reduced.add("vertical", {int(m + a + 1)}, p, v, std::abs(v));
      }

      std::vector<double> Ax;
      for (const auto& prog : A) Ax.push_back(prog.eval(std::span<const double>(xy).first(m)));
      for (std::size_t b = 0; b < ng; ++b) {
        for (std::size_t k = 0; k < n; ++k) {
          const double v = dy(th.mu[m + b], k);
          out.implied.add("implied_dy", {int(m + b + 1), int(k + 1)}, p, v, std::abs(v));
        }
        for (std::size_t i = 0; i < m; ++i) {
          Residual r;
          r.add(dx(th.mu[m + b], i));
          for (std::size_t a = 0; a < ng; ++a)
            for (std::size_t d = 0; d < ng; ++d)
              if (c(a, b, d) != 0.0) r.sub(th.mu[m + a].value() * c(a, b, d) * Ax[d * m + i]);
          out.implied.add("implied_dx", {int(m + b + 1), int(i + 1)}, p, r);
        }
      }
      for (std::size_t a = 0; a < ng; ++a)
        for (std::size_t b = a + 1; b < ng; ++b) {
          Residual r;
          for (std::size_t k = 0; k < ng; ++k) r.add(th.mu[m + k].value() * c(k, a, b));
          out.implied.add("implied_c", {int(m + a + 1), int(m + b + 1)}, p, r);
        }
    } catch (const EvalError& e) {
      out.reduced.add_error("eval", p, e.what());
    }
  }
  out.implication_holds = !out.reduced.pass("vertical") || out.implied.pass();
  return out;
}

}  // namespace varsode
