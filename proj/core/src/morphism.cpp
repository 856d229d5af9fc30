#include "varsode/morphism.hpp"

#include <cmath>
#include <map>
#include <string>

namespace varsode {

namespace {

Index idx(std::size_t k) { return static_cast<Index>(k); }

std::vector<Program> compile(const std::vector<Expr>& exprs, const std::vector<std::string>& vars,
                             const char* what) {
  std::vector<Program> out;
  out.reserve(exprs.size());
  for (const auto& e : exprs) {
    try {
      out.emplace_back(e, vars);
    } catch (const UnboundVariable& u) {
      throw ModelError(std::string(what) + " uses '" + u.name() + "', which is not a base coordinate");
    }
  }
  return out;
}

std::span<const double> base_of(const LieAlgebroid& E, const std::vector<double>& p) {
  if (p.size() == E.m()) return p;
  if (p.size() == E.m() + E.n()) return std::span<const double>(p).first(E.m());
  throw ModelError("point has neither the base nor the bundle dimension");
}

void check_bundle_point(const LieAlgebroid& E, std::span<const double> xy) {
  if (xy.size() != E.m() + E.n()) throw ModelError("point of E has the wrong length");
}

/// w^{a'}_b = rho^i_b dPsi^{a'}_a/dx^i y^a as values.
Eigen::MatrixXd w_matrix(const LieAlgebroid& E, std::size_t nt, const MorphismJets& j,
                         std::span<const double> xy) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const auto s = E.values(xy.first(m));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(idx(nt), idx(n));
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < m; ++i) {
      double dy = 0.0;
      for (std::size_t a = 0; a < n; ++a) dy += j.psi[t * n + a].grad()[idx(i)] * xy[m + a];
      if (dy == 0.0) continue;
      for (std::size_t b = 0; b < n; ++b) w(idx(t), idx(b)) += s.r(i, b) * dy;
    }
  return w;
}

std::string coordinate(std::size_t k) { return "x" + std::to_string(k + 1); }

}  // namespace

struct AlgebroidMorphism::Data {
  LieAlgebroid source;
  LieAlgebroid target;
  std::vector<Expr> base_map;
  std::vector<Expr> fiber_map;
  std::vector<Program> f;
  std::vector<Program> psi;
};

AlgebroidMorphism::AlgebroidMorphism(LieAlgebroid source, LieAlgebroid target,
                                     std::vector<Expr> base_map, std::vector<Expr> fiber_map) {
  if (base_map.size() != target.m())
    throw ModelError("base map has " + std::to_string(base_map.size()) +
                     " components, the target base has dimension " + std::to_string(target.m()));
  if (fiber_map.size() != target.n() * source.n())
    throw ModelError("fiber map must be " + std::to_string(target.n()) + " x " +
                     std::to_string(source.n()));
  auto f = compile(base_map, source.base_variables(), "base map");
  auto psi = compile(fiber_map, source.base_variables(), "fiber map");
  data_ = std::make_shared<const Data>(Data{std::move(source), std::move(target), std::move(base_map),
                                            std::move(fiber_map), std::move(f), std::move(psi)});
}

const LieAlgebroid& AlgebroidMorphism::source() const { return data_->source; }
const LieAlgebroid& AlgebroidMorphism::target() const { return data_->target; }
const std::vector<Expr>& AlgebroidMorphism::base_map() const { return data_->base_map; }
const std::vector<Expr>& AlgebroidMorphism::fiber_map() const { return data_->fiber_map; }

MorphismJets AlgebroidMorphism::jets(std::span<const double> x) const {
  const std::size_t m = data_->source.m();
  if (x.size() != m) throw ModelError("base point has the wrong length");
  std::vector<Jet2> xs;
  for (std::size_t i = 0; i < m; ++i) xs.push_back(Jet2::variable(x[i], idx(m), idx(i)));
  MorphismJets out;
  for (const auto& p : data_->f) out.f.push_back(p.eval(std::span<const Jet2>(xs), idx(m)));
  for (const auto& p : data_->psi) out.psi.push_back(p.eval(std::span<const Jet2>(xs), idx(m)));
  return out;
}

std::vector<double> AlgebroidMorphism::base_image(std::span<const double> x) const {
  if (x.size() != data_->source.m()) throw ModelError("base point has the wrong length");
  std::vector<double> out;
  for (const auto& p : data_->f) out.push_back(p.eval(x));
  return out;
}

Eigen::MatrixXd AlgebroidMorphism::fiber_matrix(std::span<const double> x) const {
  if (x.size() != data_->source.m()) throw ModelError("base point has the wrong length");
  const std::size_t n = data_->source.n();
  const std::size_t nt = data_->target.n();
  Eigen::MatrixXd P(idx(nt), idx(n));
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t a = 0; a < n; ++a) P(idx(t), idx(a)) = data_->psi[t * n + a].eval(x);
  return P;
}

std::vector<double> AlgebroidMorphism::image(std::span<const double> xy) const {
  check_bundle_point(data_->source, xy);
  const std::size_t m = data_->source.m();
  const auto x = xy.first(m);
  const auto P = fiber_matrix(x);
  auto out = base_image(x);
  const Eigen::Map<const Eigen::VectorXd> y(xy.data() + m, idx(data_->source.n()));
  const Eigen::VectorXd yt = P * y;
  out.insert(out.end(), yt.data(), yt.data() + yt.size());
  return out;
}

AlgebroidMorphism identity_morphism(const LieAlgebroid& E) {
  std::vector<Expr> f;
  for (std::size_t i = 0; i < E.m(); ++i) f.push_back(Expr::variable(coordinate(i)));
  std::vector<Expr> psi(E.n() * E.n());
  for (std::size_t a = 0; a < E.n(); ++a) psi[a * E.n() + a] = Expr(1.0);
  return AlgebroidMorphism(E, E, std::move(f), std::move(psi));
}

AlgebroidMorphism tangent_lift(std::size_t m, std::vector<Expr> f) {
  const std::size_t mt = f.size();
  std::vector<Expr> psi(mt * m);
  for (std::size_t j = 0; j < mt; ++j)
    for (std::size_t i = 0; i < m; ++i) psi[j * m + i] = diff(f[j], coordinate(i));
  return AlgebroidMorphism(tangent_bundle(m), tangent_bundle(mt), std::move(f), std::move(psi));
}

AlgebroidMorphism compose(const AlgebroidMorphism& second, const AlgebroidMorphism& first) {
  const auto& mid = first.target();
  if (second.source().m() != mid.m() || second.source().n() != mid.n())
    throw ModelError("morphisms do not compose: dimensions of the middle algebroid differ");
  std::map<std::string, Expr, std::less<>> bind;
  for (std::size_t i = 0; i < mid.m(); ++i) bind[coordinate(i)] = first.base_map()[i];
  std::vector<Expr> f;
  for (const auto& e : second.base_map()) f.push_back(substitute(e, bind));
  const std::size_t n = first.source().n();
  const std::size_t k = mid.n();
  const std::size_t nt = second.target().n();
  std::vector<Expr> psi(nt * n);
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<Expr> row;
    for (std::size_t c = 0; c < k; ++c) row.push_back(substitute(second.fiber_map()[t * k + c], bind));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t c = 0; c < k; ++c) psi[t * n + a] = psi[t * n + a] + row[c] * first.fiber_map()[c * n + a];
  }
  return AlgebroidMorphism(first.source(), second.target(), std::move(f), std::move(psi));
}

Report check_morphism(const AlgebroidMorphism& psi, const Points& points, double tol) {
  const auto& E = psi.source();
  const auto& Et = psi.target();
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const std::size_t mt = Et.m();
  const std::size_t nt = Et.n();

  // d^E of the pulled-back coordinate functions against Psi^T d^E' x'^j.
  std::vector<OneSection> src_fn;
  std::vector<OneSection> tgt_fn;
  for (std::size_t j = 0; j < mt; ++j) {
    src_fn.push_back(dE_function(E, ScalarField(psi.base_map()[j], E.base_variables())));
    tgt_fn.push_back(dE_function(Et, ScalarField(Expr::variable(coordinate(j)), Et.base_variables())));
  }
  // Pulled-back dual basis sections e'^g' are the rows of Psi.
  std::vector<OneSection> src_dual;
  std::vector<OneSection> tgt_dual;
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<Expr> row(psi.fiber_map().begin() + static_cast<std::ptrdiff_t>(t * n),
                          psi.fiber_map().begin() + static_cast<std::ptrdiff_t>((t + 1) * n));
    src_dual.emplace_back(row, E.base_variables());
    std::vector<Expr> e(nt);
    e[t] = Expr(1.0);
    tgt_dual.emplace_back(e, Et.base_variables());
  }

  Report rep(tol);
  for (const char* b : {"anchor", "pullback_function", "pullback_one_section"}) rep.declare(b);
  for (const auto& p : points) {
    const auto x = base_of(E, p);
    const auto id = rep.add_point(std::vector<double>(x.begin(), x.end()));
    try {
      const auto j = psi.jets(x);
      std::vector<double> fx;
      for (const auto& f : j.f) fx.push_back(f.value());
      const auto s = E.values(x);
      const auto st = Et.values(fx);
      for (std::size_t k = 0; k < mt; ++k)
        for (std::size_t a = 0; a < n; ++a) {
          Residual r;
          for (std::size_t t = 0; t < nt; ++t) r.add(st.r(k, t) * j.psi[t * n + a].value());
          for (std::size_t i = 0; i < m; ++i) r.sub(j.f[k].grad()[idx(i)] * s.r(i, a));
          rep.add("anchor", {int(k + 1), int(a + 1)}, id, r);
        }
      for (std::size_t k = 0; k < mt; ++k) {
        const auto lhs = src_fn[k].values(x);
        const auto rhs = tgt_fn[k].values(fx);
        for (std::size_t a = 0; a < n; ++a) {
          Residual r;
          r.add(lhs[a]);
          for (std::size_t t = 0; t < nt; ++t) r.sub(rhs[t] * j.psi[t * n + a].value());
          rep.add("pullback_function", {int(k + 1), int(a + 1)}, id, r);
        }
      }
      Eigen::MatrixXd P(idx(nt), idx(n));
      for (std::size_t t = 0; t < nt; ++t)
        for (std::size_t a = 0; a < n; ++a) P(idx(t), idx(a)) = j.psi[t * n + a].value();
      for (std::size_t g = 0; g < nt; ++g) {
        const Eigen::MatrixXd lhs = dE_one_section(E, src_dual[g], x);
        const Eigen::MatrixXd dt = dE_one_section(Et, tgt_dual[g], fx);
        const Eigen::MatrixXd rhs = P.transpose() * dt * P;
        const Eigen::MatrixXd mag = P.cwiseAbs().transpose() * dt.cwiseAbs() * P.cwiseAbs();
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t c = b + 1; c < n; ++c) {
            const double l = lhs(idx(b), idx(c));
            const double r = rhs(idx(b), idx(c));
            rep.add("pullback_one_section", {int(g + 1), int(b + 1), int(c + 1)}, id, l - r,
                    std::abs(l) + mag(idx(b), idx(c)));
          }
      }
    } catch (const EvalError& e) {
      rep.add_error("eval", id, e.what());
    }
  }
  return rep;
}

ProlongVector prolong_map(const AlgebroidMorphism& psi, const ProlongVector& Z) {
  const auto& E = psi.source();
  const std::size_t n = E.n();
  const std::size_t nt = psi.target().n();
  if (Z.p.x.size() != E.m() || Z.p.y.size() != n || Z.z.size() != n || Z.v.size() != n)
    throw ModelError("element of the prolongation has the wrong shape");
  const auto xy = Z.p.flat();
  const auto j = psi.jets(Z.p.x);
  const auto w = w_matrix(E, nt, j, xy);
  ProlongVector out;
  out.p = PointE::split(psi.image(xy), psi.target().m());
  out.z.assign(nt, 0.0);
  out.v.assign(nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t a = 0; a < n; ++a) {
      const double P = j.psi[t * n + a].value();
      out.z[t] += P * Z.z[a];
      out.v[t] += P * Z.v[a] + w(idx(t), idx(a)) * Z.z[a];
    }
  return out;
}

AlgebroidMorphism prolong_morphism(const AlgebroidMorphism& psi) {
  const auto& E = psi.source();
  const auto& Et = psi.target();
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const std::size_t nt = Et.n();
  // The prolongation's base layout names y^a as x(m+a).
  std::vector<Expr> y;
  for (std::size_t a = 0; a < n; ++a) y.push_back(Expr::variable(coordinate(m + a)));
  std::vector<Expr> f = psi.base_map();
  for (std::size_t t = 0; t < nt; ++t) {
    Expr yt;
    for (std::size_t a = 0; a < n; ++a) yt = yt + psi.fiber_map()[t * n + a] * y[a];
    f.push_back(yt);
  }
  // [[Psi, 0], [w, Psi]] acting on (z, v).
  const std::size_t N = 2 * n;
  std::vector<Expr> P(2 * nt * N);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t a = 0; a < n; ++a) {
      const Expr& e = psi.fiber_map()[t * n + a];
      P[t * N + a] = e;
      P[(nt + t) * N + n + a] = e;
    }
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < m; ++i) {
      Expr dy;
      for (std::size_t a = 0; a < n; ++a) dy = dy + diff(psi.fiber_map()[t * n + a], coordinate(i)) * y[a];
      if (dy.is_zero()) continue;
      for (std::size_t b = 0; b < n; ++b) P[(nt + t) * N + b] = P[(nt + t) * N + b] + E.anchor(i, b) * dy;
    }
  return AlgebroidMorphism(prolong_structure(E), prolong_structure(Et), std::move(f), std::move(P));
}

CovectorValue pullback_covector(const AlgebroidMorphism& psi, const ProlongCovector& target,
                                std::span<const double> xy) {
  const auto& E = psi.source();
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const std::size_t nt = psi.target().n();
  check_bundle_point(E, xy);
  if (target.mu.size() != nt || target.nu.size() != nt)
    throw ModelError("covector on the target has the wrong shape");
  const auto X = psi.image(xy);
  const auto mu = target.mu.values(X);
  const auto nu = target.nu.values(X);
  const auto j = psi.jets(xy.first(m));
  const auto w = w_matrix(E, nt, j, xy);
  CovectorValue out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t t = 0; t < nt; ++t) {
      const double P = j.psi[t * n + b].value();
      out.mu[b] += mu[t] * P + nu[t] * w(idx(t), idx(b));
      out.nu[b] += nu[t] * P;
    }
  return out;
}

CovectorJets pullback_covector(const AlgebroidMorphism& psi, const CovectorJetFn& target,
                               std::span<const double> xy) {
  const auto& E = psi.source();
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const std::size_t nt = psi.target().n();
  check_bundle_point(E, xy);
  const auto D = idx(m + n);
  const auto x = xy.first(m);
  const auto j = psi.jets(x);
  std::vector<Jet1> y;
  for (std::size_t a = 0; a < n; ++a) y.push_back(Jet1::variable(xy[m + a], D, idx(m + a)));
  std::vector<Jet1> P;
  for (const auto& p : j.psi) P.push_back(embed(truncate(p), D));

  // The image (f(x), Psi(x) y) as jets over the layout of E.
  std::vector<Jet1> inner;
  std::vector<double> X;
  for (const auto& f : j.f) {
    inner.push_back(embed(truncate(f), D));
    X.push_back(f.value());
  }
  for (std::size_t t = 0; t < nt; ++t) {
    Jet1 v = Jet1::constant(0.0, D);
    for (std::size_t a = 0; a < n; ++a) v += P[t * n + a] * y[a];
    X.push_back(v.value());
    inner.push_back(std::move(v));
  }
  const auto c = target(X);
  if (c.mu.size() != nt || c.nu.size() != nt) throw ModelError("covector on the target has the wrong shape");

  std::vector<Jet1> mu;
  std::vector<Jet1> nu;
  for (std::size_t t = 0; t < nt; ++t) {
    mu.push_back(compose(c.mu[t], inner));
    nu.push_back(compose(c.nu[t], inner));
  }

  // w^{t}_b = rho^i_b dPsi^t_a/dx^i y^a
  const auto s = E.jets1(x, D);
  std::vector<Jet1> w(nt * n, Jet1::constant(0.0, D));
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < m; ++i) {
      Jet1 dy = Jet1::constant(0.0, D);
      bool any = false;
      for (std::size_t a = 0; a < n; ++a) {
        const Jet1 d = embed(partial(j.psi[t * n + a], idx(i)), D);
        if (d.value() == 0.0 && d.grad().isZero()) continue;
        dy += d * y[a];
        any = true;
      }
      if (!any) continue;
      for (std::size_t b = 0; b < n; ++b)
        if (s.r_live(i, b)) w[t * n + b] += s.r(i, b) * dy;
    }

  CovectorJets out;
  for (std::size_t b = 0; b < n; ++b) {
    Jet1 a = Jet1::constant(0.0, D);
    Jet1 v = Jet1::constant(0.0, D);
    for (std::size_t t = 0; t < nt; ++t) {
      a += mu[t] * P[t * n + b] + nu[t] * w[t * n + b];
      v += nu[t] * P[t * n + b];
    }
    out.mu.push_back(std::move(a));
    out.nu.push_back(std::move(v));
  }
  return out;
}

Report sode_related(const AlgebroidMorphism& psi, const SodeSection& gamma,
                    const SodeSection& gamma_target, const Points& points, double tol) {
  const auto& E = psi.source();
  const auto& Et = psi.target();
  if (gamma.size() != E.n() || gamma.arity() != E.m() + E.n())
    throw ModelError("SODE components have the wrong shape");
  if (gamma_target.size() != Et.n() || gamma_target.arity() != Et.m() + Et.n())
    throw ModelError("target SODE components have the wrong shape");
  Report rep(tol);
  rep.declare("T");
  rep.declare("V");
  for (const auto& xy : points) {
    check_bundle_point(E, xy);
    const auto id = rep.add_point(xy);
    try {
      ProlongVector Z;
      Z.p = PointE::split(xy, E.m());
      Z.z = Z.p.y;
      Z.v = gamma.values(xy);
      const auto L = prolong_map(psi, Z);
      const auto gt = gamma_target.values(L.p.flat());
      for (std::size_t t = 0; t < Et.n(); ++t) {
        rep.add("T", {int(t + 1)}, id, L.z[t] - L.p.y[t], std::abs(L.z[t]) + std::abs(L.p.y[t]));
        rep.add("V", {int(t + 1)}, id, gt[t] - L.v[t], std::abs(gt[t]) + std::abs(L.v[t]));
      }
    } catch (const EvalError& e) {
      rep.add_error("eval", id, e.what());
    }
  }
  return rep;
}

ReductionReport reduction_check(const AlgebroidMorphism& psi, const SodeSection& gamma,
                                const SodeSection& gamma_target, const MultiplierMap& F_target,
                                const Points& points, double tol) {
  const auto& E = psi.source();
  const auto& Et = psi.target();
  ReductionReport out;
  out.related = sode_related(psi, gamma, gamma_target, points, tol);
  Points images;
  for (const auto& xy : points) images.push_back(psi.image(xy));
  out.target = classify(Et, gamma_target, F_target, images, tol);
  const auto cls = out.target.classification;
  out.hypothesis = cls == Classification::variational || cls == Classification::weak_variational;
  const bool kernel = cls == Classification::variational;

  const CovectorJetFn theta = [&](std::span<const double> X) {
    return theta_jets(Et, gamma_target, F_target, X);
  };
  out.pulled = Report(tol);
  for (const char* b : {"R1", "R2", "R3"}) out.pulled.declare(b);
  if (kernel) out.pulled.declare("K");
  for (const auto& xy : points) {
    const auto id = out.pulled.add_point(xy);
    try {
      const auto c = pullback_covector(psi, theta, xy);
      add_closedness(E, c, xy, out.pulled, id);
      if (!kernel) continue;
      const auto x = std::span<const double>(xy).first(E.m());
      if (const auto& k = E.kernel_indices()) {
        for (auto I : *k)
          out.pulled.add("K", {int(I + 1)}, id, c.mu[I].value(), std::abs(c.mu[I].value()));
      } else {
        const auto kb = kernel_basis(E, x);
        for (Index col = 0; col < kb.basis.cols(); ++col) {
          Residual r;
          for (std::size_t a = 0; a < E.n(); ++a) r.add(c.mu[a].value() * kb.basis(idx(a), col));
          out.pulled.add("K", {int(col + 1)}, id, r);
        }
      }
    } catch (const EvalError& e) {
      out.pulled.add_error("eval", id, e.what());
    }
  }
  return out;
}

}  // namespace varsode
