#include "varsode/variational.hpp"

#include "varsode/quadrature.hpp"

#include <cmath>
#include <limits>

namespace varsode {

namespace {

Index idx(std::size_t k) { return static_cast<Index>(k); }

void check_point(const LieAlgebroid& E, std::span<const double> xy) {
  if (xy.size() != E.m() + E.n()) throw ModelError("point of E has the wrong length");
}

void check_lagrangian(const LieAlgebroid& E, const Lagrangian& L) {
  if (L.arity() != E.m() + E.n()) throw ModelError("Lagrangian has the wrong arity");
}

const Expr& symbolic(const LieAlgebroid& E, const Lagrangian& L) {
  check_lagrangian(E, L);
  if (!L.expr()) throw ModelError("this operation needs a symbolic Lagrangian");
  if (L.variables() != bundle_names(E.m(), E.n()))
    throw ModelError("Lagrangian must be written over x1..xm, y1..yn in that order");
  return *L.expr();
}

/// Euler-Lagrange residual terms at a point from the jet of L.
std::vector<Residual> el_terms(const LieAlgebroid& E, const Jet2& L, std::span<const double> G,
                               std::span<const double> xy) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const auto s = E.values(xy.first(m));
  const auto& g = L.grad();
  const auto& H = L.hess();
  std::vector<Residual> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    auto& r = out[a];
    for (std::size_t b = 0; b < n; ++b) r.add(H(idx(m + a), idx(m + b)) * G[b]);
    for (std::size_t i = 0; i < m; ++i) {
      double rho_y = 0.0;
      for (std::size_t b = 0; b < n; ++b) rho_y += s.r(i, b) * xy[m + b];
      r.add(H(idx(m + a), idx(i)) * rho_y);
      r.sub(s.r(i, a) * g[idx(i)]);
    }
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t b = 0; b < n; ++b) r.add(s.C(c, a, b) * xy[m + b] * g[idx(m + c)]);
  }
  return out;
}

double condition_number(const Eigen::MatrixXd& g) {
  if (g.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  const auto& s = svd.singularValues();
  const double lo = s[s.size() - 1];
  return lo > 0.0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

MultiplierMap legendre(const LieAlgebroid& E, const Lagrangian& L) {
  const Expr& e = symbolic(E, L);
  const auto names = bundle_names(E.m(), E.n());
  std::vector<Expr> F;
  for (std::size_t a = 0; a < E.n(); ++a) F.push_back(diff(e, names[E.m() + a]));
  return FieldVector(F, names);
}

double energy(const LieAlgebroid& E, const Lagrangian& L, std::span<const double> xy) {
  check_lagrangian(E, L);
  check_point(E, xy);
  const Jet1 j = L.jet1(xy);
  double out = -j.value();
  for (std::size_t a = 0; a < E.n(); ++a) out += xy[E.m() + a] * j.grad()[idx(E.m() + a)];
  return out;
}

std::vector<double> el_residual(const LieAlgebroid& E, const Lagrangian& L,
                                const SodeSection& gamma, std::span<const double> xy) {
  check_lagrangian(E, L);
  check_point(E, xy);
  if (gamma.size() != E.n() || gamma.arity() != E.m() + E.n())
    throw ModelError("SODE components have the wrong shape");
  const auto G = gamma.values(xy);
  std::vector<double> out;
  for (const auto& r : el_terms(E, L.jet(xy), G, xy)) out.push_back(r.value);
  return out;
}

std::vector<double> sode_from_lagrangian(const LieAlgebroid& E, const Lagrangian& L,
                                         std::span<const double> xy) {
  check_lagrangian(E, L);
  check_point(E, xy);
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const Jet2 j = L.jet(xy);
  const auto s = E.values(xy.first(m));
  const auto& g = j.grad();
  const auto& H = j.hess();
  const Eigen::MatrixXd A = H.bottomRightCorner(idx(n), idx(n));
  const double cond = condition_number(A);
  if (!(cond <= degenerate_condition)) throw DegenerateError("sode_from_lagrangian", cond);
  Eigen::VectorXd b(idx(n));
  for (std::size_t a = 0; a < n; ++a) {
    double v = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      v += s.r(i, a) * g[idx(i)];
      double rho_y = 0.0;
      for (std::size_t c = 0; c < n; ++c) rho_y += s.r(i, c) * xy[m + c];
      v -= H(idx(m + a), idx(i)) * rho_y;
    }
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t e = 0; e < n; ++e) v -= s.C(c, a, e) * xy[m + e] * g[idx(m + c)];
    b[idx(a)] = v;
  }
  const Eigen::VectorXd G = A.fullPivLu().solve(b);
  return {G.data(), G.data() + n};
}

SodeSection sode_from_lagrangian(const LieAlgebroid& E, const Lagrangian& L) {
  const Expr& e = symbolic(E, L);
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const auto names = bundle_names(m, n);
  struct Compiled {
    std::vector<Program> Lx;   // [i]
    std::vector<Program> Ly;   // [a]
    std::vector<Program> Lyy;  // [a * n + b]
    std::vector<Program> Lyx;  // [a * m + i]
    std::vector<char> Lyx_live;
  };
  auto c = std::make_shared<Compiled>();
  std::vector<Expr> ly;
  for (std::size_t a = 0; a < n; ++a) ly.push_back(diff(e, names[m + a]));
  for (std::size_t i = 0; i < m; ++i) c->Lx.emplace_back(diff(e, names[i]), names);
  for (std::size_t a = 0; a < n; ++a) {
    c->Ly.emplace_back(ly[a], names);
    for (std::size_t b = 0; b < n; ++b) c->Lyy.emplace_back(diff(ly[a], names[m + b]), names);
    for (std::size_t i = 0; i < m; ++i) {
      const Expr d = diff(ly[a], names[i]);
      c->Lyx_live.push_back(d.is_zero() ? 0 : 1);
      c->Lyx.emplace_back(d, names);
    }
  }
  const auto D = idx(m + n);
  return FieldVector::from_batch(n, m + n, [E, c, m, n, D](std::span<const double> xy) {
    if (xy.size() != m + n) throw ModelError("point of E has the wrong length");
    std::vector<Jet2> args;
    for (std::size_t k = 0; k < m + n; ++k) args.push_back(Jet2::variable(xy[k], D, idx(k)));
    const auto s = E.jets2(xy.first(m), D);
    std::vector<Jet2> Lx, Ly, A;
    for (const auto& p : c->Lx) Lx.push_back(p.eval(std::span<const Jet2>(args), D));
    for (const auto& p : c->Ly) Ly.push_back(p.eval(std::span<const Jet2>(args), D));
    for (const auto& p : c->Lyy) A.push_back(p.eval(std::span<const Jet2>(args), D));
    // u^i = rho^i_b y^b
    std::vector<Jet2> u(m, Jet2::constant(0.0, D));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t b = 0; b < n; ++b)
        if (s.r_live(i, b)) u[i] += s.r(i, b) * args[m + b];
    std::vector<Jet2> rhs;
    for (std::size_t a = 0; a < n; ++a) {
      Jet2 v = Jet2::constant(0.0, D);
      for (std::size_t i = 0; i < m; ++i) {
        if (s.r_live(i, a)) v += s.r(i, a) * Lx[i];
        if (c->Lyx_live[a * m + i]) v -= c->Lyx[a * m + i].eval(std::span<const Jet2>(args), D) * u[i];
      }
      for (std::size_t g = 0; g < n; ++g) {
        Jet2 cy = Jet2::constant(0.0, D);
        bool any = false;
        for (std::size_t b = 0; b < n; ++b)
          if (s.C_live(g, a, b)) {
            cy += s.C(g, a, b) * args[m + b];
            any = true;
          }
        if (any) v -= cy * Ly[g];
      }
      rhs.push_back(std::move(v));
    }
    return solve(A, rhs, degenerate_condition);
  });
}

namespace {

struct BaseData {
  Eigen::VectorXd g;   // rho^{-T} theta(x, y0)
  Eigen::MatrixXd dg;  // (k, l) = d g_k / dx^l
};

class Reconstruction {
 public:
  Reconstruction(LieAlgebroid E, SodeSection gamma, MultiplierMap F, std::vector<double> base,
                 ReconstructionMode mode, double qtol)
      : E_(std::move(E)), gamma_(std::move(gamma)), F_(std::move(F)), base_(std::move(base)),
        mode_(mode), qtol_(qtol) {}

  std::size_t m() const { return E_.m(); }
  std::size_t n() const { return E_.n(); }

  BaseData base_data(std::span<const double> x) const {
    const std::size_t m = E_.m();
    const std::size_t n = E_.n();
    std::vector<double> xy(x.begin(), x.end());
    xy.insert(xy.end(), base_.begin() + idx(m), base_.end());
    const auto th = theta_jets(E_, gamma_, F_, xy);
    const auto s = E_.jets1(x, idx(m));
    Eigen::MatrixXd RT(idx(n), idx(m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t a = 0; a < n; ++a) RT(idx(a), idx(i)) = s.r(i, a).value();
    Eigen::VectorXd t(idx(n));
    for (std::size_t a = 0; a < n; ++a) t[idx(a)] = th.mu[a].value();
    const auto lu = RT.fullPivLu();
    BaseData out{lu.solve(t), Eigen::MatrixXd(idx(m), idx(m))};
    for (std::size_t l = 0; l < m; ++l) {
      Eigen::VectorXd rhs(idx(n));
      for (std::size_t a = 0; a < n; ++a) {
        double v = th.mu[a].grad()[idx(l)];
        for (std::size_t i = 0; i < m; ++i)
          if (s.r_live(i, a)) v -= s.r(i, a).grad()[idx(l)] * out.g[idx(i)];
        rhs[idx(a)] = v;
      }
      out.dg.col(idx(l)) = lu.solve(rhs);
    }
    return out;
  }

  /// h(x) and its gradient by integrating g along coordinate axes from x0.
  Jet1 h_path(std::span<const double> x) const {
    const std::size_t m = E_.m();
    Jet1 out = Jet1::constant(0.0, idx(m));
    if (mode_ == ReconstructionMode::zero_anchor) return out;
    for (std::size_t k = 0; k < m; ++k) {
      const double delta = x[k] - base_[k];
      const std::function<Jet1(double)> f = [&, k, delta](double s) {
        std::vector<double> p(m);
        for (std::size_t l = 0; l < m; ++l) p[l] = l < k ? x[l] : l == k ? base_[k] + s * delta : base_[l];
        const auto d = base_data(p);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(idx(m));
        for (std::size_t j = 0; j < k; ++j) grad[idx(j)] = delta * d.dg(idx(k), idx(j));
        grad[idx(k)] = delta * s * d.dg(idx(k), idx(k)) + d.g[idx(k)];
        return Jet1(d.g[idx(k)] * delta, std::move(grad));
      };
      out += integrate(f, 0.0, 1.0, qtol_);
    }
    return out;
  }

  Jet2 fiber_integral(std::span<const double> xy) const {
    const std::size_t m = E_.m();
    const std::size_t n = E_.n();
    const auto D = idx(m + n);
    const std::function<Jet2(double)> f = [&](double s) {
      std::vector<double> p(xy.begin(), xy.end());
      std::vector<Jet2> inner;
      for (std::size_t i = 0; i < m; ++i) inner.push_back(Jet2::variable(xy[i], D, idx(i)));
      for (std::size_t b = 0; b < n; ++b) {
        const double y0 = base_[m + b];
        p[m + b] = y0 + s * (xy[m + b] - y0);
        inner.push_back(Jet2::variable(xy[m + b], D, idx(m + b)) * s + (1.0 - s) * y0);
      }
      const auto Fj = F_.jets(p);
      Jet2 out = Jet2::constant(0.0, D);
      for (std::size_t a = 0; a < n; ++a)
        out += compose(Fj[a], inner) * (Jet2::variable(xy[m + a], D, idx(m + a)) - base_[m + a]);
      return out;
    };
    return integrate(f, 0.0, 1.0, qtol_);
  }

  Jet2 h_jet(std::span<const double> xy, Jet1* path) const {
    const std::size_t m = E_.m();
    const auto D = idx(m + E_.n());
    const auto x = xy.first(m);
    const Jet1 h = h_path(x);
    if (path) *path = h;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(D);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(D, D);
    if (mode_ == ReconstructionMode::full_rank_square && m > 0) {
      grad.head(idx(m)) = h.grad();
      hess.topLeftCorner(idx(m), idx(m)) = base_data(x).dg;
    }
    return Jet2(h.value(), std::move(grad), std::move(hess));
  }

  Jet2 jet(std::span<const double> xy, Jet1* path = nullptr) const {
    Jet2 out = fiber_integral(xy);
    out += h_jet(xy, path);
    return out;
  }

  const LieAlgebroid& algebroid() const { return E_; }
  const SodeSection& gamma() const { return gamma_; }
  const MultiplierMap& multiplier() const { return F_; }
  ReconstructionMode mode() const { return mode_; }

 private:
  LieAlgebroid E_;
  SodeSection gamma_;
  MultiplierMap F_;
  std::vector<double> base_;
  ReconstructionMode mode_;
  double qtol_;
};

void verify(const Reconstruction& R, const Points& points, double tol) {
  const auto& E = R.algebroid();
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  auto fail = [](const char* check, double dev, const std::vector<double>& p) {
    throw ReconstructionFailed(check, dev, p);
  };
  for (const auto& xy : points) {
    Jet1 h;
    const Jet2 L = R.jet(xy, &h);
    if (R.mode() == ReconstructionMode::full_rank_square) {
      const auto d = R.base_data(std::span<const double>(xy).first(m));
      const double dev = (h.grad() - d.g).lpNorm<Eigen::Infinity>();
      if (!within_tolerance(dev, d.g.lpNorm<Eigen::Infinity>(), tol)) fail("path_independence", dev, xy);
    }
    const auto F = R.multiplier().values(xy);
    for (std::size_t a = 0; a < n; ++a) {
      const double dev = L.grad()[idx(m + a)] - F[a];
      if (!within_tolerance(dev, std::abs(F[a]), tol)) fail("fiber_derivative", std::abs(dev), xy);
    }
    const auto th = theta_components(E, R.gamma(), R.multiplier(), xy);
    const auto s = E.values(std::span<const double>(xy).first(m));
    for (std::size_t a = 0; a < n; ++a) {
      Residual r;
      for (std::size_t i = 0; i < m; ++i) r.add(s.r(i, a) * L.grad()[idx(i)]);
      r.sub(th.theta[a]);
      if (!within_tolerance(r.value, r.scale, tol)) fail("base_derivative", std::abs(r.value), xy);
    }
    const auto G = R.gamma().values(xy);
    for (const auto& r : el_terms(E, L, G, xy))
      if (!within_tolerance(r.value, r.scale, tol)) fail("euler_lagrange", std::abs(r.value), xy);
  }
}

}  // namespace

Lagrangian reconstruct_lagrangian(const LieAlgebroid& E, const SodeSection& gamma,
                                  const MultiplierMap& F, std::span<const double> basepoint,
                                  ReconstructionMode mode, const ReconstructionOptions& options) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  const std::size_t D = m + n;
  if (gamma.size() != n || gamma.arity() != D) throw ModelError("SODE components have the wrong shape");
  if (F.size() != n || F.arity() != D) throw ModelError("multiplier components have the wrong shape");
  if (basepoint.size() != D) throw ModelError("basepoint has the wrong length");
  const Box region = options.region ? *options.region : Box::symmetric(D);
  if (region.dim() != D) throw ModelError("reconstruction region has the wrong dimension");
  for (std::size_t k = 0; k < D; ++k)
    if (basepoint[k] < region.lo[k] || basepoint[k] > region.hi[k])
      throw ModelError("basepoint lies outside the reconstruction region");
  const auto points = halton_points(region, options.verify_points, options.seed);

  if (mode == ReconstructionMode::zero_anchor) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t a = 0; a < n; ++a)
        if (!E.anchor(i, a).is_zero()) throw ModelError("zero_anchor mode needs rho = 0");
  } else {
    if (m != n) throw ModelError("full_rank_square mode needs m = n");
    // A sign change of det(rho) means rho is singular somewhere in between.
    double sign = 0.0;
    auto check = [&](std::span<const double> x) {
      const Eigen::MatrixXd r = E.anchor_matrix(x);
      const double det = r.size() ? r.determinant() : 1.0;
      if (sign == 0.0) sign = det < 0 ? -1.0 : 1.0;
      if (condition_number(r) > degenerate_condition || det * sign <= 0.0)
        throw ModelError("full_rank_square mode needs an invertible anchor over the region");
    };
    check(basepoint.first(m));
    for (const auto& p : points) check(std::span<const double>(p).first(m));
  }

  auto R = std::make_shared<const Reconstruction>(E, gamma, F,
                                                  std::vector<double>(basepoint.begin(), basepoint.end()),
                                                  mode, options.quadrature_tolerance);
  verify(*R, points, options.tolerance);
  return ScalarField::from_jet(D, [R](std::span<const double> xy) {
    if (xy.size() != R->m() + R->n()) throw ModelError("point of E has the wrong length");
    return R->jet(xy);
  });
}

}  // namespace varsode
