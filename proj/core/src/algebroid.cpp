#include "varsode/algebroid.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace varsode {

namespace {

std::vector<std::string> numbered(const char* prefix, std::size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

struct Compiled {
  Program program;
  bool live = false;
  bool constant = false;
  double value = 0.0;
};

Compiled compile(const Expr& e, const std::vector<std::string>& xnames, const char* what) {
  Compiled c;
  try {
    c.program = Program(e, xnames);
  } catch (const UnboundVariable& u) {
    throw ModelError(std::string(what) + " may depend only on base coordinates, found '" +
                     u.name() + "'");
  }
  c.constant = c.program.is_constant(&c.value);
  c.live = !(c.constant && c.value == 0.0);
  return c;
}

}  // namespace

std::vector<std::string> base_names(std::size_t m) { return numbered("x", m); }
std::vector<std::string> fiber_names(std::size_t n) { return numbered("y", n); }

std::vector<std::string> bundle_names(std::size_t m, std::size_t n) {
  auto out = base_names(m);
  auto y = fiber_names(n);
  out.insert(out.end(), y.begin(), y.end());
  return out;
}

PointE PointE::split(std::span<const double> xy, std::size_t m) {
  PointE p;
  p.x.assign(xy.begin(), xy.begin() + static_cast<std::ptrdiff_t>(m));
  p.y.assign(xy.begin() + static_cast<std::ptrdiff_t>(m), xy.end());
  return p;
}

std::vector<double> PointE::flat() const {
  std::vector<double> out = x;
  out.insert(out.end(), y.begin(), y.end());
  return out;
}

struct LieAlgebroid::Data {
  std::size_t m = 0;
  std::size_t n = 0;
  AlgebroidKind kind = AlgebroidKind::custom;
  std::vector<std::string> xnames;
  std::vector<Expr> anchor;
  std::vector<Expr> c;
  std::vector<Compiled> anchor_code;
  std::vector<Compiled> c_code;
  std::vector<char> anchor_live;
  std::vector<char> c_live;
  std::optional<std::vector<std::size_t>> kernel;
  std::optional<AtiyahData> atiyah;

  template <class J>
  StructureSample<J> sample(std::span<const double> x, Index dim) const {
    if (x.size() != m) throw ModelError("base point has the wrong length");
    if (dim < static_cast<Index>(m)) throw ModelError("jet layout smaller than the base");
    const auto mi = static_cast<Index>(m);
    std::vector<J> args;
    args.reserve(m);
    for (Index i = 0; i < mi; ++i) args.push_back(J::variable(x[static_cast<std::size_t>(i)], mi, i));
    auto run = [&](const Compiled& k) {
      if (k.constant) return J::constant(k.value, dim);
      J v = k.program.eval(std::span<const J>(args), mi);
      return dim == mi ? v : embed(v, dim);
    };
    StructureSample<J> s;
    s.m = m;
    s.n = n;
    s.rho.reserve(anchor_code.size());
    for (const auto& k : anchor_code) s.rho.push_back(run(k));
    s.c.reserve(c_code.size());
    for (const auto& k : c_code) s.c.push_back(run(k));
    s.rho_live = &anchor_live;
    s.c_live = &c_live;
    return s;
  }
};

LieAlgebroid::LieAlgebroid(std::size_t m, std::size_t n, std::vector<Expr> anchor,
                           const std::vector<BracketEntry>& brackets)
    : LieAlgebroid(m, n, std::move(anchor), brackets, Options{}) {}

LieAlgebroid::LieAlgebroid(std::size_t m, std::size_t n, std::vector<Expr> anchor,
                           const std::vector<BracketEntry>& brackets, Options options) {
  auto d = std::make_shared<Data>();
  d->m = m;
  d->n = n;
  d->kind = options.kind;
  d->xnames = base_names(m);
  if (anchor.size() != m * n) throw ModelError("anchor needs m*n entries");
  d->anchor = std::move(anchor);
  d->c.assign(n * n * n, Expr());
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& b : brackets) {
    if (b.gamma >= n || b.alpha >= n || b.beta >= n)
      throw ModelError("structure function index out of range");
    if (b.alpha == b.beta) {
      if (b.value.is_zero()) continue;
      std::ostringstream os;
      os << "structure function C^" << b.gamma + 1 << "_" << b.alpha + 1 << b.beta + 1
         << " must vanish by antisymmetry";
      throw ModelError(os.str());
    }
    const auto lo = std::min(b.alpha, b.beta);
    const auto hi = std::max(b.alpha, b.beta);
    if (!seen.emplace(b.gamma, lo, hi).second) {
      std::ostringstream os;
      os << "structure function C^" << b.gamma + 1 << "_" << lo + 1 << hi + 1 << " given twice";
      throw ModelError(os.str());
    }
    const Expr pos = b.alpha < b.beta ? b.value : -b.value;
    d->c[(b.gamma * n + lo) * n + hi] = pos;
    d->c[(b.gamma * n + hi) * n + lo] = -pos;
  }
  for (const auto& e : d->anchor) {
    d->anchor_code.push_back(compile(e, d->xnames, "anchor"));
    d->anchor_live.push_back(d->anchor_code.back().live ? 1 : 0);
  }
  for (const auto& e : d->c) {
    d->c_code.push_back(compile(e, d->xnames, "structure functions"));
    d->c_live.push_back(d->c_code.back().live ? 1 : 0);
  }
  if (options.kernel_indices) {
    for (auto k : *options.kernel_indices)
      if (k >= n) throw ModelError("kernel index out of range");
  }
  d->kernel = std::move(options.kernel_indices);
  d->atiyah = std::move(options.atiyah);
  data_ = std::move(d);
}

std::size_t LieAlgebroid::m() const { return data_->m; }
std::size_t LieAlgebroid::n() const { return data_->n; }
AlgebroidKind LieAlgebroid::kind() const { return data_->kind; }
const Expr& LieAlgebroid::anchor(std::size_t i, std::size_t a) const {
  return data_->anchor.at(i * data_->n + a);
}
const Expr& LieAlgebroid::structure(std::size_t g, std::size_t a, std::size_t b) const {
  return data_->c.at((g * data_->n + a) * data_->n + b);
}
const std::optional<std::vector<std::size_t>>& LieAlgebroid::kernel_indices() const {
  return data_->kernel;
}
const AtiyahData* LieAlgebroid::atiyah() const {
  return data_->atiyah ? &*data_->atiyah : nullptr;
}
const std::vector<std::string>& LieAlgebroid::base_variables() const { return data_->xnames; }

StructureSample<double> LieAlgebroid::values(std::span<const double> x) const {
  if (x.size() != data_->m) throw ModelError("base point has the wrong length");
  StructureSample<double> s;
  s.m = data_->m;
  s.n = data_->n;
  for (const auto& k : data_->anchor_code) s.rho.push_back(k.constant ? k.value : k.program.eval(x));
  for (const auto& k : data_->c_code) s.c.push_back(k.constant ? k.value : k.program.eval(x));
  s.rho_live = &data_->anchor_live;
  s.c_live = &data_->c_live;
  return s;
}

StructureSample<Jet1> LieAlgebroid::jets1(std::span<const double> x, Index dim) const {
  return data_->sample<Jet1>(x, dim);
}

StructureSample<Jet2> LieAlgebroid::jets2(std::span<const double> x, Index dim) const {
  return data_->sample<Jet2>(x, dim);
}

Eigen::MatrixXd LieAlgebroid::anchor_matrix(std::span<const double> x) const {
  const auto s = values(x);
  Eigen::MatrixXd r(static_cast<Index>(s.m), static_cast<Index>(s.n));
  for (std::size_t i = 0; i < s.m; ++i)
    for (std::size_t a = 0; a < s.n; ++a) r(static_cast<Index>(i), static_cast<Index>(a)) = s.r(i, a);
  return r;
}

Report validate_structure(const LieAlgebroid& E, const Points& points, double tol) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  Report rep(tol);
  rep.declare("anchor");
  rep.declare("jacobi");
  if (E.kernel_indices()) rep.declare("kernel_decl");
  for (const auto& x : points) {
    const auto p = rep.add_point(x);
    try {
      const auto s = E.jets1(x, static_cast<Index>(m));
      auto dr = [&](std::size_t j, std::size_t i, std::size_t a) {
        return s.r_live(i, a) ? s.r(i, a).grad()[static_cast<Index>(j)] : 0.0;
      };
      auto dc = [&](std::size_t i, std::size_t g, std::size_t a, std::size_t b) {
        return s.C_live(g, a, b) ? s.C(g, a, b).grad()[static_cast<Index>(i)] : 0.0;
      };
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          for (std::size_t i = 0; i < m; ++i) {
            Residual r;
            for (std::size_t j = 0; j < m; ++j) {
              r.add(s.r(j, a).value() * dr(j, i, b));
              r.sub(s.r(j, b).value() * dr(j, i, a));
            }
            for (std::size_t g = 0; g < n; ++g) r.sub(s.r(i, g).value() * s.C(g, a, b).value());
            rep.add("anchor", {int(a + 1), int(b + 1), int(i + 1)}, p, r);
          }
        }
      }
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          for (std::size_t c = b + 1; c < n; ++c) {
            const std::size_t cyc[3][3] = {{a, b, c}, {b, c, a}, {c, a, b}};
            for (std::size_t v = 0; v < n; ++v) {
              Residual r;
              for (const auto& t : cyc) {
                for (std::size_t i = 0; i < m; ++i) r.add(s.r(i, t[0]).value() * dc(i, v, t[1], t[2]));
                for (std::size_t u = 0; u < n; ++u)
                  r.add(s.C(v, t[0], u).value() * s.C(u, t[1], t[2]).value());
              }
              rep.add("jacobi", {int(a + 1), int(b + 1), int(c + 1), int(v + 1)}, p, r);
            }
          }
        }
      }
      if (E.kernel_indices()) {
        for (auto k : *E.kernel_indices())
          for (std::size_t i = 0; i < m; ++i)
            rep.add("kernel_decl", {int(k + 1), int(i + 1)}, p, s.r(i, k).value(), 0.0);
      }
    } catch (const EvalError& e) {
      rep.add_error("structure", p, e.what());
    }
  }
  return rep;
}

OneSection dE_function(const LieAlgebroid& E, const ScalarField& f) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  if (f.arity() != m) throw ModelError("function arity differs from the base dimension");
  if (const Expr* e = f.expr()) {
    std::vector<Expr> theta(n);
    const auto& names = f.variables();
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t i = 0; i < m; ++i) theta[a] = theta[a] + E.anchor(i, a) * diff(*e, names[i]);
    return OneSection(theta, E.base_variables());
  }
  throw ModelError("d^E of a computed function needs its expression");
}

Eigen::MatrixXd dE_one_section(const LieAlgebroid& E, const OneSection& theta,
                               std::span<const double> x) {
  const std::size_t m = E.m();
  const std::size_t n = E.n();
  if (theta.size() != n || theta.arity() != m) throw ModelError("1-section has the wrong shape");
  const auto t = theta.jets(x);
  const auto s = E.values(x);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t g = b + 1; g < n; ++g) {
      double v = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        v += s.r(i, b) * t[g].grad()[static_cast<Index>(i)];
        v -= s.r(i, g) * t[b].grad()[static_cast<Index>(i)];
      }
      for (std::size_t a = 0; a < n; ++a) v -= t[a].value() * s.C(a, b, g);
      d(static_cast<Index>(b), static_cast<Index>(g)) = v;
      d(static_cast<Index>(g), static_cast<Index>(b)) = -v;
    }
  }
  return d;
}

KernelBasis kernel_basis(const LieAlgebroid& E, std::span<const double> x) {
  const auto n = static_cast<Index>(E.n());
  KernelBasis kb;
  if (const auto& k = E.kernel_indices()) {
    kb.rank = static_cast<int>(n) - static_cast<int>(k->size());
    kb.basis = Eigen::MatrixXd::Zero(n, static_cast<Index>(k->size()));
    for (std::size_t j = 0; j < k->size(); ++j) kb.basis((*k)[j], static_cast<Index>(j)) = 1.0;
    return kb;
  }
  if (E.m() == 0 || n == 0) {
    kb.rank = 0;
    kb.basis = Eigen::MatrixXd::Identity(n, n);
    return kb;
  }
  const Eigen::MatrixXd rho = E.anchor_matrix(x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rho, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  int r = 0;
  for (Index k = 0; k < sv.size(); ++k)
    if (smax > 0.0 && sv[k] > 1e-10 * smax) ++r;
  kb.rank = r;
  kb.basis = svd.matrixV().rightCols(n - r);
  return kb;
}

std::vector<int> check_regular(const LieAlgebroid& E, const Points& base_points) {
  std::vector<int> ranks;
  ranks.reserve(base_points.size());
  for (const auto& x : base_points) ranks.push_back(kernel_basis(E, x).rank);
  for (std::size_t k = 1; k < ranks.size(); ++k)
    if (ranks[k] != ranks[0]) throw RegularityViolation(ranks, 0, k);
  return ranks;
}

Report local_exactness_check(const LieAlgebroid& E, const OneSection& theta, const Points& points,
                             double tol) {
  const std::size_t n = E.n();
  check_regular(E, points);
  Report rep(tol);
  rep.declare("closed");
  rep.declare("kernel");
  for (const auto& x : points) {
    const auto p = rep.add_point(x);
    try {
      const auto t = theta.jets(x);
      const auto s = E.values(x);
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t g = b + 1; g < n; ++g) {
          Residual r;
          for (std::size_t i = 0; i < E.m(); ++i) {
            r.add(s.r(i, b) * t[g].grad()[static_cast<Index>(i)]);
            r.sub(s.r(i, g) * t[b].grad()[static_cast<Index>(i)]);
          }
          for (std::size_t a = 0; a < n; ++a) r.sub(t[a].value() * s.C(a, b, g));
          rep.add("closed", {int(b + 1), int(g + 1)}, p, r);
        }
      }
      const auto kb = kernel_basis(E, x);
      for (Index k = 0; k < kb.basis.cols(); ++k) {
        Residual r;
        for (std::size_t a = 0; a < n; ++a) r.add(t[a].value() * kb.basis(static_cast<Index>(a), k));
        rep.add("kernel", {int(k + 1)}, p, r);
      }
    } catch (const EvalError& e) {
      rep.add_error("closed", p, e.what());
    }
  }
  return rep;
}

LieAlgebroid tangent_bundle(std::size_t m) {
  std::vector<Expr> anchor(m * m);
  for (std::size_t i = 0; i < m; ++i) anchor[i * m + i] = Expr(1.0);
  LieAlgebroid::Options o;
  o.kernel_indices = std::vector<std::size_t>{};
  o.kind = AlgebroidKind::tangent;
  return LieAlgebroid(m, m, std::move(anchor), {}, std::move(o));
}

namespace {

void check_constants(std::size_t n, const std::vector<double>& c, const char* what) {
  if (c.size() != n * n * n) throw ModelError(std::string(what) + " need n^3 entries");
  auto at = [&](std::size_t g, std::size_t a, std::size_t b) { return c[(g * n + a) * n + b]; };
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b)
        if (std::abs(at(g, a, b) + at(g, b, a)) > 1e-14 * (1.0 + std::abs(at(g, a, b)))) {
          std::ostringstream os;
          os << what << " are not antisymmetric at c^" << g + 1 << "_" << a + 1 << b + 1;
          throw ModelError(os.str());
        }
}

std::vector<BracketEntry> constant_brackets(std::size_t n, const std::vector<double>& c,
                                            std::size_t offset) {
  std::vector<BracketEntry> out;
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double v = c[(g * n + a) * n + b];
        if (v != 0.0) out.push_back({offset + g, offset + a, offset + b, Expr(v)});
      }
  return out;
}

}  // namespace

LieAlgebroid lie_algebra(std::size_t n, const std::vector<double>& c) {
  check_constants(n, c, "structure constants");
  std::vector<std::size_t> all(n);
  for (std::size_t a = 0; a < n; ++a) all[a] = a;
  LieAlgebroid::Options o;
  o.kernel_indices = std::move(all);
  o.kind = AlgebroidKind::lie_algebra;
  return LieAlgebroid(0, n, {}, constant_brackets(n, c, 0), std::move(o));
}

std::vector<Expr> atiyah_curvature(const AtiyahData& D) {
  const std::size_t m = D.m;
  const std::size_t ng = D.ng;
  if (D.A.size() != m * ng) throw ModelError("connection needs m*ng coefficients");
  const auto x = base_names(m);
  auto A = [&](std::size_t a, std::size_t i) -> const Expr& { return D.A[a * m + i]; };
  std::vector<Expr> B(ng * m * m);
  for (std::size_t c = 0; c < ng; ++c)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        Expr v = diff(A(c, j), x[i]) - diff(A(c, i), x[j]);
        for (std::size_t a = 0; a < ng; ++a)
          for (std::size_t b = 0; b < ng; ++b) {
            const double k = D.c[(c * ng + a) * ng + b];
            if (k != 0.0) v = v - Expr(k) * A(a, i) * A(b, j);
          }
        B[(c * m + j) * m + i] = -v;
        B[(c * m + i) * m + j] = std::move(v);
      }
  return B;
}

std::vector<double> atiyah_curvature(const AtiyahData& D, std::span<const double> x) {
  const auto B = atiyah_curvature(D);
  const auto names = base_names(D.m);
  std::vector<double> out;
  out.resize(B.size(), 0.0);
  for (std::size_t c = 0; c < D.ng; ++c)
    for (std::size_t i = 0; i < D.m; ++i)
      for (std::size_t j = i + 1; j < D.m; ++j) {
        const double v = Program(B[(c * D.m + i) * D.m + j], names).eval(x);
        out[(c * D.m + i) * D.m + j] = v;
        out[(c * D.m + j) * D.m + i] = -v;
      }
  return out;
}

LieAlgebroid atiyah_algebroid(const AtiyahData& D) {
  const std::size_t m = D.m;
  const std::size_t ng = D.ng;
  const std::size_t n = m + ng;
  check_constants(ng, D.c, "group structure constants");
  auto c = [&](std::size_t g, std::size_t a, std::size_t b) { return D.c[(g * ng + a) * ng + b]; };
  for (std::size_t a = 0; a < ng; ++a)
    for (std::size_t b = a + 1; b < ng; ++b)
      for (std::size_t e = b + 1; e < ng; ++e)
        for (std::size_t v = 0; v < ng; ++v) {
          double s = 0.0;
          double scale = 0.0;
          for (std::size_t u = 0; u < ng; ++u) {
            for (const double t : {c(v, a, u) * c(u, b, e), c(v, b, u) * c(u, e, a),
                                   c(v, e, u) * c(u, a, b)}) {
              s += t;
              scale += std::abs(t);
            }
          }
          if (std::abs(s) > 1e-12 * (1.0 + scale))
            throw ModelError("group structure constants fail the Jacobi identity");
        }
  const auto B = atiyah_curvature(D);
  std::vector<Expr> anchor(m * n);
  for (std::size_t i = 0; i < m; ++i) anchor[i * n + i] = Expr(1.0);
  std::vector<BracketEntry> br;
  for (std::size_t a = 0; a < ng; ++a)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const Expr v = -B[(a * m + i) * m + j];
        if (!v.is_zero()) br.push_back({m + a, i, j, v});
      }
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t a = 0; a < ng; ++a) {
        Expr v;
        for (std::size_t b = 0; b < ng; ++b)
          if (c(g, a, b) != 0.0) v = v + Expr(c(g, a, b)) * D.A[b * m + i];
        if (!v.is_zero()) br.push_back({m + g, i, m + a, v});
      }
  for (auto& e : constant_brackets(ng, D.c, m)) br.push_back(std::move(e));
  std::vector<std::size_t> kernel(ng);
  for (std::size_t a = 0; a < ng; ++a) kernel[a] = m + a;
  LieAlgebroid::Options o;
  o.kernel_indices = std::move(kernel);
  o.atiyah = D;
  o.kind = AlgebroidKind::atiyah;
  return LieAlgebroid(m, n, std::move(anchor), br, std::move(o));
}

}  // namespace varsode
