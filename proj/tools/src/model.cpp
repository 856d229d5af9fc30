#include "varsode/cli/model.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace varsode::cli {

namespace {

class Loader {
 public:
  explicit Loader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    std::ostringstream os;
    os << origin_;
    if (node.IsDefined() && node.Mark().line >= 0)
      os << ':' << node.Mark().line + 1 << ':' << node.Mark().column + 1;
    os << ": " << message;
    throw LoadError(os.str());
  }

  YAML::Node require(const YAML::Node& parent, const char* key, const std::string& where) const {
    const auto n = parent[key];
    if (!n) fail(parent, where + " needs '" + key + "'");
    return n;
  }

  std::size_t count(const YAML::Node& node, const std::string& what) const {
    try {
      const auto v = node.as<long long>();
      if (v < 0) fail(node, what + " must not be negative");
      return static_cast<std::size_t>(v);
    } catch (const YAML::Exception&) {
      fail(node, what + " must be an integer");
    }
  }

  double number(const YAML::Node& node, const std::string& what) const {
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, what + " must be a number");
    }
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list of numbers");
    std::vector<double> out;
    for (const auto& v : node) out.push_back(number(v, what));
    return out;
  }

  Expr expr(const YAML::Node& node, const std::vector<std::string>& vars, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be an expression string");
    const auto src = node.Scalar();
    Expr e;
    try {
      e = parse(src);
    } catch (const ParseError& p) {
      fail(node, what + ": expected " + p.expected() + " at offset " + std::to_string(p.offset()) +
                     " in '" + src + "'");
    }
    for (const auto& v : free_vars(e))
      if (std::find(vars.begin(), vars.end(), v) == vars.end())
        fail(node, what + ": unbound variable '" + v + "' (allowed: " + join(vars) + ")");
    return e;
  }

  std::vector<Expr> exprs(const YAML::Node& node, std::size_t size, const std::vector<std::string>& vars,
                          const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list");
    if (node.size() != size)
      fail(node, what + " needs " + std::to_string(size) + " entries, got " + std::to_string(node.size()));
    std::vector<Expr> out;
    for (std::size_t k = 0; k < size; ++k)
      out.push_back(expr(node[k], vars, what + "[" + std::to_string(k + 1) + "]"));
    return out;
  }

  /// rows x cols matrix given as a list of rows, stored row-major.
  std::vector<Expr> matrix(const YAML::Node& node, std::size_t rows, std::size_t cols,
                           const std::vector<std::string>& vars, const std::string& what) const {
    if (!node.IsSequence() || node.size() != rows)
      fail(node, what + " needs " + std::to_string(rows) + " rows");
    std::vector<Expr> out;
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = exprs(node[r], cols, vars, what + " row " + std::to_string(r + 1));
      out.insert(out.end(), row.begin(), row.end());
    }
    return out;
  }

  /// Entries [g, a, b, value], one-based, a < b.
  std::vector<BracketEntry> brackets(const YAML::Node& node, std::size_t n, const std::vector<std::string>& vars,
                                     bool numeric) const {
    std::vector<BracketEntry> out;
    if (!node) return out;
    if (!node.IsSequence()) fail(node, "structure must be a list of [gamma, alpha, beta, value]");
    for (const auto& e : node) {
      if (!e.IsSequence() || e.size() != 4) fail(e, "structure entry must be [gamma, alpha, beta, value]");
      const auto g = count(e[0], "gamma");
      const auto a = count(e[1], "alpha");
      const auto b = count(e[2], "beta");
      for (auto k : {g, a, b})
        if (k < 1 || k > n) fail(e, "structure index out of range 1.." + std::to_string(n));
      if (a >= b)
        fail(e, "structure entry C^" + std::to_string(g) + "_" + std::to_string(a) + std::to_string(b) +
                    ": only alpha < beta entries are accepted, the antisymmetric mirror is generated");
      if (numeric) {
        out.push_back({g - 1, a - 1, b - 1, Expr(number(e[3], "structure constant"))});
        continue;
      }
      out.push_back({g - 1, a - 1, b - 1, expr(e[3], vars, "structure value")});
    }
    return out;
  }

  std::vector<double> constants(const std::vector<BracketEntry>& br, std::size_t n) const {
    std::vector<double> c(n * n * n, 0.0);
    for (const auto& e : br) {
      double v = 0.0;
      e.value.is_number(&v);
      c[(e.gamma * n + e.alpha) * n + e.beta] = v;
      c[(e.gamma * n + e.beta) * n + e.alpha] = -v;
    }
    return c;
  }

  LieAlgebroid algebroid(const YAML::Node& node) const {
    if (!node.IsMap()) fail(node, "algebroid must be a block");
    const auto kind = require(node, "kind", "algebroid").as<std::string>();
    try {
      if (kind == "tangent") return tangent_bundle(count(require(node, "m", "tangent algebroid"), "m"));
      if (kind == "lie_algebra") {
        const auto n = count(require(node, "n", "lie_algebra"), "n");
        const auto br = brackets(node["structure"], n, {}, true);
        return lie_algebra(n, constants(br, n));
      }
      if (kind == "atiyah") {
        AtiyahData D;
        D.m = count(require(node, "m", "atiyah algebroid"), "m");
        const auto alg = require(node, "algebra", "atiyah algebroid");
        D.ng = count(require(alg, "n", "algebra"), "n");
        D.c = constants(brackets(alg["structure"], D.ng, {}, true), D.ng);
        D.A = matrix(require(node, "connection", "atiyah algebroid"), D.ng, D.m, base_names(D.m), "connection");
        return atiyah_algebroid(D);
      }
      if (kind == "custom") {
        const auto m = count(require(node, "m", "custom algebroid"), "m");
        const auto n = count(require(node, "n", "custom algebroid"), "n");
        const auto x = base_names(m);
        std::vector<Expr> anchor(m * n);
        if (m > 0) anchor = matrix(require(node, "anchor", "custom algebroid"), m, n, x, "anchor");
        LieAlgebroid::Options o;
        if (const auto k = node["kernel_indices"]) {
          std::vector<std::size_t> idx;
          for (const auto& v : k) {
            const auto i = count(v, "kernel index");
            if (i < 1 || i > n) fail(v, "kernel index out of range");
            idx.push_back(i - 1);
          }
          o.kernel_indices = idx;
        }
        return LieAlgebroid(m, n, std::move(anchor), brackets(node["structure"], n, x, false), std::move(o));
      }
    } catch (const LoadError&) {
      throw;
    } catch (const ModelError& e) {
      fail(node, e.what());
    }
    fail(node["kind"], "unknown algebroid kind '" + kind + "' (tangent, lie_algebra, atiyah, custom)");
  }

  FieldVector fields(const YAML::Node& node, const LieAlgebroid& E, const std::string& what) const {
    const auto vars = bundle_names(E.m(), E.n());
    return FieldVector(exprs(node, E.n(), vars, what), vars);
  }

  Lagrangian lagrangian(const YAML::Node& node, const LieAlgebroid& E) const {
    const auto vars = bundle_names(E.m(), E.n());
    return Lagrangian(expr(node, vars, "lagrangian"), vars);
  }

  Sampling sampling(const YAML::Node& node, const LieAlgebroid& E) const {
    Sampling s;
    if (!node) return s;
    const std::size_t d = E.m() + E.n();
    if (const auto c = node["count"]) s.count = count(c, "sampling count");
    if (const auto c = node["seed"]) s.seed = count(c, "sampling seed");
    if (const auto c = node["fiber_exclusion"]) s.fiber_exclusion = number(c, "fiber_exclusion");
    if (const auto b = node["box"]) {
      Box box{numbers(require(b, "lo", "box"), "box lo"), numbers(require(b, "hi", "box"), "box hi")};
      if (box.lo.size() != d || box.hi.size() != d) fail(b, "box needs " + std::to_string(d) + " bounds");
      for (std::size_t k = 0; k < d; ++k)
        if (!(box.lo[k] < box.hi[k])) fail(b, "box bounds must satisfy lo < hi");
      s.box = box;
    }
    if (const auto p = node["points"]) {
      if (!p.IsSequence()) fail(p, "points must be a list");
      Points pts;
      for (const auto& q : p) {
        auto v = numbers(q, "point");
        if (v.size() != d) fail(q, "point needs " + std::to_string(d) + " coordinates");
        pts.push_back(std::move(v));
      }
      s.points = std::move(pts);
    }
    return s;
  }

  MorphismModel morphism(const YAML::Node& node, const LieAlgebroid& E) const {
    const auto target = algebroid(require(node, "target", "morphism"));
    const auto x = base_names(E.m());
    auto f = exprs(node["base_map"] ? node["base_map"] : YAML::Node(YAML::NodeType::Sequence), target.m(), x,
                   "base_map");
    auto psi = matrix(require(node, "fiber_map", "morphism"), target.n(), E.n(), x, "fiber_map");
    MorphismModel out{AlgebroidMorphism(E, target, std::move(f), std::move(psi)), {}, {}, {}};
    if (const auto s = node["sode"]) out.sode = fields(s, target, "morphism sode");
    if (const auto s = node["multiplier"]) out.multiplier = fields(s, target, "morphism multiplier");
    if (const auto s = node["lagrangian"]) out.lagrangian = lagrangian(s, target);
    return out;
  }

  Model model(const YAML::Node& root) const {
    if (!root.IsMap()) fail(root, "model must be a block of keys");
    static const std::set<std::string> known = {"name",        "description", "algebroid", "sode",
                                                "multiplier",  "lagrangian",  "one_section", "sampling",
                                                "tolerance",   "reconstruction", "morphism"};
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (!known.count(key)) fail(kv.first, "unknown key '" + key + "'");
    }
    const auto E = algebroid(require(root, "algebroid", "model"));
    Model m{root["name"] ? root["name"].as<std::string>() : std::string(), {}, E, {}, {}, {}, {}, {},
            default_tolerance, {}, {}};
    if (const auto s = root["sode"]) m.sode = fields(s, E, "sode");
    if (const auto s = root["multiplier"]) m.multiplier = fields(s, E, "multiplier");
    if (const auto s = root["lagrangian"]) m.lagrangian = lagrangian(s, E);
    if (const auto s = root["one_section"]) {
      const auto x = base_names(E.m());
      m.one_section = OneSection(exprs(s, E.n(), x, "one_section"), x);
    }
    m.sampling = sampling(root["sampling"], E);
    if (const auto t = root["tolerance"]) {
      m.tolerance = number(t, "tolerance");
      if (!(m.tolerance > 0)) fail(t, "tolerance must be positive");
    }
    if (const auto r = root["reconstruction"]) {
      ReconstructionSpec spec;
      if (const auto mode = r["mode"]) {
        const auto v = mode.as<std::string>();
        if (v == "full_rank_square")
          spec.mode = ReconstructionMode::full_rank_square;
        else if (v == "zero_anchor")
          spec.mode = ReconstructionMode::zero_anchor;
        else
          fail(mode, "reconstruction mode must be full_rank_square or zero_anchor");
      }
      if (const auto b = r["basepoint"]) {
        auto v = numbers(b, "basepoint");
        if (v.size() != E.m() + E.n()) fail(b, "basepoint needs " + std::to_string(E.m() + E.n()) + " coordinates");
        spec.basepoint = std::move(v);
      }
      m.reconstruction = spec;
    }
    if (const auto s = root["morphism"]) {
      try {
        m.morphism = morphism(s, E);
      } catch (const LoadError&) {
        throw;
      } catch (const ModelError& e) {
        fail(s, e.what());
      }
    }
    return m;
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out.empty() ? "none" : out;
  }

  std::string origin_;
};

}  // namespace

Model parse_model(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw LoadError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                    ": " + e.msg);
  }
  try {
    return Loader(origin).model(root);
  } catch (const YAML::Exception& e) {
    throw LoadError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                    ": " + e.msg);
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string() + ": cannot open model file");
  std::stringstream ss;
  ss << in.rdbuf();
  auto m = parse_model(ss.str(), path.string());
  m.path = path;
  if (m.name.empty()) m.name = path.stem().string();
  return m;
}

Points sample_points(const Model& model) {
  const auto& s = model.sampling;
  if (s.points) return *s.points;
  const auto& E = model.algebroid;
  if (s.box) return bundle_points(*s.box, E.m(), s.count, s.seed, s.fiber_exclusion);
  return bundle_points(E.m(), E.n(), s.count, s.seed, s.fiber_exclusion);
}

}  // namespace varsode::cli
