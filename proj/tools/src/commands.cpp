#include "varsode/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace varsode::cli {

using nlohmann::json;

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

Points base_points(const LieAlgebroid& E, const Points& pts) {
  Points out;
  for (const auto& p : pts) out.emplace_back(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(E.m()));
  return out;
}

SodeSection resolve_sode(const Model& m, const char* command) {
  if (m.sode) return *m.sode;
  if (m.lagrangian) return sode_from_lagrangian(m.algebroid, *m.lagrangian);
  throw UsageError(std::string(command) + " needs a 'sode' block (or a 'lagrangian' to derive it)");
}

MultiplierMap resolve_multiplier(const Model& m, const char* command) {
  if (m.multiplier) return *m.multiplier;
  if (m.lagrangian) return legendre(m.algebroid, *m.lagrangian);
  throw UsageError(std::string(command) + " needs a 'multiplier' block (or a 'lagrangian' for its Legendre map)");
}

bool section_pass(const json& s) { return s.value("pass", false); }

json structure_section(const Model& m, const Points& pts, double tol) {
  return to_json(validate_structure(m.algebroid, base_points(m.algebroid, pts), tol));
}

json exactness_section(const Model& m, const Points& pts, double tol) {
  try {
    return to_json(local_exactness_check(m.algebroid, *m.one_section, base_points(m.algebroid, pts), tol));
  } catch (const RegularityViolation& e) {
    return {{"kind", "regularity_violation"}, {"pass", false}, {"message", e.what()}, {"ranks", e.ranks()}};
  }
}

json classify_section(const Model& m, const Points& pts, double tol, bool with_kernel) {
  const auto G = resolve_sode(m, with_kernel ? "classify" : "helmholtz");
  const auto F = resolve_multiplier(m, with_kernel ? "classify" : "helmholtz");
  try {
    const auto h = with_kernel ? classify(m.algebroid, G, F, pts, tol) : helmholtz_residuals(m.algebroid, G, F, pts, tol);
    json s = to_json(h.report);
    double worst = 0.0;
    for (double c : h.condition)
      if (!(c <= worst)) worst = c;
    s["degenerate"] = h.degenerate;
    s["max_condition"] = number(worst);
    if (with_kernel) {
      s["classification"] = std::string(to_string(h.classification));
      s["pass"] = h.classification == Classification::variational;
    } else {
      s["pass"] = h.report.pass() && !h.degenerate;
    }
    if (h.diagnostics) s["diagnostics"] = to_json(*h.diagnostics);
    return s;
  } catch (const RegularityViolation& e) {
    json s = {{"kind", "regularity_violation"}, {"pass", false}, {"message", e.what()}, {"ranks", e.ranks()}};
    if (with_kernel) s["classification"] = "regularity_violation";
    return s;
  }
}

json pop_section(const Model& m, const Points& pts, double tol) {
  return to_json(pop_residuals(m.algebroid, resolve_sode(m, "report"), resolve_multiplier(m, "report"), pts, tol));
}

json atiyah_section(const Model& m, const Points& pts, double tol) {
  const auto r =
      atiyah_reduced_residuals(m.algebroid, resolve_sode(m, "report"), resolve_multiplier(m, "report"), pts, tol);
  return {{"kind", "atiyah_reduced"},
          {"reduced", to_json(r.reduced)},
          {"implied", to_json(r.implied)},
          {"implication_holds", r.implication_holds},
          {"pass", r.implication_holds}};
}

json el_section(const Model& m, const Points& pts, double tol) {
  if (!m.lagrangian) throw UsageError("el-residual needs a 'lagrangian' block");
  if (!m.sode) throw UsageError("el-residual needs a 'sode' block");
  Report rep(tol);
  rep.declare("EL");
  for (const auto& p : pts) {
    const auto id = rep.add_point(p);
    try {
      const auto r = el_residual(m.algebroid, *m.lagrangian, *m.sode, p);
      for (std::size_t a = 0; a < r.size(); ++a) rep.add("EL", {int(a + 1)}, id, r[a], 0.0);
    } catch (const EvalError& e) {
      rep.add_error("EL", id, e.what());
    }
  }
  return to_json(rep);
}

json derive_section(const Model& m, const Points& pts, double tol) {
  if (!m.lagrangian) throw UsageError("derive-sode needs a 'lagrangian' block");
  json values = json::array();
  Report cmp(tol);
  if (m.sode) cmp.declare("difference");
  bool degenerate = false;
  std::string message;
  for (const auto& p : pts) {
    const auto id = cmp.add_point(p);
    try {
      const auto g = sode_from_lagrangian(m.algebroid, *m.lagrangian, p);
      if (values.size() < 5) values.push_back(g);
      if (m.sode) {
        const auto given = m.sode->values(p);
        for (std::size_t a = 0; a < g.size(); ++a)
          cmp.add("difference", {int(a + 1)}, id, given[a] - g[a], std::abs(given[a]) + std::abs(g[a]));
      }
    } catch (const DegenerateError& e) {
      degenerate = true;
      if (message.empty()) message = e.what();
      cmp.add_error("difference", id, e.what());
    } catch (const EvalError& e) {
      cmp.add_error("difference", id, e.what());
    }
  }
  json s = {{"kind", "derived_sode"}, {"values", values}, {"degenerate", degenerate}};
  if (!message.empty()) s["message"] = message;
  if (m.sode) s["comparison"] = to_json(cmp);
  s["pass"] = !degenerate && cmp.pass();
  return s;
}

json reconstruction_section(const Model& m, const Points& pts, double tol) {
  const auto& E = m.algebroid;
  const auto G = resolve_sode(m, "reconstruct");
  const auto F = resolve_multiplier(m, "reconstruct");
  ReconstructionSpec spec = m.reconstruction.value_or(ReconstructionSpec{});
  bool zero = true;
  const Points probe = base_points(E, pts);
  for (std::size_t i = 0; i < E.m() && zero; ++i)
    for (std::size_t a = 0; a < E.n() && zero; ++a) zero = E.anchor(i, a).is_zero();
  const auto mode = spec.mode.value_or(zero ? ReconstructionMode::zero_anchor : ReconstructionMode::full_rank_square);
  const auto basepoint = spec.basepoint.value_or(std::vector<double>(E.m() + E.n(), 0.0));
  ReconstructionOptions opt;
  opt.region = m.sampling.box;
  opt.seed = m.sampling.seed;
  json s = {{"kind", "reconstruction"},
            {"mode", mode == ReconstructionMode::zero_anchor ? "zero_anchor" : "full_rank_square"},
            {"basepoint", basepoint}};
  try {
    const auto L = reconstruct_lagrangian(E, G, F, basepoint, mode, opt);
    s["verified"] = true;
    json values = json::array();
    for (std::size_t k = 0; k < pts.size() && k < 5; ++k) values.push_back(number(L.value(pts[k])));
    s["values"] = values;
    bool pass = true;
    if (m.lagrangian) {
      // L_rec - L must be constant over the points.
      Report cmp(tol);
      cmp.declare("difference");
      const double c0 = L.value(pts.front()) - m.lagrangian->value(pts.front());
      for (const auto& p : pts) {
        const auto id = cmp.add_point(p);
        const double a = L.value(p);
        const double b = m.lagrangian->value(p);
        cmp.add("difference", {1}, id, a - b - c0, std::abs(a) + std::abs(b) + std::abs(c0));
      }
      s["constant"] = number(c0);
      s["comparison"] = to_json(cmp);
      pass = cmp.pass();
    }
    s["pass"] = pass;
  } catch (const ReconstructionFailed& e) {
    s["verified"] = false;
    s["failed_check"] = e.check();
    s["deviation"] = number(e.deviation());
    s["at"] = e.point();
    s["message"] = e.what();
    s["pass"] = false;
  } catch (const DegenerateError& e) {
    s["verified"] = false;
    s["message"] = e.what();
    s["pass"] = false;
  }
  return s;
}

json morphism_section(const Model& m, const Points& pts, double tol) {
  if (!m.morphism) throw UsageError("morphism-check needs a 'morphism' block");
  const auto& mm = *m.morphism;
  const auto& Et = mm.map.target();
  json s = {{"kind", "morphism"}};
  const auto check = check_morphism(mm.map, pts, tol);
  s["check"] = to_json(check);
  bool pass = check.pass();

  std::optional<SodeSection> G = m.sode;
  if (!G && m.lagrangian) G = sode_from_lagrangian(m.algebroid, *m.lagrangian);
  std::optional<SodeSection> Gt = mm.sode;
  if (!Gt && mm.lagrangian) Gt = sode_from_lagrangian(Et, *mm.lagrangian);
  std::optional<MultiplierMap> Ft = mm.multiplier;
  if (!Ft && mm.lagrangian) Ft = legendre(Et, *mm.lagrangian);

  if (G && Gt) {
    if (Ft) {
      const auto red = reduction_check(mm.map, *G, *Gt, *Ft, pts, tol);
      s["related"] = to_json(red.related);
      json t = to_json(red.target.report);
      t["classification"] = std::string(to_string(red.target.classification));
      s["reduction"] = {{"target", t},
                        {"hypothesis", red.hypothesis},
                        {"pulled", to_json(red.pulled)},
                        {"pass", red.pass()}};
      pass = pass && red.pass();
    } else {
      const auto rel = sode_related(mm.map, *G, *Gt, pts, tol);
      s["related"] = to_json(rel);
      pass = pass && rel.pass();
    }
  }
  s["pass"] = pass;
  return s;
}

using SectionFn = std::function<json(const Model&, const Points&, double)>;

}  // namespace

json to_json(const Report& report) {
  json blocks = json::array();
  for (const auto& b : report.blocks()) {
    json blk = {{"name", b},
                {"pass", report.pass(b)},
                {"count", report.count(b)},
                {"max_abs", number(report.max_abs(b))}};
    if (const auto* w = report.worst(b)) {
      json worst = {{"indices", w->indices}, {"point", w->point}, {"residual", number(w->residual)}};
      if (!w->label.empty()) worst["label"] = w->label;
      blk["worst"] = worst;
    }
    blocks.push_back(blk);
  }
  json errors = json::array();
  for (const auto& e : report.entries())
    if (!e.error.empty()) errors.push_back({{"block", e.block}, {"point", e.point}, {"message", e.error}});
  return {{"kind", "report"},
          {"pass", report.pass()},
          {"tolerance", report.tolerance()},
          {"points", report.points().size()},
          {"blocks", blocks},
          {"errors", errors}};
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"validate",    "helmholtz",   "classify",       "derive-sode",
                                                 "el-residual", "reconstruct", "morphism-check", "report"};
  return names;
}

Outcome run_command(const std::string& command, Model model, const Options& options) {
  if (options.points) {
    model.sampling.count = *options.points;
    model.sampling.points.reset();
  }
  if (options.seed) model.sampling.seed = *options.seed;
  const double tol = options.tol.value_or(model.tolerance);
  const auto pts = sample_points(model);
  if (pts.empty()) throw UsageError("no sample points");

  json sections = json::object();
  std::optional<std::string> classification;
  auto run = [&](const char* name, const SectionFn& fn) {
    sections[name] = fn(model, pts, tol);
    if (sections[name].contains("classification")) classification = sections[name]["classification"];
  };
  auto with_one_section = [&](const Model& m, const Points& p, double t) { return exactness_section(m, p, t); };

  if (command == "validate") {
    run("structure", structure_section);
    if (model.one_section) run("exactness", with_one_section);
  } else if (command == "helmholtz") {
    run("helmholtz", [](const Model& m, const Points& p, double t) { return classify_section(m, p, t, false); });
  } else if (command == "classify") {
    run("classification", [](const Model& m, const Points& p, double t) { return classify_section(m, p, t, true); });
  } else if (command == "derive-sode") {
    run("derived_sode", derive_section);
  } else if (command == "el-residual") {
    run("el_residual", el_section);
  } else if (command == "reconstruct") {
    run("reconstruction", reconstruction_section);
  } else if (command == "morphism-check") {
    run("morphism", morphism_section);
  } else if (command == "report") {
    run("structure", structure_section);
    if (model.one_section) run("exactness", with_one_section);
    const bool has_sode = model.sode || model.lagrangian;
    const bool has_multiplier = model.multiplier || model.lagrangian;
    if (has_sode && has_multiplier) {
      run("classification", [](const Model& m, const Points& p, double t) { return classify_section(m, p, t, true); });
      if (sections["classification"].value("kind", "") != "regularity_violation") {
        run("pop", pop_section);
        if (model.algebroid.atiyah()) run("atiyah_reduced", atiyah_section);
      }
    }
    if (model.lagrangian) {
      run("derived_sode", derive_section);
      if (model.sode) run("el_residual", el_section);
    }
    if (model.reconstruction) run("reconstruction", reconstruction_section);
    if (model.morphism) run("morphism", morphism_section);
  } else {
    throw UsageError("unknown command '" + command + "'");
  }

  bool pass = true;
  for (const auto& [k, v] : sections.items()) pass = pass && section_pass(v);

  Outcome out;
  out.exit_code = pass ? 0 : 1;
  const auto& E = model.algebroid;
  out.document = {{"schema", schema_id},
                  {"command", command},
                  {"model", model.name},
                  {"algebroid", {{"m", E.m()}, {"n", E.n()}}},
                  {"seed", model.sampling.seed},
                  {"points", pts.size()},
                  {"tolerance", tol},
                  {"sections", sections},
                  {"pass", pass},
                  {"exit_code", out.exit_code}};
  if (classification) out.document["classification"] = *classification;
  return out;
}

namespace {

std::string fmt(const json& v) {
  if (v.is_null()) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v.get<double>());
  return buf;
}

void render_report(std::ostringstream& os, const json& r, const std::string& indent) {
  for (const auto& b : r["blocks"]) {
    os << indent << b["name"].get<std::string>() << ": " << (b["pass"].get<bool>() ? "pass" : "FAIL")
       << "  max |r| = " << fmt(b["max_abs"]) << "  (" << b["count"].get<std::size_t>() << " entries)";
    if (!b["pass"].get<bool>() && b.contains("worst")) {
      const auto& w = b["worst"];
      os << "  worst at point " << w["point"].get<std::size_t>() << " indices (";
      bool first = true;
      for (const auto& i : w["indices"]) {
        os << (first ? "" : ",") << i.get<int>();
        first = false;
      }
      os << ")";
    }
    os << '\n';
  }
  const auto& errs = r["errors"];
  if (!errs.empty())
    os << indent << errs.size() << " evaluation error(s), first at point " << errs[0]["point"].get<std::size_t>()
       << ": " << errs[0]["message"].get<std::string>() << '\n';
}

void render_section(std::ostringstream& os, const std::string& name, const json& s) {
  os << name << ": " << (s.value("pass", false) ? "pass" : "FAIL") << '\n';
  const auto kind = s.value("kind", "");
  if (kind == "regularity_violation") {
    os << "  regularity violation: " << s["message"].get<std::string>() << '\n';
    return;
  }
  if (kind == "report") {
    render_report(os, s, "  ");
    if (s.contains("classification")) {
      os << "  max condition number " << fmt(s["max_condition"]) << '\n';
      os << "  classification: " << s["classification"].get<std::string>() << '\n';
    }
    return;
  }
  if (kind == "atiyah_reduced") {
    os << "  reduced:\n";
    render_report(os, s["reduced"], "    ");
    os << "  implied:\n";
    render_report(os, s["implied"], "    ");
    os << "  implication holds: " << (s["implication_holds"].get<bool>() ? "yes" : "no") << '\n';
    return;
  }
  if (kind == "derived_sode") {
    if (s.contains("message")) os << "  " << s["message"].get<std::string>() << '\n';
    for (std::size_t k = 0; k < s["values"].size(); ++k) {
      os << "  Gamma at point " << k << ":";
      for (const auto& v : s["values"][k]) os << ' ' << fmt(v);
      os << '\n';
    }
    if (s.contains("comparison")) {
      os << "  against the model's sode:\n";
      render_report(os, s["comparison"], "    ");
    }
    return;
  }
  if (kind == "reconstruction") {
    os << "  mode " << s["mode"].get<std::string>() << '\n';
    if (!s["verified"].get<bool>()) {
      os << "  " << s["message"].get<std::string>() << '\n';
      return;
    }
    os << "  verified against the SODE and multiplier\n";
    if (s.contains("comparison")) {
      os << "  L_rec - L = " << fmt(s["constant"]) << " + residual:\n";
      render_report(os, s["comparison"], "    ");
    }
    return;
  }
  if (kind == "morphism") {
    os << "  morphism conditions:\n";
    render_report(os, s["check"], "    ");
    if (s.contains("related")) {
      os << "  SODE relatedness:\n";
      render_report(os, s["related"], "    ");
    }
    if (s.contains("reduction")) {
      const auto& r = s["reduction"];
      os << "  target classification: " << r["target"]["classification"].get<std::string>() << '\n';
      os << "  pulled-back section:\n";
      render_report(os, r["pulled"], "    ");
    }
  }
}

}  // namespace

std::string render_text(const json& doc) {
  std::ostringstream os;
  os << doc["command"].get<std::string>() << ' ' << doc["model"].get<std::string>() << "  (m = "
     << doc["algebroid"]["m"].get<std::size_t>() << ", n = " << doc["algebroid"]["n"].get<std::size_t>() << ", "
     << doc["points"].get<std::size_t>() << " points, tol " << fmt(doc["tolerance"]) << ")\n";
  for (const auto& [name, s] : doc["sections"].items()) render_section(os, name, s);
  if (doc.contains("classification")) os << doc["classification"].get<std::string>() << '\n';
  os << (doc["pass"].get<bool>() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

}  // namespace varsode::cli
