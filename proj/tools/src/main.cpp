// varsode: checks for the inverse problem on Lie algebroids, driven by model files.

#include "varsode/cli/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

namespace {

constexpr int exit_usage = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace varsode::cli;

  CLI::App app{"Helmholtz conditions and variationality checks for SODE sections on Lie algebroids"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "varsode 0.1.0");

  std::string model_path;
  std::string output;
  std::size_t points = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::string format = "text";

  const std::map<std::string, std::string> help = {
      {"validate", "structure equations of the algebroid (and exactness of a one_section)"},
      {"helmholtz", "closedness residuals R1-R3 of Theta_{Gamma,F}"},
      {"classify", "variational / weak_variational / fails / degenerate"},
      {"derive-sode", "SODE of the model's Lagrangian, compared with the sode block if present"},
      {"el-residual", "Euler-Lagrange residual of the sode for the Lagrangian"},
      {"reconstruct", "rebuild a Lagrangian from the sode and multiplier and verify it"},
      {"morphism-check", "morphism conditions, SODE relatedness and the forward reduction check"},
      {"report", "every applicable check as one structured document"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("model", model_path, "model file")->required()->check(CLI::ExistingFile);
    sub->add_option("--points", points, "number of sample points (overrides the model)")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "residual tolerance (overrides the model)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "sampling seed (overrides the model)");
    sub->add_option("--format", format, "output format")->check(CLI::IsMember({"text", "structured"}));
    if (name == "report") sub->add_option("-o,--output", output, "write the document to this file");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  std::string command;
  Options options;
  bool format_given = false;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) {
      command = name;
      if (sub->count("--points")) options.points = points;
      if (sub->count("--tol")) options.tol = tol;
      if (sub->count("--seed")) options.seed = seed;
      format_given = sub->count("--format") > 0;
    }
  // `report` emits the structured document unless text is asked for.
  const bool structured = format == "structured" || (command == "report" && !format_given);
  options.format = structured ? Format::structured : Format::text;

  try {
    auto model = load_model(model_path);
    const auto out = run_command(command, std::move(model), options);
    const std::string body =
        options.format == Format::structured ? out.document.dump(2) + "\n" : render_text(out.document);
    if (!output.empty()) {
      std::ofstream f(output);
      if (!f) {
        std::cerr << "varsode: cannot write " << output << '\n';
        return exit_usage;
      }
      f << body;
    } else {
      std::cout << body;
    }
    return out.exit_code;
  } catch (const UsageError& e) {
    std::cerr << "varsode " << command << ": " << e.what() << '\n';
    return exit_usage;
  } catch (const varsode::ModelError& e) {
    std::cerr << "varsode: " << e.what() << '\n';
    return exit_usage;
  } catch (const varsode::UnboundVariable& e) {
    std::cerr << "varsode: unbound variable '" << e.name() << "'\n";
    return exit_usage;
  } catch (const varsode::ParseError& e) {
    std::cerr << "varsode: " << e.what() << '\n';
    return exit_usage;
  }
}
