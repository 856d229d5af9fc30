#pragma once

#include "varsode/cli/model.hpp"
#include "varsode/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varsode::cli {

inline constexpr const char* schema_id = "varsode.report/1";

enum class Format { text, structured };

/// Command line overrides of the model's sampling block and tolerance.
struct Options {
  std::optional<std::size_t> points;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  Format format = Format::text;
};

/// A command cannot run on this model, e.g. a required block is missing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Outcome {
  /// 0 pass, 1 fail / degenerate / regularity violation.
  int exit_code = 0;
  /// The RunReport document.
  nlohmann::json document;
};

const std::vector<std::string>& command_names();

/// Runs one command. Throws UsageError for a missing block and ModelError
/// for inconsistent data; both map to exit code 2.
Outcome run_command(const std::string& command, Model model, const Options& options);

/// Human-readable rendering of a RunReport document.
std::string render_text(const nlohmann::json& document);

nlohmann::json to_json(const Report& report);

}  // namespace varsode::cli
