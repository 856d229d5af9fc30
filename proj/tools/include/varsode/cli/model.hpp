#pragma once

#include "varsode/algebroid.hpp"
#include "varsode/morphism.hpp"
#include "varsode/sampling.hpp"
#include "varsode/sode.hpp"
#include "varsode/variational.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace varsode::cli {

/// Invalid model file. The message starts with file:line:column when the
/// offending node is known.
class LoadError : public ModelError {
 public:
  using ModelError::ModelError;
};

struct Sampling {
  /// Explicit points of E; when set, count/seed/box are ignored.
  std::optional<Points> points;
  std::optional<Box> box;
  std::size_t count = default_point_count;
  std::uint64_t seed = 1;
  double fiber_exclusion = 0.1;
};

struct ReconstructionSpec {
  std::optional<ReconstructionMode> mode;
  std::optional<std::vector<double>> basepoint;
};

/// Target side of a morphism block.
struct MorphismModel {
  AlgebroidMorphism map;
  std::optional<SodeSection> sode;
  std::optional<MultiplierMap> multiplier;
  std::optional<Lagrangian> lagrangian;
};

struct Model {
  std::string name;
  std::filesystem::path path;
  LieAlgebroid algebroid;
  std::optional<SodeSection> sode;
  std::optional<MultiplierMap> multiplier;
  std::optional<Lagrangian> lagrangian;
  std::optional<OneSection> one_section;
  Sampling sampling;
  double tolerance = default_tolerance;
  std::optional<ReconstructionSpec> reconstruction;
  std::optional<MorphismModel> morphism;
};

Model load_model(const std::filesystem::path& path);
/// Parses model text; `origin` is used in error messages.
Model parse_model(const std::string& text, const std::string& origin = "<model>");

/// Sample points of E, honouring explicit points and the box.
Points sample_points(const Model& model);

}  // namespace varsode::cli
