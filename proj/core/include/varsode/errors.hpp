#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace varsode {

/// Inconsistent model data: wrong dimensions, unknown variables, broken
/// antisymmetry, unsupported inputs.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The anchor rank changes across the sampled points.
class RegularityViolation : public std::runtime_error {
 public:
  RegularityViolation(std::vector<int> ranks, std::size_t first_point, std::size_t jump_point);

  /// Anchor rank at each sampled point.
  const std::vector<int>& ranks() const noexcept { return ranks_; }
  std::size_t first_point() const noexcept { return first_point_; }
  std::size_t jump_point() const noexcept { return jump_point_; }

 private:
  std::vector<int> ranks_;
  std::size_t first_point_;
  std::size_t jump_point_;
};

/// A reconstructed Lagrangian did not reproduce its data.
class ReconstructionFailed : public std::runtime_error {
 public:
  ReconstructionFailed(const std::string& check, double deviation, std::vector<double> point);

  const std::string& check() const noexcept { return check_; }
  double deviation() const noexcept { return deviation_; }
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::string check_;
  double deviation_;
  std::vector<double> point_;
};

}  // namespace varsode
