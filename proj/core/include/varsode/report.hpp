#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace varsode {

/// Mixed absolute/relative acceptance test: |residual| <= tol * (1 + scale),
/// where scale is the magnitude of the terms that were combined.
bool within_tolerance(double residual, double scale, double tol);

/// Running residual with the sum of absolute term magnitudes.
struct Residual {
  double value = 0.0;
  double scale = 0.0;

  void add(double term) {
    value += term;
    scale += term < 0 ? -term : term;
  }
  void sub(double term) { add(-term); }
};

struct ReportEntry {
  std::string block;
  /// One-based indices, in the order of the condition's subscripts.
  std::vector<int> indices;
  std::size_t point = 0;
  /// NaN when evaluation failed at the point.
  double residual = 0.0;
  double scale = 0.0;
  bool pass = true;
  std::string label;
  std::string error;
};

/// Table of residuals over sample points.
class Report {
 public:
  explicit Report(double tolerance = 1e-8) : tolerance_(tolerance) {}

  double tolerance() const { return tolerance_; }
  const std::vector<std::vector<double>>& points() const { return points_; }
  const std::vector<ReportEntry>& entries() const { return entries_; }

  std::size_t add_point(std::vector<double> point);
  void add(std::string block, std::vector<int> indices, std::size_t point, double residual,
           double scale, std::string label = {});
  void add(std::string block, std::vector<int> indices, std::size_t point, const Residual& r,
           std::string label = {});
  /// Records a failed evaluation; it counts as a failing entry.
  void add_error(std::string block, std::size_t point, std::string message);
  /// Declares a block so it is listed even when it has no entries.
  void declare(const std::string& block);

  /// Appends another report's entries, remapping its points.
  void append(const Report& other);

  bool pass() const;
  bool pass(const std::string& block) const;
  /// Largest |residual| overall or within a block; NaN entries count as infinite.
  double max_abs(const std::string& block = {}) const;
  std::vector<std::string> blocks() const;
  std::size_t count(const std::string& block = {}) const;
  /// The entry with the largest |residual| in a block, or null.
  const ReportEntry* worst(const std::string& block = {}) const;

 private:
  double tolerance_;
  std::vector<std::vector<double>> points_;
  std::vector<ReportEntry> entries_;
  std::vector<std::string> blocks_;
};

}  // namespace varsode
