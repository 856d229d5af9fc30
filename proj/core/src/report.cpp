#include "varsode/report.hpp"

#include "varsode/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace varsode {

RegularityViolation::RegularityViolation(std::vector<int> ranks, std::size_t first_point,
                                         std::size_t jump_point)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "regularity violation: anchor rank " << ranks.at(first_point) << " at point "
           << first_point << " but " << ranks.at(jump_point) << " at point " << jump_point;
        return os.str();
      }()),
      ranks_(std::move(ranks)),
      first_point_(first_point),
      jump_point_(jump_point) {}

ReconstructionFailed::ReconstructionFailed(const std::string& check, double deviation,
                                           std::vector<double> point)
    : std::runtime_error([&] {
        std::ostringstream os;
        os.precision(6);
        os << "reconstruction failed: " << check << " deviates by " << deviation << " at (";
        for (std::size_t i = 0; i < point.size(); ++i) os << (i ? ", " : "") << point[i];
        os << ")";
        return os.str();
      }()),
      check_(check),
      deviation_(deviation),
      point_(std::move(point)) {}

bool within_tolerance(double residual, double scale, double tol) {
  return std::abs(residual) <= tol * (1.0 + scale);
}

std::size_t Report::add_point(std::vector<double> point) {
  points_.push_back(std::move(point));
  return points_.size() - 1;
}

void Report::declare(const std::string& block) {
  if (std::find(blocks_.begin(), blocks_.end(), block) == blocks_.end()) blocks_.push_back(block);
}

void Report::add(std::string block, std::vector<int> indices, std::size_t point, double residual,
                 double scale, std::string label) {
  declare(block);
  ReportEntry e;
  e.block = std::move(block);
  e.indices = std::move(indices);
  e.point = point;
  e.residual = residual;
  e.scale = scale;
  e.pass = within_tolerance(residual, scale, tolerance_);
  e.label = std::move(label);
  entries_.push_back(std::move(e));
}

void Report::add(std::string block, std::vector<int> indices, std::size_t point, const Residual& r,
                 std::string label) {
  add(std::move(block), std::move(indices), point, r.value, r.scale, std::move(label));
}

void Report::add_error(std::string block, std::size_t point, std::string message) {
  declare(block);
  ReportEntry e;
  e.block = std::move(block);
  e.point = point;
  e.residual = std::numeric_limits<double>::quiet_NaN();
  e.pass = false;
  e.error = std::move(message);
  entries_.push_back(std::move(e));
}

void Report::append(const Report& other) {
  const std::size_t offset = points_.size();
  points_.insert(points_.end(), other.points_.begin(), other.points_.end());
  for (const auto& b : other.blocks_) declare(b);
  for (ReportEntry e : other.entries_) {
    e.point += offset;
    e.pass = !std::isnan(e.residual) && e.error.empty() &&
             within_tolerance(e.residual, e.scale, tolerance_);
    entries_.push_back(std::move(e));
  }
}

bool Report::pass() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const ReportEntry& e) { return e.pass; });
}

bool Report::pass(const std::string& block) const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [&](const ReportEntry& e) { return e.block != block || e.pass; });
}

double Report::max_abs(const std::string& block) const {
  double m = 0.0;
  for (const auto& e : entries_) {
    if (!block.empty() && e.block != block) continue;
    m = std::max(m, std::isnan(e.residual) ? std::numeric_limits<double>::infinity()
                                           : std::abs(e.residual));
  }
  return m;
}

std::vector<std::string> Report::blocks() const { return blocks_; }

std::size_t Report::count(const std::string& block) const {
  if (block.empty()) return entries_.size();
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [&](const ReportEntry& e) { return e.block == block; }));
}

const ReportEntry* Report::worst(const std::string& block) const {
  const ReportEntry* w = nullptr;
  double m = -1.0;
  for (const auto& e : entries_) {
    if (!block.empty() && e.block != block) continue;
    const double a =
        std::isnan(e.residual) ? std::numeric_limits<double>::infinity() : std::abs(e.residual);
    if (a > m) {
      m = a;
      w = &e;
    }
  }
  return w;
}

}  // namespace varsode
