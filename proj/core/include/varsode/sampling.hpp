#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace varsode {

using Points = std::vector<std::vector<double>>;

/// Axis-aligned sampling region.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  /// [-1, 1]^dim
  static Box symmetric(std::size_t dim, double half_width = 1.0);
  std::size_t dim() const { return lo.size(); }
};

/// Randomly shifted Halton points in a box. The shift comes from a
/// mt19937_64 stream so the sequence is reproducible for a given seed.
Points halton_points(const Box& box, std::size_t count, std::uint64_t seed);

/// Points on E in the (x, y) layout, skipping those with |y| < fiber_exclusion.
Points bundle_points(std::size_t m, std::size_t n, std::size_t count, std::uint64_t seed,
                     double fiber_exclusion = 0.1);
Points bundle_points(const Box& box, std::size_t m, std::size_t count, std::uint64_t seed,
                     double fiber_exclusion = 0.1);

inline constexpr std::size_t default_point_count = 64;
inline constexpr double default_tolerance = 1e-8;

}  // namespace varsode
