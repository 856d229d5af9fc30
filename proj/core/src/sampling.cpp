#include "varsode/sampling.hpp"

#include "varsode/errors.hpp"

#include <array>
#include <cmath>
#include <random>

namespace varsode {

namespace {

constexpr std::array<unsigned, 40> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,
    47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107,
    109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173};

double radical_inverse(std::uint64_t i, unsigned base) {
  double f = 1.0;
  double r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class Sequence {
 public:
  Sequence(const Box& box, std::uint64_t seed) : box_(box) {
    if (box.lo.size() != box.hi.size()) throw ModelError("sampling box bounds differ in length");
    if (box.dim() > kPrimes.size()) throw ModelError("sampling dimension too large");
    std::mt19937_64 rng(seed);
    shift_.resize(box.dim());
    for (auto& s : shift_) s = unit(rng);
  }

  std::vector<double> next() {
    ++index_;
    std::vector<double> p(box_.dim());
    for (std::size_t k = 0; k < p.size(); ++k) {
      double u = radical_inverse(index_, kPrimes[k]) + shift_[k];
      if (u >= 1.0) u -= 1.0;
      p[k] = box_.lo[k] + u * (box_.hi[k] - box_.lo[k]);
    }
    return p;
  }

 private:
  Box box_;
  std::vector<double> shift_;
  std::uint64_t index_ = 0;
};

}  // namespace

Box Box::symmetric(std::size_t dim, double half_width) {
  return Box{std::vector<double>(dim, -half_width), std::vector<double>(dim, half_width)};
}

Points halton_points(const Box& box, std::size_t count, std::uint64_t seed) {
  Sequence seq(box, seed);
  Points out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(seq.next());
  return out;
}

Points bundle_points(std::size_t m, std::size_t n, std::size_t count, std::uint64_t seed,
                     double fiber_exclusion) {
  return bundle_points(Box::symmetric(m + n), m, count, seed, fiber_exclusion);
}

Points bundle_points(const Box& box, std::size_t m, std::size_t count, std::uint64_t seed,
                     double fiber_exclusion) {
  if (m > box.dim()) throw ModelError("sampling box smaller than the base dimension");
  Sequence seq(box, seed);
  Points out;
  out.reserve(count);
  const std::size_t limit = 1000 * (count + 1);
  for (std::size_t tries = 0; out.size() < count; ++tries) {
    if (tries > limit) throw ModelError("fiber exclusion rejects every sample in the box");
    auto p = seq.next();
    double r2 = 0.0;
    for (std::size_t k = m; k < p.size(); ++k) r2 += p[k] * p[k];
    if (p.size() > m && std::sqrt(r2) < fiber_exclusion) continue;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace varsode
