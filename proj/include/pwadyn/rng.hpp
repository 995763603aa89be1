#pragma once

// Deterministic seeded PRNG (splitmix64) and exact rational point sampling.
// Samples are pre-generated sequentially so results never depend on the order
// in which they are consumed.

#include <cstdint>
#include <vector>

#include "pwadyn/geom.hpp"

namespace pwadyn {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // In [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Exact rational points in the bounding box of `box`, coordinates on a
// (2^20 + 1)-denominator grid shifted to dodge typical piece boundaries.
inline std::vector<Vec2> sample_points_in_region(const ConvexRegion& box, std::size_t count,
                                                 std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto [lo, hi] = region_bbox(box);
  const Rat w = hi.x - lo.x, h = hi.y - lo.y;
  const long den = (1L << 20) + 1;  // odd prime-ish denominator avoids dyadic edges
  std::vector<Vec2> out;
  out.reserve(count);
  while (out.size() < count) {
    const Rat fx(static_cast<long>(rng.below(den)), den);
    const Rat fy(static_cast<long>(rng.below(den)), den);
    Vec2 p{lo.x + fx * w, lo.y + fy * h};
    if (region_contains_interior(box, p)) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace pwadyn
