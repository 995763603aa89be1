#pragma once

// Shared test helpers and independent oracles. Everything here is computed
// without going through the library path it is used to check.

#include <cmath>
#include <cstdint>
#include <vector>

#include "pwadyn/geom.hpp"
#include "pwadyn/rng.hpp"

namespace testutil {

using pwadyn::Rat;
using pwadyn::Vec2;

// Perron eigenvalue of [[2,1],[1,1]] by the quadratic formula:
// x^2 - 3x + 1 = 0, largest root (3 + sqrt 5)/2.
inline double cat_lambda() { return (3.0 + std::sqrt(5.0)) / 2.0; }
inline double cat_log_lambda() { return std::log(cat_lambda()); }

// Golden ratio, root of x^2 = x + 1.
inline double phi() { return (1.0 + std::sqrt(5.0)) / 2.0; }

// Fixed points of the n-th power of the toral automorphism [[2,1],[1,1]]:
// |det(A^n - I)| = trace(A^n) - 2, via exact integer matrix powers.
inline long long cat_periodic_oracle(int n) {
  long long a = 1, b = 0, c = 0, d = 1;
  for (int k = 0; k < n; ++k) {
    const long long na = 2 * a + c, nb = 2 * b + d;
    const long long nc = a + c, nd = b + d;
    a = na; b = nb; c = nc; d = nd;
  }
  return a + d - 2;
}

// Random exact points with moderate coordinates (for property tests).
inline Vec2 random_point(pwadyn::SplitMix64& rng, long span = 20, long den = 7) {
  const long x = static_cast<long>(rng.below(static_cast<std::uint64_t>(2 * span * den))) - span * den;
  const long y = static_cast<long>(rng.below(static_cast<std::uint64_t>(2 * span * den))) - span * den;
  return {Rat(x, den), Rat(y, den)};
}

// Random convex polygon: exact hull of a handful of random points. Retries
// until the hull is a genuine polygon.
inline pwadyn::ConvexRegion random_convex_polygon(pwadyn::SplitMix64& rng, int points = 7) {
  for (;;) {
    std::vector<Vec2> pts;
    for (int i = 0; i < points; ++i) pts.push_back(random_point(rng));
    auto hull = pwadyn::convex_hull(pts);
    if (hull.size() >= 3) {
      auto r = pwadyn::make_polygon(hull);
      if (r.is_polygon()) return r;
    }
  }
}

}  // namespace testutil
