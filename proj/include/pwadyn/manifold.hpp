#pragma once

// Finite-depth stable/unstable manifold approximations, Lyapunov exponent
// estimates, and the reach/angle diagnostics used by rectangle proposal.
//
// Polarity note: the depth-n region contains the true manifold, so "the
// manifold is short/misses a side" claims are exact refutations while "long
// enough" claims remain heuristic.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "pwadyn/rng.hpp"
#include "pwadyn/symdyn.hpp"

namespace pwadyn {

enum class ManifoldDirection : uint8_t { stable, unstable };

struct ManifoldApprox {
  ManifoldDirection direction = ManifoldDirection::stable;
  int depth = 0;
  ConvexRegion region;      // exact intersection of pulled/pushed piece closures
  double width = 0.0;       // float metric of the final region
  Segment long_axis;        // diameter-realizing chord
  double decay_log_rate = 0.0;  // log(width_n / width_{n-1}), 0 at depth 0
};

struct PointDiagnostics {
  double rho_upper = 0.0;   // manifold reach proxy (chord measure, see below)
  double alpha_hat = 0.0;   // angle between the two long axes, in [0, pi/2]
  int depth = 0;
  bool alpha_degenerate = false;  // a region stayed fat; its axis direction is noise
};

namespace detail {

// Reach of a convex region around an interior point: the largest, over a
// family of chord directions, of the shorter exit distance of the chord
// through x. The family is a fixed fan plus the directions toward the
// region's vertices, so thin slivers are measured along their own axis. For
// a thin region this approximates the distance from x to the nearer end of
// the region along the manifold; it over-estimates the true manifold reach
// since the region contains the manifold.
inline double chord_reach(const ConvexRegion& region, const Vec2& x) {
  if (region.kind != RegionKind::polygon) return 0.0;
  const std::size_t n = region.verts.size();
  std::vector<std::pair<double, double>> vs(n);
  for (std::size_t i = 0; i < n; ++i)
    vs[i] = {region.verts[i].x.to_double(), region.verts[i].y.to_double()};
  const double px = x.x.to_double(), py = x.y.to_double();

  const auto chord_min_exit = [&](double ux, double uy) {
    double tpos = std::numeric_limits<double>::infinity();
    double tneg = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const auto [ax, ay] = vs[i];
      const auto [bx, by] = vs[(i + 1) % n];
      const double ex = bx - ax, ey = by - ay;
      const double den = ux * ey - uy * ex;
      if (std::fabs(den) < 1e-300) continue;
      const double t = ((ax - px) * ey - (ay - py) * ex) / den;
      const double hit_x = px + t * ux - ax, hit_y = py + t * uy - ay;
      const double s = (hit_x * ex + hit_y * ey) / (ex * ex + ey * ey);
      if (s < -1e-9 || s > 1.0 + 1e-9) continue;
      if (t >= 0) tpos = std::min(tpos, t);
      if (t <= 0) tneg = std::min(tneg, -t);
    }
    if (std::isinf(tpos) || std::isinf(tneg)) return 0.0;
    return std::min(tpos, tneg);
  };

  double best = 0.0;
  constexpr int kFan = 32;
  for (int k = 0; k < kFan; ++k) {
    const double th = (k + 0.5) * (M_PI / kFan);
    best = std::max(best, chord_min_exit(std::cos(th), std::sin(th)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = vs[i].first - px, dy = vs[i].second - py;
    const double len = std::hypot(dx, dy);
    if (len < 1e-300) continue;
    best = std::max(best, chord_min_exit(dx / len, dy / len));
  }
  return best;
}

inline double axis_angle(const Segment& s) {
  const double dx = (s.b.x - s.a.x).to_double();
  const double dy = (s.b.y - s.a.y).to_double();
  return std::atan2(dy, dx);
}

// Fold the angle between two undirected lines into [0, pi/2].
inline double line_angle_between(const Segment& u, const Segment& v) {
  double d = std::fabs(axis_angle(u) - axis_angle(v));
  while (d > M_PI) d -= M_PI;
  return d > M_PI / 2 ? M_PI - d : d;
}

}  // namespace detail

// Stable region of depth n along the forward letters of x (closure of the
// piece at time 0 intersected with pullbacks of the next n piece closures);
// the unstable one mirrors it along the backward orbit. Exact.
inline ManifoldApprox manifold_region(const SystemView& sys, const Vec2& x, int depth,
                                      ManifoldDirection dir) {
  ManifoldApprox out;
  out.direction = dir;
  out.depth = depth;

  ConvexRegion region;
  double prev_width = 0.0;
  if (dir == ManifoldDirection::stable) {
    Vec2 p = x;
    AffineMap2 composed = AffineMap2::identity();  // time 0 -> time k
    for (int k = 0; k <= depth; ++k) {
      int letter = -1;
      const auto& part = sys.partition_at(k);
      const Vec2 next = forward_step(sys, p, k, &letter);
      const ConvexRegion pulled =
          k == 0 ? detail::piece_closure_at_iterate(part[static_cast<std::size_t>(letter)], 0)
                 : apply_affine(invert_affine(composed),
                                detail::piece_closure_at_iterate(
                                    part[static_cast<std::size_t>(letter)], k));
      region = k == 0 ? pulled : intersect_convex(region, pulled);
      if (k == depth - 1) prev_width = region_metrics(region).width;
      composed = part[static_cast<std::size_t>(letter)].branch.compose(composed);
      p = next;
    }
  } else {
    Vec2 p = x;
    AffineMap2 composed = AffineMap2::identity();  // time -k -> time 0
    for (int k = 0; k <= depth; ++k) {
      const auto& part = sys.partition_at(-k);
      if (k == 0) {
        const int letter = piece_interior_index(part, p);
        if (letter < 0) throw BoundaryHitError(0);
        region = detail::piece_closure_at_iterate(part[static_cast<std::size_t>(letter)], 0);
        if (depth == 1) prev_width = region_metrics(region).width;
        continue;
      }
      int letter = -1;
      p = backward_step(sys, p, -k, &letter);
      composed = composed.compose(part[static_cast<std::size_t>(letter)].branch);
      const ConvexRegion pushed = apply_affine(
          composed, detail::piece_closure_at_iterate(part[static_cast<std::size_t>(letter)], -k));
      region = intersect_convex(region, pushed);
      if (k == depth - 1) prev_width = region_metrics(region).width;
    }
  }
  if (region.is_empty()) throw GeomError("manifold region is empty (internal error)");

  const auto m = region_metrics(region);
  out.region = std::move(region);
  out.width = m.width;
  out.long_axis = m.long_axis;
  out.decay_log_rate =
      (depth >= 1 && prev_width > 0.0 && m.width > 0.0) ? std::log(m.width / prev_width) : 0.0;
  return out;
}

// Manifold region from an explicit word (letters indexed away from time 0 in
// the direction's time order; letters[0] is the piece at time 0).
inline ManifoldApprox manifold_region(const SystemView& sys, const std::vector<int>& letters,
                                      ManifoldDirection dir) {
  if (letters.empty()) throw std::invalid_argument("manifold_region: empty word");
  ManifoldApprox out;
  out.direction = dir;
  out.depth = static_cast<int>(letters.size()) - 1;

  ConvexRegion region;
  double prev_width = 0.0;
  AffineMap2 composed = AffineMap2::identity();
  for (std::size_t k = 0; k < letters.size(); ++k) {
    const long long t = dir == ManifoldDirection::stable ? static_cast<long long>(k)
                                                         : -static_cast<long long>(k);
    const auto& part = sys.partition_at(t);
    const auto& piece = part.at(static_cast<std::size_t>(letters[k]));
    ConvexRegion contrib;
    if (dir == ManifoldDirection::stable) {
      contrib = k == 0 ? detail::piece_closure_at_iterate(piece, 0)
                       : apply_affine(invert_affine(composed),
                                      detail::piece_closure_at_iterate(piece, static_cast<int>(k)));
      composed = piece.branch.compose(composed);
    } else {
      if (k > 0) composed = composed.compose(piece.branch);
      contrib = k == 0 ? detail::piece_closure_at_iterate(piece, 0)
                       : apply_affine(composed, detail::piece_closure_at_iterate(
                                                    piece, -static_cast<int>(k)));
    }
    region = k == 0 ? contrib : intersect_convex(region, contrib);
    if (k + 2 == letters.size()) prev_width = region_metrics(region).width;
    if (region.is_empty()) throw GeomError("manifold region is empty for the given word");
  }
  const auto m = region_metrics(region);
  out.region = std::move(region);
  out.width = m.width;
  out.long_axis = m.long_axis;
  out.decay_log_rate =
      (out.depth >= 1 && prev_width > 0.0 && m.width > 0.0) ? std::log(m.width / prev_width) : 0.0;
  return out;
}

// (1/n) log sigma_{1,2} of the composed linear part along the forward orbit.
inline std::pair<double, double> lyapunov_estimate(const SystemView& sys, const Vec2& x, int n) {
  if (n < 1) throw std::invalid_argument("lyapunov_estimate: n must be >= 1");
  AffineMap2 composed = AffineMap2::identity();
  Vec2 p = x;
  for (int k = 0; k < n; ++k) {
    int letter = -1;
    const Vec2 next = forward_step(sys, p, k, &letter);
    composed = sys.partition_at(k)[static_cast<std::size_t>(letter)].branch.compose(composed);
    p = next;
  }
  const auto [s1, s2] = singular_log_norms(composed);
  return {s1 / n, s2 / n};
}

inline std::pair<double, double> lyapunov_estimate(const PwaMap& m, const Vec2& x, int n) {
  return lyapunov_estimate(SystemView(m), x, n);
}

// Reach/angle diagnostics at a point. The unstable side needs unambiguous
// backward orbits; callers may catch GeomError for non-invertible maps.
inline PointDiagnostics rho_alpha(const SystemView& sys, const Vec2& x, int depth) {
  const auto st = manifold_region(sys, x, depth, ManifoldDirection::stable);
  const auto un = manifold_region(sys, x, depth, ManifoldDirection::unstable);
  PointDiagnostics d;
  d.depth = depth;
  d.rho_upper = std::min(detail::chord_reach(st.region, x), detail::chord_reach(un.region, x));
  d.alpha_hat = detail::line_angle_between(st.long_axis, un.long_axis);
  const auto ratio = [](const ManifoldApprox& m) {
    const auto met = region_metrics(m.region);
    return met.diameter > 0 ? met.width / met.diameter : 1.0;
  };
  d.alpha_degenerate = ratio(st) > 0.2 || ratio(un) > 0.2;
  return d;
}

inline PointDiagnostics rho_alpha(const PwaMap& m, const Vec2& x, int depth) {
  return rho_alpha(SystemView(m), x, depth);
}

// ---------------------------------------------------------------------------
// Orbit statistics.

struct OrbitStatistics {
  int requested = 0;
  int evaluated = 0;          // samples with at least the stable side available
  int boundary_skipped = 0;   // orbit hit a boundary within the depth
  int alpha_degenerate = 0;   // no usable angle (fat region or ambiguous preimage)
  std::vector<double> rho_quantiles;    // min, q25, median, q75, max
  std::vector<double> alpha_quantiles;  // over non-degenerate samples
  double distortion = 0.0;              // d(T) = max over pieces of log(s1/s2)
};

namespace detail {

inline std::vector<double> quantiles5(std::vector<double> v) {
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  auto q = [&](double f) {
    const double pos = f * (static_cast<double>(v.size()) - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return v[lo] * (1 - w) + v[hi] * w;
  };
  return {q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)};
}

}  // namespace detail

// First seeded sample point whose orbit stays off piece boundaries for the
// requested window. Deterministic; throws after `tries` failures.
inline Vec2 find_nice_point(const SystemView& sys, int n_back, int n_fwd, std::uint64_t seed,
                            int tries = 200) {
  const auto pts =
      sample_points_in_region(sys.domain(), static_cast<std::size_t>(tries), seed);
  for (const auto& p : pts) {
    try {
      (void)itinerary(sys, p, n_back, n_fwd);
      return p;
    } catch (const BoundaryHitError&) {
    } catch (const GeomError&) {
    }
  }
  throw GeomError("find_nice_point: no boundary-free sample found");
}

// Deterministic sampled distribution of (rho_upper, alpha_hat) plus the
// distortion constant of the map. Boundary-hitting samples are skipped and
// tallied; samples whose unstable side is unavailable count as degenerate.
inline OrbitStatistics orbit_statistics(const PwaMap& m, int samples, int depth,
                                        std::uint64_t seed) {
  SystemView sys(m);
  OrbitStatistics st;
  st.requested = samples;
  for (const auto& p : m.pieces) {
    const auto [s1, s2] = singular_log_norms(p.branch);
    st.distortion = std::max(st.distortion, s1 - s2);
  }
  const auto pts = sample_points_in_region(m.domain, static_cast<std::size_t>(samples), seed);
  std::vector<double> rhos, alphas;
  for (const auto& x : pts) {
    std::optional<ManifoldApprox> stab;
    try {
      stab = manifold_region(sys, x, depth, ManifoldDirection::stable);
    } catch (const BoundaryHitError&) {
      ++st.boundary_skipped;
      continue;
    }
    ++st.evaluated;
    std::optional<ManifoldApprox> unst;
    try {
      unst = manifold_region(sys, x, depth, ManifoldDirection::unstable);
    } catch (const BoundaryHitError&) {
    } catch (const GeomError&) {
      // ambiguous preimage (map not injective around the orbit)
    }
    if (!unst) {
      ++st.alpha_degenerate;
      rhos.push_back(detail::chord_reach(stab->region, x));
      continue;
    }
    PointDiagnostics d;
    d.rho_upper = std::min(detail::chord_reach(stab->region, x), detail::chord_reach(unst->region, x));
    d.alpha_hat = detail::line_angle_between(stab->long_axis, unst->long_axis);
    const auto ratio = [](const ManifoldApprox& ma) {
      const auto met = region_metrics(ma.region);
      return met.diameter > 0 ? met.width / met.diameter : 1.0;
    };
    rhos.push_back(d.rho_upper);
    if (ratio(*stab) > 0.2 || ratio(*unst) > 0.2) {
      ++st.alpha_degenerate;
    } else {
      alphas.push_back(d.alpha_hat);
    }
  }
  st.rho_quantiles = detail::quantiles5(std::move(rhos));
  st.alpha_quantiles = detail::quantiles5(std::move(alphas));
  return st;
}

}  // namespace pwadyn
