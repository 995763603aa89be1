#pragma once

// Exact rational planar geometry kernel: points, affine maps, convex regions
// with per-edge provenance, clipping, and floating-point metric diagnostics.
//
// All predicates (containment, emptiness, collinearity, subset) are exact;
// floats appear only in metrics (diameter, width, angles, log norms).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pwadyn/rat.hpp"

namespace pwadyn {

class GeomError : public std::runtime_error {
 public:
  explicit GeomError(const std::string& what) : std::runtime_error(what) {}
};
class SingularMatrixError : public GeomError {
 public:
  SingularMatrixError() : GeomError("singular matrix (det = 0)") {}
};
class EmptyRegionError : public GeomError {
 public:
  EmptyRegionError() : GeomError("operation requires a nonempty region") {}
};

struct Vec2 {
  Rat x, y;
  Vec2() = default;
  Vec2(Rat px, Rat py) : x(std::move(px)), y(std::move(py)) {}

  friend Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(const Rat& s, const Vec2& v) { return {s * v.x, s * v.y}; }
  friend bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(const Vec2& a, const Vec2& b) { return !(a == b); }
  // Lexicographic; used only to pick canonical representatives.
  friend bool operator<(const Vec2& a, const Vec2& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  }

  std::string str() const { return "(" + x.str() + "," + y.str() + ")"; }
};

inline Rat cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline Rat dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

// Sign of the signed area of triangle (a, b, c); > 0 means c lies left of a->b.
inline int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b - a, c - a).sign();
}

inline double dist(const Vec2& a, const Vec2& b) {
  const double dx = (a.x - b.x).to_double();
  const double dy = (a.y - b.y).to_double();
  return std::hypot(dx, dy);
}

struct Segment {
  Vec2 a, b;
  double length() const { return dist(a, b); }
};

// ---------------------------------------------------------------------------
// Affine maps x |-> L x + t with L = [[a, b], [c, d]].

struct AffineMap2 {
  Rat a{1}, b{0}, c{0}, d{1};
  Rat tx{0}, ty{0};

  static AffineMap2 identity() { return {}; }
  static AffineMap2 linear(Rat a, Rat b, Rat c, Rat d) {
    return {std::move(a), std::move(b), std::move(c), std::move(d), Rat(0), Rat(0)};
  }
  static AffineMap2 translation(Rat tx, Rat ty) {
    return {Rat(1), Rat(0), Rat(0), Rat(1), std::move(tx), std::move(ty)};
  }

  Rat det() const { return a * d - b * c; }
  bool is_identity() const {
    return a == Rat(1) && b == Rat(0) && c == Rat(0) && d == Rat(1) && tx == Rat(0) && ty == Rat(0);
  }

  Vec2 operator()(const Vec2& p) const { return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty}; }

  // Composition (f.compose(g))(x) = f(g(x)).
  AffineMap2 compose(const AffineMap2& g) const {
    AffineMap2 r;
    r.a = a * g.a + b * g.c;
    r.b = a * g.b + b * g.d;
    r.c = c * g.a + d * g.c;
    r.d = c * g.b + d * g.d;
    const Vec2 t = (*this)(Vec2(g.tx, g.ty));
    r.tx = t.x;
    r.ty = t.y;
    return r;
  }

  friend bool operator==(const AffineMap2& f, const AffineMap2& g) {
    return f.a == g.a && f.b == g.b && f.c == g.c && f.d == g.d && f.tx == g.tx && f.ty == g.ty;
  }
};

inline AffineMap2 invert_affine(const AffineMap2& f) {
  const Rat det = f.det();
  if (det.is_zero()) throw SingularMatrixError();
  AffineMap2 r;
  r.a = f.d / det;
  r.b = -f.b / det;
  r.c = -f.c / det;
  r.d = f.a / det;
  r.tx = -(r.a * f.tx + r.b * f.ty);
  r.ty = -(r.c * f.tx + r.d * f.ty);
  return r;
}

// log of the larger/smaller singular value of L, scaling-safe for huge exact
// entries. sigma2 = 0 is reported as -inf.
inline std::pair<double, double> singular_log_norms(const AffineMap2& l) {
  const Rat m = max(max(abs(l.a), abs(l.b)), max(abs(l.c), abs(l.d)));
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (m.is_zero()) return {neg_inf, neg_inf};
  const double logm = m.log_abs();
  const double a = (l.a / m).to_double(), b = (l.b / m).to_double();
  const double c = (l.c / m).to_double(), d = (l.d / m).to_double();
  const Rat det = l.det();
  const double dd = (det / (m * m)).to_double();
  const double t = a * a + b * b + c * c + d * d;
  const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * dd * dd));
  const double s1 = std::sqrt((t + disc) / 2.0);
  const double log_s1 = std::log(s1) + logm;
  if (det.is_zero()) return {log_s1, neg_inf};
  // sigma1 * sigma2 = |det| exactly; recover sigma2 from it for stability.
  return {log_s1, det.log_abs() - log_s1};
}

// ---------------------------------------------------------------------------
// Convex regions.

enum class RegionKind : uint8_t { empty, point, segment, polygon };

struct EdgeTag {
  enum class Source : uint8_t { domain_boundary, partition_edge, rectangle_edge };
  Source source = Source::domain_boundary;
  int piece = -1;      // partition_edge: index of the source piece
  int edge = -1;       // partition_edge: edge index within that piece
  int iterate = 0;     // partition_edge: pullback iterate that produced it
  int rect = -1;       // rectangle_edge: rectangle index
  int rect_side = -1;  // rectangle_edge: side index 0..3

  static EdgeTag domain() { return {}; }
  static EdgeTag piece_edge(int piece, int edge, int iterate = 0) {
    EdgeTag t;
    t.source = Source::partition_edge;
    t.piece = piece;
    t.edge = edge;
    t.iterate = iterate;
    return t;
  }
  static EdgeTag rect_edge(int rect, int side) {
    EdgeTag t;
    t.source = Source::rectangle_edge;
    t.rect = rect;
    t.rect_side = side;
    return t;
  }
  EdgeTag at_iterate(int k) const {
    EdgeTag t = *this;
    t.iterate = k;
    return t;
  }
};

// A convex set: polygon (CCW, strictly convex, positive area), segment
// (two distinct endpoints), point, or empty. For polygons, tags[i] is the
// provenance of the edge verts[i] -> verts[(i+1) % n].
struct ConvexRegion {
  RegionKind kind = RegionKind::empty;
  std::vector<Vec2> verts;
  std::vector<EdgeTag> tags;

  bool is_empty() const { return kind == RegionKind::empty; }
  bool is_polygon() const { return kind == RegionKind::polygon; }
  std::size_t size() const { return verts.size(); }

  static ConvexRegion empty_region() { return {}; }
  static ConvexRegion point_region(Vec2 p) {
    ConvexRegion r;
    r.kind = RegionKind::point;
    r.verts = {std::move(p)};
    return r;
  }
  static ConvexRegion segment_region(Vec2 a, Vec2 b) {
    if (a == b) return point_region(std::move(a));
    ConvexRegion r;
    r.kind = RegionKind::segment;
    r.verts = {std::move(a), std::move(b)};
    return r;
  }
};

// Twice the signed area of a vertex loop.
inline Rat area2_of(const std::vector<Vec2>& vs) {
  Rat s(0);
  const std::size_t n = vs.size();
  for (std::size_t i = 0; i < n; ++i) s += cross(vs[i], vs[(i + 1) % n]);
  return s;
}

inline Rat region_area(const ConvexRegion& r) {
  if (r.kind != RegionKind::polygon) return Rat(0);
  return area2_of(r.verts) / Rat(2);
}

namespace detail {

// Collapse a zero-area vertex soup (all collinear for convex input) to a
// canonical segment/point/empty region.
inline ConvexRegion collapse_collinear(const std::vector<Vec2>& vs) {
  std::vector<Vec2> distinct;
  for (const auto& v : vs) {
    bool seen = false;
    for (const auto& u : distinct)
      if (u == v) {
        seen = true;
        break;
      }
    if (!seen) distinct.push_back(v);
  }
  if (distinct.empty()) return ConvexRegion::empty_region();
  if (distinct.size() == 1) return ConvexRegion::point_region(distinct[0]);
  auto lo = distinct[0], hi = distinct[0];
  for (const auto& v : distinct) {
    if (v < lo) lo = v;
    if (hi < v) hi = v;
  }
  return ConvexRegion::segment_region(lo, hi);
}

}  // namespace detail

// Canonicalize a CCW-or-CW convex vertex loop with per-edge tags into a
// ConvexRegion: re-orients to CCW, drops duplicate vertices, merges collinear
// consecutive edges, and collapses thin loops to segment/point/empty.
// When edges are merged the surviving tag is chosen by `prefer`: an edge whose
// tag satisfies prefer() wins, otherwise the earlier edge's tag is kept.
inline ConvexRegion canonical_region(std::vector<Vec2> vs, std::vector<EdgeTag> tags,
                                     const std::function<bool(const EdgeTag&)>& prefer = {}) {
  if (vs.size() != tags.size()) throw GeomError("canonical_region: tag/vertex count mismatch");
  if (vs.empty()) return ConvexRegion::empty_region();
  if (vs.size() < 3) return detail::collapse_collinear(vs);

  Rat a2 = area2_of(vs);
  if (a2.sign() < 0) {
    // Reverse to CCW keeping vs[0] first; edge i becomes edge n-1-i.
    std::reverse(vs.begin() + 1, vs.end());
    std::vector<EdgeTag> rt(tags.size());
    const std::size_t n = tags.size();
    for (std::size_t j = 0; j < n; ++j) rt[j] = tags[n - 1 - j];
    tags = std::move(rt);
    a2 = -a2;
  }
  if (a2.is_zero()) return detail::collapse_collinear(vs);

  // Drop exact duplicates, then merge collinear consecutive edges.
  std::vector<Vec2> w;
  std::vector<EdgeTag> wt;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (!w.empty() && w.back() == vs[i]) {
      // Edge of zero length: keep the previous vertex, prefer the new tag if asked.
      if (prefer && prefer(tags[i])) wt.back() = tags[i];
      continue;
    }
    w.push_back(vs[i]);
    wt.push_back(tags[i]);
  }
  while (w.size() > 1 && w.back() == w.front()) {
    w.pop_back();
    wt.pop_back();
  }
  if (w.size() < 3) return detail::collapse_collinear(w);

  // Merge runs of collinear edges.
  std::vector<Vec2> out;
  std::vector<EdgeTag> outt;
  const std::size_t n = w.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& prev = w[(i + n - 1) % n];
    const Vec2& cur = w[i];
    const Vec2& next = w[(i + 1) % n];
    if (orient(prev, cur, next) == 0) {
      // cur is redundant; the edge ending here merges with the one leaving.
      // Tag of the merged edge: resolved when the leaving edge is pushed.
      continue;
    }
    out.push_back(cur);
    outt.push_back(wt[i]);
  }
  if (out.size() < 3) return detail::collapse_collinear(out);

  // Prefer the clipping-edge tag on merged edges: walk original edges and, for
  // each surviving edge, adopt a preferred tag if any merged-in edge carries one.
  if (prefer) {
    for (std::size_t j = 0; j < out.size(); ++j) {
      const Vec2& from = out[j];
      const Vec2& to = out[(j + 1) % out.size()];
      // Scan original edges between `from` and `to` in cyclic order.
      std::size_t i0 = 0;
      while (i0 < n && !(w[i0] == from)) ++i0;
      for (std::size_t k = i0; k < i0 + n; ++k) {
        const std::size_t i = k % n;
        if (prefer(wt[i])) {
          outt[j] = wt[i];
          break;
        }
        if (w[(i + 1) % n] == to) break;
      }
    }
  }

  ConvexRegion r;
  r.kind = RegionKind::polygon;
  r.verts = std::move(out);
  r.tags = std::move(outt);
  return r;
}

inline ConvexRegion make_polygon(std::vector<Vec2> vs, std::vector<EdgeTag> tags = {}) {
  if (tags.empty()) tags.assign(vs.size(), EdgeTag::domain());
  return canonical_region(std::move(vs), std::move(tags));
}

// Closure containment (exact).
inline bool region_contains(const ConvexRegion& r, const Vec2& p) {
  switch (r.kind) {
    case RegionKind::empty:
      return false;
    case RegionKind::point:
      return r.verts[0] == p;
    case RegionKind::segment: {
      const Vec2 &a = r.verts[0], &b = r.verts[1];
      if (orient(a, b, p) != 0) return false;
      return dot(p - a, p - b).sign() <= 0;
    }
    case RegionKind::polygon: {
      const std::size_t n = r.verts.size();
      for (std::size_t i = 0; i < n; ++i)
        if (orient(r.verts[i], r.verts[(i + 1) % n], p) < 0) return false;
      return true;
    }
  }
  return false;
}

// Strict interior containment (exact). Points and segments have empty interior.
inline bool region_contains_interior(const ConvexRegion& r, const Vec2& p) {
  if (r.kind != RegionKind::polygon) return false;
  const std::size_t n = r.verts.size();
  for (std::size_t i = 0; i < n; ++i)
    if (orient(r.verts[i], r.verts[(i + 1) % n], p) <= 0) return false;
  return true;
}

// Exact subset test: convexity reduces it to vertex containment.
inline bool region_subset(const ConvexRegion& inner, const ConvexRegion& outer) {
  if (inner.is_empty()) return true;
  for (const auto& v : inner.verts)
    if (!region_contains(outer, v)) return false;
  return true;
}

namespace detail {

// Clip a region to the closed half-plane left of the directed line a -> b.
// New boundary created on the line gets `cut_tag`.
inline ConvexRegion clip_halfplane(const ConvexRegion& r, const Vec2& a, const Vec2& b,
                                   const EdgeTag& cut_tag) {
  if (r.is_empty()) return r;
  if (r.kind == RegionKind::point)
    return orient(a, b, r.verts[0]) >= 0 ? r : ConvexRegion::empty_region();
  if (r.kind == RegionKind::segment) {
    const Vec2 &p = r.verts[0], &q = r.verts[1];
    const int sp = orient(a, b, p), sq = orient(a, b, q);
    if (sp >= 0 && sq >= 0) return r;
    if (sp < 0 && sq < 0) return ConvexRegion::empty_region();
    // Crossing point: p + t (q - p) with t = sp_val / (sp_val - sq_val).
    const Rat d = cross(b - a, q - p);
    const Rat t = cross(b - a, a - p) / d;
    const Vec2 m = p + t * (q - p);
    if (sp >= 0) return ConvexRegion::segment_region(p, m);
    return ConvexRegion::segment_region(m, q);
  }

  const std::size_t n = r.verts.size();
  std::vector<Vec2> out;
  std::vector<EdgeTag> outt;
  out.reserve(n + 2);
  outt.reserve(n + 2);
  std::vector<int> side(n);
  bool any_neg = false, any_pos = false;
  for (std::size_t i = 0; i < n; ++i) {
    side[i] = orient(a, b, r.verts[i]);
    any_neg |= side[i] < 0;
    any_pos |= side[i] > 0;
  }
  if (!any_neg) return r;  // fully inside (touching is fine)
  if (!any_pos) {
    // Entirely on the line or right of it: intersection is the boundary part.
    std::vector<Vec2> on;
    for (std::size_t i = 0; i < n; ++i)
      if (side[i] == 0) on.push_back(r.verts[i]);
    return collapse_collinear(on);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const Vec2 &p = r.verts[i], &q = r.verts[j];
    if (side[i] >= 0) {
      out.push_back(p);
      outt.push_back(side[i] == 0 && side[j] < 0 ? cut_tag : r.tags[i]);
    }
    if ((side[i] > 0 && side[j] < 0) || (side[i] < 0 && side[j] > 0)) {
      const Rat d = cross(b - a, q - p);
      const Rat t = cross(b - a, a - p) / d;
      out.push_back(p + t * (q - p));
      outt.push_back(side[i] > 0 ? cut_tag : r.tags[i]);
    }
  }
  const EdgeTag want = cut_tag;
  return canonical_region(std::move(out), std::move(outt), [&want](const EdgeTag& t) {
    return t.source == want.source && t.piece == want.piece && t.edge == want.edge &&
           t.iterate == want.iterate && t.rect == want.rect && t.rect_side == want.rect_side;
  });
}

inline ConvexRegion intersect_poly_poly(const ConvexRegion& p, const ConvexRegion& q) {
  ConvexRegion r = p;
  const std::size_t n = q.verts.size();
  for (std::size_t i = 0; i < n && !r.is_empty(); ++i)
    r = clip_halfplane(r, q.verts[i], q.verts[(i + 1) % n], q.tags[i]);
  return r;
}

inline ConvexRegion intersect_with_segment(const ConvexRegion& poly, const ConvexRegion& seg) {
  ConvexRegion r = seg;
  const std::size_t n = poly.verts.size();
  for (std::size_t i = 0; i < n && !r.is_empty(); ++i)
    r = clip_halfplane(r, poly.verts[i], poly.verts[(i + 1) % n], poly.tags[i]);
  return r;
}

// Intersection of two segments (exact); result is segment/point/empty.
inline ConvexRegion intersect_seg_seg(const ConvexRegion& s1, const ConvexRegion& s2) {
  const Vec2 &a = s1.verts[0], &b = s1.verts[1], &c = s2.verts[0], &d = s2.verts[1];
  const Rat denom = cross(b - a, d - c);
  if (denom.is_zero()) {
    if (orient(a, b, c) != 0) return ConvexRegion::empty_region();
    // Collinear: overlap along the common line.
    auto lo1 = std::min(a, b), hi1 = std::max(a, b);
    auto lo2 = std::min(c, d), hi2 = std::max(c, d);
    const Vec2 lo = std::max(lo1, lo2), hi = std::min(hi1, hi2);
    if (hi < lo) return ConvexRegion::empty_region();
    return ConvexRegion::segment_region(lo, hi);
  }
  const Rat t = cross(c - a, d - c) / denom;
  const Rat u = cross(c - a, b - a) / denom;
  if (t < Rat(0) || t > Rat(1) || u < Rat(0) || u > Rat(1)) return ConvexRegion::empty_region();
  return ConvexRegion::point_region(a + t * (b - a));
}

}  // namespace detail

// Exact intersection of convex regions. Degenerate results are canonical
// segment/point/empty, never thin polygons; result edges inherit provenance
// from the contributing input edge.
inline ConvexRegion intersect_convex(const ConvexRegion& p, const ConvexRegion& q) {
  if (p.is_empty() || q.is_empty()) return ConvexRegion::empty_region();
  if (p.kind == RegionKind::point)
    return region_contains(q, p.verts[0]) ? p : ConvexRegion::empty_region();
  if (q.kind == RegionKind::point)
    return region_contains(p, q.verts[0]) ? q : ConvexRegion::empty_region();
  if (p.kind == RegionKind::segment && q.kind == RegionKind::segment)
    return detail::intersect_seg_seg(p, q);
  if (p.kind == RegionKind::segment) return detail::intersect_with_segment(q, p);
  if (q.kind == RegionKind::segment) return detail::intersect_with_segment(p, q);
  return detail::intersect_poly_poly(p, q);
}

// Clip to the closed half-plane left of the directed line a -> b.
inline ConvexRegion clip_left_of_line(const ConvexRegion& r, const Vec2& a, const Vec2& b,
                                      const EdgeTag& tag = EdgeTag::domain()) {
  return detail::clip_halfplane(r, a, b, tag);
}

// Image of a region under an affine map. Orientation is re-normalized to CCW
// when det < 0; a singular map collapses polygons to segments/points.
inline ConvexRegion apply_affine(const AffineMap2& f, const ConvexRegion& r) {
  if (r.is_empty()) return r;
  std::vector<Vec2> vs;
  vs.reserve(r.verts.size());
  for (const auto& v : r.verts) vs.push_back(f(v));
  switch (r.kind) {
    case RegionKind::point:
      return ConvexRegion::point_region(vs[0]);
    case RegionKind::segment:
      return ConvexRegion::segment_region(vs[0], vs[1]);
    default:
      break;
  }
  return canonical_region(std::move(vs), r.tags);
}

struct RegionMetrics {
  Rat area;
  double diameter = 0.0;
  double width = 0.0;
  Segment long_axis;
};

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double ax = a.x.to_double(), ay = a.y.to_double();
  const double bx = b.x.to_double(), by = b.y.to_double();
  const double px = p.x.to_double(), py = p.y.to_double();
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0.0) return std::hypot(px - ax, py - ay);
  double t = ((px - ax) * vx + (py - ay) * vy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

inline RegionMetrics region_metrics(const ConvexRegion& r) {
  if (r.is_empty()) throw EmptyRegionError();
  RegionMetrics m;
  m.area = region_area(r);
  const auto& vs = r.verts;
  m.long_axis = {vs[0], vs[0]};
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      const double d = dist(vs[i], vs[j]);
      if (d > m.diameter) {
        m.diameter = d;
        m.long_axis = {vs[i], vs[j]};
      }
    }
  if (r.kind == RegionKind::polygon) {
    // Width of a convex polygon: min over edges of the farthest vertex from
    // the edge line (rotating-calipers equivalent).
    double w = std::numeric_limits<double>::infinity();
    const std::size_t n = vs.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 &a = vs[i], &b = vs[(i + 1) % n];
      const double ex = (b.x - a.x).to_double(), ey = (b.y - a.y).to_double();
      const double elen = std::hypot(ex, ey);
      double far = 0.0;
      for (const auto& v : vs) {
        const double d =
            std::fabs(ex * (v.y - a.y).to_double() - ey * (v.x - a.x).to_double()) / elen;
        far = std::max(far, d);
      }
      w = std::min(w, far);
    }
    m.width = w;
  }
  return m;
}

// Distance from an interior/closure point to the region boundary (float).
inline double distance_to_boundary(const ConvexRegion& r, const Vec2& p) {
  if (r.is_empty()) throw EmptyRegionError();
  if (r.kind == RegionKind::point) return 0.0;
  if (r.kind == RegionKind::segment)
    return std::min(dist(p, r.verts[0]), dist(p, r.verts[1]));
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = r.verts.size();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, point_segment_distance(p, r.verts[i], r.verts[(i + 1) % n]));
  return best;
}

// Exact bounding box (lo, hi).
inline std::pair<Vec2, Vec2> region_bbox(const ConvexRegion& r) {
  if (r.is_empty()) throw EmptyRegionError();
  Rat x0 = r.verts[0].x, x1 = x0, y0 = r.verts[0].y, y1 = y0;
  for (const auto& v : r.verts) {
    x0 = min(x0, v.x);
    x1 = max(x1, v.x);
    y0 = min(y0, v.y);
    y1 = max(y1, v.y);
  }
  return {Vec2(x0, y0), Vec2(x1, y1)};
}

// Exact line-line intersection; lines given by two points each.
inline std::optional<Vec2> line_line_intersection(const Vec2& a, const Vec2& b, const Vec2& c,
                                                  const Vec2& d) {
  const Rat denom = cross(b - a, d - c);
  if (denom.is_zero()) return std::nullopt;
  const Rat t = cross(c - a, d - c) / denom;
  return a + t * (b - a);
}

// Exact test: is p on the closed segment [a, b]?
inline bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  if (orient(a, b, p) != 0) return false;
  return dot(p - a, p - b).sign() <= 0;
}

// Exact test: segment [p,q] entirely inside segment [a,b].
inline bool segment_inside_segment(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  return on_segment(p, a, b) && on_segment(q, a, b);
}

// Exact test: do the open segment (p,q) and closed segment [a,b] share a
// subsegment of positive length?
inline bool segments_overlap_collinear(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  if (orient(a, b, p) != 0 || orient(a, b, q) != 0) return false;
  const Vec2 lo1 = std::min(p, q), hi1 = std::max(p, q);
  const Vec2 lo2 = std::min(a, b), hi2 = std::max(a, b);
  const Vec2 lo = std::max(lo1, lo2), hi = std::min(hi1, hi2);
  return lo < hi;
}

// Exact set equality of canonical regions (polygon compare up to cyclic shift).
inline bool region_equal(const ConvexRegion& a, const ConvexRegion& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case RegionKind::empty:
      return true;
    case RegionKind::point:
      return a.verts[0] == b.verts[0];
    case RegionKind::segment:
      return (a.verts[0] == b.verts[0] && a.verts[1] == b.verts[1]) ||
             (a.verts[0] == b.verts[1] && a.verts[1] == b.verts[0]);
    case RegionKind::polygon: {
      if (a.verts.size() != b.verts.size()) return false;
      const std::size_t n = a.verts.size();
      for (std::size_t off = 0; off < n; ++off) {
        bool same = true;
        for (std::size_t i = 0; i < n; ++i)
          if (!(a.verts[i] == b.verts[(i + off) % n])) {
            same = false;
            break;
          }
        if (same) return true;
      }
      return false;
    }
  }
  return false;
}

// Exact convex hull (Andrew's monotone chain), CCW, collinear points dropped.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<Vec2> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && orient(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && orient(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

// True iff the canonical polygon equals the convex hull of its vertices in
// cyclic order, i.e. the input loop was genuinely convex and simple.
inline bool is_strictly_convex_loop(const std::vector<Vec2>& vs) {
  if (vs.size() < 3) return false;
  auto hull = convex_hull(vs);
  if (hull.size() != vs.size()) return false;
  // Align cyclic order.
  auto start = std::find(vs.begin(), vs.end(), hull[0]);
  if (start == vs.end()) return false;
  const std::size_t off = static_cast<std::size_t>(start - vs.begin());
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (!(vs[(off + i) % vs.size()] == hull[i])) return false;
  return true;
}

}  // namespace pwadyn
