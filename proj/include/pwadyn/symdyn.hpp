#pragma once

// Symbolic dynamics: itineraries, exhaustive nonempty-cylinder enumeration,
// topological-entropy estimators, and the multiplicity profile.
//
// Conventions: pieces are open; a cylinder is counted when the intersection of
// the pulled-back piece closures has positive area. Zero-area (segment/point)
// intersections correspond to boundary itineraries and are tallied separately.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pwadyn/pwamap.hpp"

namespace pwadyn {

class BoundaryHitError : public std::runtime_error {
 public:
  explicit BoundaryHitError(long long step)
      : std::runtime_error("orbit hits a piece boundary at step " + std::to_string(step)),
        step(step) {}
  long long step;
};

class TruncatedTreeError : public std::runtime_error {
 public:
  TruncatedTreeError() : std::runtime_error("cylinder tree was truncated by the node budget") {}
};

struct Word {
  std::vector<std::string> letters;
  long long start_time = 0;  // time index of letters[0]

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < letters.size(); ++i) {
      if (i) s += ',';
      s += letters[i];
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// Orbits and itineraries.

// Index of the partition piece whose interior contains p, or -1 (boundary/outside).
inline int piece_interior_index(const ConvexPartition& part, const Vec2& p) {
  for (std::size_t i = 0; i < part.size(); ++i)
    if (region_contains_interior(part[i].domain, p)) return static_cast<int>(i);
  return -1;
}

// One forward step of the map at time `t` (time only matters for schedules).
// Throws BoundaryHitError when the point is not interior to any piece.
inline Vec2 forward_step(const SystemView& sys, const Vec2& p, long long t, int* letter = nullptr) {
  const auto& part = sys.partition_at(t);
  const int k = piece_interior_index(part, p);
  if (k < 0) throw BoundaryHitError(t);
  if (letter) *letter = k;
  return part[static_cast<std::size_t>(k)].branch(p);
}

// One backward step: the unique preimage under the branch of a piece whose
// interior contains it. Ambiguous or missing preimages throw.
inline Vec2 backward_step(const SystemView& sys, const Vec2& p, long long t, int* letter = nullptr) {
  const auto& part = sys.partition_at(t);
  int found = -1;
  Vec2 pre;
  for (std::size_t i = 0; i < part.size(); ++i) {
    const auto& piece = part[i];
    if (piece.branch.det().is_zero())
      throw GeomError("backward step requires invertible branches");
    const Vec2 y = invert_affine(piece.branch)(p);
    if (region_contains_interior(piece.domain, y)) {
      if (found >= 0) throw GeomError("ambiguous preimage (map is not injective here)");
      found = static_cast<int>(i);
      pre = y;
    }
  }
  if (found < 0) throw BoundaryHitError(t);
  if (letter) *letter = found;
  return pre;
}

// Itinerary letters of T^k x for -n_back <= k < n_fwd, all membership tests exact.
inline Word itinerary(const SystemView& sys, const Vec2& x, int n_back, int n_fwd) {
  Word w;
  w.start_time = -n_back;
  std::vector<std::string> back;
  Vec2 p = x;
  for (int k = 1; k <= n_back; ++k) {
    int letter = -1;
    p = backward_step(sys, p, -k, &letter);
    back.push_back(sys.partition_at(-k)[static_cast<std::size_t>(letter)].id);
  }
  for (auto it = back.rbegin(); it != back.rend(); ++it) w.letters.push_back(*it);
  p = x;
  for (int k = 0; k < n_fwd; ++k) {
    int letter = -1;
    p = forward_step(sys, p, k, &letter);
    w.letters.push_back(sys.partition_at(k)[static_cast<std::size_t>(letter)].id);
  }
  return w;
}

inline Word itinerary(const PwaMap& m, const Vec2& x, int n_back, int n_fwd) {
  return itinerary(SystemView(m), x, n_back, n_fwd);
}

// ---------------------------------------------------------------------------
// Cylinder trees.

struct CylinderNode {
  int parent = -1;
  int letter = -1;      // index into partition_at(depth - 1)
  int depth = 0;        // word length
  ConvexRegion region;  // exact closed cylinder at time 0
  AffineMap2 composed;  // word composition, time 0 -> time depth
  std::vector<int> children;
};

struct CylinderTree {
  std::vector<CylinderNode> nodes;  // nodes[0] = root (domain, empty word)
  std::vector<std::uint64_t> counts;           // counts[k-1] = c_k
  std::vector<std::uint64_t> boundary_counts;  // zero-area tallies per depth
  int depth = 0;
  bool truncated = false;

  std::vector<int> letters_of(int node) const {
    std::vector<int> w;
    for (int cur = node; cur > 0; cur = nodes[static_cast<std::size_t>(cur)].parent)
      w.push_back(nodes[static_cast<std::size_t>(cur)].letter);
    std::reverse(w.begin(), w.end());
    return w;
  }

  std::vector<int> nodes_at_depth(int d) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].depth == d) out.push_back(static_cast<int>(i));
    return out;
  }
};

inline Word tree_word(const SystemView& sys, const CylinderTree& tree, int node) {
  Word w;
  const auto letters = tree.letters_of(node);
  for (std::size_t k = 0; k < letters.size(); ++k)
    w.letters.push_back(
        sys.partition_at(static_cast<long long>(k))[static_cast<std::size_t>(letters[k])].id);
  return w;
}

namespace detail {

inline ConvexRegion piece_closure_at_iterate(const Piece& piece, int iterate) {
  ConvexRegion r = piece.domain;
  for (auto& t : r.tags) t.iterate = iterate;
  return r;
}

// Lean clipping pipeline for counting: vertices only, no provenance tags,
// per-piece edge lines precomputed. Exactness is identical to the tagged path.
struct PieceClipper {
  struct Line {
    Rat a, b, c;  // inside: a x + b y <= c
  };
  std::vector<std::vector<Line>> lines;      // per piece
  std::vector<std::array<double, 4>> bbox;   // x0, x1, y0, y1 per piece

  explicit PieceClipper(const ConvexPartition& part) {
    lines.reserve(part.size());
    bbox.reserve(part.size());
    for (const auto& piece : part) {
      std::vector<Line> ls;
      const auto& vs = piece.domain.verts;
      const std::size_t n = vs.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2 &p = vs[i], &q = vs[(i + 1) % n];
        // CCW edge p -> q: interior satisfies (q-p) x (r-p) >= 0, i.e.
        // (py - qy) x + (qx - px) y <= py qx - px qy ... expanded below.
        Line l;
        l.a = q.y - p.y;
        l.b = p.x - q.x;
        l.c = l.a * p.x + l.b * p.y;
        ls.push_back(std::move(l));
      }
      lines.push_back(std::move(ls));
      double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
      for (const auto& v : vs) {
        const double x = v.x.to_double(), y = v.y.to_double();
        x0 = std::min(x0, x); x1 = std::max(x1, x);
        y0 = std::min(y0, y); y1 = std::max(y1, y);
      }
      bbox.push_back({x0, x1, y0, y1});
    }
  }

  // Clip `poly` (CCW convex loop) against piece `s`; result has collinear
  // runs merged. Returns the number of distinct output vertices and whether
  // the output has positive area. Scratch buffers avoid reallocation.
  struct Result {
    bool empty = true;
    bool positive_area = false;
  };
  Result clip(const std::vector<Vec2>& poly, std::size_t s, std::vector<Vec2>& out,
              std::vector<Vec2>& scratch, std::vector<int>& sides) const {
    out = poly;
    for (const auto& l : lines[s]) {
      if (out.empty()) break;
      const std::size_t n = out.size();
      sides.resize(n);
      bool any_outside = false, all_outside = true;
      for (std::size_t i = 0; i < n; ++i) {
        sides[i] = (l.a * out[i].x + l.b * out[i].y - l.c).sign();
        any_outside |= sides[i] > 0;
        all_outside &= sides[i] > 0;
      }
      if (!any_outside) continue;
      if (all_outside) {
        out.clear();
        break;
      }
      scratch.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const int si = -sides[i], sj = -sides[j];  // si >= 0 means inside
        if (si >= 0) scratch.push_back(out[i]);
        if ((si > 0 && sj < 0) || (si < 0 && sj > 0)) {
          // Signed values are proportional to distance: exact parameter.
          const Rat vi = l.a * out[i].x + l.b * out[i].y - l.c;
          const Rat vj = l.a * out[j].x + l.b * out[j].y - l.c;
          const Rat t = vi / (vi - vj);
          scratch.push_back(out[i] + t * (out[j] - out[i]));
        }
      }
      out.swap(scratch);
    }
    Result r;
    if (out.empty()) return r;
    // Dedupe consecutive duplicates and merge collinear runs.
    scratch.clear();
    for (const auto& v : out)
      if (scratch.empty() || !(scratch.back() == v)) scratch.push_back(v);
    while (scratch.size() > 1 && scratch.back() == scratch.front()) scratch.pop_back();
    if (scratch.size() >= 3) {
      out.clear();
      const std::size_t n = scratch.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (orient(scratch[(i + n - 1) % n], scratch[i], scratch[(i + 1) % n]) == 0) continue;
        out.push_back(scratch[i]);
      }
      if (out.empty()) out.push_back(scratch[0]);  // fully collinear, keep a witness
    } else {
      out.swap(scratch);
    }
    r.empty = out.empty();
    if (out.size() >= 3) r.positive_area = area2_of(out).sign() > 0;
    return r;
  }
};

inline bool bbox_disjoint(const ConvexRegion& a, const ConvexRegion& b) {
  // Cheap float prefilter; exactness is restored by the exact clip afterwards.
  double ax0 = 1e300, ax1 = -1e300, ay0 = 1e300, ay1 = -1e300;
  double bx0 = 1e300, bx1 = -1e300, by0 = 1e300, by1 = -1e300;
  for (const auto& v : a.verts) {
    const double x = v.x.to_double(), y = v.y.to_double();
    ax0 = std::min(ax0, x); ax1 = std::max(ax1, x);
    ay0 = std::min(ay0, y); ay1 = std::max(ay1, y);
  }
  for (const auto& v : b.verts) {
    const double x = v.x.to_double(), y = v.y.to_double();
    bx0 = std::min(bx0, x); bx1 = std::max(bx1, x);
    by0 = std::min(by0, y); by1 = std::max(by1, y);
  }
  const double eps = 1e-9;
  return ax1 < bx0 - eps || bx1 < ax0 - eps || ay1 < by0 - eps || by1 < ay0 - eps;
}

}  // namespace detail

// Exhaustive enumeration of positive-area cylinders to depth n, breadth-first,
// deterministic (children in partition order). Needs invertible branches. The
// node budget flags a truncated tree; per-depth counts remain valid only for
// fully completed depths.
inline CylinderTree enumerate_cylinders(const SystemView& sys, int n,
                                        std::size_t node_budget = 1'000'000) {
  if (n < 1) throw std::invalid_argument("enumerate_cylinders: depth must be >= 1");
  for (int t = 0; t < (sys.scheduled() ? n : 1); ++t)
    for (const auto& p : sys.partition_at(t))
      if (p.branch.det().is_zero())
        throw GeomError("enumerate_cylinders requires invertible branches");

  CylinderTree tree;
  CylinderNode root;
  root.depth = 0;
  root.region = sys.domain();
  root.composed = AffineMap2::identity();
  tree.nodes.push_back(std::move(root));
  tree.counts.assign(static_cast<std::size_t>(n), 0);
  tree.boundary_counts.assign(static_cast<std::size_t>(n), 0);

  std::vector<int> frontier = {0};
  for (int d = 0; d < n && !frontier.empty(); ++d) {
    const auto& part = sys.partition_at(d);
    std::vector<int> next;
    bool full_depth = true;
    for (const int ni : frontier) {
      const ConvexRegion image = apply_affine(tree.nodes[static_cast<std::size_t>(ni)].composed,
                                              tree.nodes[static_cast<std::size_t>(ni)].region);
      const AffineMap2 inv = invert_affine(tree.nodes[static_cast<std::size_t>(ni)].composed);
      for (std::size_t s = 0; s < part.size(); ++s) {
        if (detail::bbox_disjoint(image, part[s].domain)) continue;
        const ConvexRegion q =
            intersect_convex(image, detail::piece_closure_at_iterate(part[s], d));
        if (q.is_empty()) continue;
        if (!q.is_polygon()) {
          ++tree.boundary_counts[static_cast<std::size_t>(d)];
          continue;
        }
        if (tree.nodes.size() >= node_budget) {
          tree.truncated = true;
          full_depth = false;
          break;
        }
        CylinderNode child;
        child.parent = ni;
        child.letter = static_cast<int>(s);
        child.depth = d + 1;
        child.region = apply_affine(inv, q);
        child.composed = part[s].branch.compose(tree.nodes[static_cast<std::size_t>(ni)].composed);
        tree.nodes.push_back(std::move(child));
        const int ci = static_cast<int>(tree.nodes.size()) - 1;
        tree.nodes[static_cast<std::size_t>(ni)].children.push_back(ci);
        next.push_back(ci);
        ++tree.counts[static_cast<std::size_t>(d)];
      }
      if (tree.truncated) break;
    }
    if (!full_depth || tree.truncated) {
      tree.truncated = true;
      tree.depth = d;  // last fully completed depth
      tree.counts.resize(static_cast<std::size_t>(d));
      tree.boundary_counts.resize(static_cast<std::size_t>(d));
      return tree;
    }
    tree.depth = d + 1;
    frontier = std::move(next);
  }
  return tree;
}

inline CylinderTree enumerate_cylinders(const PwaMap& m, int n, std::size_t budget = 1'000'000) {
  return enumerate_cylinders(SystemView(m), n, budget);
}

// Streaming depth-first cylinder counting: per-depth counts c_k without
// storing the tree. Same node set and counts as enumerate_cylinders.
struct CylinderCounts {
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> boundary_counts;
  int depth = 0;
  bool truncated = false;
};

inline CylinderCounts count_cylinders(const SystemView& sys, int n,
                                      std::size_t node_budget = 1'000'000) {
  if (n < 1) throw std::invalid_argument("count_cylinders: depth must be >= 1");
  for (int t = 0; t < (sys.scheduled() ? n : 1); ++t)
    for (const auto& p : sys.partition_at(t))
      if (p.branch.det().is_zero())
        throw GeomError("count_cylinders requires invertible branches");

  CylinderCounts out;
  out.counts.assign(static_cast<std::size_t>(n), 0);
  out.boundary_counts.assign(static_cast<std::size_t>(n), 0);
  out.depth = n;
  std::size_t visited = 0;

  // One clipper per schedule residue (a plain map has one).
  const int residues = sys.scheduled() ? n : 1;
  std::vector<detail::PieceClipper> clippers;
  clippers.reserve(static_cast<std::size_t>(residues));
  for (int t = 0; t < residues; ++t) clippers.emplace_back(sys.partition_at(t));
  auto clipper_at = [&](int d) -> const detail::PieceClipper& {
    return clippers[sys.scheduled() ? static_cast<std::size_t>(d) : 0];
  };
  auto partition_of = [&](int d) -> const ConvexPartition& { return sys.partition_at(d); };

  std::vector<Vec2> scratch_a, scratch_b;
  std::vector<int> scratch_sides;

  // Depth-first over forward image windows; coordinates stay inside the domain.
  std::function<void(const std::vector<Vec2>&, int)> expand = [&](const std::vector<Vec2>& image,
                                                                  int d) {
    if (d >= n || out.truncated) return;
    const auto& clipper = clipper_at(d);
    const auto& part = partition_of(d);
    double ix0 = 1e300, ix1 = -1e300, iy0 = 1e300, iy1 = -1e300;
    for (const auto& v : image) {
      const double x = v.x.to_double(), y = v.y.to_double();
      ix0 = std::min(ix0, x); ix1 = std::max(ix1, x);
      iy0 = std::min(iy0, y); iy1 = std::max(iy1, y);
    }
    std::vector<Vec2> q;
    for (std::size_t s = 0; s < part.size(); ++s) {
      if (out.truncated) return;
      const auto& bb = clipper.bbox[s];
      if (ix1 < bb[0] - 1e-9 || bb[1] < ix0 - 1e-9 || iy1 < bb[2] - 1e-9 || bb[3] < iy0 - 1e-9)
        continue;
      const auto res = clipper.clip(image, s, q, scratch_a, scratch_sides);
      if (res.empty) continue;
      if (!res.positive_area) {
        ++out.boundary_counts[static_cast<std::size_t>(d)];
        continue;
      }
      ++out.counts[static_cast<std::size_t>(d)];
      if (++visited > node_budget) {
        out.truncated = true;
        return;
      }
      std::vector<Vec2> next;
      next.reserve(q.size());
      const auto& f = part[s].branch;
      for (const auto& v : q) next.push_back(f(v));
      // An orientation-reversing branch flips the loop to clockwise; the
      // clipper needs CCW input.
      if (f.det().sign() < 0) std::reverse(next.begin(), next.end());
      expand(next, d + 1);
    }
  };
  expand(sys.domain().verts, 0);
  return out;
}

inline CylinderCounts count_cylinders(const PwaMap& m, int n, std::size_t budget = 1'000'000) {
  return count_cylinders(SystemView(m), n, budget);
}

// ---------------------------------------------------------------------------
// Entropy estimators.

struct EntropyEstimates {
  std::vector<double> avg;    // avg[k-1]   = (1/k) log c_k
  std::vector<double> ratio;  // ratio[k-1] = log(c_{k+1} / c_k)
};

inline EntropyEstimates entropy_estimates(const std::vector<std::uint64_t>& counts, bool truncated) {
  if (truncated) throw TruncatedTreeError();
  EntropyEstimates e;
  const std::size_t n = counts.size();
  e.avg.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    e.avg[k] = counts[k] == 0 ? -std::numeric_limits<double>::infinity()
                              : std::log(static_cast<double>(counts[k])) / static_cast<double>(k + 1);
  if (n >= 2) {
    e.ratio.resize(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k)
      e.ratio[k] = (counts[k] == 0 || counts[k + 1] == 0)
                       ? -std::numeric_limits<double>::infinity()
                       : std::log(static_cast<double>(counts[k + 1]) / static_cast<double>(counts[k]));
  }
  return e;
}

inline EntropyEstimates entropy_estimates(const CylinderTree& tree) {
  return entropy_estimates(tree.counts, tree.truncated);
}
inline EntropyEstimates entropy_estimates(const CylinderCounts& c) {
  return entropy_estimates(c.counts, c.truncated);
}

// ---------------------------------------------------------------------------
// Multiplicity profile.

struct MultiplicityProfile {
  std::vector<std::uint64_t> max_mult;  // per depth 1..n
  std::vector<Vec2> witness;            // a point attaining the max, per depth
};

namespace detail {

// Exact multiplicity of candidate points against a set of convex cells,
// using a bucketed float prefilter over rows of a regular grid.
inline std::vector<std::uint64_t> count_incidences(const std::vector<const ConvexRegion*>& cells,
                                                   const std::vector<Vec2>& candidates) {
  std::vector<std::uint64_t> mult(candidates.size(), 0);
  if (candidates.empty() || cells.empty()) return mult;

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  std::vector<std::pair<double, double>> cpos(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cpos[i] = {candidates[i].x.to_double(), candidates[i].y.to_double()};
    x0 = std::min(x0, cpos[i].first);
    x1 = std::max(x1, cpos[i].first);
    y0 = std::min(y0, cpos[i].second);
    y1 = std::max(y1, cpos[i].second);
  }
  const int grid = std::max(8, static_cast<int>(std::sqrt(static_cast<double>(candidates.size()))));
  const double gw = std::max(1e-12, (x1 - x0) / grid), gh = std::max(1e-12, (y1 - y0) / grid);
  auto col_of = [&](double x) { return std::clamp(static_cast<int>((x - x0) / gw), 0, grid - 1); };
  auto row_of = [&](double y) { return std::clamp(static_cast<int>((y - y0) / gh), 0, grid - 1); };
  std::vector<std::vector<std::uint32_t>> bucket(static_cast<std::size_t>(grid) * grid);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    bucket[static_cast<std::size_t>(row_of(cpos[i].second)) * grid + col_of(cpos[i].first)].push_back(
        static_cast<std::uint32_t>(i));

  const double eps = 1e-9;
  std::vector<std::pair<double, double>> poly;
  for (const ConvexRegion* cell : cells) {
    poly.clear();
    double cy0 = 1e300, cy1 = -1e300;
    for (const auto& v : cell->verts) {
      poly.emplace_back(v.x.to_double(), v.y.to_double());
      cy0 = std::min(cy0, poly.back().second);
      cy1 = std::max(cy1, poly.back().second);
    }
    const int r0 = row_of(cy0 - eps), r1 = row_of(cy1 + eps);
    for (int r = r0; r <= r1; ++r) {
      // Conservative x-range of the cell within this row band.
      const double band0 = y0 + r * gh - eps, band1 = y0 + (r + 1) * gh + eps;
      double bx0 = 1e300, bx1 = -1e300;
      const std::size_t pn = poly.size();
      for (std::size_t i = 0; i < pn; ++i) {
        const auto [px, py] = poly[i];
        const auto [qx, qy] = poly[(i + 1) % pn];
        if (py >= band0 && py <= band1) {
          bx0 = std::min(bx0, px);
          bx1 = std::max(bx1, px);
        }
        // Edge crossings of the band boundaries.
        for (const double by : {band0, band1}) {
          if ((py < by) != (qy < by)) {
            const double t = (by - py) / (qy - py);
            const double x = px + t * (qx - px);
            bx0 = std::min(bx0, x);
            bx1 = std::max(bx1, x);
          }
        }
      }
      if (bx0 > bx1) continue;
      const int c0 = col_of(bx0 - eps), c1 = col_of(bx1 + eps);
      for (int c = c0; c <= c1; ++c)
        for (const std::uint32_t ci : bucket[static_cast<std::size_t>(r) * grid + c])
          if (region_contains(*cell, candidates[ci])) ++mult[ci];
    }
  }
  return mult;
}

}  // namespace detail

// Max multiplicity of one generation of cells: mult evaluated at every vertex
// and edge midpoint of every cell (the maximum over the surface is attained
// on that skeleton). Witness is the lexicographically smallest attaining
// point for reproducibility.
inline std::pair<std::uint64_t, Vec2> max_multiplicity(const std::vector<const ConvexRegion*>& cells) {
  std::vector<Vec2> candidates;
  std::unordered_map<std::string, std::size_t> seen;
  auto add = [&](const Vec2& p) {
    const std::string key = p.x.str() + "|" + p.y.str();
    if (seen.emplace(key, candidates.size()).second) candidates.push_back(p);
  };
  const Rat half(1, 2);
  for (const ConvexRegion* cell : cells) {
    const std::size_t vn = cell->verts.size();
    for (std::size_t i = 0; i < vn; ++i) {
      add(cell->verts[i]);
      if (cell->kind == RegionKind::polygon || (cell->kind == RegionKind::segment && i == 0)) {
        const Vec2& a = cell->verts[i];
        const Vec2& b = cell->verts[(i + 1) % vn];
        add({half * (a.x + b.x), half * (a.y + b.y)});
      }
    }
  }
  const auto mult = detail::count_incidences(cells, candidates);
  std::uint64_t best = 0;
  Vec2 witness;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (mult[i] > best || (mult[i] == best && best > 0 && candidates[i] < witness)) {
      best = mult[i];
      witness = candidates[i];
    }
  }
  return {best, witness};
}

inline MultiplicityProfile multiplicity_profile(const CylinderTree& tree, int n) {
  if (tree.truncated || tree.depth < n) throw TruncatedTreeError();
  MultiplicityProfile prof;
  for (int d = 1; d <= n; ++d) {
    std::vector<const ConvexRegion*> cells;
    for (const auto& node : tree.nodes)
      if (node.depth == d) cells.push_back(&node.region);
    const auto [best, witness] = max_multiplicity(cells);
    prof.max_mult.push_back(best);
    prof.witness.push_back(witness);
  }
  return prof;
}

// Cylinder regions grouped by depth 1..n, without composed maps (leaner than
// a full tree for deep multiplicity profiles). Same traversal, same regions.
inline std::vector<std::vector<ConvexRegion>> collect_depth_regions(const SystemView& sys, int n,
                                                                    std::size_t node_budget = 1'000'000) {
  std::vector<std::vector<ConvexRegion>> out(static_cast<std::size_t>(n));
  std::size_t visited = 0;
  std::function<void(const ConvexRegion&, const AffineMap2&, int)> expand =
      [&](const ConvexRegion& region, const AffineMap2& composed, int d) {
        if (d >= n) return;
        const auto& part = sys.partition_at(d);
        const ConvexRegion image = apply_affine(composed, region);
        const AffineMap2 inv = invert_affine(composed);
        for (std::size_t s = 0; s < part.size(); ++s) {
          if (detail::bbox_disjoint(image, part[s].domain)) continue;
          const ConvexRegion q =
              intersect_convex(image, detail::piece_closure_at_iterate(part[s], d));
          if (!q.is_polygon()) continue;
          if (++visited > node_budget) throw TruncatedTreeError();
          ConvexRegion child = d == 0 ? q : apply_affine(inv, q);
          const AffineMap2 next = part[s].branch.compose(composed);
          expand(child, next, d + 1);
          out[static_cast<std::size_t>(d)].push_back(std::move(child));
        }
      };
  expand(sys.domain(), AffineMap2::identity(), 0);
  return out;
}

inline MultiplicityProfile multiplicity_profile(const SystemView& sys, int n,
                                                std::size_t budget = 1'000'000) {
  const auto regions = collect_depth_regions(sys, n, budget);
  MultiplicityProfile prof;
  for (int d = 1; d <= n; ++d) {
    std::vector<const ConvexRegion*> cells;
    for (const auto& r : regions[static_cast<std::size_t>(d - 1)]) cells.push_back(&r);
    const auto [best, witness] = max_multiplicity(cells);
    prof.max_mult.push_back(best);
    prof.witness.push_back(witness);
  }
  return prof;
}

// Multiplicity of one specific point at depth n (number of depth-n cylinder
// closures containing it).
inline std::uint64_t multiplicity_at(const CylinderTree& tree, int n, const Vec2& x) {
  if (tree.truncated || tree.depth < n) throw TruncatedTreeError();
  std::uint64_t count = 0;
  for (const auto& node : tree.nodes)
    if (node.depth == n && region_contains(node.region, x)) ++count;
  return count;
}

}  // namespace pwadyn
