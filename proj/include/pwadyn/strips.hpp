#pragma once

// Markov rectangles, crossing predicates, hyperbolic and admissible strips,
// controlled points, good return times, and the return-time decomposition.
//
// Certification is three-valued wherever a true (limit) manifold is
// referenced: exact refutation, heuristic acceptance, or unknown. Horizon
// effects degrade admissibility flags to `unknown` rather than guessing.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pwadyn/manifold.hpp"
#include "pwadyn/symdyn.hpp"

namespace pwadyn {

enum class CrossMode : uint8_t { s, u };

namespace detail {

// Does the region `q` cross rectangle `r`? Mode s: the contained boundary
// chains lie on r's unstable side pair, mode u: on the stable pair. Enforced
// strictly: the free sides' relative interiors must avoid all four sides of
// r, so a rectangle never crosses itself and zero-margin strips are excluded.
inline bool crossing_impl(const ConvexRegion& q, const Rectangle& r, CrossMode mode,
                          std::string* why = nullptr) {
  const auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (q.kind != RegionKind::polygon) return fail("region is not a polygon");
  const ConvexRegion rr = r.region();
  if (!region_subset(q, rr)) return fail("region is not contained in the rectangle");

  // The pair of sides the contained chains must lie on.
  int pair[2];
  {
    int k = 0;
    for (int s = 0; s < 4; ++s) {
      const bool stable = r.stable_side(s);
      if ((mode == CrossMode::s && !stable) || (mode == CrossMode::u && stable)) pair[k++] = s;
    }
  }
  const Segment side0 = r.side(pair[0]);
  const Segment side1 = r.side(pair[1]);

  const std::size_t n = q.verts.size();
  // Classify edges: 0 = on pair[0], 1 = on pair[1], -1 = free.
  std::vector<int> cls(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 &a = q.verts[i], &b = q.verts[(i + 1) % n];
    if (segment_inside_segment(a, b, side0.a, side0.b)) cls[i] = 0;
    else if (segment_inside_segment(a, b, side1.a, side1.b)) cls[i] = 1;
  }

  // Count maximal runs cyclically.
  std::vector<std::pair<int, std::vector<std::size_t>>> runs;  // class, edge indices
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && cls[i] == cls[i - 1]) {
      runs.back().second.push_back(i);
    } else {
      runs.push_back({cls[i], {i}});
    }
  }
  if (runs.size() > 1 && runs.front().first == runs.back().first) {
    for (auto e : runs.back().second) runs.front().second.push_back(e);
    runs.pop_back();
  }
  int on0 = 0, on1 = 0, free_runs = 0;
  for (const auto& [c, edges] : runs) {
    if (c == 0) ++on0;
    else if (c == 1) ++on1;
    else {
      ++free_runs;
      if (edges.size() != 1) return fail("a free boundary chain is not a single segment");
    }
  }
  if (on0 != 1 || on1 != 1) return fail("boundary does not touch both required sides exactly once");
  if (free_runs != 2) return fail("boundary does not have exactly two free sides");

  // Strict disjointness: free sides must not overlap any rectangle side.
  for (std::size_t i = 0; i < n; ++i) {
    if (cls[i] != -1) continue;
    const Vec2 &a = q.verts[i], &b = q.verts[(i + 1) % n];
    for (int s = 0; s < 4; ++s) {
      const Segment rs = r.side(s);
      if (segments_overlap_collinear(a, b, rs.a, rs.b))
        return fail("a free side overlaps a rectangle side");
    }
  }
  return true;
}

}  // namespace detail

// Exact crossing predicate (Markov-rectangle geometry).
inline bool crossing(const ConvexRegion& q, const Rectangle& r, CrossMode mode) {
  return detail::crossing_impl(q, r, mode);
}

// ---------------------------------------------------------------------------
// Strips.

struct Strip {
  std::vector<int> ext_letters;  // refined-cell indices; length n + 1
  int n = 0;
  int start_rect = -1;
  int end_rect = -1;
  ConvexRegion region;   // closed cylinder of the extended word (time 0)
  AffineMap2 to_end;     // composition of the first n branches (time 0 -> n)
  bool s_cross_exact = false;
  bool u_cross_exact = false;
  bool manifold_sides_by_provenance = false;
  enum class Admissible : uint8_t { unknown, yes, no };
  Admissible admissible = Admissible::unknown;
};

inline const char* admissible_str(Strip::Admissible a) {
  switch (a) {
    case Strip::Admissible::yes: return "yes";
    case Strip::Admissible::no: return "no";
    default: return "unknown";
  }
}

struct StripAnalysis {
  PwaMap refined;                 // base map with the rectangle-refined partition
  std::vector<Rectangle> rects;
  std::vector<int> rect_cell;     // rectangle -> refined cell index
  std::vector<int> cell_rect;     // refined cell -> rectangle index or -1
  std::vector<Strip> strips;      // sorted by (n, extended word)
  int max_n = 0;
  bool budget_exceeded = false;
  std::map<std::vector<int>, int> by_ext_word;

  const Strip* find(const std::vector<int>& ext) const {
    const auto it = by_ext_word.find(ext);
    return it == by_ext_word.end() ? nullptr : &strips[static_cast<std::size_t>(it->second)];
  }
  std::string word_str(const std::vector<int>& letters) const {
    std::string s;
    for (std::size_t i = 0; i < letters.size(); ++i) {
      if (i) s += ',';
      s += refined.pieces[static_cast<std::size_t>(letters[i])].id;
    }
    return s;
  }
};

namespace detail {

// Tag certificate: does this time-0 edge tag witness a stable-manifold side?
// Pulled-back partition edges (iterate >= 1) and pulled-back or current
// stable rectangle sides qualify.
inline bool tag_stable_certified(const EdgeTag& t, const std::vector<Rectangle>& rects) {
  if (t.source == EdgeTag::Source::partition_edge) return t.iterate >= 1;
  if (t.source == EdgeTag::Source::rectangle_edge && t.rect >= 0 &&
      t.rect < static_cast<int>(rects.size()))
    return rects[static_cast<std::size_t>(t.rect)].stable_side(t.rect_side);
  return false;
}

// At time n: does the tag witness an unstable-manifold side? Partition edges
// with iterate < n (pushed forward at least one step) and unstable rectangle
// sides with iterate <= n qualify.
inline bool tag_unstable_certified(const EdgeTag& t, const std::vector<Rectangle>& rects, int n) {
  if (t.source == EdgeTag::Source::partition_edge) return t.iterate < n;
  if (t.source == EdgeTag::Source::rectangle_edge && t.rect >= 0 &&
      t.rect < static_cast<int>(rects.size()))
    return !rects[static_cast<std::size_t>(t.rect)].stable_side(t.rect_side) && t.iterate <= n;
  return false;
}

// Free sides of a crossing (edges not inside the rectangle's contained pair).
inline std::vector<std::size_t> free_edges_of_crossing(const ConvexRegion& q, const Rectangle& r,
                                                       CrossMode mode) {
  int pair[2];
  int k = 0;
  for (int s = 0; s < 4; ++s) {
    const bool stable = r.stable_side(s);
    if ((mode == CrossMode::s && !stable) || (mode == CrossMode::u && stable)) pair[k++] = s;
  }
  std::vector<std::size_t> out;
  const std::size_t n = q.verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 &a = q.verts[i], &b = q.verts[(i + 1) % n];
    const Segment s0 = r.side(pair[0]), s1 = r.side(pair[1]);
    if (!segment_inside_segment(a, b, s0.a, s0.b) && !segment_inside_segment(a, b, s1.a, s1.b))
      out.push_back(i);
  }
  return out;
}

}  // namespace detail

// Detect every hyperbolic n-strip (1 <= n <= max_n) of the rectangle-refined
// partition: cylinders of n+1 letters starting and ending in rectangle cells
// whose closed region s-crosses the start rectangle and whose exact n-step
// image u-crosses the end rectangle. The manifold-side certificate checks the
// edge provenance of both free-side pairs. Exhaustive up to the node budget.
inline StripAnalysis detect_strips(const PwaMap& m, const std::vector<Rectangle>& rects, int max_n,
                                   std::size_t node_budget = 1'000'000) {
  if (max_n < 1) throw std::invalid_argument("detect_strips: max_n must be >= 1");
  StripAnalysis out;
  out.rects = rects;
  out.max_n = max_n;
  out.refined = m;
  out.refined.pieces = refine_with_rectangles(m.pieces, rects);
  validate(out.refined);

  // Every rectangle must be exactly one refined cell (guaranteed for arrays
  // produced by propose_rectangles; rejected otherwise).
  out.cell_rect.assign(out.refined.pieces.size(), -1);
  for (std::size_t r = 0; r < rects.size(); ++r) {
    const ConvexRegion rr = rects[r].region();
    int found = -1;
    for (std::size_t c = 0; c < out.refined.pieces.size(); ++c)
      if (region_equal(out.refined.pieces[c].domain, rr)) {
        found = static_cast<int>(c);
        break;
      }
    if (found < 0)
      throw std::invalid_argument("detect_strips: rectangle '" + rects[r].id +
                                  "' is not a single cell of the refined partition "
                                  "(it is cut by a piece edge or another rectangle's line)");
    out.rect_cell.push_back(found);
    out.cell_rect[static_cast<std::size_t>(found)] = static_cast<int>(r);
  }

  SystemView sys(out.refined);
  const auto& cells = out.refined.pieces;

  struct Node {
    std::vector<int> letters;
    ConvexRegion region;    // time-0 cylinder closure
    AffineMap2 composed;    // time 0 -> time |letters|
  };
  std::vector<Node> frontier;
  for (std::size_t r = 0; r < rects.size(); ++r) {
    const int c = out.rect_cell[r];
    Node node;
    node.letters = {c};
    node.region = detail::piece_closure_at_iterate(cells[static_cast<std::size_t>(c)], 0);
    node.composed = cells[static_cast<std::size_t>(c)].branch;
    frontier.push_back(std::move(node));
  }

  std::size_t visited = frontier.size();
  for (int depth = 1; depth <= max_n && !frontier.empty(); ++depth) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      const ConvexRegion image = apply_affine(node.composed, node.region);
      const AffineMap2 inv = invert_affine(node.composed);
      for (std::size_t s = 0; s < cells.size(); ++s) {
        if (detail::bbox_disjoint(image, cells[s].domain)) continue;
        const ConvexRegion q =
            intersect_convex(image, detail::piece_closure_at_iterate(cells[s], depth));
        if (!q.is_polygon()) continue;
        if (++visited > node_budget) {
          out.budget_exceeded = true;
          break;
        }
        Node child;
        child.letters = node.letters;
        child.letters.push_back(static_cast<int>(s));
        child.region = apply_affine(inv, q);

        // Candidate strip: ends in a rectangle cell.
        const int end_rect = out.cell_rect[s];
        if (end_rect >= 0) {
          Strip strip;
          strip.ext_letters = child.letters;
          strip.n = depth;
          strip.start_rect = out.cell_rect[static_cast<std::size_t>(child.letters[0])];
          strip.end_rect = end_rect;
          strip.region = child.region;
          strip.to_end = node.composed;
          strip.s_cross_exact =
              crossing(strip.region, rects[static_cast<std::size_t>(strip.start_rect)], CrossMode::s);
          if (strip.s_cross_exact) {
            const ConvexRegion image_n = apply_affine(strip.to_end, strip.region);
            strip.u_cross_exact =
                crossing(image_n, rects[static_cast<std::size_t>(end_rect)], CrossMode::u);
            if (strip.u_cross_exact) {
              bool cert = true;
              for (const std::size_t e : detail::free_edges_of_crossing(
                       strip.region, rects[static_cast<std::size_t>(strip.start_rect)], CrossMode::s))
                cert = cert && detail::tag_stable_certified(strip.region.tags[e], rects);
              for (const std::size_t e : detail::free_edges_of_crossing(
                       image_n, rects[static_cast<std::size_t>(end_rect)], CrossMode::u))
                cert = cert && detail::tag_unstable_certified(image_n.tags[e], rects, strip.n);
              strip.manifold_sides_by_provenance = cert;
              out.strips.push_back(std::move(strip));
            }
          }
        }

        if (depth < max_n) {
          child.composed = cells[s].branch.compose(node.composed);
          next.push_back(std::move(child));
        }
      }
      if (out.budget_exceeded) break;
    }
    if (out.budget_exceeded) break;
    frontier = std::move(next);
  }

  std::sort(out.strips.begin(), out.strips.end(), [](const Strip& a, const Strip& b) {
    if (a.n != b.n) return a.n < b.n;
    return a.ext_letters < b.ext_letters;
  });
  for (std::size_t i = 0; i < out.strips.size(); ++i)
    out.by_ext_word[out.strips[i].ext_letters] = static_cast<int>(i);
  return out;
}

// ---------------------------------------------------------------------------
// Admissibility (inductive, three-valued).

namespace detail {

// Does `probe` meet the interior of `region`? Exact.
inline bool meets_interior(const ConvexRegion& probe, const ConvexRegion& region) {
  const ConvexRegion i = intersect_convex(probe, region);
  if (i.is_empty()) return false;
  if (i.is_polygon()) return true;  // positive area inside a convex set
  if (i.kind == RegionKind::point) return region_contains_interior(region, i.verts[0]);
  const Rat half(1, 2);
  const Vec2 mid{half * (i.verts[0].x + i.verts[1].x), half * (i.verts[0].y + i.verts[1].y)};
  return region_contains_interior(region, mid);
}

inline AffineMap2 compose_prefix(const StripAnalysis& a, const std::vector<int>& letters,
                                 int steps) {
  AffineMap2 f = AffineMap2::identity();
  for (int k = 0; k < steps; ++k)
    f = a.refined.pieces[static_cast<std::size_t>(letters[static_cast<std::size_t>(k)])]
            .branch.compose(f);
  return f;
}

}  // namespace detail

// Inductive admissibility marking. A 1-strip is always admissible. An
// n-strip S is admissible iff for every m < n with S inside an admissible
// m-strip, T^m(S) meets the interior of no hyperbolic strip. Detected strips
// of length <= max_n are checked exactly; longer strips cannot be ruled out,
// so a clean pass degrades to `unknown` (refutations stay exact).
inline void admissible_filter(StripAnalysis& a) {
  for (auto& s : a.strips) s.admissible = Strip::Admissible::unknown;
  // Ascending n (strips are sorted by n already).
  for (auto& s : a.strips) {
    if (s.n == 1) {
      s.admissible = Strip::Admissible::yes;
      continue;
    }
    Strip::Admissible verdict = Strip::Admissible::yes;
    for (int m = 1; m < s.n && verdict != Strip::Admissible::no; ++m) {
      const std::vector<int> prefix(s.ext_letters.begin(), s.ext_letters.begin() + m + 1);
      const Strip* p = a.find(prefix);
      if (p == nullptr) continue;  // S is not inside an m-strip
      if (p->admissible == Strip::Admissible::no) continue;

      // The clause applies (definitely if p is yes, possibly if unknown):
      // test T^m(S) against the interiors of all detected strips.
      const AffineMap2 tm = detail::compose_prefix(a, s.ext_letters, m);
      const ConvexRegion image_m = apply_affine(tm, s.region);
      const int host_rect = a.cell_rect[static_cast<std::size_t>(s.ext_letters[m])];
      bool meets = false;
      for (const auto& h : a.strips) {
        if (host_rect >= 0 && h.start_rect != host_rect) continue;  // disjoint rectangles
        if (detail::meets_interior(image_m, h.region)) {
          meets = true;
          break;
        }
      }
      if (meets && p->admissible == Strip::Admissible::yes) {
        verdict = Strip::Admissible::no;
      } else {
        // Either the prefix's own admissibility is unsettled, or longer
        // undetected strips could still meet the image: horizon effect.
        verdict = Strip::Admissible::unknown;
      }
    }
    s.admissible = verdict;
  }
}

// ---------------------------------------------------------------------------
// Controlled points.

enum class ControlLevel : uint8_t { controlled, ten_controlled, s_controlled };
enum class ControlOutcome : uint8_t { refuted, heuristic_yes, unknown };

struct ControlVerdict {
  ControlLevel level = ControlLevel::controlled;
  ControlOutcome outcome = ControlOutcome::unknown;
  int depth = 0;
  std::string witness;  // set for refutations
};

struct ControlOptions {
  double eps_fraction = 1e-6;  // width acceptance threshold, fraction of domain diameter
};

// Three-valued control verdicts of x in rectangle r at the given depth.
// Exact refutation: the depth-n region (a superset of the true manifold)
// misses a required side, or (ten-controlled) the reach proxy is too small.
// Heuristic acceptance: the region crosses both required sides and is thinner
// than eps. The stable manifold must reach the unstable side pair and vice
// versa.
inline std::vector<ControlVerdict> control_status(const SystemView& sys, const Vec2& x,
                                                  const Rectangle& r, int depth,
                                                  const ControlOptions& opt = {}) {
  std::vector<ControlVerdict> out;
  const ConvexRegion rr = r.region();
  const double diam_r = region_metrics(rr).diameter;
  const double eps = opt.eps_fraction * region_metrics(sys.domain()).diameter;

  const bool inside = region_contains(rr, x);

  struct SideCheck {
    bool touches_both = false;
    bool thin = false;
    double reach = 0.0;
    std::string witness;
  };
  auto check_dir = [&](ManifoldDirection dir) -> SideCheck {
    SideCheck c;
    const ManifoldApprox ma = manifold_region(sys, x, depth, dir);
    int sides[2];
    int k = 0;
    for (int s = 0; s < 4; ++s) {
      const bool want_unstable_side = dir == ManifoldDirection::stable;
      if (r.stable_side(s) != want_unstable_side) sides[k++] = s;
    }
    c.touches_both = true;
    for (int i = 0; i < 2; ++i) {
      const Segment seg = r.side(sides[i]);
      const ConvexRegion sr = ConvexRegion::segment_region(seg.a, seg.b);
      if (intersect_convex(ma.region, sr).is_empty()) {
        c.touches_both = false;
        c.witness = std::string(dir == ManifoldDirection::stable ? "stable" : "unstable") +
                    " region misses side " + std::to_string(sides[i]);
      }
    }
    c.thin = region_metrics(ma.region).width < eps;
    c.reach = detail::chord_reach(ma.region, x);
    return c;
  };

  SideCheck st, un;
  bool have_un = true;
  std::string un_err;
  st = check_dir(ManifoldDirection::stable);
  try {
    un = check_dir(ManifoldDirection::unstable);
  } catch (const GeomError& e) {
    have_un = false;
    un_err = e.what();
  } catch (const BoundaryHitError& e) {
    have_un = false;
    un_err = e.what();
  }

  const double rho = have_un ? std::min(st.reach, un.reach) : st.reach;

  auto verdict_of = [&](ControlLevel level) {
    ControlVerdict v;
    v.level = level;
    v.depth = depth;
    if (!inside) {
      v.outcome = ControlOutcome::refuted;
      v.witness = "point is outside the rectangle";
      return v;
    }
    const bool needs_unstable = level != ControlLevel::s_controlled;
    if (!st.touches_both) {
      v.outcome = ControlOutcome::refuted;
      v.witness = st.witness;
      return v;
    }
    if (needs_unstable && have_un && !un.touches_both) {
      v.outcome = ControlOutcome::refuted;
      v.witness = un.witness;
      return v;
    }
    if (level == ControlLevel::ten_controlled && rho <= 10.0 * diam_r) {
      v.outcome = ControlOutcome::refuted;
      v.witness = "reach proxy <= 10 * diam(R)";
      return v;
    }
    if (needs_unstable && !have_un) {
      v.outcome = ControlOutcome::unknown;
      v.witness = un_err;
      return v;
    }
    const bool thin = st.thin && (!needs_unstable || un.thin);
    v.outcome = thin ? ControlOutcome::heuristic_yes : ControlOutcome::unknown;
    return v;
  };

  out.push_back(verdict_of(ControlLevel::controlled));
  out.push_back(verdict_of(ControlLevel::ten_controlled));
  out.push_back(verdict_of(ControlLevel::s_controlled));
  return out;
}

// ---------------------------------------------------------------------------
// Forward decomposition into admissible words (uniqueness check).

class DecompositionAmbiguityError : public std::runtime_error {
 public:
  DecompositionAmbiguityError()
      : std::runtime_error("two distinct admissible decompositions exist "
                           "(violates forward uniqueness)") {}
};

struct Decomposition {
  std::vector<std::vector<int>> blocks;  // admissible words, concatenating to the input
};

namespace detail {

struct AdmissibleWords {
  std::vector<std::vector<int>> words;            // deduped admissible words of yes-strips
  std::set<std::vector<int>> extended;            // extended words of yes-strips
  bool follower_ok(const std::vector<int>& w, int next_first_letter) const {
    std::vector<int> ext = w;
    ext.push_back(next_first_letter);
    return extended.count(ext) > 0;
  }
};

inline AdmissibleWords collect_admissible(const StripAnalysis& a) {
  AdmissibleWords out;
  std::set<std::vector<int>> seen;
  for (const auto& s : a.strips) {
    if (s.admissible != Strip::Admissible::yes) continue;
    out.extended.insert(s.ext_letters);
    std::vector<int> w(s.ext_letters.begin(), s.ext_letters.end() - 1);
    if (seen.insert(w).second) out.words.push_back(std::move(w));
  }
  std::sort(out.words.begin(), out.words.end());
  return out;
}

}  // namespace detail

// Decompose `letters` into a concatenation of certified admissible words with
// compatible junctions (each junction extends to an extended admissible
// word). Returns std::nullopt when no decomposition covers the word; throws
// if two distinct ones do.
inline std::optional<Decomposition> decompose_forward(const StripAnalysis& a,
                                                      const std::vector<int>& letters) {
  const auto adm = detail::collect_admissible(a);
  const std::size_t len = letters.size();
  std::vector<Decomposition> complete;

  struct Frame {
    std::size_t pos;
    std::vector<std::vector<int>> blocks;
  };
  std::vector<Frame> stack;
  stack.push_back({0, {}});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.pos == len) {
      complete.push_back({f.blocks});
      if (complete.size() > 1) throw DecompositionAmbiguityError();
      continue;
    }
    for (const auto& w : adm.words) {
      if (w.size() > len - f.pos) continue;
      if (!std::equal(w.begin(), w.end(), letters.begin() + static_cast<long>(f.pos))) continue;
      if (!f.blocks.empty()) {
        if (!adm.follower_ok(f.blocks.back(), w[0])) continue;
      }
      Frame g = f;
      g.pos += w.size();
      g.blocks.push_back(w);
      stack.push_back(std::move(g));
    }
  }
  if (complete.empty()) return std::nullopt;
  return complete[0];
}

// ---------------------------------------------------------------------------
// Good return times.

class HorizonExceededError : public std::runtime_error {
 public:
  explicit HorizonExceededError(int horizon)
      : std::runtime_error("no good return within the horizon of " + std::to_string(horizon) +
                           " steps (tau may be larger or infinite)") {}
};

struct ReturnRecord {
  int tau = 0;                     // first good return time
  std::vector<int> tau_iterates;   // cumulative tau_1 < tau_1+tau_2 <= horizon
  int window = 0;                  // N used for the decomposition fields
  int N0 = 0, N1 = 0, N2 = 0;
  std::vector<int> admissible_times;               // n_1 < ... < n_r < window
  std::vector<std::pair<int, int>> hyperbolic_times;  // (i, m_ij), grouped by interval
  bool control_heuristic = true;   // acceptance of kappa_s / Kappa was heuristic
};

namespace detail {

// Is T^k x s-controlled (resp. 10-controlled) in the rectangle of its cell?
// Accepts heuristic_yes; anything else is "not in the controlled set".
inline bool accepted_control(const StripAnalysis& a, const SystemView& sys, const Vec2& xk,
                             int cell, int depth, ControlLevel level) {
  const int r = a.cell_rect[static_cast<std::size_t>(cell)];
  if (r < 0) return false;
  try {
    const auto verdicts = control_status(sys, xk, a.rects[static_cast<std::size_t>(r)], depth);
    for (const auto& v : verdicts)
      if (v.level == level) return v.outcome == ControlOutcome::heuristic_yes;
  } catch (const BoundaryHitError&) {
  } catch (const GeomError&) {
  }
  return false;
}

}  // namespace detail

// Good return time of x: the least n <= horizon such that x lies in a
// certified admissible n-strip and T^n x is s-controlled (heuristic verdicts
// accepted, flagged). Also computes the return-time decomposition integers
// over the window min(horizon, tau) and the iterated returns within the
// horizon. Control verdicts use manifold depth `ctrl_depth`.
inline ReturnRecord good_return_time(const StripAnalysis& a, const Vec2& x, int horizon,
                                     int ctrl_depth = 14) {
  if (horizon < 1 || horizon > a.max_n)
    throw std::invalid_argument("good_return_time: horizon must be in [1, max_n]");
  SystemView sys(a.refined);

  // Forward orbit and letters (one extra letter when the orbit allows it, so
  // tau = horizon is representable).
  std::vector<Vec2> orbit = {x};
  std::vector<int> letters;
  for (int k = 0; k < horizon; ++k) {
    int letter = -1;
    orbit.push_back(forward_step(sys, orbit.back(), k, &letter));
    letters.push_back(letter);
  }
  try {
    int letter = -1;
    orbit.push_back(forward_step(sys, orbit.back(), horizon, &letter));
    letters.push_back(letter);
  } catch (const BoundaryHitError&) {
    orbit.push_back(orbit.back());  // placeholder, never read
  }

  const auto is_yes_strip_prefix = [&](int nsteps) -> bool {
    if (nsteps + 1 > static_cast<int>(letters.size())) return false;
    const std::vector<int> prefix(letters.begin(), letters.begin() + nsteps + 1);
    const Strip* s = a.find(prefix);
    return s != nullptr && s->admissible == Strip::Admissible::yes;
  };
  const auto is_any_strip_prefix = [&](int nsteps) -> bool {
    if (nsteps + 1 > static_cast<int>(letters.size())) return false;
    const std::vector<int> prefix(letters.begin(), letters.begin() + nsteps + 1);
    return a.find(prefix) != nullptr;
  };

  ReturnRecord rec;
  int tau = -1;
  for (int n = 1; n <= horizon; ++n) {
    if (!is_yes_strip_prefix(n)) continue;
    if (detail::accepted_control(a, sys, orbit[static_cast<std::size_t>(n)], letters[static_cast<std::size_t>(n)],
                                 ctrl_depth, ControlLevel::s_controlled)) {
      tau = n;
      break;
    }
  }
  if (tau < 0) throw HorizonExceededError(horizon);
  rec.tau = tau;

  // Iterated returns within the horizon.
  int t = tau;
  rec.tau_iterates.push_back(t);
  while (t < horizon) {
    int next = -1;
    for (int n = 1; t + n <= horizon - 1; ++n) {
      const std::vector<int> word(letters.begin() + t, letters.begin() + t + n + 1);
      const Strip* s = a.find(word);
      if (s == nullptr || s->admissible != Strip::Admissible::yes) continue;
      if (detail::accepted_control(a, sys, orbit[static_cast<std::size_t>(t + n)],
                                   letters[static_cast<std::size_t>(t + n)], ctrl_depth,
                                   ControlLevel::s_controlled)) {
        next = n;
        break;
      }
    }
    if (next < 0) break;
    t += next;
    rec.tau_iterates.push_back(t);
  }

  // Decomposition integers over the window N = min(horizon, tau).
  const int window = std::min(horizon, tau);
  rec.window = window;
  const auto ten_at = [&](int k) {
    return detail::accepted_control(a, sys, orbit[static_cast<std::size_t>(k)],
                                    letters[static_cast<std::size_t>(k)], ctrl_depth,
                                    ControlLevel::ten_controlled);
  };
  const auto s_at = [&](int k) {
    return detail::accepted_control(a, sys, orbit[static_cast<std::size_t>(k)],
                                    letters[static_cast<std::size_t>(k)], ctrl_depth,
                                    ControlLevel::s_controlled);
  };

  int N0 = window, N1 = window, N2 = window;
  for (int k = 1; k < window; ++k)
    if (ten_at(k) && is_any_strip_prefix(k)) {
      N0 = k;
      break;
    }
  bool found1 = false;
  for (int k = 0; k < window; ++k)
    if (ten_at(k)) {
      N1 = k;
      found1 = true;
      break;
    }
  if (!found1) N1 = N0;
  int n2 = -1;
  for (int k = 0; k < N0; ++k)
    if (ten_at(k)) n2 = k;
  N2 = n2 >= 0 ? n2 : N1;
  rec.N0 = N0;
  rec.N1 = N1;
  rec.N2 = N2;

  for (int k = 1; k < window; ++k)
    if (is_yes_strip_prefix(k)) rec.admissible_times.push_back(k);

  // Hyperbolic times between consecutive admissible times.
  std::vector<int> fences = rec.admissible_times;
  fences.push_back(window);
  for (std::size_t i = 0; i + 1 < fences.size(); ++i) {
    for (int mdx = fences[i] + 1; mdx < fences[i + 1]; ++mdx)
      if (is_any_strip_prefix(mdx) && s_at(mdx))
        rec.hyperbolic_times.push_back({static_cast<int>(i + 1), mdx});
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Rectangle files: `rect <id> corners (x,y) (x,y) (x,y) (x,y) stable <i> <j>`.

inline std::vector<Rectangle> parse_rectangles(const std::string& text) {
  const auto toks = detail::tokenize_map_spec(text);
  std::vector<Rectangle> out;
  std::size_t i = 0;
  auto need = [&](const char* what) -> const detail::Token& {
    if (i >= toks.size()) {
      const auto& last = toks.empty() ? detail::Token{"", 1, 1} : toks.back();
      throw ParseError(last.line, last.col, std::string("unexpected end of input, expected ") + what);
    }
    return toks[i];
  };
  while (i < toks.size()) {
    const auto& kw = toks[i];
    if (kw.text != "rect") throw ParseError(kw.line, kw.col, "expected 'rect', got '" + kw.text + "'");
    ++i;
    Rectangle r;
    r.id = need("rect id").text;
    ++i;
    const auto& ct = need("'corners'");
    if (ct.text != "corners") throw ParseError(ct.line, ct.col, "expected 'corners'");
    ++i;
    for (int k = 0; k < 4; ++k) {
      r.corners.push_back(detail::parse_point_token(need("corner point")));
      ++i;
    }
    const auto& st = need("'stable'");
    if (st.text != "stable") throw ParseError(st.line, st.col, "expected 'stable'");
    ++i;
    const auto& s0 = need("stable side index");
    const int a = std::atoi(s0.text.c_str());
    ++i;
    const auto& s1 = need("stable side index");
    const int b = std::atoi(s1.text.c_str());
    ++i;
    if (a < 0 || a > 3 || b != (a + 2) % 4)
      throw ParseError(s1.line, s1.col, "stable sides must be an opposite pair like '0 2'");
    if (area2_of(r.corners).sign() < 0) {
      // Normalize to CCW preserving side identity: reversing [c0,c1,c2,c3] to
      // [c0,c3,c2,c1] maps side k to side 3-k, which flips the pair parity.
      std::reverse(r.corners.begin() + 1, r.corners.end());
      r.stable0 = (3 - a) % 2;
    } else {
      r.stable0 = a % 2;
    }
    if (area2_of(r.corners).is_zero())
      throw ParseError(kw.line, kw.col, "rectangle '" + r.id + "' has zero area");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string format_rectangles(const std::vector<Rectangle>& rects) {
  std::string s;
  for (const auto& r : rects) {
    s += "rect " + r.id + " corners";
    for (const auto& c : r.corners) s += " " + c.str();
    s += " stable " + std::to_string(r.stable0 % 2) + " " + std::to_string(r.stable0 % 2 + 2) + "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Rectangle proposal.

struct ProposeOptions {
  int max_clusters = 6;          // largest clusters kept
  double cluster_factor = 10.0;  // cluster-cell diameter < l0 / cluster_factor
};

// Heuristic Markov-array proposal: sample points whose manifolds reach
// further than l0 at angle above theta0, bucket them into cells of diameter
// below l0 / cluster_factor, sandwich each cell between the nearest stable
// and unstable manifold axis lines drawn from the whole qualifying sample,
// then subdivide along all chosen lines until interiors are pairwise
// disjoint. Rectangles crossing piece edges, degenerating, or exceeding the
// 5 * diam(cell) / theta0 diameter bound are dropped.
inline std::vector<Rectangle> propose_rectangles(const PwaMap& m, int samples, int depth,
                                                 double l0, double theta0, std::uint64_t seed,
                                                 const ProposeOptions& opt = {}) {
  SystemView sys(m);
  struct Qualified {
    Vec2 point;
    Segment s_axis, u_axis;
    std::string word;
  };
  std::vector<Qualified> qual;
  const auto pts = sample_points_in_region(m.domain, static_cast<std::size_t>(samples), seed);
  for (const auto& x : pts) {
    try {
      const auto st = manifold_region(sys, x, depth, ManifoldDirection::stable);
      const auto un = manifold_region(sys, x, depth, ManifoldDirection::unstable);
      const double rho = std::min(detail::chord_reach(st.region, x),
                                  detail::chord_reach(un.region, x));
      const double alpha = detail::line_angle_between(st.long_axis, un.long_axis);
      if (rho > l0 && alpha > theta0) {
        Qualified q;
        q.point = x;
        q.s_axis = st.long_axis;
        q.u_axis = un.long_axis;
        q.word = itinerary(sys, x, 0, depth + 1).str();
        qual.push_back(std::move(q));
      }
    } catch (const BoundaryHitError&) {
    } catch (const GeomError&) {
    }
  }
  if (qual.empty()) return {};

  // Bucket qualifiers into cells of diameter < l0 / cluster_factor.
  const double h = l0 / (opt.cluster_factor * std::sqrt(2.0));
  const double cell_diam = l0 / opt.cluster_factor;
  std::map<std::pair<long, long>, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < qual.size(); ++i) {
    const long cx = static_cast<long>(std::floor(qual[i].point.x.to_double() / h));
    const long cy = static_cast<long>(std::floor(qual[i].point.y.to_double() / h));
    clusters[{cx, cy}].push_back(i);
  }
  std::vector<std::pair<std::pair<long, long>, std::vector<std::size_t>>> ordered(clusters.begin(),
                                                                                  clusters.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second.size() != b.second.size()) return a.second.size() > b.second.size();
    return a.first < b.first;
  });

  struct Quad {
    std::vector<Vec2> corners;  // CCW
    std::string prov[4];
  };

  // Signed offset of the line through `seg` from the reference point, along
  // the normal of `dir` (float; selection only, geometry stays exact).
  const auto offset_of = [](const Segment& seg, const Vec2& ref, double nx, double ny) {
    return nx * ((seg.a.x - ref.x).to_double()) + ny * ((seg.a.y - ref.y).to_double());
  };
  const auto normal_of = [](const Segment& seg) -> std::pair<double, double> {
    const double dx = (seg.b.x - seg.a.x).to_double();
    const double dy = (seg.b.y - seg.a.y).to_double();
    const double len = std::hypot(dx, dy);
    return {-dy / len, dx / len};
  };

  std::vector<Quad> quads;
  std::vector<Segment> all_stable_lines, all_unstable_lines;
  int used = 0;
  for (const auto& [key, members] : ordered) {
    if (used >= opt.max_clusters) break;
    const Vec2& ref = qual[members[0]].point;

    // Sandwich the cluster: nearest axis line strictly below all members and
    // strictly above, per family, drawn from the whole qualifying sample.
    const auto sandwich = [&](const bool stable) -> std::optional<std::pair<std::size_t, std::size_t>> {
      const Segment& ref_axis = stable ? qual[members[0]].s_axis : qual[members[0]].u_axis;
      const auto [nx, ny] = normal_of(ref_axis);
      double mem_lo = 1e300, mem_hi = -1e300;
      for (const std::size_t i : members) {
        const double off = nx * ((qual[i].point.x - ref.x).to_double()) +
                           ny * ((qual[i].point.y - ref.y).to_double());
        mem_lo = std::min(mem_lo, off);
        mem_hi = std::max(mem_hi, off);
      }
      double best_lo = -1e300, best_hi = 1e300;
      std::size_t ilo = qual.size(), ihi = qual.size();
      for (std::size_t i = 0; i < qual.size(); ++i) {
        const Segment& ax = stable ? qual[i].s_axis : qual[i].u_axis;
        // Skip lines steeply misaligned with the reference family direction.
        const auto [anx, any] = normal_of(ax);
        if (std::fabs(anx * nx + any * ny) < 0.9) continue;
        const double off = offset_of(ax, ref, nx, ny);
        if (off < mem_lo && off > best_lo) {
          best_lo = off;
          ilo = i;
        }
        if (off > mem_hi && off < best_hi) {
          best_hi = off;
          ihi = i;
        }
      }
      if (ilo == qual.size() || ihi == qual.size()) return std::nullopt;
      return std::make_pair(ilo, ihi);
    };
    const auto se = sandwich(true);
    const auto ue = sandwich(false);
    if (!se || !ue) continue;

    const Segment s_lo = qual[se->first].s_axis, s_hi = qual[se->second].s_axis;
    const Segment u_lo = qual[ue->first].u_axis, u_hi = qual[ue->second].u_axis;
    const auto c00 = line_line_intersection(s_lo.a, s_lo.b, u_lo.a, u_lo.b);
    const auto c01 = line_line_intersection(s_lo.a, s_lo.b, u_hi.a, u_hi.b);
    const auto c11 = line_line_intersection(s_hi.a, s_hi.b, u_hi.a, u_hi.b);
    const auto c10 = line_line_intersection(s_hi.a, s_hi.b, u_lo.a, u_lo.b);
    if (!c00 || !c01 || !c11 || !c10) continue;

    Quad quad;
    quad.corners = {*c00, *c01, *c11, *c10};
    if (area2_of(quad.corners).is_zero()) continue;
    if (area2_of(quad.corners).sign() < 0)
      std::reverse(quad.corners.begin(), quad.corners.end());
    for (int k = 0; k < 4; ++k)
      quad.prov[k] = "axes of " + qual[se->first].word + " / " + qual[ue->first].word + " depth " +
                     std::to_string(depth);

    const ConvexRegion qr = make_polygon(quad.corners);
    if (!qr.is_polygon() || qr.verts.size() != 4) continue;
    // Inside a single piece (so refinement keeps each rectangle whole).
    bool in_piece = false;
    for (const auto& p : m.pieces)
      if (region_subset(qr, p.domain)) {
        in_piece = true;
        break;
      }
    if (!in_piece) continue;
    // Lemma-style diameter bound relative to the cluster cell.
    if (region_metrics(qr).diameter >= 5.0 * cell_diam / theta0) continue;

    quads.push_back(quad);
    all_stable_lines.push_back({s_lo.a, s_lo.b});
    all_stable_lines.push_back({s_hi.a, s_hi.b});
    all_unstable_lines.push_back({u_lo.a, u_lo.b});
    all_unstable_lines.push_back({u_hi.a, u_hi.b});
    ++used;
  }

  // Subdivide along every collected line until no quad is properly crossed,
  // then dedupe. Sides created by a stable line are stable sides.
  struct Atom {
    ConvexRegion region;
    // side classification recovered from collinearity at the end
  };
  std::vector<ConvexRegion> atoms;
  for (const auto& q : quads) atoms.push_back(make_polygon(q.corners));
  const auto split_all = [&](const Segment& line) {
    std::vector<ConvexRegion> next;
    for (const auto& atom : atoms) {
      ConvexRegion left = clip_left_of_line(atom, line.a, line.b);
      ConvexRegion right = clip_left_of_line(atom, line.b, line.a);
      if (left.is_polygon() && right.is_polygon()) {
        next.push_back(std::move(left));
        next.push_back(std::move(right));
      } else {
        next.push_back(atom);
      }
    }
    atoms = std::move(next);
  };
  for (const auto& l : all_stable_lines) split_all(l);
  for (const auto& l : all_unstable_lines) split_all(l);

  // Dedupe exact duplicates and drop overlapping leftovers (keep first).
  std::vector<ConvexRegion> unique;
  for (const auto& a : atoms) {
    bool dup = false;
    for (const auto& u : unique)
      if (region_equal(a, u) || intersect_convex(a, u).is_polygon()) {
        dup = true;
        break;
      }
    if (!dup) unique.push_back(a);
  }

  // Rebuild rectangles with side classification from the line families.
  std::vector<Rectangle> out;
  const auto on_family = [](const Vec2& a, const Vec2& b, const std::vector<Segment>& fam) {
    for (const auto& l : fam)
      if (orient(l.a, l.b, a) == 0 && orient(l.a, l.b, b) == 0) return true;
    return false;
  };
  for (const auto& region : unique) {
    if (region.verts.size() != 4) continue;
    Rectangle r;
    r.corners = region.verts;
    int stable0 = -1;
    bool ok = true;
    for (int k = 0; k < 4; ++k) {
      const Vec2 &a = r.corners[static_cast<std::size_t>(k)],
                 &b = r.corners[static_cast<std::size_t>((k + 1) % 4)];
      const bool is_s = on_family(a, b, all_stable_lines);
      const bool is_u = on_family(a, b, all_unstable_lines);
      if (is_s == is_u) ok = false;
      if (is_s && stable0 < 0) stable0 = k;
      r.side_provenance[k] = is_s ? "stable family line" : "unstable family line";
    }
    if (!ok || stable0 < 0) continue;
    // Alternation: the side after a stable one must come from the unstable family.
    const bool alternating = on_family(r.corners[static_cast<std::size_t>((stable0 + 1) % 4)],
                                       r.corners[static_cast<std::size_t>((stable0 + 2) % 4)],
                                       all_unstable_lines);
    if (!alternating) continue;
    r.stable0 = stable0;
    r.id = "r" + std::to_string(out.size());
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pwadyn
