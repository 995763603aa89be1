#pragma once

// Exact periodic-point enumeration per periodic cylinder and the
// multiplicative-growth report. Points on cylinder boundaries shared by
// several periodic words are counted once, with the symbolic multiplicity
// recorded; fixed families (eigenvalue 1) are reported separately and
// excluded from the counts.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pwadyn/symdyn.hpp"

namespace pwadyn {

struct PeriodicPointGroup {
  Vec2 point;                       // canonical representative (mod 1 for wrapped maps)
  int multiplicity = 0;             // number of periodic words sharing the point
  std::vector<std::string> words;   // the sharing words
  bool interior = false;            // lies in some open cylinder
};

struct PeriodicFamily {
  std::vector<std::string> word;
  ConvexRegion family;  // segment or polygon of fixed points of the composed branch
};

struct PeriodicDepthReport {
  int n = 0;
  std::uint64_t cyclic_words_closed = 0;  // wraparound intersection nonempty
  std::uint64_t cyclic_words_open = 0;    // wraparound intersection has positive area
  std::vector<PeriodicPointGroup> isolated;
  std::vector<PeriodicFamily> families;
  std::uint64_t count() const { return isolated.size(); }
};

namespace detail {

struct LatticeShift {
  long dx = 0, dy = 0;
};

// Solve (I - L) x = t + v for one word; returns the isolated point or a
// fixed family clipped to the closed cylinder.
struct FixedSolve {
  std::optional<Vec2> point;
  std::optional<ConvexRegion> family;
};

inline FixedSolve solve_fixed(const AffineMap2& w, const ConvexRegion& cylinder,
                              const Rat& vx, const Rat& vy) {
  FixedSolve out;
  const Rat a = Rat(1) - w.a, b = -w.b, c = -w.c, d = Rat(1) - w.d;
  const Rat rx = w.tx + vx, ry = w.ty + vy;
  const Rat det = a * d - b * c;
  if (!det.is_zero()) {
    const Vec2 x{(d * rx - b * ry) / det, (a * ry - c * rx) / det};
    if (region_contains(cylinder, x)) out.point = x;
    return out;
  }
  const bool row1_zero = a.is_zero() && b.is_zero();
  const bool row2_zero = c.is_zero() && d.is_zero();
  if (row1_zero && row2_zero) {
    // Identity linear part: fixed set is everything or nothing.
    if (rx.is_zero() && ry.is_zero()) out.family = cylinder;
    return out;
  }
  // Rank one: the fixed set is a line when the system is consistent.
  Rat la = a, lb = b, lg = rx;
  if (row1_zero) {
    la = c;
    lb = d;
    lg = ry;
  } else {
    // Consistency of the second row against the first (all 2x2 minors of the
    // augmented matrix vanish; the linear minor vanishes since det = 0).
    if (!(a * ry - c * rx).is_zero() || !(b * ry - d * rx).is_zero()) return out;
  }
  // Clip the line la x + lb y = lg to the cylinder.
  const Vec2 p0 = lb.is_zero() ? Vec2{lg / la, Rat(0)} : Vec2{Rat(0), lg / lb};
  const Vec2 dir{-lb, la};
  const Vec2 p1 = p0 + dir;
  ConvexRegion cut = clip_left_of_line(cylinder, p0, p1);
  cut = clip_left_of_line(cut, p1, p0);
  if (cut.is_empty()) return out;
  if (cut.kind == RegionKind::point) {
    out.point = cut.verts[0];
  } else {
    out.family = cut;
  }
  return out;
}

inline std::string point_key(const Vec2& p) { return p.x.str() + "|" + p.y.str(); }

}  // namespace detail

// Periodic analysis to depth n_max in one exhaustive pass: for every depth
// k <= n_max and every length-k word whose cylinder is nonempty and whose
// wraparound extension stays nonempty, solve the fixed-point system of the
// composed branch exactly (over the touched lattice cosets when the map wraps
// on the torus) and de-duplicate points shared by several words.
inline std::vector<PeriodicDepthReport> periodic_analysis(const PwaMap& m, int n_max,
                                                          std::size_t node_budget = 1'000'000) {
  if (n_max < 1) throw std::invalid_argument("periodic_analysis: n_max must be >= 1");
  for (const auto& p : m.pieces)
    if (p.branch.det().is_zero())
      throw GeomError("periodic_analysis requires invertible branches");

  SystemView sys(m);
  std::vector<PeriodicDepthReport> reports(static_cast<std::size_t>(n_max));
  for (int k = 0; k < n_max; ++k) reports[static_cast<std::size_t>(k)].n = k + 1;

  struct Group {
    Vec2 point;
    std::vector<std::string> words;
    bool interior = false;
  };
  std::vector<std::map<std::string, Group>> groups(static_cast<std::size_t>(n_max));

  std::vector<detail::LatticeShift> shifts = {{0, 0}};
  if (m.wrap_torus) {
    shifts.clear();
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy) shifts.push_back({dx, dy});
  }

  const auto canonical = [&](const Vec2& p) -> Vec2 {
    if (!m.wrap_torus) return p;
    return {p.x.mod1(), p.y.mod1()};
  };

  std::size_t visited = 0;
  struct Frame {
    std::vector<int> letters;
    ConvexRegion region;   // closed cylinder at time 0
    AffineMap2 composed;   // T_w
  };

  std::function<void(const Frame&)> expand = [&](const Frame& f) {
    const int depth = static_cast<int>(f.letters.size());
    if (depth >= 1) {
      auto& rep = reports[static_cast<std::size_t>(depth - 1)];
      // Cyclic admissibility: wraparound by the first letter stays nonempty.
      const ConvexRegion image = apply_affine(f.composed, f.region);
      const auto& first_piece = m.pieces[static_cast<std::size_t>(f.letters[0])];
      const ConvexRegion wrap = intersect_convex(image, first_piece.domain);
      const bool closed_ok = !wrap.is_empty();
      if (closed_ok) {
        ++rep.cyclic_words_closed;
        if (wrap.is_polygon()) ++rep.cyclic_words_open;

        Word word;
        for (std::size_t i = 0; i < f.letters.size(); ++i)
          word.letters.push_back(m.pieces[static_cast<std::size_t>(f.letters[i])].id);

        for (const auto& [dx, dy] : shifts) {
          const auto sol = detail::solve_fixed(f.composed, f.region, Rat(dx), Rat(dy));
          if (sol.point) {
            const Vec2 canon = canonical(*sol.point);
            const std::string key = detail::point_key(canon);
            auto& group = groups[static_cast<std::size_t>(depth - 1)]
                              .try_emplace(key, Group{canon, {}, false})
                              .first->second;
            group.words.push_back(word.str());
            if (region_contains_interior(f.region, *sol.point)) group.interior = true;
          } else if (sol.family) {
            bool dup = false;
            for (const auto& fam : rep.families)
              if (fam.word == word.letters && region_equal(fam.family, *sol.family)) dup = true;
            if (!dup) rep.families.push_back({word.letters, *sol.family});
          }
        }
      }
    }
    if (depth >= n_max) return;

    const ConvexRegion image = apply_affine(f.composed, f.region);
    const AffineMap2 inv = invert_affine(f.composed);
    const auto& part = sys.partition_at(depth);
    for (std::size_t s = 0; s < part.size(); ++s) {
      if (detail::bbox_disjoint(image, part[s].domain)) continue;
      const ConvexRegion q = intersect_convex(image, part[s].domain);
      if (!q.is_polygon()) continue;
      if (++visited > node_budget)
        throw TruncatedTreeError();
      Frame child;
      child.letters = f.letters;
      child.letters.push_back(static_cast<int>(s));
      child.region = depth == 0 ? q : apply_affine(inv, q);
      child.composed = part[s].branch.compose(f.composed);
      expand(child);
    }
  };

  Frame root;
  root.region = m.domain;
  root.composed = AffineMap2::identity();
  expand(root);

  for (int k = 0; k < n_max; ++k) {
    auto& rep = reports[static_cast<std::size_t>(k)];
    for (auto& [key, g] : groups[static_cast<std::size_t>(k)]) {
      PeriodicPointGroup out;
      out.point = g.point;
      std::sort(g.words.begin(), g.words.end());
      g.words.erase(std::unique(g.words.begin(), g.words.end()), g.words.end());
      out.words = g.words;
      out.multiplicity = static_cast<int>(out.words.size());
      out.interior = g.interior;
      rep.isolated.push_back(std::move(out));
    }
  }
  return reports;
}

inline PeriodicDepthReport fixed_points(const PwaMap& m, int n, std::size_t budget = 1'000'000) {
  auto reports = periodic_analysis(m, n, budget);
  return std::move(reports[static_cast<std::size_t>(n - 1)]);
}

// Length-n words whose cylinder and wraparound extension are nonempty.
inline std::pair<std::uint64_t, std::uint64_t> periodic_cylinders(const PwaMap& m, int n,
                                                                  std::size_t budget = 1'000'000) {
  const auto rep = fixed_points(m, n, budget);
  return {rep.cyclic_words_closed, rep.cyclic_words_open};
}

// ---------------------------------------------------------------------------
// Multiplicative growth report.

struct GrowthReport {
  double h = 0.0;
  std::vector<double> normalized;  // e^{-k h} N(k)
  double trailing_min = 0.0;       // min over the trailing half (liminf proxy)
  std::vector<double> katok_rate;  // (1/k) log N(k); -inf when N(k) = 0
};

inline GrowthReport growth_report(const std::vector<std::uint64_t>& counts, double h) {
  if (h < 0) throw std::invalid_argument("growth_report: h must be >= 0");
  GrowthReport rep;
  rep.h = h;
  const std::size_t n = counts.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k + 1);
    rep.normalized.push_back(std::exp(-kk * h) * static_cast<double>(counts[k]));
    rep.katok_rate.push_back(counts[k] == 0 ? -std::numeric_limits<double>::infinity()
                                            : std::log(static_cast<double>(counts[k])) / kk);
  }
  if (!rep.normalized.empty()) {
    const std::size_t start = n - (n + 1) / 2;
    rep.trailing_min = rep.normalized[start];
    for (std::size_t k = start; k < n; ++k)
      rep.trailing_min = std::min(rep.trailing_min, rep.normalized[k]);
  }
  return rep;
}

}  // namespace pwadyn
