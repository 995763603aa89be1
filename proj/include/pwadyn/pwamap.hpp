#pragma once

// Piecewise affine map model: spec-file parsing, validation with witnesses,
// the built-in example gallery, partition refinement by rectangle edge lines,
// and cyclic partition schedules.

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pwadyn/geom.hpp"

namespace pwadyn {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& what)
      : std::runtime_error("parse error at " + std::to_string(line) + ":" + std::to_string(col) +
                           ": " + what),
        line(line),
        col(col) {}
  int line, col;
};

struct Piece {
  std::string id;
  ConvexRegion domain;  // open convex polygon (stored as its closure)
  AffineMap2 branch;
};

enum class Flag : uint8_t { unchecked, yes, no };

inline const char* flag_str(Flag f) {
  switch (f) {
    case Flag::yes: return "true";
    case Flag::no: return "false";
    default: return "unchecked";
  }
}

struct PwaMap {
  ConvexRegion domain;
  std::vector<Piece> pieces;
  bool wrap_torus = false;

  Flag pieces_disjoint = Flag::unchecked;
  Flag covering = Flag::unchecked;
  Flag branches_invertible = Flag::unchecked;
  Flag continuous = Flag::unchecked;
  Flag homeomorphism = Flag::unchecked;

  int piece_index(std::string_view id) const {
    for (std::size_t i = 0; i < pieces.size(); ++i)
      if (pieces[i].id == id) return static_cast<int>(i);
    return -1;
  }
};

struct ValidationCheck {
  std::string name;
  bool pass = true;
  std::vector<std::string> witnesses;  // nonempty whenever pass is false
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return c.pass;
    return false;
  }
  const ValidationCheck* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

struct Token {
  std::string text;
  int line, col;
};

inline std::vector<Token> tokenize_map_spec(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::string cur;
  int tline = 0, tcol = 0;
  bool comment = false;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back({cur, tline, tcol});
      cur.clear();
    }
  };
  for (const char ch : text) {
    if (ch == '\n') {
      flush();
      comment = false;
      ++line;
      col = 1;
      continue;
    }
    if (comment) {
      ++col;
      continue;
    }
    if (ch == '#') {
      flush();
      comment = true;
      ++col;
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r') {
      flush();
    } else {
      if (cur.empty()) {
        tline = line;
        tcol = col;
      }
      cur.push_back(ch);
    }
    ++col;
  }
  flush();
  return out;
}

inline Rat parse_rat_token(const Token& t) {
  // Reject anything that is not an exact rational literal (floats forbidden).
  try {
    return Rat::parse(t.text);
  } catch (const RatParseError& e) {
    throw ParseError(t.line, t.col, e.what());
  }
}

inline Vec2 parse_point_token(const Token& t) {
  const std::string& s = t.text;
  if (s.size() < 5 || s.front() != '(' || s.back() != ')')
    throw ParseError(t.line, t.col, "expected point '(x,y)', got '" + s + "'");
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ParseError(t.line, t.col, "expected ',' in point");
  Token xt{s.substr(1, comma - 1), t.line, t.col};
  Token yt{s.substr(comma + 1, s.size() - comma - 2), t.line, t.col};
  return {parse_rat_token(xt), parse_rat_token(yt)};
}

}  // namespace detail

// Parses the line-oriented map-spec format:
//   domain (x,y) (x,y) ...
//   wrap unit-torus
//   piece <id> vertices (x,y)... linear a b c d translate e f
// '#' starts a comment; all coordinates are exact rationals.
inline PwaMap parse_map_spec(const std::string& text) {
  using detail::Token;
  const auto toks = detail::tokenize_map_spec(text);
  PwaMap m;
  bool have_domain = false;
  std::size_t i = 0;
  auto need = [&](const char* what) -> const Token& {
    if (i >= toks.size()) {
      const auto& last = toks.empty() ? Token{"", 1, 1} : toks.back();
      throw ParseError(last.line, last.col, std::string("unexpected end of input, expected ") + what);
    }
    return toks[i];
  };
  auto is_point = [&](std::size_t j) {
    return j < toks.size() && !toks[j].text.empty() && toks[j].text.front() == '(';
  };

  while (i < toks.size()) {
    const Token& kw = toks[i];
    if (kw.text == "domain") {
      ++i;
      std::vector<Vec2> vs;
      while (is_point(i)) vs.push_back(detail::parse_point_token(toks[i++]));
      if (vs.size() < 3) throw ParseError(kw.line, kw.col, "domain needs at least 3 vertices");
      if (!is_strictly_convex_loop(vs) && !is_strictly_convex_loop({vs.rbegin(), vs.rend()}))
        throw ParseError(kw.line, kw.col, "domain polygon is not convex");
      m.domain = make_polygon(vs);
      if (!m.domain.is_polygon()) throw ParseError(kw.line, kw.col, "domain polygon has zero area");
      have_domain = true;
    } else if (kw.text == "wrap") {
      ++i;
      const Token& v = need("wrap mode");
      if (v.text != "unit-torus") throw ParseError(v.line, v.col, "unknown wrap mode '" + v.text + "'");
      m.wrap_torus = true;
      ++i;
    } else if (kw.text == "piece") {
      ++i;
      const Token& idt = need("piece id");
      const std::string id = idt.text;
      if (m.piece_index(id) >= 0) throw ParseError(idt.line, idt.col, "duplicate piece id '" + id + "'");
      ++i;
      const Token& vt = need("'vertices'");
      if (vt.text != "vertices") throw ParseError(vt.line, vt.col, "expected 'vertices'");
      ++i;
      std::vector<Vec2> vs;
      while (is_point(i)) vs.push_back(detail::parse_point_token(toks[i++]));
      if (vs.size() < 3) throw ParseError(vt.line, vt.col, "piece needs at least 3 vertices");
      if (!is_strictly_convex_loop(vs) && !is_strictly_convex_loop({vs.rbegin(), vs.rend()}))
        throw ParseError(vt.line, vt.col, "piece '" + id + "' polygon is not convex");
      const Token& lt = need("'linear'");
      if (lt.text != "linear") throw ParseError(lt.line, lt.col, "expected 'linear'");
      ++i;
      Rat a = detail::parse_rat_token(need("a")); ++i;
      Rat b = detail::parse_rat_token(need("b")); ++i;
      Rat c = detail::parse_rat_token(need("c")); ++i;
      Rat d = detail::parse_rat_token(need("d")); ++i;
      const Token& tt = need("'translate'");
      if (tt.text != "translate") throw ParseError(tt.line, tt.col, "expected 'translate'");
      ++i;
      Rat e = detail::parse_rat_token(need("e")); ++i;
      Rat f = detail::parse_rat_token(need("f")); ++i;

      Piece p;
      p.id = id;
      const int pidx = static_cast<int>(m.pieces.size());
      std::vector<EdgeTag> tags(vs.size());
      for (std::size_t k = 0; k < vs.size(); ++k)
        tags[k] = EdgeTag::piece_edge(pidx, static_cast<int>(k), 0);
      p.domain = canonical_region(vs, tags);
      if (!p.domain.is_polygon())
        throw ParseError(vt.line, vt.col, "piece '" + id + "' polygon has zero area");
      p.branch = AffineMap2{a, b, c, d, e, f};
      m.pieces.push_back(std::move(p));
    } else {
      throw ParseError(kw.line, kw.col, "unknown directive '" + kw.text + "'");
    }
  }
  if (!have_domain) throw ParseError(1, 1, "missing 'domain' directive");
  if (m.pieces.empty()) throw ParseError(1, 1, "map has no pieces");
  return m;
}

// ---------------------------------------------------------------------------
// Validation.

namespace detail {

inline bool mod1_congruent(const Vec2& p, const Vec2& q) {
  return (p.x - q.x).is_integer() && (p.y - q.y).is_integer();
}

inline ConvexRegion translate_region(const ConvexRegion& r, const Rat& dx, const Rat& dy) {
  return apply_affine(AffineMap2::translation(dx, dy), r);
}

}  // namespace detail

// Runs the validation checks in order (disjointness, covering, invertibility,
// continuity, homeomorphism) and updates the map's flags. Witnesses are
// attached to every failed check. Deterministic and idempotent.
inline ValidationReport validate(PwaMap& m) {
  ValidationReport rep;
  const std::size_t n = m.pieces.size();

  // (a) pairwise disjoint piece interiors.
  ValidationCheck disj;
  disj.name = "pieces_disjoint";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const ConvexRegion is = intersect_convex(m.pieces[i].domain, m.pieces[j].domain);
      if (is.is_polygon()) {
        disj.pass = false;
        disj.witnesses.push_back("pieces '" + m.pieces[i].id + "' and '" + m.pieces[j].id +
                                 "' overlap with area " + region_area(is).str());
      }
    }
  rep.checks.push_back(disj);
  m.pieces_disjoint = disj.pass ? Flag::yes : Flag::no;

  // (b) covering: pieces inside the domain and area sum exact.
  ValidationCheck cov;
  cov.name = "covering";
  Rat total(0);
  for (const auto& p : m.pieces) {
    total += region_area(p.domain);
    if (!region_subset(p.domain, m.domain)) {
      cov.pass = false;
      cov.witnesses.push_back("piece '" + p.id + "' is not contained in the domain");
    }
  }
  const Rat dom_area = region_area(m.domain);
  if (total != dom_area) {
    cov.pass = false;
    cov.witnesses.push_back("piece areas sum to " + total.str() + ", domain area is " +
                            dom_area.str());
  }
  rep.checks.push_back(cov);
  m.covering = cov.pass ? Flag::yes : Flag::no;

  // (c) branch invertibility.
  ValidationCheck inv;
  inv.name = "branches_invertible";
  for (const auto& p : m.pieces)
    if (p.branch.det().is_zero()) {
      inv.pass = false;
      inv.witnesses.push_back("piece '" + p.id + "' has singular branch (det = 0)");
    }
  rep.checks.push_back(inv);
  m.branches_invertible = inv.pass ? Flag::yes : Flag::no;

  // (d) continuity: branches agree on the endpoints of every shared boundary
  // edge (agreement mod 1 when wrapped on the unit torus). Affine agreement at
  // two points of an edge implies agreement on the whole edge.
  ValidationCheck cont;
  cont.name = "continuous";
  std::vector<std::pair<Rat, Rat>> offsets = {{Rat(0), Rat(0)}};
  if (m.wrap_torus) {
    offsets.clear();
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) offsets.push_back({Rat(dx), Rat(dy)});
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      for (const auto& [dx, dy] : offsets) {
        if (i == j && dx.is_zero() && dy.is_zero()) continue;
        const ConvexRegion shifted = detail::translate_region(m.pieces[j].domain, dx, dy);
        const ConvexRegion shared = intersect_convex(m.pieces[i].domain, shifted);
        if (shared.kind != RegionKind::segment) continue;
        for (const auto& e : shared.verts) {
          const Vec2 a = m.pieces[i].branch(e);
          const Vec2 b = m.pieces[j].branch(Vec2(e.x - dx, e.y - dy));
          const bool ok = m.wrap_torus ? detail::mod1_congruent(a, b) : a == b;
          if (!ok) {
            cont.pass = false;
            cont.witnesses.push_back("pieces '" + m.pieces[i].id + "'/'" + m.pieces[j].id +
                                     "' disagree at " + e.str() + ": images " + a.str() + " vs " +
                                     b.str());
          }
        }
      }
  rep.checks.push_back(cont);
  m.continuous = cont.pass ? Flag::yes : Flag::no;

  // (e) homeomorphism: images inside the domain, pairwise interior-disjoint,
  // image areas summing to the domain area, plus (c) and (d).
  ValidationCheck homeo;
  homeo.name = "homeomorphism";
  std::vector<ConvexRegion> images;
  images.reserve(n);
  for (const auto& p : m.pieces) images.push_back(apply_affine(p.branch, p.domain));
  Rat img_total(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!images[i].is_polygon()) {
      homeo.pass = false;
      homeo.witnesses.push_back("image of piece '" + m.pieces[i].id + "' is degenerate");
      continue;
    }
    img_total += region_area(images[i]);
    if (!region_subset(images[i], m.domain)) {
      homeo.pass = false;
      homeo.witnesses.push_back("image of piece '" + m.pieces[i].id +
                                "' is not contained in the domain");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const ConvexRegion is = intersect_convex(images[i], images[j]);
      if (is.is_polygon()) {
        homeo.pass = false;
        homeo.witnesses.push_back("images of '" + m.pieces[i].id + "' and '" + m.pieces[j].id +
                                  "' overlap with area " + region_area(is).str());
      }
    }
  }
  if (img_total != dom_area) {
    homeo.pass = false;
    homeo.witnesses.push_back("image areas sum to " + img_total.str() + ", domain area is " +
                              dom_area.str());
  }
  if (!inv.pass) {
    homeo.pass = false;
    homeo.witnesses.push_back("branches not all invertible");
  }
  if (!cont.pass) {
    homeo.pass = false;
    homeo.witnesses.push_back("map not continuous");
  }
  rep.checks.push_back(homeo);
  m.homeomorphism = homeo.pass ? Flag::yes : Flag::no;

  return rep;
}

// ---------------------------------------------------------------------------
// Partitions, refinement, schedules.

using ConvexPartition = std::vector<Piece>;

// Quadrilateral with alternating stable/unstable sides; declared here because
// refinement consumes rectangle edge lines (full strips module in strips.hpp).
struct Rectangle {
  std::string id;
  std::vector<Vec2> corners;  // CCW, size 4; side i joins corners[i] -> corners[i+1]
  int stable0 = 0;            // index of one stable side; the other is stable0 + 2
  std::string side_provenance[4];  // witnessing manifold word/depth, free-form
  bool stable_side(int side) const { return side % 2 == stable0 % 2; }
  ConvexRegion region() const {
    std::vector<EdgeTag> tags(4);
    for (int s = 0; s < 4; ++s) tags[s] = EdgeTag::rect_edge(-1, s);
    return canonical_region(corners, tags);
  }
  Segment side(int s) const { return {corners[s % 4], corners[(s + 1) % 4]}; }
};

// Coarsest convex partition refining `part` whose cells are entirely inside or
// outside every rectangle: clip every cell against each rectangle's four edge
// lines. Refined cells keep their originating branch; ids gain ".k" suffixes.
inline ConvexPartition refine_with_rectangles(const ConvexPartition& part,
                                              const std::vector<Rectangle>& rects) {
  ConvexPartition out;
  for (const auto& piece : part) {
    std::vector<ConvexRegion> cells = {piece.domain};
    for (std::size_t r = 0; r < rects.size(); ++r) {
      for (int s = 0; s < 4; ++s) {
        const Vec2& a = rects[r].corners[s];
        const Vec2& b = rects[r].corners[(s + 1) % 4];
        std::vector<ConvexRegion> next;
        for (const auto& cell : cells) {
          const EdgeTag tag = EdgeTag::rect_edge(static_cast<int>(r), s);
          ConvexRegion left = clip_left_of_line(cell, a, b, tag);
          ConvexRegion right = clip_left_of_line(cell, b, a, tag);
          if (left.is_polygon() && right.is_polygon()) {
            next.push_back(std::move(left));
            next.push_back(std::move(right));
          } else {
            next.push_back(cell);  // line does not cut this cell
          }
        }
        cells = std::move(next);
      }
    }
    if (cells.size() == 1) {
      out.push_back(piece);
      continue;
    }
    int k = 0;
    for (auto& cell : cells) {
      Piece q;
      q.id = piece.id + "." + std::to_string(k++);
      q.domain = std::move(cell);
      q.branch = piece.branch;
      out.push_back(std::move(q));
    }
  }
  return out;
}

// Time-dependent partition: residue 0 uses the refined partition, all other
// residues use the base one.
struct PartitionSchedule {
  int period = 1;
  std::vector<ConvexPartition> partitions;  // size == period
  const ConvexPartition& at(long long time) const {
    const long long r = ((time % period) + period) % period;
    return partitions[static_cast<std::size_t>(r)];
  }
};

inline PartitionSchedule cyclic_schedule(const PwaMap& m, const ConvexPartition& refined, int period) {
  if (period < 1) throw std::invalid_argument("cyclic_schedule: period must be >= 1");
  // Sanity: every refined cell must refine some base piece.
  for (const auto& cell : refined) {
    bool inside = false;
    for (const auto& p : m.pieces)
      if (region_subset(cell.domain, p.domain)) {
        inside = true;
        break;
      }
    if (!inside)
      throw std::invalid_argument("cyclic_schedule: refined cell '" + cell.id +
                                  "' does not refine the base partition");
  }
  PartitionSchedule s;
  s.period = period;
  s.partitions.push_back(refined);
  for (int k = 1; k < period; ++k) s.partitions.push_back(m.pieces);
  return s;
}

// Uniform view over "plain map" and "scheduled map" so the itinerary and
// cylinder machinery accepts either.
class SystemView {
 public:
  explicit SystemView(const PwaMap& m) : map_(&m), sched_(nullptr) {}
  SystemView(const PwaMap& m, const PartitionSchedule& s) : map_(&m), sched_(&s) {}

  const PwaMap& map() const { return *map_; }
  const ConvexRegion& domain() const { return map_->domain; }
  bool wrap() const { return map_->wrap_torus; }
  const ConvexPartition& partition_at(long long time) const {
    return sched_ ? sched_->at(time) : map_->pieces;
  }
  bool scheduled() const { return sched_ != nullptr; }

 private:
  const PwaMap* map_;
  const PartitionSchedule* sched_;
};

// Inverse of a homeomorphism-validated map: pieces are the branch images,
// branches the exact inverses.
inline PwaMap inverse_map(const PwaMap& m) {
  if (m.homeomorphism != Flag::yes)
    throw std::invalid_argument("inverse_map requires a homeomorphism-validated map");
  PwaMap inv;
  inv.domain = m.domain;
  inv.wrap_torus = m.wrap_torus;
  for (std::size_t i = 0; i < m.pieces.size(); ++i) {
    const auto& p = m.pieces[i];
    Piece q;
    q.id = p.id;
    const ConvexRegion img = apply_affine(p.branch, p.domain);
    std::vector<EdgeTag> tags(img.verts.size());
    for (std::size_t k = 0; k < tags.size(); ++k)
      tags[k] = EdgeTag::piece_edge(static_cast<int>(i), static_cast<int>(k), 0);
    q.domain = canonical_region(img.verts, tags);
    q.branch = invert_affine(p.branch);
    inv.pieces.push_back(std::move(q));
  }
  validate(inv);
  return inv;
}

// ---------------------------------------------------------------------------
// Built-in gallery.

namespace detail {

inline PwaMap build_gallery_map(const std::string& text) {
  PwaMap m = parse_map_spec(text);
  validate(m);
  return m;
}

}  // namespace detail

// Built-in examples, addressable from the CLI as `gallery:<name>`.
//   c1-cone      two triangles on a cone; every binary word is realized
//   c4-nomax     discontinuous map with an identity block
//   tent-product tent map x identity on the unit square
//   cat          toral automorphism [[2,1],[1,1]] with mod-1 polygon pieces
inline const std::vector<std::string>& gallery_names() {
  static const std::vector<std::string> names = {"c1-cone", "c4-nomax", "tent-product", "cat"};
  return names;
}

inline PwaMap gallery_map(const std::string& name) {
  if (name == "c1-cone") {
    return detail::build_gallery_map(R"(# cone map over triangle ABO, A=(-2,2) B=(2,2) O=(0,0)
domain (0,0) (2,2) (-2,2)
piece t0 vertices (-2,2) (0,2) (0,0) linear 1 1/2 0 1/2 translate 0 0
piece t1 vertices (0,2) (2,2) (0,0) linear -1 1/2 0 1/2 translate 0 0
)");
  }
  if (name == "c4-nomax") {
    return detail::build_gallery_map(R"(# discontinuous map on triangle XYO with identity block XYBA
domain (0,0) (2,2) (-2,2)
piece xyba vertices (-1,1) (1,1) (2,2) (-2,2) linear 1 0 0 1 translate 0 0
piece amo vertices (-1,1) (0,1) (0,0) linear 1 1/2 0 1/2 translate 0 0
piece mbo vertices (0,1) (1,1) (0,0) linear -4 2 0 2 translate 0 0
)");
  }
  if (name == "tent-product") {
    return detail::build_gallery_map(R"(# tent map x identity on the unit square
domain (0,0) (1,0) (1,1) (0,1)
piece l vertices (0,0) (1/2,0) (1/2,1) (0,1) linear 2 0 0 1 translate 0 0
piece r vertices (1/2,0) (1,0) (1,1) (1/2,1) linear -2 0 0 1 translate 2 0
)");
  }
  if (name == "cat") {
    return detail::build_gallery_map(R"(# toral automorphism [[2,1],[1,1]] on the unit torus
domain (0,0) (1,0) (1,1) (0,1)
wrap unit-torus
piece a vertices (0,0) (1/2,0) (0,1) linear 2 1 1 1 translate 0 0
piece b vertices (1/2,0) (1,0) (0,1) linear 2 1 1 1 translate -1 0
piece c vertices (0,1) (1,0) (1/2,1) linear 2 1 1 1 translate -1 -1
piece d vertices (1,0) (1,1) (1/2,1) linear 2 1 1 1 translate -2 -1
)");
  }
  throw std::invalid_argument("unknown gallery map '" + name + "'");
}

}  // namespace pwadyn
