#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "pwadyn/symdyn.hpp"
#include "support.hpp"

using namespace pwadyn;

namespace {

PwaMap single_piece_identity() {
  PwaMap m = parse_map_spec(
      "domain (0,0) (1,0) (1,1) (0,1)\n"
      "piece a vertices (0,0) (1,0) (1,1) (0,1) linear 1 0 0 1 translate 0 0\n");
  validate(m);
  return m;
}

// Independent itinerary oracle: raw orbit evaluation with exact membership,
// bypassing the itinerary() implementation.
std::optional<std::vector<std::string>> grid_itinerary(const PwaMap& m, Vec2 p, int n) {
  std::vector<std::string> w;
  for (int k = 0; k < n; ++k) {
    int hit = -1;
    for (std::size_t i = 0; i < m.pieces.size(); ++i)
      if (region_contains_interior(m.pieces[i].domain, p)) {
        hit = static_cast<int>(i);
        break;
      }
    if (hit < 0) return std::nullopt;  // boundary point, skip
    w.push_back(m.pieces[static_cast<std::size_t>(hit)].id);
    p = m.pieces[static_cast<std::size_t>(hit)].branch(p);
  }
  return w;
}

}  // namespace

TEST_CASE("itinerary on the cat map matches direct orbit evaluation") {
  PwaMap cat = gallery_map("cat");
  const Vec2 x{Rat(1, 3), Rat(1, 7)};
  const Word w = itinerary(cat, x, 0, 5);
  REQUIRE(w.letters.size() == 5);
  const auto oracle = grid_itinerary(cat, x, 5);
  REQUIRE(oracle.has_value());
  CHECK(w.letters == *oracle);

  SUBCASE("backward letters agree with forward letters of the earlier point") {
    const Word wb = itinerary(cat, x, 3, 5);
    REQUIRE(wb.letters.size() == 8);
    CHECK(wb.start_time == -3);
    // Reconstruct: step x back 3 times, then the forward itinerary must match.
    SystemView sys(cat);
    Vec2 p = x;
    for (int k = 1; k <= 3; ++k) p = backward_step(sys, p, -k);
    const Word wf = itinerary(cat, p, 0, 8);
    CHECK(wf.letters == wb.letters);
  }
}

TEST_CASE("itinerary boundary and fixed-point cases") {
  PwaMap cat = gallery_map("cat");
  try {
    itinerary(cat, {Rat(0), Rat(0)}, 0, 3);  // corner of every piece
    FAIL("expected BoundaryHitError");
  } catch (const BoundaryHitError& e) {
    CHECK(e.step == 0);
  }

  // Fixed point in a piece interior gives a constant word.
  PwaMap tent = gallery_map("tent-product");
  const Word w = itinerary(tent, {Rat(2, 3), Rat(1, 2)}, 0, 6);
  for (const auto& s : w.letters) CHECK(s == "r");
}

TEST_CASE("c1-cone realizes every binary word") {
  PwaMap cone = gallery_map("c1-cone");
  const CylinderTree tree = enumerate_cylinders(cone, 8);
  REQUIRE(!tree.truncated);
  for (int k = 1; k <= 8; ++k)
    CHECK(tree.counts[static_cast<std::size_t>(k - 1)] == (1ULL << k));

  const auto est = entropy_estimates(tree);
  for (int k = 1; k <= 8; ++k)
    CHECK(est.avg[static_cast<std::size_t>(k - 1)] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("c_1 equals the piece count; identity map has zero entropy") {
  for (const auto& name : gallery_names()) {
    PwaMap m = gallery_map(name);
    const auto counts = count_cylinders(m, 1);
    CHECK(counts.counts[0] == m.pieces.size());
  }
  PwaMap id = single_piece_identity();
  const CylinderTree tree = enumerate_cylinders(id, 6);
  const auto est = entropy_estimates(tree);
  for (const double a : est.avg) CHECK(a == 0.0);
  for (const double r : est.ratio) CHECK(r == 0.0);
}

TEST_CASE("cat cylinder counts: growth rate and grid cross-check") {
  PwaMap cat = gallery_map("cat");
  const CylinderTree tree = enumerate_cylinders(cat, 5);
  REQUIRE(!tree.truncated);

  // Exhaustive grid sampling of itineraries, an independent path through the
  // dynamics: every realized word must be a tree word, and at depth <= 3 the
  // grid must realize every tree word.
  SystemView sys(cat);
  std::set<std::string> tree_words[6];
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    const auto& node = tree.nodes[i];
    tree_words[node.depth].insert(tree_word(sys, tree, static_cast<int>(i)).str());
  }
  std::set<std::string> grid_words[6];
  const int g = 120;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const Vec2 p{Rat(2 * i + 1, 2 * g), Rat(2 * j + 1, 2 * g)};
      const auto w = grid_itinerary(cat, p, 5);
      if (!w) continue;
      std::string s;
      for (std::size_t k = 0; k < w->size(); ++k) {
        if (k) s += ',';
        s += (*w)[k];
        grid_words[k + 1].insert(s);
      }
    }
  for (int d = 1; d <= 5; ++d) {
    for (const auto& w : grid_words[d]) CHECK(tree_words[d].count(w) == 1);
  }
  for (int d = 1; d <= 3; ++d) CHECK(grid_words[d] == tree_words[d]);

  // Ratio estimator approaches log((3+sqrt5)/2) = 0.9624...
  const auto counts = count_cylinders(cat, 10);
  REQUIRE(!counts.truncated);
  const auto est = entropy_estimates(counts);
  CHECK(std::fabs(est.ratio[8] - testutil::cat_log_lambda()) < 0.1);
}

TEST_CASE("streaming counts agree with the stored tree") {
  // tent-product and c1-cone exercise orientation-reversing branches.
  for (const auto& name : gallery_names()) {
    PwaMap m = gallery_map(name);
    const CylinderTree tree = enumerate_cylinders(m, 6);
    const auto counts = count_cylinders(m, 6);
    CHECK(tree.counts == counts.counts);
    CHECK(tree.boundary_counts == counts.boundary_counts);
  }
}

TEST_CASE("exact child-area additivity and count monotonicity") {
  for (const auto& name : {"cat", "c1-cone", "tent-product"}) {
    PwaMap m = gallery_map(name);
    const CylinderTree tree = enumerate_cylinders(m, 5);
    REQUIRE(!tree.truncated);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& node = tree.nodes[i];
      if (node.depth == tree.depth) continue;  // leaves have no enumerated children
      Rat sum(0);
      for (const int c : node.children) sum += region_area(tree.nodes[static_cast<std::size_t>(c)].region);
      CHECK(sum == region_area(node.region));
      // Children nest inside the parent exactly.
      for (const int c : node.children)
        CHECK(region_subset(tree.nodes[static_cast<std::size_t>(c)].region, node.region));
    }
    // c_{k+1} <= c_k * #P, and c_{k+1} >= c_k for homeomorphisms.
    for (std::size_t k = 0; k + 1 < tree.counts.size(); ++k) {
      CHECK(tree.counts[k + 1] <= tree.counts[k] * m.pieces.size());
      if (m.homeomorphism == Flag::yes) CHECK(tree.counts[k + 1] >= tree.counts[k]);
    }
  }
}

TEST_CASE("itinerary equals the unique tree word containing the point") {
  PwaMap cat = gallery_map("cat");
  const CylinderTree tree = enumerate_cylinders(cat, 5);
  SystemView sys(cat);
  SplitMix64 rng(77);
  int tested = 0;
  for (const auto& p : sample_points_in_region(cat.domain, 40, 99)) {
    (void)rng;
    std::optional<Word> w;
    try {
      w = itinerary(cat, p, 0, 5);
    } catch (const BoundaryHitError&) {
      continue;
    }
    ++tested;
    int matches = 0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
      if (tree.nodes[i].depth == 5 && region_contains_interior(tree.nodes[i].region, p)) {
        ++matches;
        CHECK(tree_word(sys, tree, static_cast<int>(i)).str() == w->str());
      }
    CHECK(matches == 1);
  }
  CHECK(tested >= 30);
}

TEST_CASE("forward and backward trees have equal node counts for homeomorphisms") {
  PwaMap cat = gallery_map("cat");
  const PwaMap inv = inverse_map(cat);
  const auto fwd = count_cylinders(cat, 6);
  const auto bwd = count_cylinders(inv, 6);
  CHECK(fwd.counts == bwd.counts);
}

TEST_CASE("schedules: refined-at-residue-0 cylinder counts") {
  PwaMap cat = gallery_map("cat");
  Rectangle rect;
  rect.id = "r";
  rect.corners = {{Rat(1, 8), Rat(1, 8)}, {Rat(5, 16), Rat(1, 8)},
                  {Rat(5, 16), Rat(5, 16)}, {Rat(1, 8), Rat(5, 16)}};
  rect.stable0 = 0;
  const auto refined = refine_with_rectangles(cat.pieces, {rect});

  SUBCASE("refined = base gives the identical tree") {
    const auto s = cyclic_schedule(cat, cat.pieces, 3);
    const auto plain = count_cylinders(cat, 6);
    const auto sched = count_cylinders(SystemView(cat, s), 6);
    CHECK(plain.counts == sched.counts);
  }

  SUBCASE("L = 1 equals the fully refined map") {
    PwaMap refined_map = cat;
    refined_map.pieces = refined;
    validate(refined_map);
    const auto s = cyclic_schedule(cat, refined, 1);
    const auto a = count_cylinders(SystemView(cat, s), 5);
    const auto b = count_cylinders(refined_map, 5);
    CHECK(a.counts == b.counts);
  }

  SUBCASE("L = 3 counts sit between pure-P and pure-P^R counts") {
    PwaMap refined_map = cat;
    refined_map.pieces = refined;
    validate(refined_map);
    const auto low = count_cylinders(cat, 6).counts;
    const auto high = count_cylinders(refined_map, 6).counts;
    const auto s = cyclic_schedule(cat, refined, 3);
    const auto mid = count_cylinders(SystemView(cat, s), 6).counts;
    for (std::size_t k = 0; k < mid.size(); ++k) {
      CHECK(mid[k] >= low[k]);
      CHECK(mid[k] <= high[k]);
    }
  }
}

TEST_CASE("budget truncation is flagged, not silent") {
  PwaMap cat = gallery_map("cat");
  const CylinderTree tree = enumerate_cylinders(cat, 8, 50);
  CHECK(tree.truncated);
  CHECK(tree.depth < 8);
  CHECK_THROWS_AS(entropy_estimates(tree), TruncatedTreeError);
  const auto counts = count_cylinders(cat, 8, 50);
  CHECK(counts.truncated);
}

TEST_CASE("multiplicity profile") {
  SUBCASE("c1-cone: the apex is shared by every cylinder closure") {
    PwaMap cone = gallery_map("c1-cone");
    const CylinderTree tree = enumerate_cylinders(cone, 7);
    const auto prof = multiplicity_profile(tree, 7);
    for (int d = 1; d <= 7; ++d) {
      CHECK(prof.max_mult[static_cast<std::size_t>(d - 1)] == (1ULL << d));
      CHECK(prof.witness[static_cast<std::size_t>(d - 1)] == Vec2{Rat(0), Rat(0)});
      CHECK(multiplicity_at(tree, d, {Rat(0), Rat(0)}) == (1ULL << d));
    }
  }

  SUBCASE("unit square split by a diagonal: max mult 2 at depth 1") {
    PwaMap m = parse_map_spec(
        "domain (0,0) (1,0) (1,1) (0,1)\n"
        "piece lo vertices (0,0) (1,0) (1,1) linear 1 0 0 1 translate 0 0\n"
        "piece hi vertices (0,0) (1,1) (0,1) linear 1 0 0 1 translate 0 0\n");
    validate(m);
    const CylinderTree tree = enumerate_cylinders(m, 1);
    const auto prof = multiplicity_profile(tree, 1);
    CHECK(prof.max_mult[0] == 2);
  }

  SUBCASE("cat map: linear growth bound and step bound") {
    PwaMap cat = gallery_map("cat");
    const int n = 6;
    const CylinderTree tree = enumerate_cylinders(cat, n);
    const auto prof = multiplicity_profile(tree, n);
    for (int d = 1; d <= n; ++d)
      CHECK(prof.max_mult[static_cast<std::size_t>(d - 1)] <= 2ULL * d + 1);
    for (int d = 1; d < n; ++d)
      CHECK(prof.max_mult[static_cast<std::size_t>(d)] <=
            prof.max_mult[static_cast<std::size_t>(d - 1)] + 2);
  }
}
