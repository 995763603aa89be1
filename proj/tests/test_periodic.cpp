#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pwadyn/periodic.hpp"
#include "support.hpp"

using namespace pwadyn;

TEST_CASE("single-piece identity map: one cyclic word, a full-domain family") {
  PwaMap id = parse_map_spec(
      "domain (0,0) (1,0) (1,1) (0,1)\n"
      "piece a vertices (0,0) (1,0) (1,1) (0,1) linear 1 0 0 1 translate 0 0\n");
  validate(id);
  const auto rep = fixed_points(id, 1);
  CHECK(rep.cyclic_words_closed == 1);
  CHECK(rep.isolated.empty());
  REQUIRE(rep.families.size() == 1);
  CHECK(region_equal(rep.families[0].family, id.domain));
}

TEST_CASE("cat map: N(n) equals the trace oracle for n <= 8") {
  PwaMap cat = gallery_map("cat");
  const auto reports = periodic_analysis(cat, 8);
  for (int n = 1; n <= 8; ++n) {
    const auto& rep = reports[static_cast<std::size_t>(n - 1)];
    CHECK(rep.families.empty());
    CHECK(rep.count() == static_cast<std::uint64_t>(testutil::cat_periodic_oracle(n)));
  }

  SUBCASE("n = 2 word count is consistent with the five fixed points of T^2") {
    const auto& rep = reports[1];
    CHECK(rep.count() == 5);
    std::uint64_t word_incidences = 0;
    for (const auto& g : rep.isolated) word_incidences += static_cast<std::uint64_t>(g.multiplicity);
    CHECK(word_incidences >= rep.cyclic_words_closed);
  }

  SUBCASE("isolated points return to themselves exactly along their words") {
    const auto& rep = reports[4];  // n = 5
    REQUIRE(!rep.isolated.empty());
    for (const auto& g : rep.isolated) {
      // Walk the first word's branches from the point; torus maps may return
      // a lattice translate of the start.
      std::vector<std::string> ids;
      std::string cur;
      for (const char c : g.words[0] + ",") {
        if (c == ',') {
          ids.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      Vec2 x = g.point;
      for (const auto& id : ids) {
        const int k = cat.piece_index(id);
        REQUIRE(k >= 0);
        x = cat.pieces[static_cast<std::size_t>(k)].branch(x);
      }
      CHECK((x.x - g.point.x).is_integer());
      CHECK((x.y - g.point.y).is_integer());
    }
  }

  SUBCASE("interior fixed points have itinerary equal to their word") {
    const auto& rep = reports[3];  // n = 4
    int interior_checked = 0;
    for (const auto& g : rep.isolated) {
      if (!g.interior || g.multiplicity != 1) continue;
      const Word w = itinerary(cat, g.point, 0, 4);
      CHECK(w.str() == g.words[0]);
      ++interior_checked;
    }
    CHECK(interior_checked > 0);
  }
}

TEST_CASE("count symmetry: the inverse map has the same periodic counts") {
  PwaMap cat = gallery_map("cat");
  const PwaMap inv = inverse_map(cat);
  const auto fwd = periodic_analysis(cat, 5);
  const auto bwd = periodic_analysis(inv, 5);
  for (int n = 1; n <= 5; ++n)
    CHECK(fwd[static_cast<std::size_t>(n - 1)].count() == bwd[static_cast<std::size_t>(n - 1)].count());
}

TEST_CASE("c4-nomax: the identity block yields a 2-dimensional family at every n") {
  PwaMap c4 = gallery_map("c4-nomax");
  const auto reports = periodic_analysis(c4, 5);
  const ConvexRegion xyba =
      c4.pieces[static_cast<std::size_t>(c4.piece_index("xyba"))].domain;
  for (int n = 1; n <= 5; ++n) {
    const auto& rep = reports[static_cast<std::size_t>(n - 1)];
    bool found = false;
    for (const auto& fam : rep.families)
      if (fam.family.is_polygon() && region_equal(fam.family, xyba)) found = true;
    CHECK(found);
  }
}

TEST_CASE("tent-product: segment families at the tent fixed points") {
  PwaMap tp = gallery_map("tent-product");
  const auto rep = fixed_points(tp, 1);
  // x = 0 (left branch) and x = 2/3 (right branch) are fixed for the tent
  // map; the identity second factor turns each into a vertical segment.
  REQUIRE(rep.families.size() == 2);
  for (const auto& fam : rep.families) CHECK(fam.family.kind == RegionKind::segment);
  CHECK(rep.isolated.empty());
  const auto seg0 = ConvexRegion::segment_region({Rat(0), Rat(0)}, {Rat(0), Rat(1)});
  const auto seg23 = ConvexRegion::segment_region({Rat(2, 3), Rat(0)}, {Rat(2, 3), Rat(1)});
  CHECK((region_equal(rep.families[0].family, seg0) || region_equal(rep.families[0].family, seg23)));
}

TEST_CASE("a two-piece swap has no fixed point at n = 1 and a family at n = 2") {
  PwaMap swap = parse_map_spec(
      "domain (0,0) (1,0) (1,1) (0,1)\n"
      "piece a vertices (0,0) (1/2,0) (1/2,1) (0,1) linear 1 0 0 1 translate 1/2 0\n"
      "piece b vertices (1/2,0) (1,0) (1,1) (1/2,1) linear 1 0 0 1 translate -1/2 0\n");
  validate(swap);
  const auto reports = periodic_analysis(swap, 2);
  // The halves touch along x = 1/2, so the closure convention counts both
  // words; neither admits a solution (the systems are inconsistent).
  CHECK(reports[0].cyclic_words_closed == 2);
  CHECK(reports[0].cyclic_words_open == 0);
  CHECK(reports[0].isolated.empty());
  CHECK(reports[0].families.empty());
  // Period 2: both halves are pointwise swapped back.
  CHECK(reports[1].cyclic_words_closed == 2);
  CHECK(reports[1].families.size() == 2);
}

TEST_CASE("c1-cone: cyclic word counts reported both ways") {
  PwaMap cone = gallery_map("c1-cone");
  const auto reports = periodic_analysis(cone, 8);
  for (int n = 1; n <= 8; ++n) {
    const auto& rep = reports[static_cast<std::size_t>(n - 1)];
    // Every word's wraparound meets at the apex, so the closure count is
    // full; the tent branches are surjective, so the open count is full too.
    CHECK(rep.cyclic_words_closed == (1ULL << n));
    CHECK(rep.cyclic_words_open == rep.cyclic_words_closed);
    // The apex is the unique periodic point of every word.
    REQUIRE(rep.count() == 1);
    CHECK(rep.isolated[0].point == Vec2{Rat(0), Rat(0)});
    CHECK(rep.isolated[0].multiplicity == (1 << n));
  }
}

TEST_CASE("growth_report") {
  SUBCASE("h = 0 reproduces the raw counts; zero counts give zeros") {
    const auto rep = growth_report({3, 5, 9}, 0.0);
    CHECK(rep.normalized == std::vector<double>{3.0, 5.0, 9.0});
    CHECK(rep.trailing_min == 5.0);
    const auto zero = growth_report({0, 0, 0}, 1.0);
    for (const double v : zero.normalized) CHECK(v == 0.0);
  }

  SUBCASE("cat counts normalized by the entropy stay in [0.5, 1.5]") {
    // Counts via the trace oracle, independent of the enumeration.
    std::vector<std::uint64_t> counts;
    for (int n = 1; n <= 10; ++n)
      counts.push_back(static_cast<std::uint64_t>(testutil::cat_periodic_oracle(n)));
    const auto rep = growth_report(counts, 0.9624);
    for (int n = 4; n <= 10; ++n) {
      CHECK(rep.normalized[static_cast<std::size_t>(n - 1)] >= 0.5);
      CHECK(rep.normalized[static_cast<std::size_t>(n - 1)] <= 1.5);
    }
    CHECK(std::fabs(rep.katok_rate[9] - testutil::cat_log_lambda()) < 0.05);
  }
}
