#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pwadyn/geom.hpp"
#include "pwadyn/rng.hpp"
#include "support.hpp"

using namespace pwadyn;

namespace {

ConvexRegion unit_square() {
  return make_polygon({{Rat(0), Rat(0)}, {Rat(1), Rat(0)}, {Rat(1), Rat(1)}, {Rat(0), Rat(1)}});
}

ConvexRegion shifted_square(Rat dx, Rat dy) {
  return apply_affine(AffineMap2::translation(dx, dy), unit_square());
}

}  // namespace

TEST_CASE("rational parsing and arithmetic") {
  CHECK(Rat::parse("3/6") == Rat(1, 2));
  CHECK(Rat::parse("-4/2") == Rat(-2));
  CHECK(Rat::parse("7").is_integer());
  CHECK_THROWS_AS(Rat::parse("0.5"), RatParseError);
  CHECK_THROWS_AS(Rat::parse("1/0"), RatParseError);
  CHECK_THROWS_AS(Rat::parse(""), RatParseError);
  CHECK(Rat(2, 4).str() == "1/2");
  CHECK((Rat(1, 3) + Rat(1, 6)) == Rat(1, 2));
  CHECK(Rat(-3, 6).den() == 2);
  CHECK(Rat(5, 3).mod1() == Rat(2, 3));
  CHECK(Rat(-1, 3).mod1() == Rat(2, 3));
  CHECK(std::fabs(Rat(1, 3).log_abs() - std::log(1.0 / 3.0)) < 1e-14);
}

TEST_CASE("intersect_convex on the documented cases") {
  const auto sq = unit_square();
  CHECK(region_equal(intersect_convex(sq, sq), sq));

  const auto half = intersect_convex(sq, shifted_square(Rat(1, 2), Rat(1, 2)));
  REQUIRE(half.is_polygon());
  CHECK(region_area(half) == Rat(1, 4));
  CHECK(region_equal(half, make_polygon({{Rat(1, 2), Rat(1, 2)},
                                         {Rat(1), Rat(1, 2)},
                                         {Rat(1), Rat(1)},
                                         {Rat(1, 2), Rat(1)}})));

  CHECK(intersect_convex(sq, shifted_square(Rat(2), Rat(0))).is_empty());

  const auto t1 = make_polygon({{Rat(0), Rat(0)}, {Rat(1), Rat(0)}, {Rat(0), Rat(1)}});
  const auto t2 = make_polygon({{Rat(1), Rat(0)}, {Rat(0), Rat(1)}, {Rat(1), Rat(1)}});
  const auto shared = intersect_convex(t1, t2);
  REQUIRE(shared.kind == RegionKind::segment);
  CHECK(region_equal(shared, ConvexRegion::segment_region({Rat(1), Rat(0)}, {Rat(0), Rat(1)})));
}

TEST_CASE("apply_affine orientation, degeneracy, area scaling") {
  const auto sq = unit_square();
  CHECK(region_equal(apply_affine(AffineMap2::identity(), sq), sq));

  const auto sheared = apply_affine(AffineMap2::linear(Rat(2), Rat(1), Rat(1), Rat(1)), sq);
  REQUIRE(sheared.is_polygon());
  CHECK(region_area(sheared) == Rat(1));

  const auto flat = apply_affine(AffineMap2::linear(Rat(1), Rat(0), Rat(0), Rat(0)), sq);
  REQUIRE(flat.kind == RegionKind::segment);
  CHECK(region_equal(flat, ConvexRegion::segment_region({Rat(0), Rat(0)}, {Rat(1), Rat(0)})));

  // det < 0: output re-normalized to CCW.
  const auto mirrored = apply_affine(AffineMap2::linear(Rat(-1), Rat(0), Rat(0), Rat(1)), sq);
  REQUIRE(mirrored.is_polygon());
  CHECK(region_area(mirrored) == Rat(1));
}

TEST_CASE("invert_affine exactness") {
  CHECK(invert_affine(AffineMap2::identity()) == AffineMap2::identity());

  const auto f = AffineMap2::linear(Rat(2), Rat(1), Rat(1), Rat(1));
  const auto fi = invert_affine(f);
  CHECK(fi == AffineMap2::linear(Rat(1), Rat(-1), Rat(-1), Rat(2)));
  CHECK(invert_affine(fi) == f);
  CHECK(f.compose(fi) == AffineMap2::identity());

  const AffineMap2 g{Rat(1, 2), Rat(0), Rat(0), Rat(1, 2), Rat(1, 4), Rat(1, 4)};
  const auto gi = invert_affine(g);
  CHECK(gi == AffineMap2{Rat(2), Rat(0), Rat(0), Rat(2), Rat(-1, 2), Rat(-1, 2)});

  CHECK_THROWS_AS(invert_affine(AffineMap2::linear(Rat(1), Rat(2), Rat(2), Rat(4))),
                  SingularMatrixError);
}

TEST_CASE("region_metrics basics") {
  const auto sq = unit_square();
  auto m = region_metrics(sq);
  CHECK(m.area == Rat(1));
  CHECK(m.diameter == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(m.width == doctest::Approx(1.0).epsilon(1e-12));

  const auto seg = ConvexRegion::segment_region({Rat(0), Rat(0)}, {Rat(1), Rat(0)});
  m = region_metrics(seg);
  CHECK(m.area == Rat(0));
  CHECK(m.diameter == doctest::Approx(1.0));
  CHECK(m.width == 0.0);

  const auto tri = make_polygon({{Rat(0), Rat(0)}, {Rat(1), Rat(0)}, {Rat(0), Rat(1)}});
  m = region_metrics(tri);
  CHECK(m.area == Rat(1, 2));
  CHECK(m.diameter == doctest::Approx(std::sqrt(2.0)));

  CHECK_THROWS_AS(region_metrics(ConvexRegion::empty_region()), EmptyRegionError);
}

TEST_CASE("singular_log_norms against the quadratic-formula oracle") {
  auto [s1, s2] = singular_log_norms(AffineMap2::identity());
  CHECK(s1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s2 == doctest::Approx(0.0).epsilon(1e-12));

  std::tie(s1, s2) = singular_log_norms(AffineMap2::linear(Rat(2), Rat(0), Rat(0), Rat(1, 2)));
  CHECK(s1 == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(s2 == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  // Symmetric matrix [[2,1],[1,1]]: singular values are its eigenvalues.
  const double lam = testutil::cat_lambda();
  std::tie(s1, s2) = singular_log_norms(AffineMap2::linear(Rat(2), Rat(1), Rat(1), Rat(1)));
  CHECK(std::fabs(s1 - std::log(lam)) < 1e-9);
  CHECK(std::fabs(s2 + std::log(lam)) < 1e-9);

  // sigma2 = 0 sentinel.
  std::tie(s1, s2) = singular_log_norms(AffineMap2::linear(Rat(1), Rat(0), Rat(0), Rat(0)));
  CHECK(s2 == -std::numeric_limits<double>::infinity());
}

TEST_CASE("singular_log_norms invariants on random matrices") {
  SplitMix64 rng(411);
  for (int trial = 0; trial < 500; ++trial) {
    const auto pick = [&] {
      return Rat(static_cast<long>(rng.below(41)) - 20, static_cast<long>(rng.below(6)) + 1);
    };
    const auto l = AffineMap2::linear(pick(), pick(), pick(), pick());
    const auto [s1, s2] = singular_log_norms(l);
    CHECK(s1 >= s2);
    const auto [t1, t2] = singular_log_norms(AffineMap2::linear(l.a, l.c, l.b, l.d));
    CHECK(std::fabs(s1 - t1) < 1e-12);
    if (!l.det().is_zero()) {
      CHECK(std::fabs((s1 + s2) - l.det().log_abs()) < 1e-12);
      CHECK(std::fabs(s2 - t2) < 1e-12);
    }
  }
}

TEST_CASE("clip/intersection properties on random convex polygons") {
  SplitMix64 rng(1229);
  int nontrivial = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto p = testutil::random_convex_polygon(rng);
    const auto q = testutil::random_convex_polygon(rng);
    const auto pq = intersect_convex(p, q);
    const auto qp = intersect_convex(q, p);
    CHECK(region_equal(pq, qp));                        // commutative
    CHECK(region_equal(intersect_convex(p, p), p));     // idempotent
    CHECK(region_subset(pq, p));                        // monotone
    CHECK(region_subset(pq, q));
    if (pq.is_polygon()) {
      ++nontrivial;
      CHECK(region_equal(intersect_convex(pq, p), pq));
    }

    // Halfplane additivity: area(p & h) + area(p & h^c) == area(p) exactly.
    const auto a = testutil::random_point(rng);
    auto b = testutil::random_point(rng);
    if (a == b) continue;
    const auto left = clip_left_of_line(p, a, b);
    const auto right = clip_left_of_line(p, b, a);
    CHECK(region_area(left) + region_area(right) == region_area(p));

    // Affine maps scale area by |det| exactly.
    const auto pickr = [&] {
      return Rat(static_cast<long>(rng.below(9)) - 4, static_cast<long>(rng.below(3)) + 1);
    };
    const AffineMap2 f{pickr(), pickr(), pickr(), pickr(), pickr(), pickr()};
    const auto img = apply_affine(f, p);
    CHECK(region_area(img) == abs(f.det()) * region_area(p));
  }
  CHECK(nontrivial > 50);  // the generator actually exercises the clipper
}

TEST_CASE("containment and canonicalization corner cases") {
  const auto sq = unit_square();
  CHECK(region_contains(sq, {Rat(0), Rat(0)}));
  CHECK(!region_contains_interior(sq, {Rat(0), Rat(0)}));
  CHECK(region_contains_interior(sq, {Rat(1, 2), Rat(1, 3)}));
  CHECK(!region_contains(sq, {Rat(2), Rat(0)}));

  // Clockwise input is re-oriented; collinear vertices are merged.
  const auto cw = make_polygon(
      {{Rat(0), Rat(1)}, {Rat(1), Rat(1)}, {Rat(1), Rat(0)}, {Rat(1, 2), Rat(0)}, {Rat(0), Rat(0)}});
  REQUIRE(cw.is_polygon());
  CHECK(cw.verts.size() == 4);
  CHECK(area2_of(cw.verts).sign() > 0);
  CHECK(region_equal(cw, sq));

  // Thin polygon collapses to a segment.
  const auto thin =
      intersect_convex(sq, make_polygon({{Rat(0), Rat(1)}, {Rat(1), Rat(1)}, {Rat(1), Rat(2)}, {Rat(0), Rat(2)}}));
  CHECK(thin.kind == RegionKind::segment);
}

TEST_CASE("edge provenance is inherited from the clipping edge") {
  auto sq = unit_square();
  const Vec2 a{Rat(1, 2), Rat(0)}, b{Rat(1, 2), Rat(1)};
  const auto tag = EdgeTag::rect_edge(3, 1);
  const auto left = clip_left_of_line(sq, b, a, tag);  // x <= 1/2 side
  REQUIRE(left.is_polygon());
  bool found = false;
  for (const auto& t : left.tags)
    if (t.source == EdgeTag::Source::rectangle_edge && t.rect == 3 && t.rect_side == 1) found = true;
  CHECK(found);
}
