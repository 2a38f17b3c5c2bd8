#include "msekit/flatgeom.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace msekit;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

std::vector<Vec2> trinoid_fluxes(double scale = 1.0) {
  std::vector<Vec2> v;
  for (int i = 0; i < 3; ++i) {
    const double a = 2.0 * kPi * i / 3.0;
    v.push_back(scale * Vec2(std::cos(a), std::sin(a)));
  }
  return v;
}

}  // namespace

TEST(MultiDomain, UnitSquareTwoTriangles) {
  ChartAtlas atlas;
  atlas.num_vertices = 4;
  atlas.triangles = {{0, 1, 2}, {0, 2, 3}};
  atlas.charts = {{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)}, {Vec2(0, 0), Vec2(1, 1), Vec2(0, 1)}};
  atlas.transitions = {{0, 1, Isometry2::identity()}};
  atlas.arcs = {{"bottom", {0, 1}, true}, {"right", {1, 2}, true}, {"top", {2, 3}, true}, {"left", {3, 0}, true}};
  const auto dom = build_multidomain(atlas);
  EXPECT_EQ(dom.euler_characteristic(), 1);
  EXPECT_EQ(dom.corners().size(), 4u);
  EXPECT_NEAR(dom.total_area(), 1.0, 1e-15);
}

TEST(MultiDomain, RotatedChartsDevelopConsistently) {
  // second triangle given in a chart rotated by 0.7 rad and shifted
  const Isometry2 g = Isometry2::from_angle(0.7, Vec2(3.0, -1.0));
  ChartAtlas atlas;
  atlas.num_vertices = 4;
  atlas.triangles = {{0, 1, 2}, {0, 2, 3}};
  atlas.charts = {{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)}, {g(Vec2(0, 0)), g(Vec2(1, 1)), g(Vec2(0, 1))}};
  atlas.arcs = {{"all", {0, 1, 2, 3, 0}, false}};
  const auto dom = build_multidomain(atlas);
  EXPECT_NEAR((dom.point(3) - dom.point(0) - Vec2(0, 1)).norm(), 0.0, 1e-12);
  EXPECT_LE(dom.holonomy({0, 1, 0}).deviation_from_identity(), 1e-10);
}

TEST(MultiDomain, InconsistentChartsRejected) {
  ChartAtlas atlas;
  atlas.num_vertices = 4;
  atlas.triangles = {{0, 1, 2}, {0, 2, 3}};
  // shared edge 0-2 has length sqrt(2) in one chart and 1.5 in the other
  atlas.charts = {{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)}, {Vec2(0, 0), Vec2(1.5, 0), Vec2(0, 1)}};
  atlas.arcs = {{"all", {0, 1, 2, 3, 0}, false}};
  EXPECT_EQ(code_of([&] { build_multidomain(atlas); }), ErrorCode::InconsistentIsometry);
}

TEST(MultiDomain, AnnulusIsNotSimplyConnected) {
  // square ring: outer 4 corners, inner 4 corners, 8 triangles
  std::vector<Vec2> p = {{-2, -2}, {2, -2}, {2, 2}, {-2, 2}, {-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  std::vector<Tri> t;
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    t.push_back({i, j, 4 + j});
    t.push_back({i, 4 + j, 4 + i});
  }
  EXPECT_EQ(code_of([&] { MultiDomain::from_developed(p, t, {{"outer", {0, 1, 2, 3, 0}, false}}); }),
            ErrorCode::NotSimplyConnected);
}

TEST(MultiDomain, ReflexCornerInsideOneArcRejected) {
  // L-shaped region presented as a single smooth arc
  std::vector<Vec2> p = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  std::vector<Tri> t = {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}};
  EXPECT_EQ(code_of([&] { MultiDomain::from_developed(p, t, {{"all", {0, 1, 2, 3, 4, 5, 0}, false}}); }),
            ErrorCode::NonConvexArc);
}

TEST(MultiDomain, RefinementPreservesAreaAndArcs) {
  const auto dom = make_rectangle(0, 0, 2, 1, 0.1);
  EXPECT_NEAR(dom.total_area(), 2.0, 1e-12);
  EXPECT_LE(dom.max_edge_length(), 0.1 + 1e-12);
  EXPECT_EQ(dom.arcs().size(), 4u);
  for (const auto& a : dom.arcs()) {
    for (int v : a.chain) EXPECT_TRUE(dom.is_boundary(v));
  }
}

TEST(Sector, OverlappingSectorHasNonInjectiveDevelopment) {
  const auto s = make_sector(0.0, 3.0 * kPi, 1.0, 0.1);
  const auto& dom = s.domain;
  EXPECT_EQ(dom.euler_characteristic(), 1);
  // area of the abstract sector, not of its image
  EXPECT_NEAR(dom.total_area(), 0.5 * 3.0 * kPi, 0.05);
  // two distinct vertices share a developed point: theta and theta + 2 pi
  int collisions = 0;
  for (int v = 0; v < dom.num_vertices(); ++v) {
    for (int w = v + 1; w < dom.num_vertices(); ++w) {
      if ((dom.point(v) - dom.point(w)).norm() < 1e-9) ++collisions;
    }
  }
  EXPECT_GT(collisions, 0);
}

TEST(Sector, MeshIsMirrorSymmetric) {
  const auto s = make_sector(-kPi / 3.0, 0.0, 1.0, 0.1);
  const double mid = s.mid();
  for (int v = 0; v < s.domain.num_vertices(); ++v) {
    const double tm = 2.0 * mid - s.theta[v];
    bool found = false;
    for (int w = 0; w < s.domain.num_vertices() && !found; ++w) {
      found = std::abs(s.r[w] - s.r[v]) < 1e-12 && std::abs(s.theta[w] - tm) < 1e-12;
    }
    EXPECT_TRUE(found) << "vertex " << v;
  }
}

TEST(FluxPolygon, Validation) {
  auto two = flux_polygon_from_vectors({Vec2(1, 0), Vec2(-1, 0)});
  EXPECT_TRUE(two.degenerate);
  auto tri = flux_polygon_from_vectors(trinoid_fluxes());
  EXPECT_FALSE(tri.degenerate);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR((tri.corners[(i + 1) % 3] - tri.corners[i]).norm(), 1.0, 1e-12);
  }
  EXPECT_EQ(code_of([] { flux_polygon_from_vectors({Vec2(1, 0), Vec2(0, 1)}); }), ErrorCode::UnbalancedFlux);
  EXPECT_EQ(code_of([] { flux_polygon_from_vectors({Vec2(1, 0)}); }), ErrorCode::DegeneratePolygon);
}

TEST(PolygonalDisk, BoundaryReproducesFluxVectors) {
  for (const auto& vs : {trinoid_fluxes(), std::vector<Vec2>{{2, 0}, {0, 1}, {-1.5, 0.5}, {-0.5, -1.5}}}) {
    const auto poly = flux_polygon_from_vectors(vs);
    const auto disk = find_embedded_disk(poly);
    const int r = poly.size();
    // boundary edge i, developed, equals v_i up to one rigid motion
    const Vec2 e0 = disk.coarse.point(disk.corner_ids[1]) - disk.coarse.point(disk.corner_ids[0]);
    const double rot = std::atan2(e0.y(), e0.x()) - std::atan2(vs[0].y(), vs[0].x());
    const Isometry2 g = Isometry2::from_angle(rot);
    for (int i = 0; i < r; ++i) {
      const Vec2 e = disk.coarse.point(disk.corner_ids[(i + 1) % r]) - disk.coarse.point(disk.corner_ids[i]);
      EXPECT_LE((e - g.rot * vs[i]).norm(), 1e-12);
    }
  }
}

TEST(PolygonalDisk, SelfCrossingRejected) {
  // bow tie: (0,0)->(1,1)->(1,0)->(0,1)->(0,0)
  const auto poly = flux_polygon_from_vectors({Vec2(1, 1), Vec2(0, -1), Vec2(-1, 1), Vec2(0, -1)});
  EXPECT_EQ(code_of([&] { find_embedded_disk(poly); }), ErrorCode::SelfIntersecting);
}

TEST(PolygonalDisk, SegmentPairOracleAgreesWithSimplicity) {
  // brute force over 4-gons on a small grid
  int checked = 0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      std::vector<Vec2> c = {{0, 0}, {2, 0}, {double(a), double(b) + 1.0}, {0, 2}};
      bool crossing = false;
      for (int i = 0; i < 4; ++i) {
        const int j = (i + 2) % 4;
        if (i < j) {
          const Vec2 d1 = c[(i + 1) % 4] - c[i], d2 = c[(j + 1) % 4] - c[j];
          const double den = cross(d1, d2);
          if (std::abs(den) > 1e-15) {
            const double s = cross(c[j] - c[i], d2) / den, t = cross(c[j] - c[i], d1) / den;
            crossing |= s >= 0 && s <= 1 && t >= 0 && t <= 1;
          }
        }
      }
      EXPECT_EQ(polygon_is_simple(c), !crossing) << a << "," << b;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 9);
}

TEST(OmegaP, EquilateralStripCounts) {
  const auto disk = find_embedded_disk(flux_polygon_from_vectors(trinoid_fluxes()));
  const auto om = build_omega_p(disk, 4.0, 0.25);
  EXPECT_EQ(om.domain.arcs().size(), 9u);  // 6 rays + 3 caps
  EXPECT_EQ(om.domain.euler_characteristic(), 1);
}

TEST(OmegaP, AreaIsAdditive) {
  const auto poly = flux_polygon_from_vectors(trinoid_fluxes());
  const auto disk = find_embedded_disk(poly);
  const auto om = build_omega_p(disk, 8.0, 0.25, 0.5);
  const double expected = std::abs(poly.signed_area()) + 3.0 * 1.0 * 8.0;
  EXPECT_NEAR(om.domain.total_area(), expected, 1e-10);
}

TEST(OmegaP, DegenerateTwoGonRejected) {
  EXPECT_EQ(code_of([] { find_embedded_disk(flux_polygon_from_vectors({Vec2(1, 0), Vec2(-1, 0)})); }),
            ErrorCode::DegeneratePolygon);
}

TEST(OmegaP, ShorterTruncationIsARestriction) {
  // every vertex of the l=2 mesh is a vertex of the l=4 mesh
  const auto disk = find_embedded_disk(flux_polygon_from_vectors(trinoid_fluxes()));
  const auto a = build_omega_p(disk, 2.0, 0.2);
  const auto b = build_omega_p(disk, 4.0, 0.2);
  Locator loc(b.domain);
  for (int v = 0; v < a.domain.num_vertices(); ++v) {
    double best = 1e300;
    for (const auto& hit : loc.locate_all(a.domain.point(v), 1e-9)) {
      for (int w : b.domain.triangle(hit.tri)) best = std::min(best, (b.domain.point(w) - a.domain.point(v)).norm());
    }
    EXPECT_LE(best, 1e-12) << "vertex " << v;
  }
}

TEST(OmegaP, ExhaustionDomainClosesAtApex) {
  const auto disk = find_embedded_disk(flux_polygon_from_vectors(trinoid_fluxes()));
  const auto ex = build_exhaustion_domain(disk, 4.0, 0.2);
  EXPECT_EQ(ex.apex_ids.size(), 3u);
  EXPECT_EQ(ex.domain.arcs().size(), 6u);
  const double expected = std::sqrt(3.0) / 4.0 + 3.0 * 0.5 * 1.0 * 4.0;
  EXPECT_NEAR(ex.domain.total_area(), expected, 1e-10);
  for (int i = 0; i < 3; ++i) {
    EXPECT_GE(ex.arc_id("plus" + std::to_string(i)), 0);
    EXPECT_GE(ex.arc_id("minus" + std::to_string(i)), 0);
  }
}
