#include "msekit/rnoid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace msekit;

namespace {

constexpr double kPi = std::numbers::pi;

FluxPolygon trinoid_fluxes(double scale = 1.0) {
  std::vector<Vec2> v;
  for (int i = 0; i < 3; ++i) v.emplace_back(scale * std::cos(2 * kPi * i / 3), scale * std::sin(2 * kPi * i / 3));
  return flux_polygon_from_vectors(v);
}

ExhaustionSchedule schedule(double h) {
  ExhaustionSchedule s;
  s.h = h;
  return s;
}

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

const RnoidResult& trinoid() {
  static const RnoidResult r = build_rnoid(trinoid_fluxes(), schedule(0.05));
  return r;
}

}  // namespace

TEST(ExhaustionSchedule, Validation) {
  auto s = schedule(0.1);
  s.k = {2, 4};
  expect_code(ErrorCode::SchemaError, [&] { s.validate(); });
  s.k = {2, 4, 4};
  expect_code(ErrorCode::SchemaError, [&] { s.validate(); });
  s.k = {2, 4, 8};
  s.h = 0.0;
  expect_code(ErrorCode::SchemaError, [&] { s.validate(); });
  EXPECT_DOUBLE_EQ(schedule(0.1).M(8.0), 12.0);
}

TEST(ExhaustionSolve, GatesBadInput) {
  expect_code(ErrorCode::UnbalancedFlux, [] { flux_polygon_from_vectors({Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0)}); });
  expect_code(ErrorCode::DegeneratePolygon, [] {
    build_rnoid(flux_polygon_from_vectors({Vec2(1, 0), Vec2(-1, 0)}), schedule(0.1));
  });
  auto s = schedule(0.1);
  s.anchor = Vec2(5, 5);
  expect_code(ErrorCode::SchemaError, [&] { exhaustion_solve(find_embedded_disk(trinoid_fluxes()), s); });
}

TEST(ExhaustionSolve, TrinoidConvergesOnTheDisk) {
  const auto& run = trinoid().run;
  ASSERT_EQ(run.successive_difference.size(), 2u);
  EXPECT_LT(run.successive_difference[1], run.successive_difference[0]);
  EXPECT_LE(run.successive_difference.back(), 0.05);
  for (const auto& lev : run.levels) EXPECT_NEAR(lev.sol.u[lev.anchor], 0.0, 1e-12);
}

TEST(ExhaustionSolve, CornerFluxVanishes) {
  const auto& res = trinoid();
  for (const auto& level : res.corner_flux) {
    for (double f : level) EXPECT_LE(std::abs(f), 2.0 * res.h());
  }
}

TEST(ExhaustionSolve, ConjugateFunctionSigns) {
  const auto& res = trinoid();
  EXPECT_LE(res.psi_corner_spread, 2.0 * res.h());
  EXPECT_GE(res.psi_interior_min, -2.0 * res.h());
}

TEST(VertexBehaviour, TrinoidCorners) {
  const auto& run = trinoid().run;
  for (int i = 0; i < 3; ++i) {
    const auto vb = verify_vertex_behaviour(run, i);
    EXPECT_TRUE(vb.psi_ok) << vb.min_psi_near << " " << vb.ray_error;
    EXPECT_TRUE(vb.approaching);
  }
}

TEST(BuildRnoid, TrinoidTopologyAndFluxes) {
  const auto& res = trinoid();
  EXPECT_EQ(res.ends(), 3);
  EXPECT_EQ(res.sigma.euler_characteristic(), 2 - 3);
  EXPECT_EQ(res.sigma.boundary_loops(), 3);
  EXPECT_LE(res.sigma.max_plane_offset, res.planarity_tol);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LE((res.fluxes[i] - res.targets[i]).norm(), 0.1 * 2.0) << i;
  }
  EXPECT_LE(res.flux_sum.norm(), 0.1 * 2.0);
}

// The 120 degree rotation maps the domain to itself, so the solution is
// invariant up to interpolation error, which is h |grad u| in the walls.
TEST(BuildRnoid, TrinoidRotationSymmetry) {
  const auto& lev = trinoid().run.final_level();
  const auto& d = lev.sol.dom();
  const double h = trinoid().h();
  Vec2 c = Vec2::Zero();
  for (int v : lev.strips.corner_ids) c += d.point(v) / 3.0;
  const Isometry2 rot = Isometry2::from_angle(2 * kPi / 3);
  const Locator loc(d);
  double disk = 0.0, scaled = 0.0;
  int compared = 0;
  for (int v = 0; v < d.num_vertices(); ++v) {
    if (d.is_boundary(v)) continue;
    const auto hit = loc.locate(c + rot.rot * (d.point(v) - c));
    if (!hit) continue;
    ++compared;
    const double e = std::abs(lev.sol.interpolate(*hit) - lev.sol.u[v]);
    double W = lev.sol.W[hit->tri];
    bool in_disk = true;
    for (int t : d.vertex_triangles(v)) {
      W = std::max(W, lev.sol.W[t]);
      in_disk = in_disk && d.region(t) == 0;
    }
    if (in_disk) disk = std::max(disk, e);
    scaled = std::max(scaled, e / (h * W));
  }
  EXPECT_GT(compared, d.num_vertices() / 2);
  EXPECT_LE(disk, h);
  EXPECT_LE(scaled, 1.0);
}

TEST(TotalCurvature, TrinoidTailsAndDegree) {
  const auto& c = trinoid().curvature;
  ASSERT_FALSE(c.ratio.empty());
  EXPECT_TRUE(c.tail_ok) << c.max_ratio;
  EXPECT_EQ(c.degree_oracle, 2);
  EXPECT_TRUE(c.degree_ok) << c.degree_estimate;
  EXPECT_GT(c.disk, 0.0);
  EXPECT_LE(c.disk, c.total);
}

TEST(Uniqueness, TwoAnchorsDifferByAConstant) {
  const auto disk = find_embedded_disk(trinoid_fluxes());
  const auto s = schedule(0.1);
  const auto rep = uniqueness_check(disk, s, Vec2(0.5, 0.2));
  EXPECT_TRUE(rep.ok) << rep.max_deviation;
  expect_code(ErrorCode::SchemaError, [&] {
    auto t = s;
    t.anchor = Vec2(0.5, 0.2);
    uniqueness_check(disk, t, Vec2(0.5, 0.2));
  });
}

TEST(Uniqueness, SameAnchorIsBitwiseIdentical) {
  const auto disk = find_embedded_disk(trinoid_fluxes());
  const auto a = exhaustion_solve(disk, schedule(0.1), false);
  const auto b = exhaustion_solve(disk, schedule(0.1), false);
  EXPECT_EQ(a.final_level().sol.u, b.final_level().sol.u);
}

TEST(BuildRnoid, ScalingFluxesScalesTheSurface) {
  const double lambda = 2.5;
  const auto a = build_rnoid(trinoid_fluxes(), schedule(0.1));
  const auto b = build_rnoid(trinoid_fluxes(lambda), schedule(0.1));
  ASSERT_EQ(a.sigma.X.size(), b.sigma.X.size());
  double worst = 0.0;
  for (std::size_t v = 0; v < a.sigma.X.size(); ++v) worst = std::max(worst, (lambda * a.sigma.X[v] - b.sigma.X[v]).norm());
  EXPECT_LE(worst, 5.0 * 0.1 * lambda);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR((lambda * a.fluxes[i] - b.fluxes[i]).norm(), 0.0, 1e-4 * lambda);
}

TEST(BuildRnoid, SkewQuadrilateral) {
  const auto poly = flux_polygon_from_vectors({Vec2(1, 0), Vec2(0.2, 1), Vec2(-1.4, 0.1), Vec2(0.2, -1.1)});
  const auto res = build_rnoid(poly, schedule(0.1));
  EXPECT_EQ(res.ends(), 4);
  EXPECT_EQ(res.sigma.euler_characteristic(), 2 - 4);
  EXPECT_EQ(res.sigma.boundary_loops(), 4);
}

TEST(StrongSymmetry, ResolvedTiltedPlane) {
  auto dom = share(make_square(1.0, 0.1));
  const auto sol = solve_dirichlet(dom, boundary_samples(*dom, [](const Vec2& p) { return 0.5 * p.x(); }));
  int root = 0;
  for (int v = 0; v < dom->num_vertices(); ++v) {
    if ((dom->point(v) - Vec2(-0.5, -0.5)).norm() < (dom->point(root) - Vec2(-0.5, -0.5)).norm()) root = v;
  }
  const auto field = conjugate_form(sol, root);
  const auto surf = conjugate_surface(sol, field, conformal_map(sol, root));
  auto sig = reflect_union(surf, {}, 1.0);
  const auto ok = strong_symmetry(sig, 0.01);
  EXPECT_GT(ok.checked, 0);
  EXPECT_EQ(ok.violations, 0);
  EXPECT_TRUE(ok.ok());
  // a copy with the halves swapped but the faces unchanged violates it
  for (auto& x : sig.X) x.z() = -x.z();
  const auto bad = strong_symmetry(sig, 0.01);
  EXPECT_EQ(bad.violations, bad.checked);
  EXPECT_FALSE(bad.ok());
}
