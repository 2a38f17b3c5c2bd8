#include "msekit/divscan.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace msekit;

namespace {

constexpr double kPi = std::numbers::pi;

int nearest_vertex(const MultiDomain& d, const Vec2& p) {
  int best = 0;
  for (int v = 1; v < d.num_vertices(); ++v) {
    if ((d.point(v) - p).norm() < (d.point(best) - p).norm()) best = v;
  }
  return best;
}

std::vector<DiscreteSolution> linear_sequence(DomainPtr dom, const std::vector<double>& slopes) {
  std::vector<DiscreteSolution> seq;
  for (double n : slopes) {
    seq.push_back(solve_dirichlet(dom, boundary_samples(*dom, [n](const Vec2& p) { return n * p.x(); })));
  }
  return seq;
}

MultiDomain disk(double h) {
  std::vector<Vec2> c;
  for (int i = 0; i < 16; ++i) c.emplace_back(std::cos(2 * kPi * i / 16), std::sin(2 * kPi * i / 16));
  return make_convex_polygon(c, {}, h);
}

// +infinity on two adjacent sides: the triangle under the diagonal has
// 2 alpha > gamma, and the diagonal becomes a line of divergence.
BoundaryData adjacent_square_data() {
  return {{ArcCondition::plus(), ArcCondition::plus(), ArcCondition::constant(0), ArcCondition::constant(0)}};
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

}  // namespace

TEST(NormalField, ClosedForms) {
  auto dom = share(make_square(2.0, 0.25));
  for (const auto& N : normal_field(linear_sequence(dom, {0.0})[0]).N) {
    EXPECT_NEAR((N - Vec3(0, 0, -1)).norm(), 0.0, 1e-12);
  }
  for (const auto& N : normal_field(linear_sequence(dom, {1.0})[0]).N) {
    EXPECT_NEAR((N - Vec3(1, 0, -1) / std::sqrt(2.0)).norm(), 0.0, 1e-10);
  }
  auto sq = share(make_square(kPi - 0.2, 0.05));
  const auto sol = solve_dirichlet(sq, boundary_samples(*sq, [](const Vec2& p) { return scherk_exact(p.x(), p.y()); }));
  const auto hit = Locator(*sq).locate(Vec2::Zero());
  ASSERT_TRUE(hit);
  EXPECT_NEAR(normal_field(sol).N[hit->tri].z(), -1.0, 0.05);
}

TEST(NormalField, UnitLengthAndDownward) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 N = graph_normal(Vec2(U(rng), U(rng)));
    EXPECT_NEAR(N.norm(), 1.0, 1e-12);
    EXPECT_LT(N.z(), 0.0);
    EXPECT_GE(N.z(), -1.0);
  }
}

TEST(BoundedRegion, NeedsThreeSolutions) {
  auto dom = share(make_square(1.0, 0.25));
  expect_code(ErrorCode::TooShortSequence, [&] { bounded_region(linear_sequence(dom, {1, 2})); });
}

TEST(BoundedRegion, ConstantSequenceIsBounded) {
  auto dom = share(make_square(1.0, 0.1));
  const auto r = bounded_region(linear_sequence(dom, {3, 3, 3, 3}));
  EXPECT_EQ(r.count(VertexClass::Bounded), dom->num_vertices());
}

TEST(BoundedRegion, SteepeningPlaneDiverges) {
  auto dom = share(make_square(1.0, 0.1));
  const auto r = bounded_region(linear_sequence(dom, {1, 2, 4, 8, 16, 32}));
  EXPECT_EQ(r.count(VertexClass::Divergent), dom->num_vertices());
}

TEST(DetectDivergence, SteepeningPlaneOnDisk) {
  auto dom = share(disk(0.1));
  const auto seq = linear_sequence(dom, {1, 2, 4, 8, 16, 32, 64});
  const auto rep = detect_divergence_lines(seq);
  ASSERT_EQ(rep.lines.size(), 1u);
  const auto& line = rep.lines[0];
  EXPECT_EQ(static_cast<int>(line.vertices.size()), dom->num_vertices());
  EXPECT_NEAR(line.limit_normal.x(), 1.0, 1e-3);
  EXPECT_NEAR(std::abs(line.direction.y()), 1.0, 1e-9);
  for (double s : line.saturation.back()) EXPECT_NEAR(s, 1.0, 1e-3);
}

TEST(DetectDivergence, UnsolvableSquareHasStraightLine) {
  auto dom = share(make_square(1.0, 0.05));
  const auto data = adjacent_square_data();
  ASSERT_EQ(check_solvability(*dom, data).status, Solvability::Unsolvable);
  const auto seq = solve_ramp_sequence(dom, data, {{2, 4, 8, 16, 32}});
  const auto rep = detect_divergence_lines(seq, data);
  const double h = dom->max_edge_length();
  ASSERT_GE(rep.lines.size(), 1u);
  EXPECT_EQ(rep.crossing_violations, 0);
  for (const auto& line : rep.lines) {
    EXPECT_LE(line.straightness, 2.0 * h);
    EXPECT_LE(std::abs(line.limit_normal.z()), 0.1);
    EXPECT_LE(line.angular_spread_deg.back(), 10.0);
    for (std::size_t n = 1; n < seq.size(); ++n) {
      EXPECT_LE(line.angular_spread_deg[n], line.angular_spread_deg[n - 1] + 1e-9);
      for (int k = 0; k < 3; ++k) {
        EXPECT_GE(line.saturation[n][k], line.saturation[n - 1][k] - 1e-9);
        EXPECT_LE(line.saturation[n][k], 1.0 + 10.0 * h);
      }
    }
    for (double s : line.saturation.back()) EXPECT_GE(s, 0.9);
    // the geodesic joining the free corners
    EXPECT_NEAR(std::abs(line.direction.dot(Vec2(1, 1).normalized())), 1.0, 1e-3);
  }
}

// With +infinity on two opposite sides the whole square is the equality
// witness; the graphs rise as a whole and no interior line forms.
TEST(DetectDivergence, OppositeSidesSquareRisesWithoutLine) {
  auto dom = share(make_square(1.0, 0.05));
  const BoundaryData data{
      {ArcCondition::plus(), ArcCondition::constant(0), ArcCondition::plus(), ArcCondition::constant(0)}};
  ASSERT_EQ(check_solvability(*dom, data).status, Solvability::Unsolvable);
  const auto seq = solve_ramp_sequence(dom, data, {{2, 4, 8, 16, 32}});
  expect_code(ErrorCode::NoDivergence, [&] { detect_divergence_lines(seq, data); });
}

TEST(DetectDivergence, ScherkSequenceHasNone) {
  auto dom = share(make_square(kPi, 0.05));
  const BoundaryData data{{ArcCondition::minus(), ArcCondition::plus(), ArcCondition::minus(), ArcCondition::plus()}};
  const auto seq = solve_infinite(dom, data, {{2, 4, 8, 16, 32}}, nearest_vertex(*dom, Vec2::Zero()));
  const auto scan = bounded_region(seq, data);
  EXPECT_EQ(scan.count(VertexClass::Divergent), 0);
  expect_code(ErrorCode::NoDivergence, [&] { detect_divergence_lines(seq, data); });
}

TEST(TwoMDisk, UniformSlopesReachTheBoundary) {
  auto dom = share(make_square(1.0, 0.1));
  const int P = nearest_vertex(*dom, Vec2(0.1, 0.0));
  for (const auto& seq : {linear_sequence(dom, {3, 3, 3}), linear_sequence(dom, {1, 1, 1})}) {
    const auto r = two_m_disk_check(seq, P);
    for (double rho : r.rho) EXPECT_DOUBLE_EQ(rho, r.boundary_distance);
    EXPECT_TRUE(r.resolvable);
  }
}

TEST(TwoMDisk, RadiusStabilisesNearTheLine) {
  auto dom = share(make_square(1.0, 0.05));
  const auto seq = solve_ramp_sequence(dom, adjacent_square_data(), {{2, 4, 8, 16, 32}});
  const double h = dom->max_edge_length();
  for (const Vec2 p : {Vec2(-0.2, 0.2), Vec2(-0.25, 0.0), Vec2(0.2, -0.2)}) {
    const int P = nearest_vertex(*dom, p);
    const double d = std::abs(dom->point(P).x() - dom->point(P).y()) / std::sqrt(2.0);
    const auto r = two_m_disk_check(seq, P);
    EXPECT_TRUE(r.resolvable);
    EXPECT_LE(r.rho.back(), d + h);
    EXPECT_NEAR(r.rho.back(), r.rho[r.rho.size() - 2], 1e-12);
    EXPECT_NEAR(r.rho.back(), r.rho[r.rho.size() - 3], 1e-12);
  }
}
