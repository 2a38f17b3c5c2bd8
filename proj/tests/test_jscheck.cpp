#include "msekit/flatgeom.hpp"
#include "msekit/jscheck.hpp"

#include <gtest/gtest.h>

#include "js_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace msekit;
using namespace msekit::oracle;

namespace {

constexpr double kPi = std::numbers::pi;

constexpr auto P = ArcKind::PlusInf;
constexpr auto M = ArcKind::MinusInf;
constexpr auto F = ArcKind::Finite;

}  // namespace

TEST(Enumerate, UnitSquareMatchesOracle) {
  const std::vector<Vec2> c = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto dom = make_convex_polygon(c, {}, 0.2);
  const auto subs = enumerate_polygonal_subdomains(dom);
  const auto oracle = oracle_enumerate({c, {F, F, F, F}, convex_inside(c)});
  EXPECT_EQ(subs.size(), oracle.size());
  // the square itself plus the four triangles cut off by the diagonals
  EXPECT_EQ(subs.size(), 5u);
  EXPECT_TRUE(subs.front().is_whole_domain);
}

TEST(Enumerate, TriangleHasOneSubdomain) {
  const auto dom = make_convex_polygon({{0, 0}, {1, 0}, {0.5, 0.9}}, {}, 0.1);
  EXPECT_EQ(enumerate_polygonal_subdomains(dom).size(), 1u);
}

TEST(Enumerate, HexagonCountsEverySubset) {
  std::vector<Vec2> c;
  for (int i = 0; i < 6; ++i) c.push_back({std::cos(kPi * i / 3), std::sin(kPi * i / 3)});
  const auto dom = make_convex_polygon(c, {}, 0.3);
  // convex position: one simple polygon per subset of size >= 3
  EXPECT_EQ(enumerate_polygonal_subdomains(dom).size(), 42u);
}

TEST(Enumerate, LShapeMatchesOracle) {
  const std::vector<Vec2> c = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  detail::CoarseMesh cm;
  for (const auto& p : c) cm.add_point(p);
  cm.add_tri(0, 1, 2, 0);
  cm.add_tri(0, 2, 3, 0);
  cm.add_tri(0, 3, 4, 0);
  cm.add_tri(0, 4, 5, 0);
  std::vector<BoundaryArc> arcs;
  for (int i = 0; i < 6; ++i) arcs.push_back({"s" + std::to_string(i), {i, (i + 1) % 6}, true});
  const auto dom = refine_uniform(MultiDomain::from_developed(cm.pts, cm.tris, arcs), 0.15);
  auto inside = [](const Vec2& p) {
    const double e = 1e-9;
    const bool box = p.x() >= -e && p.y() >= -e && p.x() <= 2 + e && p.y() <= 2 + e;
    return box && (p.x() <= 1 + e || p.y() <= 1 + e);
  };
  const auto oracle = oracle_enumerate({c, {F, F, F, F, F, F}, inside});
  const auto subs = enumerate_polygonal_subdomains(dom);
  std::set<std::vector<int>> got, want;
  auto canon = [&](std::vector<int> ids) {
    std::rotate(ids.begin(), std::min_element(ids.begin(), ids.end()), ids.end());
    return ids;
  };
  for (const auto& s : subs) {
    std::vector<int> ids;
    for (int v : s.vertices) ids.push_back(static_cast<int>(std::find(dom.corners().begin(), dom.corners().end(), v) - dom.corners().begin()));
    // corner ids of the domain are in boundary order starting anywhere; map back by position
    std::vector<int> pos;
    for (int id : ids) {
      const Vec2 p = dom.point(dom.corners()[id]);
      pos.push_back(static_cast<int>(std::find_if(c.begin(), c.end(), [&](const Vec2& q) { return (q - p).norm() < 1e-12; }) - c.begin()));
    }
    got.insert(canon(pos));
  }
  for (const auto& o : oracle) want.insert(canon(o.cycle));
  EXPECT_EQ(got, want);
  EXPECT_GT(want.size(), 5u);
}

TEST(Enumerate, TooManyVertices) {
  std::vector<Vec2> c;
  for (int i = 0; i < 17; ++i) c.push_back({std::cos(2 * kPi * i / 17), std::sin(2 * kPi * i / 17)});
  const auto dom = make_convex_polygon(c, {}, 1.0);
  try {
    enumerate_polygonal_subdomains(dom);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooManyVertices);
  }
}

TEST(Enumerate, OverlappingSectorSidesStayOnTheirSheet) {
  // the two rays of a 3 pi sector with radius 1 overlap in the plane; the
  // chord between the far ends of the rays is not inside the domain
  const auto s = make_sector(0.0, 3.0 * kPi, 1.0, 0.2);
  const auto& dom = s.domain;
  const auto subs = enumerate_polygonal_subdomains(dom);
  for (const auto& p : subs) {
    double area = 0.0;
    for (std::size_t k = 0; k < p.vertices.size(); ++k) {
      area += cross(dom.point(p.vertices[k]), dom.point(p.vertices[(k + 1) % p.vertices.size()]));
    }
    EXPECT_GT(area, 0.0);
  }
}

TEST(Verdict, EqualitySquareUnsolvableWithWholeDomainWitness) {
  // +inf on top and bottom, 0 on the sides: 2 alpha = 4 = gamma
  const auto dom = make_square(1.0, 0.1);
  const auto v = check_solvability(dom, data_of({P, F, P, F}));
  EXPECT_EQ(v.status, Solvability::Unsolvable);
  ASSERT_TRUE(v.witness);
  EXPECT_TRUE(v.witness->is_whole_domain);
  EXPECT_NEAR(v.witness->alpha, 2.0, 1e-12);
  EXPECT_NEAR(v.witness->gamma, 4.0, 1e-12);
}

TEST(Verdict, ScherkSquareSolvableUpToConstant) {
  // +inf on left/right, -inf on top/bottom; arcs: bottom, right, top, left
  const auto dom = make_square(kPi, 0.2);
  const auto v = check_solvability(dom, data_of({M, P, M, P}));
  EXPECT_EQ(v.status, Solvability::SolvableUpToConstant);
}

TEST(Verdict, RectangleWithInfiniteShortEdgesSolvable) {
  const auto dom = make_rectangle(0, 0, 2, 1, 0.1);
  const auto v = check_solvability(dom, data_of({F, P, F, P}));
  EXPECT_EQ(v.status, Solvability::Solvable);
}

TEST(Verdict, MatchesBruteForceOnRandomConvexDomains) {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> kind(0, 2), count(3, 6);
  int unsolvable = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = count(rng);
    std::vector<double> ang;
    for (int i = 0; i < n; ++i) ang.push_back(2 * kPi * (i + 0.8 * U(rng)) / n);
    std::vector<Vec2> c;
    for (double a : ang) c.push_back({std::cos(a), std::sin(a)});
    std::vector<ArcKind> kinds;
    for (int i = 0; i < n; ++i) kinds.push_back(std::array{P, M, F}[kind(rng)]);
    const auto dom = make_convex_polygon(c, {}, 0.5);
    const auto v = check_solvability(dom, data_of(kinds));
    EXPECT_EQ(v.status, oracle_verdict({c, kinds, convex_inside(c)})) << "trial " << trial;
    unsolvable += v.status == Solvability::Unsolvable;
  }
  EXPECT_GT(unsolvable, 0);
}

TEST(Verdict, ScalingLeavesVerdictAndScalesLengths) {
  for (double lambda : {0.01, 3.0, 250.0}) {
    const auto dom = make_square(lambda, lambda / 5);
    const auto v = check_solvability(dom, data_of({P, F, P, F}));
    EXPECT_EQ(v.status, Solvability::Unsolvable);
    EXPECT_NEAR(v.witness->gamma, 4.0 * lambda, 1e-12 * lambda);
    EXPECT_NEAR(v.witness->alpha, 2.0 * lambda, 1e-12 * lambda);
    EXPECT_EQ(check_solvability(make_rectangle(0, 0, 2 * lambda, lambda, lambda / 5), data_of({F, P, F, P})).status,
              Solvability::Solvable);
  }
}

TEST(Verdict, SwappingPlusAndMinusPreservesStatus) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> kind(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec2> c = {{0, 0}, {1.5, 0}, {1.8, 1}, {0.6, 1.6}, {-0.3, 0.8}};
    std::vector<ArcKind> k1, k2;
    for (int i = 0; i < 5; ++i) {
      const auto k = std::array{P, M, F}[kind(rng)];
      k1.push_back(k);
      k2.push_back(k == P ? M : k == M ? P : F);
    }
    const auto dom = make_convex_polygon(c, {}, 0.5);
    EXPECT_EQ(check_solvability(dom, data_of(k1)).status, check_solvability(dom, data_of(k2)).status);
  }
}

TEST(Verdict, WitnessReproducesViolationAsItsOwnDomain) {
  // pentagon with two long +inf sides; the witness is re-solved on its own
  std::vector<Vec2> c = {{0, 0}, {3, 0}, {3.2, 0.4}, {0.2, 0.9}, {-0.1, 0.4}};
  std::vector<ArcKind> kinds = {P, F, P, F, F};
  const auto dom = make_convex_polygon(c, {}, 0.3);
  const auto v = check_solvability(dom, data_of(kinds));
  ASSERT_EQ(v.status, Solvability::Unsolvable);
  // rebuild the witness polygon with the labels it inherits
  std::vector<Vec2> wc;
  std::vector<ArcKind> wk;
  const auto& w = *v.witness;
  for (std::size_t k = 0; k < w.vertices.size(); ++k) {
    wc.push_back(dom.point(w.vertices[k]));
    ArcKind kk = F;
    for (auto [arc, len] : w.sides[k].boundary_runs) {
      if (arc >= 0 && len > 0) kk = kinds[arc];
    }
    wk.push_back(kk);
  }
  const auto sub = make_convex_polygon(wc, {}, 0.3);
  const auto again = check_solvability(sub, data_of(wk));
  EXPECT_EQ(again.status, Solvability::Unsolvable);
  EXPECT_NEAR(again.witness->alpha, w.alpha, 1e-12);
}

TEST(Verdict, InfiniteDataOnCurvedArcRejected) {
  const auto s = make_sector(0.0, kPi / 2, 1.0, 0.2);
  BoundaryData b;
  b.arcs = {ArcCondition::constant(0), ArcCondition::plus(), ArcCondition::constant(0)};
  EXPECT_THROW(check_solvability(s.domain, b), Error);
}
