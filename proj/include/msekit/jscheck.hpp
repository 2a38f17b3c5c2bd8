#pragma once

// Jenkins-Serrin solvability: enumerate straight-edged polygons on the
// domain vertices and test 2*alpha < gamma, 2*beta < gamma on each.

#include "msekit/multidomain.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace msekit {

enum class ArcKind { PlusInf, MinusInf, Finite };

struct ArcCondition {
  ArcKind kind = ArcKind::Finite;
  std::function<double(const Vec2&)> value;  // Finite arcs only
  bool scales_with_ramp = false;              // value multiplied by the ramp level

  static ArcCondition plus() { return {ArcKind::PlusInf, {}}; }
  static ArcCondition minus() { return {ArcKind::MinusInf, {}}; }
  static ArcCondition finite(std::function<double(const Vec2&)> f) { return {ArcKind::Finite, std::move(f)}; }
  /// Finite data M * f at ramp level M (caps of truncated strips).
  static ArcCondition ramped(std::function<double(const Vec2&)> f) { return {ArcKind::Finite, std::move(f), true}; }
  static ArcCondition constant(double c) {
    return {ArcKind::Finite, [c](const Vec2&) { return c; }};
  }
};

/// One condition per boundary arc of a domain, in arc order.
struct BoundaryData {
  std::vector<ArcCondition> arcs;

  bool has_finite() const {
    for (const auto& a : arcs) {
      if (a.kind == ArcKind::Finite) return true;
    }
    return false;
  }
  bool has_infinite() const {
    for (const auto& a : arcs) {
      if (a.kind != ArcKind::Finite) return true;
    }
    return false;
  }

  /// Checks arc count and that infinite data sits on straight arcs only.
  void validate(const MultiDomain& dom) const {
    if (arcs.size() != dom.arcs().size()) {
      throw Error(ErrorCode::SchemaError, "boundary data has " + std::to_string(arcs.size()) +
                                              " arcs, domain has " + std::to_string(dom.arcs().size()));
    }
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      if (arcs[i].kind != ArcKind::Finite && !dom.arc(static_cast<int>(i)).straight) {
        throw Error(ErrorCode::SchemaError, "infinite data on curved arc '" + dom.arc(static_cast<int>(i)).label + "'");
      }
      if (arcs[i].kind == ArcKind::Finite && !arcs[i].value) {
        throw Error(ErrorCode::SchemaError, "finite arc without values");
      }
    }
  }
};

/// A straight segment traced through the triangulation.
struct TracedSegment {
  int from = -1, to = -1;
  double length = 0.0;
  /// pieces of the segment inside single triangles (developed endpoints)
  struct Piece {
    int tri;
    Vec2 p0, p1;
  };
  std::vector<Piece> pieces;
  std::vector<int> through_vertices;  // vertices strictly inside the segment
  /// length carried along boundary edges, per arc id
  std::vector<std::pair<int, double>> boundary_runs;
};

namespace detail {

inline bool in_wedge(const Vec2& e1, const Vec2& e2, const Vec2& d, double tol) {
  return cross(e1, d) >= -tol * e1.norm() * d.norm() && cross(d, e2) >= -tol * e2.norm() * d.norm();
}

}  // namespace detail

/// Follows the geodesic leaving vertex `a` towards the developed image of
/// vertex `b`. Succeeds iff the segment stays in the domain and lands on b
/// itself (not on another sheet over the same point).
inline std::optional<TracedSegment> trace_segment(const MultiDomain& dom, int a, int b) {
  const Vec2 start = dom.point(a);
  const Vec2 d = dom.point(b) - start;
  const double L = d.norm();
  if (L <= 0.0) return std::nullopt;
  const Vec2 dir = d / L;
  const double tol = 1e-9;
  const double len_tol = 1e-9 * std::max(L, 1.0);

  TracedSegment seg;
  seg.from = a;
  seg.to = b;
  seg.length = L;

  // state: either at a vertex (v >= 0) or inside triangle `tri` having
  // entered through edge (e0,e1) at parameter s
  int v = a;
  int tri = -1;
  int e0 = -1, e1 = -1;
  double s = 0.0;
  const std::size_t guard = 4 * static_cast<std::size_t>(dom.num_triangles()) + 16;
  for (std::size_t iter = 0; iter < guard; ++iter) {
    if (v >= 0) {
      if (v == b) return seg;
      if (s >= L - len_tol) return std::nullopt;  // arrived at another vertex
      if (v != a) seg.through_vertices.push_back(v);
      // along an edge?
      bool moved = false;
      for (int w : dom.vertex_neighbors(v)) {
        const Vec2 e = dom.point(w) - dom.point(v);
        const double el = e.norm();
        if (std::abs(cross(e, dir)) <= tol * el && e.dot(dir) > 0.0) {
          if (s + el > L + len_tol) return std::nullopt;
          const auto* info = dom.find_edge(v, w);
          const int t = info->left >= 0 ? info->left : info->right;
          seg.pieces.push_back({t, dom.point(v), dom.point(w)});
          if (info->left < 0 || info->right < 0) seg.boundary_runs.push_back({info->arc, el});
          s += el;
          v = w;
          moved = true;
          break;
        }
      }
      if (moved) continue;
      // strictly inside the wedge of one incident triangle
      int found = -1;
      for (int t : dom.vertex_triangles(v)) {
        const auto& f = dom.triangle(t);
        int k = 0;
        while (f[k] != v) ++k;
        const Vec2 p1 = dom.point(f[(k + 1) % 3]) - dom.point(v);
        const Vec2 p2 = dom.point(f[(k + 2) % 3]) - dom.point(v);
        if (detail::in_wedge(p1, p2, dir, 0.0)) {
          found = t;
          e0 = f[(k + 1) % 3];
          e1 = f[(k + 2) % 3];
          break;
        }
      }
      if (found < 0) return std::nullopt;  // leaves the domain here
      // advance to the opposite edge
      const Vec2 from = dom.point(v);
      const Vec2 q0 = dom.point(e0), q1 = dom.point(e1);
      const double denom = cross(dir, q1 - q0);
      const double t_exit = cross(q0 - from, q1 - q0) / denom;
      const double lam = cross(q0 - from, dir) / denom;
      if (s + t_exit >= L - len_tol) {
        // the target lies in this triangle: only a hit if it is vertex b
        const Vec2 end = start + dir * L;
        for (int w : {e0, e1}) {
          if (w == b && (dom.point(w) - end).norm() <= len_tol) {
            seg.pieces.push_back({found, from, end});
            return seg;
          }
        }
        return std::nullopt;
      }
      const Vec2 hit = from + dir * t_exit;
      seg.pieces.push_back({found, from, hit});
      s += t_exit;
      tri = found;
      if (lam <= tol) {
        v = e0;
        continue;
      }
      if (lam >= 1.0 - tol) {
        v = e1;
        continue;
      }
      v = -1;
      // cross into the neighbour
      const auto* info = dom.find_edge(e0, e1);
      const int next = (info->left == tri) ? info->right : info->left;
      if (next < 0) return std::nullopt;
      tri = next;
      continue;
    }
    // inside triangle `tri`, entered through (e0,e1) at arc length s
    const auto& f = dom.triangle(tri);
    const Vec2 from = start + dir * s;
    int opp = 0;
    while (f[opp] == e0 || f[opp] == e1) ++opp;
    const int c = f[opp];
    double best_t = 1e300, best_lam = 0.0;
    int x0 = -1, x1 = -1;
    for (auto [g0, g1] : {std::pair{e0, c}, std::pair{c, e1}}) {
      const Vec2 q0 = dom.point(g0), q1 = dom.point(g1);
      const double denom = cross(dir, q1 - q0);
      if (std::abs(denom) < 1e-300) continue;
      const double t_exit = cross(q0 - from, q1 - q0) / denom;
      const double lam = cross(q0 - from, dir) / denom;
      if (t_exit > len_tol && lam >= -tol && lam <= 1.0 + tol && t_exit < best_t) {
        best_t = t_exit;
        best_lam = lam;
        x0 = g0;
        x1 = g1;
      }
    }
    if (x0 < 0) return std::nullopt;
    if (s + best_t >= L - len_tol) {
      const Vec2 end = start + dir * L;
      if (c == b && (dom.point(c) - end).norm() <= len_tol) {
        seg.pieces.push_back({tri, from, end});
        return seg;
      }
      return std::nullopt;
    }
    const Vec2 hit = from + dir * best_t;
    seg.pieces.push_back({tri, from, hit});
    s += best_t;
    if (best_lam <= tol) {
      v = x0;
      continue;
    }
    if (best_lam >= 1.0 - tol) {
      v = x1;
      continue;
    }
    const auto* info = dom.find_edge(x0, x1);
    const int next = (info->left == tri) ? info->right : info->left;
    if (next < 0) return std::nullopt;
    tri = next;
    e0 = x0;
    e1 = x1;
  }
  return std::nullopt;
}

/// Closed straight-edged polygon through domain vertices.
struct PolygonalSubdomain {
  std::vector<int> vertices;  // counter-clockwise cycle
  std::vector<TracedSegment> sides;
  double alpha = 0.0;  // length on +infinity arcs
  double beta = 0.0;   // length on -infinity arcs
  double gamma = 0.0;  // perimeter
  bool is_whole_domain = false;

  /// Recomputes alpha and beta for a labelling.
  void measure(const BoundaryData& data) {
    alpha = beta = gamma = 0.0;
    for (const auto& s : sides) {
      gamma += s.length;
      for (auto [arc, len] : s.boundary_runs) {
        if (arc < 0) continue;
        if (data.arcs[arc].kind == ArcKind::PlusInf) alpha += len;
        if (data.arcs[arc].kind == ArcKind::MinusInf) beta += len;
      }
    }
  }
};

inline constexpr int kMaxDomainVertices = 16;

namespace detail {

inline bool sides_cross(const TracedSegment& s, const TracedSegment& t, bool adjacent) {
  if (adjacent) {
    // straight segments from a common vertex only meet there unless they
    // overlap, which shows up as a shared first piece direction
    const Vec2 ds = s.pieces.front().p1 - s.pieces.front().p0;
    for (const auto& tp : {t.pieces.front(), t.pieces.back()}) {
      const Vec2 dt = tp.p1 - tp.p0;
      if (std::abs(cross(ds, dt)) <= 1e-12 * ds.norm() * dt.norm() && s.pieces.front().tri == tp.tri) return true;
    }
    return false;
  }
  for (int v : s.through_vertices) {
    if (v == t.from || v == t.to) return true;
    for (int w : t.through_vertices) {
      if (v == w) return true;
    }
  }
  for (int v : t.through_vertices) {
    if (v == s.from || v == s.to) return true;
  }
  for (const auto& p : s.pieces) {
    for (const auto& q : t.pieces) {
      if (p.tri != q.tri) continue;
      if (segments_intersect(p.p0, p.p1, q.p0, q.p1, 1e-12)) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Every simple closed cycle of straight segments through domain vertices.
/// Simplicity is tested inside the domain (segment pieces sharing a
/// triangle), so overlapping sheets of an immersed domain do not interfere;
/// a simple cycle in a simply connected domain bounds a disk in it.
inline std::vector<PolygonalSubdomain> enumerate_polygonal_subdomains(const MultiDomain& dom) {
  const auto& corners = dom.corners();
  const int n = static_cast<int>(corners.size());
  if (n > kMaxDomainVertices) {
    throw Error(ErrorCode::TooManyVertices, std::to_string(n) + " domain vertices exceed the limit of " +
                                                std::to_string(kMaxDomainVertices));
  }
  // visibility with traced geodesics, rejecting segments through other corners
  std::vector<std::vector<std::optional<TracedSegment>>> vis(n, std::vector<std::optional<TracedSegment>>(n));
  std::vector<bool> is_corner(dom.num_vertices(), false);
  for (int c : corners) is_corner[c] = true;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      auto s = trace_segment(dom, corners[i], corners[j]);
      if (!s) continue;
      bool through_corner = false;
      for (int v : s->through_vertices) through_corner |= is_corner[v];
      if (!through_corner) vis[i][j] = std::move(s);
    }
  }

  std::vector<PolygonalSubdomain> out;
  std::vector<int> path;
  std::vector<bool> used(n, false);

  auto close_cycle = [&]() {
    // signed area of the developed cycle decides the orientation
    double area = 0.0;
    const int m = static_cast<int>(path.size());
    for (int k = 0; k < m; ++k) area += cross(dom.point(corners[path[k]]), dom.point(corners[path[(k + 1) % m]]));
    if (std::abs(area) <= 1e-12) return;
    std::vector<int> cyc = path;
    if (area < 0.0) std::reverse(cyc.begin() + 1, cyc.end());
    PolygonalSubdomain p;
    for (int k = 0; k < m; ++k) {
      p.vertices.push_back(corners[cyc[k]]);
      p.sides.push_back(*vis[cyc[k]][cyc[(k + 1) % m]]);
    }
    // the whole domain: every corner, in boundary order
    if (m == n) {
      bool same = true;
      for (int k = 0; k < m; ++k) same &= (cyc[k] == k);
      p.is_whole_domain = same;
    }
    out.push_back(std::move(p));
  };

  std::function<void()> dfs = [&]() {
    const int last = path.back();
    const int first = path.front();
    const int m = static_cast<int>(path.size());
    if (m >= 3 && path[1] < last && vis[last][first]) {
      const auto& closing = *vis[last][first];
      bool ok = true;
      for (int k = 0; k + 1 < m && ok; ++k) {
        const bool adjacent = (k == 0) || (k + 1 == m - 1);
        ok = !detail::sides_cross(closing, *vis[path[k]][path[k + 1]], adjacent);
      }
      if (ok) close_cycle();
    }
    for (int w = first + 1; w < n; ++w) {
      if (used[w] || !vis[last][w]) continue;
      const auto& side = *vis[last][w];
      bool ok = true;
      for (int k = 0; k + 1 < m && ok; ++k) {
        const bool adjacent = (k + 1 == m - 1);
        ok = !detail::sides_cross(side, *vis[path[k]][path[k + 1]], adjacent);
      }
      if (!ok) continue;
      used[w] = true;
      path.push_back(w);
      dfs();
      path.pop_back();
      used[w] = false;
    }
  };
  for (int s = 0; s < n; ++s) {
    path = {s};
    used.assign(n, false);
    used[s] = true;
    dfs();
  }
  // whole domain first, then by size, for stable witness selection
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.is_whole_domain != y.is_whole_domain) return x.is_whole_domain;
    return x.vertices.size() > y.vertices.size();
  });
  return out;
}

enum class Solvability { Solvable, SolvableUpToConstant, Unsolvable };

inline const char* to_string(Solvability s) {
  switch (s) {
    case Solvability::Solvable: return "Solvable";
    case Solvability::SolvableUpToConstant: return "SolvableUpToConstant";
    case Solvability::Unsolvable: return "Unsolvable";
  }
  return "?";
}

struct SolvabilityVerdict {
  Solvability status = Solvability::Solvable;
  std::optional<PolygonalSubdomain> witness;
  int subdomains_checked = 0;
};

/// Relative slack with which a borderline inequality counts as violated.
inline constexpr double kStrictInequalityTol = 1e-9;

inline SolvabilityVerdict check_solvability(const MultiDomain& dom, const BoundaryData& data,
                                            std::vector<PolygonalSubdomain> subdomains = {}) {
  data.validate(dom);
  if (subdomains.empty()) subdomains = enumerate_polygonal_subdomains(dom);
  const bool finite_present = data.has_finite();
  SolvabilityVerdict v;
  v.status = finite_present ? Solvability::Solvable : Solvability::SolvableUpToConstant;
  // only boundary polygons with an infinite side can matter, but every one is checked
  for (auto& p : subdomains) {
    p.measure(data);
    ++v.subdomains_checked;
    const double slack = kStrictInequalityTol * p.gamma;
    bool violated = false;
    if (!finite_present && p.is_whole_domain) {
      violated = std::abs(p.alpha - p.beta) > slack;
    } else {
      violated = 2.0 * p.alpha >= p.gamma - slack || 2.0 * p.beta >= p.gamma - slack;
    }
    if (violated) {
      v.status = Solvability::Unsolvable;
      v.witness = p;
      return v;
    }
  }
  return v;
}

}  // namespace msekit
