#pragma once

#include "msekit/errors.hpp"
#include "msekit/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

namespace msekit {

using Tri = std::array<int, 3>;

inline std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

/// A labelled piece of the boundary, listed as a vertex chain that follows
/// the boundary with the domain on its left.
struct BoundaryArc {
  std::string label;
  std::vector<int> chain;
  bool straight = true;
};

/// One triangle-to-triangle chart change: chart coordinates of `from` are
/// carried to chart coordinates of `to` by `map`.
struct ChartTransition {
  int from = -1;
  int to = -1;
  Isometry2 map;
};

/// Raw description of a multi-domain by local charts, as read from a problem
/// file. Missing transitions between adjacent triangles are inferred from
/// the shared edge.
struct ChartAtlas {
  int num_vertices = 0;
  std::vector<Tri> triangles;
  std::vector<std::array<Vec2, 3>> charts;
  std::vector<ChartTransition> transitions;
  std::vector<BoundaryArc> arcs;
  std::vector<int> corners;
  std::vector<int> regions;
};

/// Simply connected flat surface, triangulated, with its developing map.
///
/// Each vertex stores its developed image; triangles are positively oriented
/// in the developed plane. Overlapping images are allowed because adjacency
/// is purely combinatorial. Immutable after construction.
class MultiDomain {
 public:
  struct EdgeInfo {
    int a = -1, b = -1;
    int left = -1;   // triangle seeing (a,b) counter-clockwise
    int right = -1;  // triangle seeing (b,a) counter-clockwise
    int arc = -1;
  };

  MultiDomain() = default;

  /// Builds from developed coordinates and validates every invariant.
  static MultiDomain from_developed(std::vector<Vec2> points, std::vector<Tri> tris,
                                    std::vector<BoundaryArc> arcs, std::vector<int> corners = {},
                                    std::vector<int> regions = {}) {
    MultiDomain d;
    d.points_ = std::move(points);
    d.tris_ = std::move(tris);
    d.arcs_ = std::move(arcs);
    d.regions_ = regions.empty() ? std::vector<int>(d.tris_.size(), 0) : std::move(regions);
    d.chart_to_plane_.assign(d.tris_.size(), Isometry2::identity());
    d.finish(std::move(corners));
    return d;
  }

  int num_vertices() const { return static_cast<int>(points_.size()); }
  int num_triangles() const { return static_cast<int>(tris_.size()); }
  const std::vector<Vec2>& points() const { return points_; }
  const Vec2& point(int v) const { return points_[v]; }
  const std::vector<Tri>& triangles() const { return tris_; }
  const Tri& triangle(int t) const { return tris_[t]; }
  int region(int t) const { return regions_[t]; }
  const std::vector<int>& regions() const { return regions_; }
  const std::vector<BoundaryArc>& arcs() const { return arcs_; }
  const BoundaryArc& arc(int i) const { return arcs_[i]; }
  const std::vector<int>& corners() const { return corners_; }
  const Isometry2& chart_to_plane(int t) const { return chart_to_plane_[t]; }

  bool is_boundary(int v) const { return boundary_vertex_[v]; }
  /// Arc ids touching boundary vertex v (one, or two at arc endpoints).
  const std::vector<int>& vertex_arcs(int v) const { return vertex_arcs_[v]; }
  const std::vector<int>& vertex_triangles(int v) const { return vertex_tris_[v]; }
  const std::vector<int>& vertex_neighbors(int v) const { return vertex_nbrs_[v]; }
  const std::unordered_map<std::uint64_t, EdgeInfo>& edges() const { return edges_; }

  const EdgeInfo* find_edge(int a, int b) const {
    auto it = edges_.find(edge_key(a, b));
    return it == edges_.end() ? nullptr : &it->second;
  }

  double area(int t) const {
    const auto& f = tris_[t];
    return signed_area(points_[f[0]], points_[f[1]], points_[f[2]]);
  }

  double total_area() const {
    double s = 0.0;
    for (int t = 0; t < num_triangles(); ++t) s += area(t);
    return s;
  }

  Vec2 centroid(int t) const {
    const auto& f = tris_[t];
    return (points_[f[0]] + points_[f[1]] + points_[f[2]]) / 3.0;
  }

  int euler_characteristic() const {
    return num_vertices() - static_cast<int>(edges_.size()) + num_triangles();
  }

  /// Longest and shortest edge lengths over the whole triangulation.
  std::pair<double, double> edge_length_range() const {
    double lo = 1e300, hi = 0.0;
    for (const auto& [k, e] : edges_) {
      const double l = (points_[e.a] - points_[e.b]).norm();
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    return {lo, hi};
  }

  double max_edge_length() const { return edge_length_range().second; }

  /// Diagonal of the bounding box of the developed image.
  double diameter() const {
    Vec2 lo = points_.front(), hi = points_.front();
    for (const auto& p : points_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
  }

  /// The boundary as one closed vertex cycle, domain on the left.
  std::vector<int> boundary_loop() const { return boundary_loop_; }

  /// Composition of the chart transitions along a closed chain of adjacent
  /// triangles; the identity for a simply connected domain.
  Isometry2 holonomy(const std::vector<int>& loop) const {
    Isometry2 acc = Isometry2::identity();
    for (std::size_t i = 0; i + 1 < loop.size(); ++i) {
      acc = transition(loop[i], loop[i + 1]) * acc;
    }
    return acc;
  }

  /// Chart change carrying chart coordinates of t1 to those of t2.
  Isometry2 transition(int t1, int t2) const {
    return chart_to_plane_[t2].inverse() * chart_to_plane_[t1];
  }

 private:
  friend MultiDomain build_multidomain(const ChartAtlas& atlas);
  friend class Refiner;

  void finish(std::vector<int> corners) {
    build_adjacency();
    check_topology();
    check_arcs();
    build_corners(std::move(corners));
    check_convexity();
  }

  void build_adjacency() {
    const int nv = num_vertices();
    edges_.clear();
    vertex_tris_.assign(nv, {});
    vertex_nbrs_.assign(nv, {});
    for (int t = 0; t < num_triangles(); ++t) {
      const auto& f = tris_[t];
      for (int v : f) {
        if (v < 0 || v >= nv) throw Error(ErrorCode::SchemaError, "triangle references missing vertex");
      }
      if (area(t) <= 0.0) {
        throw Error(ErrorCode::InconsistentIsometry,
                    "triangle " + std::to_string(t) + " is not positively oriented in the developed plane");
      }
      for (int i = 0; i < 3; ++i) {
        const int a = f[i], b = f[(i + 1) % 3];
        auto& e = edges_[edge_key(a, b)];
        if (e.a < 0) {
          e.a = std::min(a, b);
          e.b = std::max(a, b);
        }
        const bool forward = (a == e.a);
        int& slot = forward ? e.left : e.right;
        if (slot >= 0) throw Error(ErrorCode::SchemaError, "triangulation is not an orientable manifold");
        slot = t;
        vertex_tris_[f[i]].push_back(t);
      }
    }
    for (const auto& [k, e] : edges_) {
      vertex_nbrs_[e.a].push_back(e.b);
      vertex_nbrs_[e.b].push_back(e.a);
    }
    for (auto& n : vertex_nbrs_) std::sort(n.begin(), n.end());
  }

  void check_topology() {
    boundary_vertex_.assign(num_vertices(), false);
    std::unordered_map<int, int> next;
    for (const auto& [k, e] : edges_) {
      if (e.left >= 0 && e.right >= 0) continue;
      // orient along the boundary with the interior on the left
      const int from = e.left >= 0 ? e.a : e.b;
      const int to = e.left >= 0 ? e.b : e.a;
      if (next.count(from)) throw Error(ErrorCode::NotSimplyConnected, "boundary is not a simple loop");
      next[from] = to;
      boundary_vertex_[from] = boundary_vertex_[to] = true;
    }
    if (euler_characteristic() != 1) {
      throw Error(ErrorCode::NotSimplyConnected,
                  "Euler characteristic " + std::to_string(euler_characteristic()) + " != 1");
    }
    if (next.empty()) throw Error(ErrorCode::NotSimplyConnected, "triangulation has no boundary");
    boundary_loop_.clear();
    const int start = std::min_element(next.begin(), next.end())->first;
    int v = start;
    do {
      boundary_loop_.push_back(v);
      v = next.at(v);
    } while (v != start && boundary_loop_.size() <= next.size());
    if (boundary_loop_.size() != next.size()) {
      throw Error(ErrorCode::NotSimplyConnected, "boundary has more than one component");
    }
  }

  void check_arcs() {
    vertex_arcs_.assign(num_vertices(), {});
    std::size_t covered = 0;
    for (int i = 0; i < static_cast<int>(arcs_.size()); ++i) {
      const auto& c = arcs_[i].chain;
      if (c.size() < 2) throw Error(ErrorCode::SchemaError, "boundary arc needs at least two vertices");
      for (std::size_t j = 0; j + 1 < c.size(); ++j) {
        auto it = edges_.find(edge_key(c[j], c[j + 1]));
        if (it == edges_.end() || (it->second.left >= 0 && it->second.right >= 0)) {
          throw Error(ErrorCode::SchemaError, "arc '" + arcs_[i].label + "' leaves the boundary");
        }
        const auto& e = it->second;
        const bool ccw = (e.left >= 0) ? (c[j] == e.a) : (c[j] == e.b);
        if (!ccw) throw Error(ErrorCode::SchemaError, "arc '" + arcs_[i].label + "' runs clockwise");
        if (e.arc >= 0) throw Error(ErrorCode::SchemaError, "boundary edge claimed by two arcs");
        it->second.arc = i;
        ++covered;
      }
      for (int v : c) {
        auto& va = vertex_arcs_[v];
        if (std::find(va.begin(), va.end(), i) == va.end()) va.push_back(i);
      }
    }
    if (covered != boundary_loop_.size()) {
      throw Error(ErrorCode::SchemaError, "boundary arcs do not cover the boundary");
    }
  }

  void build_corners(std::vector<int> corners) {
    for (const auto& a : arcs_) {
      corners.push_back(a.chain.front());
      corners.push_back(a.chain.back());
    }
    std::sort(corners.begin(), corners.end());
    corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
    // keep boundary order so polygon enumeration can walk it
    std::vector<int> ordered;
    for (int v : boundary_loop_) {
      if (std::binary_search(corners.begin(), corners.end(), v)) ordered.push_back(v);
    }
    corners_ = std::move(ordered);
  }

  void check_convexity() const {
    for (const auto& a : arcs_) {
      const auto& c = a.chain;
      for (std::size_t j = 1; j + 1 < c.size(); ++j) {
        const Vec2 e0 = points_[c[j]] - points_[c[j - 1]];
        const Vec2 e1 = points_[c[j + 1]] - points_[c[j]];
        const double turn = cross(e0, e1);
        const double tol = 1e-10 * e0.norm() * e1.norm();
        // interior on the left: a convex arc only turns left
        if (turn < -tol) {
          throw Error(ErrorCode::NonConvexArc, "arc '" + a.label + "' turns away from the interior at edges (" +
                                                   std::to_string(c[j - 1]) + "," + std::to_string(c[j]) +
                                                   ") and (" + std::to_string(c[j]) + "," +
                                                   std::to_string(c[j + 1]) + ")");
        }
        if (a.straight && std::abs(turn) > tol) {
          throw Error(ErrorCode::NonConvexArc, "arc '" + a.label + "' is declared straight but bends");
        }
      }
    }
  }

  std::vector<Vec2> points_;
  std::vector<Tri> tris_;
  std::vector<int> regions_;
  std::vector<BoundaryArc> arcs_;
  std::vector<int> corners_;
  std::vector<Isometry2> chart_to_plane_;

  std::unordered_map<std::uint64_t, EdgeInfo> edges_;
  std::vector<std::vector<int>> vertex_tris_;
  std::vector<std::vector<int>> vertex_nbrs_;
  std::vector<std::vector<int>> vertex_arcs_;
  std::vector<bool> boundary_vertex_;
  std::vector<int> boundary_loop_;
};

/// Develops a chart atlas by propagating transitions along a breadth-first
/// spanning tree of the dual graph, then checks every non-tree adjacency.
inline MultiDomain build_multidomain(const ChartAtlas& atlas) {
  const int nt = static_cast<int>(atlas.triangles.size());
  if (static_cast<int>(atlas.charts.size()) != nt) {
    throw Error(ErrorCode::SchemaError, "one chart per triangle is required");
  }
  for (int t = 0; t < nt; ++t) {
    const auto& c = atlas.charts[t];
    if (signed_area(c[0], c[1], c[2]) <= 0.0) {
      throw Error(ErrorCode::InconsistentIsometry, "chart of triangle " + std::to_string(t) + " is degenerate");
    }
  }

  // adjacency through shared edges
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> by_edge;  // (tri, local index)
  for (int t = 0; t < nt; ++t) {
    for (int i = 0; i < 3; ++i) {
      by_edge[edge_key(atlas.triangles[t][i], atlas.triangles[t][(i + 1) % 3])].push_back({t, i});
    }
  }
  std::map<std::pair<int, int>, Isometry2> given;
  for (const auto& tr : atlas.transitions) {
    given[{tr.from, tr.to}] = tr.map;
    given[{tr.to, tr.from}] = tr.map.inverse();
  }

  auto local_pos = [&](int t, int vertex) -> Vec2 {
    for (int i = 0; i < 3; ++i) {
      if (atlas.triangles[t][i] == vertex) return atlas.charts[t][i];
    }
    return Vec2::Zero();
  };

  // transition carrying chart(t1) to chart(t2) across shared edge (a,b)
  auto transition = [&](int t1, int t2, int a, int b) -> Isometry2 {
    const Vec2 a1 = local_pos(t1, a), b1 = local_pos(t1, b);
    const Vec2 a2 = local_pos(t2, a), b2 = local_pos(t2, b);
    if (std::abs((b1 - a1).norm() - (b2 - a2).norm()) > 1e-12 * std::max(1.0, (b1 - a1).norm())) {
      throw Error(ErrorCode::InconsistentIsometry, "shared edge (" + std::to_string(a) + "," +
                                                       std::to_string(b) + ") has different lengths in adjacent charts");
    }
    auto it = given.find({t1, t2});
    const Isometry2 g = it != given.end() ? it->second : Isometry2::from_segments(a1, b1, a2, b2);
    if ((g(a1) - a2).norm() > 1e-10 || (g(b1) - b2).norm() > 1e-10) {
      throw Error(ErrorCode::InconsistentIsometry, "transition between triangles " + std::to_string(t1) +
                                                       " and " + std::to_string(t2) + " does not match the shared edge");
    }
    return g;
  };

  std::vector<Isometry2> to_plane(nt);
  std::vector<bool> seen(nt, false);
  std::vector<Vec2> developed(atlas.num_vertices, Vec2::Zero());
  std::vector<bool> placed(atlas.num_vertices, false);
  for (int root = 0; root < nt; ++root) {
    if (seen[root]) continue;
    if (root > 0) throw Error(ErrorCode::NotSimplyConnected, "triangulation is disconnected");
    seen[root] = true;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
      const int t = q.front();
      q.pop();
      const auto& f = atlas.triangles[t];
      for (int i = 0; i < 3; ++i) {
        const int a = f[i], b = f[(i + 1) % 3];
        for (auto [s, j] : by_edge[edge_key(a, b)]) {
          if (s == t || seen[s]) continue;
          seen[s] = true;
          // plane = to_plane[t] o chart(t); chart(s) = g chart(t)
          to_plane[s] = to_plane[t] * transition(t, s, a, b).inverse();
          q.push(s);
        }
      }
    }
  }

  // every vertex must develop to one point, whichever triangle carries it
  for (int t = 0; t < nt; ++t) {
    for (int i = 0; i < 3; ++i) {
      const int v = atlas.triangles[t][i];
      const Vec2 p = to_plane[t](atlas.charts[t][i]);
      if (!placed[v]) {
        developed[v] = p;
        placed[v] = true;
      } else if ((developed[v] - p).norm() > 1e-10 * std::max(1.0, p.norm())) {
        throw Error(ErrorCode::InconsistentIsometry,
                    "vertex " + std::to_string(v) + " develops to two different points");
      }
    }
  }
  // explicit transitions must also agree with the development on non-tree edges
  for (const auto& [key, users] : by_edge) {
    if (users.size() == 2) {
      const int t1 = users[0].first, t2 = users[1].first;
      const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
      const Isometry2 g = transition(t1, t2, a, b);
      const Isometry2 h = to_plane[t2].inverse() * to_plane[t1];
      if ((g.rot - h.rot).cwiseAbs().maxCoeff() > 1e-10 || (g.shift - h.shift).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error(ErrorCode::InconsistentIsometry, "transition around edge (" + std::to_string(a) + "," +
                                                         std::to_string(b) + ") has nontrivial holonomy");
      }
    }
  }

  MultiDomain d;
  d.points_ = std::move(developed);
  d.tris_ = atlas.triangles;
  d.arcs_ = atlas.arcs;
  d.regions_ = atlas.regions.empty() ? std::vector<int>(nt, 0) : atlas.regions;
  d.chart_to_plane_ = std::move(to_plane);
  // triangle isometry residual: developed edges match chart edges
  for (int t = 0; t < nt; ++t) {
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3;
      const double lc = (atlas.charts[t][j] - atlas.charts[t][i]).norm();
      const double ld = (d.points_[atlas.triangles[t][j]] - d.points_[atlas.triangles[t][i]]).norm();
      if (std::abs(lc - ld) > 1e-12 * std::max(1.0, lc)) {
        throw Error(ErrorCode::InconsistentIsometry, "developed triangle is not congruent to its chart");
      }
    }
  }
  d.finish(atlas.corners);
  return d;
}

/// Newest-vertex bisection refinement. Every coarse triangle starts with its
/// longest edge marked; children inherit marks, so refinement is conforming
/// and the mesh stays in finitely many similarity classes.
class Refiner {
 public:
  using SizeFn = std::function<double(const Vec2& centroid, int region)>;

  explicit Refiner(const MultiDomain& coarse) : coarse_(coarse) {
    pts_ = coarse.points();
    // lengths on a grid relative to the mesh scale, so that ties break the
    // same way for similar meshes
    double scale = 0.0;
    for (const auto& [key, e] : coarse.edges()) scale = std::max(scale, (pts_[e.a] - pts_[e.b]).norm());
    const double quantum = 1e-9 * scale;
    for (int t = 0; t < coarse.num_triangles(); ++t) {
      Tri f = coarse.triangle(t);
      // rotate so that the largest edge in the order (length, key) is
      // (v1,v2); a strict total order keeps the marking free of cycles
      int best = 0;
      std::pair<long long, std::uint64_t> best_edge{-1, 0};
      for (int i = 0; i < 3; ++i) {
        const int a = f[(i + 1) % 3], b = f[(i + 2) % 3];
        const std::pair<long long, std::uint64_t> e{std::llround((pts_[a] - pts_[b]).norm() / quantum), edge_key(a, b)};
        if (e > best_edge) {
          best_edge = e;
          best = i;
        }
      }
      f = {f[best], f[(best + 1) % 3], f[(best + 2) % 3]};
      add(f, coarse.region(t));
    }
  }

  MultiDomain run(const SizeFn& size) {
    bool changed = true;
    while (changed) {
      changed = false;
      const int n = static_cast<int>(tris_.size());
      for (int t = 0; t < n; ++t) {
        if (!alive_[t]) continue;
        if (longest(t) > size(centroid(t), region_[t])) {
          bisect_conforming(t);
          changed = true;
        }
      }
    }
    return assemble();
  }

 private:
  double longest(int t) const {
    const auto& f = tris_[t];
    return std::max({(pts_[f[0]] - pts_[f[1]]).norm(), (pts_[f[1]] - pts_[f[2]]).norm(),
                     (pts_[f[2]] - pts_[f[0]]).norm()});
  }
  Vec2 centroid(int t) const {
    const auto& f = tris_[t];
    return (pts_[f[0]] + pts_[f[1]] + pts_[f[2]]) / 3.0;
  }

  int add(const Tri& f, int region) {
    const int id = static_cast<int>(tris_.size());
    tris_.push_back(f);
    region_.push_back(region);
    alive_.push_back(true);
    for (int i = 0; i < 3; ++i) users_[edge_key(f[i], f[(i + 1) % 3])].push_back(id);
    return id;
  }

  void kill(int t) {
    alive_[t] = false;
    const auto& f = tris_[t];
    for (int i = 0; i < 3; ++i) {
      auto& u = users_[edge_key(f[i], f[(i + 1) % 3])];
      u.erase(std::remove(u.begin(), u.end(), t), u.end());
    }
  }

  int neighbour_across_mark(int t) const {
    const auto& f = tris_[t];
    const auto it = users_.find(edge_key(f[1], f[2]));
    for (int s : it->second) {
      if (s != t) return s;
    }
    return -1;
  }

  bool marked_edge_is(int t, std::uint64_t key) const {
    const auto& f = tris_[t];
    return edge_key(f[1], f[2]) == key;
  }

  int midpoint(int a, int b) {
    const auto key = edge_key(a, b);
    auto it = mid_.find(key);
    if (it != mid_.end()) return it->second;
    const int m = static_cast<int>(pts_.size());
    pts_.push_back(0.5 * (pts_[a] + pts_[b]));
    mid_[key] = m;
    return m;
  }

  void split(int t, int m) {
    const Tri f = tris_[t];
    const int reg = region_[t];
    kill(t);
    add({m, f[0], f[1]}, reg);
    add({m, f[2], f[0]}, reg);
  }

  void bisect_conforming(int t) {
    const auto key = edge_key(tris_[t][1], tris_[t][2]);
    for (;;) {
      const int nb = neighbour_across_mark(t);
      if (nb < 0 || marked_edge_is(nb, key)) break;
      bisect_conforming(nb);
    }
    const int nb = neighbour_across_mark(t);
    const int m = midpoint(tris_[t][1], tris_[t][2]);
    split(t, m);
    if (nb >= 0) split(nb, m);
  }

  std::vector<int> expand(int a, int b) const {
    auto it = mid_.find(edge_key(a, b));
    if (it == mid_.end()) return {a, b};
    auto left = expand(a, it->second);
    auto right = expand(it->second, b);
    left.insert(left.end(), right.begin() + 1, right.end());
    return left;
  }

  MultiDomain assemble() const {
    std::vector<Tri> tris;
    std::vector<int> regions;
    // keep coarse ordering of regions stable; output order = creation order
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!alive_[t]) continue;
      const auto& f = tris_[t];
      // restore a canonical CCW vertex order starting at the smallest index
      int s = 0;
      for (int i = 1; i < 3; ++i) {
        if (f[i] < f[s]) s = i;
      }
      tris.push_back({f[s], f[(s + 1) % 3], f[(s + 2) % 3]});
      regions.push_back(region_[t]);
    }
    std::vector<BoundaryArc> arcs = coarse_.arcs();
    for (auto& a : arcs) {
      std::vector<int> chain{a.chain.front()};
      for (std::size_t j = 0; j + 1 < a.chain.size(); ++j) {
        auto piece = expand(a.chain[j], a.chain[j + 1]);
        chain.insert(chain.end(), piece.begin() + 1, piece.end());
      }
      a.chain = std::move(chain);
    }
    return MultiDomain::from_developed(pts_, std::move(tris), std::move(arcs), coarse_.corners(),
                                       std::move(regions));
  }

  const MultiDomain& coarse_;
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> region_;
  std::vector<bool> alive_;
  std::unordered_map<std::uint64_t, std::vector<int>> users_;
  std::unordered_map<std::uint64_t, int> mid_;
};

/// Refines until every triangle's longest edge is at most size(centroid).
inline MultiDomain refine(const MultiDomain& coarse, const Refiner::SizeFn& size) {
  Refiner r(coarse);
  return r.run(size);
}

inline MultiDomain refine_uniform(const MultiDomain& coarse, double h) {
  return refine(coarse, [h](const Vec2&, int) { return h; });
}

/// Point location in the developed plane over a bucket grid. Overlapping
/// sheets return several hits; callers filter by region.
class Locator {
 public:
  struct Hit {
    int tri = -1;
    std::array<double, 3> bary{};
  };

  explicit Locator(const MultiDomain& dom) : dom_(&dom) {
    lo_ = hi_ = dom.point(0);
    for (const auto& p : dom.points()) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    const double span = std::max((hi_ - lo_).maxCoeff(), 1e-12);
    const int n = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(dom.num_triangles()))));
    cell_ = span / n;
    nx_ = static_cast<int>((hi_.x() - lo_.x()) / cell_) + 1;
    ny_ = static_cast<int>((hi_.y() - lo_.y()) / cell_) + 1;
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (int t = 0; t < dom.num_triangles(); ++t) {
      const auto& f = dom.triangle(t);
      Vec2 a = dom.point(f[0]), b = a;
      for (int v : f) {
        a = a.cwiseMin(dom.point(v));
        b = b.cwiseMax(dom.point(v));
      }
      const auto [i0, j0] = cell(a);
      const auto [i1, j1] = cell(b);
      for (int i = i0; i <= i1; ++i) {
        for (int j = j0; j <= j1; ++j) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
      }
    }
  }

  std::vector<Hit> locate_all(const Vec2& p, double tol = 1e-12) const {
    std::vector<Hit> out;
    if (p.x() < lo_.x() - cell_ || p.y() < lo_.y() - cell_ || p.x() > hi_.x() + cell_ ||
        p.y() > hi_.y() + cell_) {
      return out;
    }
    const auto [i, j] = cell(p);
    for (int t : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
      const auto& f = dom_->triangle(t);
      const auto bc = barycentric(dom_->point(f[0]), dom_->point(f[1]), dom_->point(f[2]), p);
      if (bc[0] >= -tol && bc[1] >= -tol && bc[2] >= -tol) out.push_back({t, bc});
    }
    return out;
  }

  std::optional<Hit> locate(const Vec2& p, const std::function<bool(int)>& accept = {}) const {
    for (const auto& h : locate_all(p, 1e-10)) {
      if (!accept || accept(h.tri)) return h;
    }
    return std::nullopt;
  }

 private:
  std::pair<int, int> cell(const Vec2& p) const {
    const int i = std::clamp(static_cast<int>((p.x() - lo_.x()) / cell_), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>((p.y() - lo_.y()) / cell_), 0, ny_ - 1);
    return {i, j};
  }

  const MultiDomain* dom_;
  Vec2 lo_, hi_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace msekit
