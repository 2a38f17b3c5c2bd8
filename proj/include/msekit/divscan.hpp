#pragma once

// Bounded-gradient regions and lines of divergence of a sequence of
// solutions on one mesh.

#include "msekit/conjfield.hpp"

#include <algorithm>
#include <array>
#include <map>

namespace msekit {

/// Per-triangle unit normal N = (p/W, q/W, -1/W).
struct NormalField {
  std::vector<Vec3> N;
};

inline Vec3 graph_normal(const Vec2& g) {
  const double W = std::sqrt(1.0 + g.squaredNorm());
  return Vec3(g.x() / W, g.y() / W, -1.0 / W);
}

inline NormalField normal_field(const DiscreteSolution& sol) {
  NormalField f;
  f.N.reserve(sol.grad.size());
  for (const auto& g : sol.grad) f.N.push_back(graph_normal(g));
  return f;
}

enum class VertexClass { Bounded, Divergent, Excluded };

inline const char* to_string(VertexClass c) {
  switch (c) {
    case VertexClass::Bounded: return "Bounded";
    case VertexClass::Divergent: return "Divergent";
    case VertexClass::Excluded: return "Excluded";
  }
  return "?";
}

/// A vertex is Divergent when its W exceeds this many times the median
/// W of the first solution, at the two last indices.
inline constexpr double kDivergenceFactor = 10.0;
inline constexpr int kMinComponentSize = 5;
/// Growth between consecutive indices must exceed this factor; W that
/// converges from below next to infinite data does not count as growing.
inline constexpr double kGrowthFactor = 1.1;

struct RegionScan {
  std::vector<VertexClass> cls;
  std::vector<std::vector<double>> vertex_W;  // [level][vertex], max over counted triangles
  std::vector<bool> counted;                  // triangles used (not touching ramped data)
  double threshold = 0.0;

  int count(VertexClass c) const { return static_cast<int>(std::count(cls.begin(), cls.end(), c)); }
};

namespace detail {

/// Vertices carrying data that grows with the ramp (infinite arcs and
/// ramp-scaled caps) plus their neighbours. The unresolved wall layer is
/// two triangles deep, so triangles touching these are ignored.
inline std::vector<bool> ramped_vertices(const MultiDomain& dom, const BoundaryData& data) {
  std::vector<bool> on(dom.num_vertices(), false);
  if (data.arcs.empty()) return on;
  for (int a = 0; a < static_cast<int>(dom.arcs().size()); ++a) {
    const auto& c = data.arcs[a];
    if (c.kind == ArcKind::Finite && !c.scales_with_ramp) continue;
    for (int v : dom.arc(a).chain) on[v] = true;
  }
  auto out = on;
  for (int v = 0; v < dom.num_vertices(); ++v) {
    if (!on[v]) continue;
    for (int w : dom.vertex_neighbors(v)) out[w] = true;
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

inline void check_sequence(const std::vector<DiscreteSolution>& seq) {
  if (seq.size() < 3) {
    throw Error(ErrorCode::TooShortSequence, "need at least 3 solutions, got " + std::to_string(seq.size()));
  }
  for (const auto& s : seq) {
    if (s.domain != seq.front().domain) throw Error(ErrorCode::SchemaError, "solutions live on different meshes");
  }
}

}  // namespace detail

/// Classifies each vertex as Bounded or Divergent along the sequence.
/// Vertices whose triangles all touch ramped boundary data are Excluded.
inline RegionScan bounded_region(const std::vector<DiscreteSolution>& seq, const BoundaryData& data = {}) {
  detail::check_sequence(seq);
  const auto& dom = seq.front().dom();
  const auto ramped = detail::ramped_vertices(dom, data);
  RegionScan r;
  r.counted.assign(dom.num_triangles(), true);
  for (int t = 0; t < dom.num_triangles(); ++t) {
    for (int v : dom.triangle(t)) {
      if (ramped[v]) r.counted[t] = false;
    }
  }
  std::vector<double> first;
  for (int t = 0; t < dom.num_triangles(); ++t) {
    if (r.counted[t]) first.push_back(seq.front().W[t]);
  }
  r.threshold = kDivergenceFactor * detail::median(first);
  r.vertex_W.assign(seq.size(), std::vector<double>(dom.num_vertices(), 0.0));
  for (std::size_t n = 0; n < seq.size(); ++n) {
    for (int v = 0; v < dom.num_vertices(); ++v) {
      for (int t : dom.vertex_triangles(v)) {
        if (r.counted[t]) r.vertex_W[n][v] = std::max(r.vertex_W[n][v], seq[n].W[t]);
      }
    }
  }
  const std::size_t L = seq.size();
  r.cls.assign(dom.num_vertices(), VertexClass::Bounded);
  for (int v = 0; v < dom.num_vertices(); ++v) {
    const bool any = std::any_of(dom.vertex_triangles(v).begin(), dom.vertex_triangles(v).end(),
                                 [&](int t) { return r.counted[t]; });
    if (!any) {
      r.cls[v] = VertexClass::Excluded;
      continue;
    }
    const auto& W = r.vertex_W;
    const bool high = W[L - 1][v] > r.threshold && W[L - 2][v] > r.threshold;
    const bool growing = kGrowthFactor * W[L - 3][v] < W[L - 2][v] && kGrowthFactor * W[L - 2][v] < W[L - 1][v];
    if (high && growing) r.cls[v] = VertexClass::Divergent;
  }
  return r;
}

struct DivergenceLine {
  std::vector<int> vertices;
  Vec2 base = Vec2::Zero();       // centroid of the component
  Vec2 direction = Vec2::UnitX();
  double s_min = 0.0, s_max = 0.0;  // extent along the direction from base
  double straightness = 0.0;        // max orthogonal deviation of the component
  Vec3 limit_normal = Vec3::Zero();           // at the last index
  std::vector<double> angular_spread_deg;     // per index
  std::vector<std::array<double, 3>> saturation;  // per index, three sub-segments

  double length() const { return s_max - s_min; }
  Vec2 at(double s) const { return base + s * direction; }
};

struct DivergenceReport {
  RegionScan scan;
  std::vector<double> sup_W;  // per vertex over the last three indices
  std::vector<DivergenceLine> lines;
  int crossing_violations = 0;  // interior crossings with distinct limit normals
};

namespace detail {

/// Integral of dPsi along [a, b], sampled at midpoints of steps of at most
/// `step`; at points on shared edges the adjacent forms are averaged.
inline double sampled_flux(const DiscreteSolution& sol, const Locator& loc, const Vec2& a, const Vec2& b,
                           double step) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  const Vec2 d = (b - a) / n;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto hits = loc.locate_all(a + (k + 0.5) * d, 1e-10);
    if (hits.empty()) continue;
    Vec2 f = Vec2::Zero();
    for (const auto& h : hits) f += Vec2(-sol.grad[h.tri].y(), sol.grad[h.tri].x()) / sol.W[h.tri];
    s += (f / static_cast<double>(hits.size())).dot(d);
  }
  return s;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - a - t * d).norm();
}

inline double angle_deg(const Vec2& a, const Vec2& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

}  // namespace detail

/// Fits lines to the connected components of the Divergent set and
/// measures limit normals and flux saturation along them.
inline DivergenceReport detect_divergence_lines(const std::vector<DiscreteSolution>& seq,
                                                const BoundaryData& data = {}) {
  DivergenceReport rep;
  rep.scan = bounded_region(seq, data);
  const auto& dom = seq.front().dom();
  const auto& scan = rep.scan;
  const std::size_t L = seq.size();
  rep.sup_W.assign(dom.num_vertices(), 0.0);
  for (int v = 0; v < dom.num_vertices(); ++v) {
    for (std::size_t n = L - 3; n < L; ++n) rep.sup_W[v] = std::max(rep.sup_W[v], scan.vertex_W[n][v]);
  }

  std::vector<int> comp(dom.num_vertices(), -1);
  std::vector<std::vector<int>> comps;
  for (int v = 0; v < dom.num_vertices(); ++v) {
    if (scan.cls[v] != VertexClass::Divergent || comp[v] >= 0) continue;
    comps.emplace_back();
    std::vector<int> stack{v};
    comp[v] = static_cast<int>(comps.size()) - 1;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      comps.back().push_back(x);
      for (int y : dom.vertex_neighbors(x)) {
        if (scan.cls[y] == VertexClass::Divergent && comp[y] < 0) {
          comp[y] = comp[v];
          stack.push_back(y);
        }
      }
    }
  }

  const double h = dom.max_edge_length();
  const Locator loc(dom);
  for (auto& c : comps) {
    if (static_cast<int>(c.size()) < kMinComponentSize) continue;
    std::sort(c.begin(), c.end());
    DivergenceLine line;
    line.vertices = c;
    for (int v : c) line.base += dom.point(v);
    line.base /= static_cast<double>(c.size());
    Mat2 cov = Mat2::Zero();
    for (int v : c) {
      const Vec2 d = dom.point(v) - line.base;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat2> es(cov);
    line.direction = es.eigenvectors().col(1).normalized();
    if (es.eigenvalues()[1] < 4.0 * es.eigenvalues()[0]) {
      // no preferred axis: follow the level set of the steepest slope
      Vec2 g = Vec2::Zero();
      for (int v : c) {
        for (int t : dom.vertex_triangles(v)) {
          if (scan.counted[t]) g += seq.back().grad[t] / seq.back().W[t];
        }
      }
      if (g.norm() > 0) line.direction = Vec2(-g.y(), g.x()).normalized();
    }
    // deterministic orientation
    if (line.direction.x() < -1e-12 || (std::abs(line.direction.x()) <= 1e-12 && line.direction.y() < 0)) {
      line.direction = -line.direction;
    }
    const Vec2 normal(-line.direction.y(), line.direction.x());
    line.s_min = 1e300;
    line.s_max = -1e300;
    for (int v : c) {
      const Vec2 d = dom.point(v) - line.base;
      line.s_min = std::min(line.s_min, d.dot(line.direction));
      line.s_max = std::max(line.s_max, d.dot(line.direction));
      line.straightness = std::max(line.straightness, std::abs(d.dot(normal)));
    }

    for (std::size_t n = 0; n < L; ++n) {
      const auto& s = seq[n];
      // normals sampled along the fitted line, from the steepest triangle at each point
      Vec3 mean = Vec3::Zero();
      std::vector<Vec2> horiz;
      const double a0 = line.s_min + 0.1 * line.length(), a1 = line.s_max - 0.1 * line.length();
      const int samples = std::max(2, static_cast<int>(std::ceil((a1 - a0) / (h / 4.0))));
      for (int k = 0; k <= samples; ++k) {
        int best = -1;
        for (const auto& hit : loc.locate_all(line.at(a0 + (a1 - a0) * k / samples), 1e-10)) {
          if (scan.counted[hit.tri] && (best < 0 || s.W[hit.tri] > s.W[best])) best = hit.tri;
        }
        if (best < 0) continue;
        const Vec3 N = graph_normal(s.grad[best]);
        mean += N;
        horiz.emplace_back(N.x(), N.y());
      }
      mean /= static_cast<double>(std::max<std::size_t>(1, horiz.size()));
      const Vec2 mh(mean.x(), mean.y());
      double spread = 0.0;
      for (const auto& v : horiz) spread = std::max(spread, detail::angle_deg(v, mh));
      line.angular_spread_deg.push_back(spread);
      if (n + 1 == L) line.limit_normal = mean.normalized();

      // orientation: dPsi along rot90 of the horizontal limit normal is positive
      Vec2 dir = line.direction;
      if (Vec2(-mh.y(), mh.x()).dot(dir) < 0) dir = -dir;
      std::array<double, 3> sat{};
      const double a = line.s_min + 0.1 * line.length(), b = line.s_max - 0.1 * line.length();
      for (int k = 0; k < 3; ++k) {
        const double s0 = a + (b - a) * k / 3.0, s1 = a + (b - a) * (k + 1) / 3.0;
        Vec2 p0 = line.at(s0), p1 = line.at(s1);
        if ((p1 - p0).dot(dir) < 0) std::swap(p0, p1);
        sat[k] = detail::sampled_flux(s, loc, p0, p1, h / 4.0) / (p1 - p0).norm();
      }
      line.saturation.push_back(sat);
    }
    rep.lines.push_back(std::move(line));
  }
  if (rep.lines.empty()) {
    throw Error(ErrorCode::NoDivergence, "no component of the divergent set has " +
                                             std::to_string(kMinComponentSize) + " vertices");
  }
  std::sort(rep.lines.begin(), rep.lines.end(), [](const DivergenceLine& a, const DivergenceLine& b) {
    return a.base.x() != b.base.x() ? a.base.x() < b.base.x() : a.base.y() < b.base.y();
  });

  // two lines may only cross at an interior point if their limit normals agree
  for (std::size_t i = 0; i < rep.lines.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.lines.size(); ++j) {
      const auto& A = rep.lines[i];
      const auto& B = rep.lines[j];
      Mat2 m;
      m.col(0) = A.direction;
      m.col(1) = -B.direction;
      if (std::abs(m.determinant()) < 1e-9) continue;
      const Vec2 st = m.inverse() * (B.base - A.base);
      const bool inside = st[0] > A.s_min + h && st[0] < A.s_max - h && st[1] > B.s_min + h && st[1] < B.s_max - h;
      const Vec2 na(A.limit_normal.x(), A.limit_normal.y()), nb(B.limit_normal.x(), B.limit_normal.y());
      if (inside && detail::angle_deg(na, nb) > 10.0) ++rep.crossing_violations;
    }
  }
  return rep;
}

struct TwoMDiskReport {
  int vertex = -1;
  double M = 0.0;                 // sup over the sequence of W at the vertex
  double boundary_distance = 0.0;
  std::vector<double> rho;        // per index
  double inf_rho = 0.0;
  bool resolvable = false;        // inf_rho >= mesh size
};

/// Largest disk around P on which W_n <= 2M, per index.
inline TwoMDiskReport two_m_disk_check(const std::vector<DiscreteSolution>& seq, int P) {
  detail::check_sequence(seq);
  const auto& dom = seq.front().dom();
  TwoMDiskReport r;
  r.vertex = P;
  for (const auto& s : seq) {
    for (int t : dom.vertex_triangles(P)) r.M = std::max(r.M, s.W[t]);
  }
  r.boundary_distance = 1e300;
  for (int v : dom.boundary_loop()) r.boundary_distance = std::min(r.boundary_distance, (dom.point(v) - dom.point(P)).norm());
  r.inf_rho = 1e300;
  for (const auto& s : seq) {
    double rho = r.boundary_distance;
    for (int t = 0; t < dom.num_triangles(); ++t) {
      if (s.W[t] <= 2.0 * r.M) continue;
      // nearest point of the offending triangle bounds the disk
      const auto& f = dom.triangle(t);
      const auto bc = barycentric(dom.point(f[0]), dom.point(f[1]), dom.point(f[2]), dom.point(P));
      if (bc[0] >= 0 && bc[1] >= 0 && bc[2] >= 0) {
        rho = 0.0;
        continue;
      }
      for (int k = 0; k < 3; ++k) {
        rho = std::min(rho, detail::point_segment_distance(dom.point(P), dom.point(f[k]), dom.point(f[(k + 1) % 3])));
      }
    }
    r.rho.push_back(rho);
    r.inf_rho = std::min(r.inf_rho, rho);
  }
  r.resolvable = r.inf_rho >= dom.max_edge_length();
  return r;
}

}  // namespace msekit
