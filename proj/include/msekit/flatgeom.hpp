#pragma once

// Standard multi-domains: rectangles, convex polygons, sectors, flux
// polygons with their disks, and the strip-glued domains built on them.

#include "msekit/multidomain.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace msekit {

namespace detail {

/// Incremental builder for coarse triangulations that share vertices.
struct CoarseMesh {
  std::vector<Vec2> pts;
  std::vector<Tri> tris;
  std::vector<int> regions;

  int add_point(const Vec2& p) {
    pts.push_back(p);
    return static_cast<int>(pts.size()) - 1;
  }
  void add_tri(int a, int b, int c, int region) {
    if (signed_area(pts[a], pts[b], pts[c]) < 0.0) std::swap(b, c);
    tris.push_back({a, b, c});
    regions.push_back(region);
  }
  /// Quad (a,b,c,d) in boundary order, split into four around its centre.
  void add_quad(int a, int b, int c, int d, int region) {
    const int m = add_point(0.25 * (pts[a] + pts[b] + pts[c] + pts[d]));
    add_tri(m, a, b, region);
    add_tri(m, b, c, region);
    add_tri(m, c, d, region);
    add_tri(m, d, a, region);
  }
};

}  // namespace detail

/// Axis-aligned rectangle [x0,x1]x[y0,y1] with four straight arcs labelled
/// bottom, right, top, left. Coarse cells are near-square, each split into
/// four triangles around its centre; refined to edge length <= h.
inline MultiDomain make_rectangle(double x0, double y0, double x1, double y1, double h) {
  detail::CoarseMesh cm;
  const double w = x1 - x0, ht = y1 - y0;
  const double cell = std::min(w, ht);
  const int nx = std::max(1, static_cast<int>(std::lround(w / cell)));
  const int ny = std::max(1, static_cast<int>(std::lround(ht / cell)));
  std::vector<std::vector<int>> id(nx + 1, std::vector<int>(ny + 1));
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) id[i][j] = cm.add_point({x0 + w * i / nx, y0 + ht * j / ny});
  }
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) cm.add_quad(id[i][j], id[i + 1][j], id[i + 1][j + 1], id[i][j + 1], 0);
  }
  std::vector<BoundaryArc> arcs(4);
  arcs[0].label = "bottom";
  arcs[1].label = "right";
  arcs[2].label = "top";
  arcs[3].label = "left";
  for (int i = 0; i <= nx; ++i) arcs[0].chain.push_back(id[i][0]);
  for (int j = 0; j <= ny; ++j) arcs[1].chain.push_back(id[nx][j]);
  for (int i = nx; i >= 0; --i) arcs[2].chain.push_back(id[i][ny]);
  for (int j = ny; j >= 0; --j) arcs[3].chain.push_back(id[0][j]);
  auto coarse = MultiDomain::from_developed(cm.pts, cm.tris, arcs, {}, cm.regions);
  return refine_uniform(coarse, h);
}

/// Square of side `side` centred at the origin.
inline MultiDomain make_square(double side, double h) {
  return make_rectangle(-0.5 * side, -0.5 * side, 0.5 * side, 0.5 * side, h);
}

/// Convex polygon (counter-clockwise corners), fanned from the centroid.
/// Side i runs from corner i to corner i+1 and is labelled labels[i].
inline MultiDomain make_convex_polygon(const std::vector<Vec2>& corners, const std::vector<std::string>& labels,
                                       double h) {
  const int n = static_cast<int>(corners.size());
  if (n < 3) throw Error(ErrorCode::DegeneratePolygon, "polygon needs three corners");
  detail::CoarseMesh cm;
  Vec2 c = Vec2::Zero();
  for (const auto& p : corners) c += p;
  c /= n;
  const int center = cm.add_point(c);
  std::vector<int> id;
  for (const auto& p : corners) id.push_back(cm.add_point(p));
  std::vector<BoundaryArc> arcs;
  for (int i = 0; i < n; ++i) {
    cm.add_tri(center, id[i], id[(i + 1) % n], 0);
    arcs.push_back({labels.empty() ? "side" + std::to_string(i) : labels[i], {id[i], id[(i + 1) % n]}, true});
  }
  auto coarse = MultiDomain::from_developed(cm.pts, cm.tris, arcs, {}, cm.regions);
  return refine_uniform(coarse, h);
}

/// Sector {0<=r<=R, beta1<=theta<=beta2} with developing map
/// (r,theta) -> (r cos theta, r sin theta), meshed in rings. The mesh is
/// mirror symmetric about theta = (beta1+beta2)/2, and the sector may wrap
/// past 2*pi (non-injective developing map). Arcs: "ray1" (theta=beta1,
/// outward), "arc", "ray2" (theta=beta2, inward). The circular arc is
/// represented by its inscribed polygon.
struct SectorDomain {
  double beta1 = 0.0, beta2 = 0.0, radius = 1.0;
  MultiDomain domain;
  std::vector<double> r;      // polar radius per vertex
  std::vector<double> theta;  // polar angle per vertex (origin: midline)

  double mid() const { return 0.5 * (beta1 + beta2); }
};

inline SectorDomain make_sector(double beta1, double beta2, double radius, double h) {
  if (!(beta1 < beta2) || radius <= 0.0) throw Error(ErrorCode::SchemaError, "sector needs beta1 < beta2, R > 0");
  SectorDomain s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.radius = radius;
  const double half = 0.5 * (beta2 - beta1);
  const double mid = 0.5 * (beta1 + beta2);
  const int rings = std::max(2, static_cast<int>(std::ceil(radius / h)));

  std::vector<Vec2> pts;
  std::vector<double> rr, tt;
  auto add = [&](double r, double t) {
    pts.push_back({r * std::cos(t), r * std::sin(t)});
    rr.push_back(r);
    tt.push_back(t);
    return static_cast<int>(pts.size()) - 1;
  };
  // half wedge: ring[j][k] at angle mid - half + k*half/m_j ; k = m_j on the midline
  std::vector<std::vector<int>> lower(rings + 1), upper(rings + 1);
  const int origin = add(0.0, mid);
  lower[0] = upper[0] = {origin};
  std::vector<int> segs(rings + 1, 0);
  for (int j = 1; j <= rings; ++j) {
    const double r = radius * j / rings;
    segs[j] = std::max(1, static_cast<int>(std::ceil(r * half / h - 1e-9)));
    for (int k = 0; k <= segs[j]; ++k) {
      const double t = mid - half + half * k / segs[j];
      lower[j].push_back(k == segs[j] ? -1 : add(r, t));
    }
    // midline vertex shared by both halves
    lower[j].back() = add(r, mid);
    upper[j].assign(segs[j] + 1, -1);
    upper[j][segs[j]] = lower[j].back();
    for (int k = 0; k < segs[j]; ++k) {
      const double t = mid + half - half * k / segs[j];
      upper[j][k] = add(r, t);
    }
  }
  std::vector<Tri> tris;
  auto push = [&](int a, int b, int c) {
    if (signed_area(pts[a], pts[b], pts[c]) < 0.0) std::swap(b, c);
    tris.push_back({a, b, c});
  };
  // zipper between consecutive rings of one half wedge; angular parameter
  // is k/m in [0,1] so both halves triangulate identically
  auto zip = [&](const std::vector<int>& in, const std::vector<int>& out) {
    const int mi = static_cast<int>(in.size()) - 1, mo = static_cast<int>(out.size()) - 1;
    int i = 0, o = 0;
    while (i < mi || o < mo) {
      const double ti = (i < mi) ? static_cast<double>(i + 1) / mi : 2.0;
      const double to = (o < mo) ? static_cast<double>(o + 1) / mo : 2.0;
      if (ti < to - 1e-12) {
        push(in[i], in[i + 1], out[o]);
        ++i;
      } else {
        push(in[i], out[o], out[o + 1]);
        ++o;
      }
    }
  };
  for (int j = 1; j <= rings; ++j) {
    if (j == 1) {
      for (int k = 0; k < segs[1]; ++k) {
        push(origin, lower[1][k], lower[1][k + 1]);
        push(origin, upper[1][k], upper[1][k + 1]);
      }
      continue;
    }
    zip(lower[j - 1], lower[j]);
    zip(upper[j - 1], upper[j]);
  }
  std::vector<BoundaryArc> arcs(3);
  arcs[0].label = "ray1";
  arcs[0].chain.push_back(origin);
  for (int j = 1; j <= rings; ++j) arcs[0].chain.push_back(lower[j][0]);
  arcs[1].label = "arc";
  arcs[1].straight = false;
  for (int k = 0; k <= segs[rings]; ++k) arcs[1].chain.push_back(lower[rings][k]);
  for (int k = segs[rings] - 1; k >= 0; --k) arcs[1].chain.push_back(upper[rings][k]);
  arcs[2].label = "ray2";
  for (int j = rings; j >= 1; --j) arcs[2].chain.push_back(upper[j][0]);
  arcs[2].chain.push_back(origin);
  s.domain = MultiDomain::from_developed(std::move(pts), std::move(tris), std::move(arcs));
  s.r = std::move(rr);
  s.theta = std::move(tt);
  return s;
}

/// Closed polygon traced by consecutive flux vectors.
struct FluxPolygon {
  std::vector<Vec2> vectors;
  std::vector<Vec2> corners;  // corners[0] = 0, corners[i+1] = corners[i] + vectors[i]
  bool degenerate = false;

  int size() const { return static_cast<int>(vectors.size()); }

  double signed_area() const {
    double a = 0.0;
    for (int i = 0; i < size(); ++i) a += 0.5 * cross(corners[i], corners[(i + 1) % size()]);
    return a;
  }
};

inline FluxPolygon flux_polygon_from_vectors(const std::vector<Vec2>& vectors) {
  if (vectors.size() < 2) throw Error(ErrorCode::DegeneratePolygon, "a flux polygon needs at least two vectors");
  Vec2 sum = Vec2::Zero();
  double total = 0.0;
  for (const auto& v : vectors) {
    sum += v;
    total += v.norm();
  }
  if (sum.norm() > 1e-12 * total) {
    throw Error(ErrorCode::UnbalancedFlux, "fluxes sum to (" + std::to_string(sum.x()) + ", " +
                                               std::to_string(sum.y()) + ")");
  }
  FluxPolygon p;
  p.vectors = vectors;
  Vec2 c = Vec2::Zero();
  for (const auto& v : vectors) {
    p.corners.push_back(c);
    c += v;
  }
  bool zero_edge = false;
  for (const auto& v : vectors) zero_edge |= v.norm() <= 1e-12 * total;
  p.degenerate = vectors.size() < 3 || zero_edge || std::abs(p.signed_area()) <= 1e-12 * total * total;
  return p;
}

inline bool polygon_is_simple(const std::vector<Vec2>& c) {
  const int n = static_cast<int>(c.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(c[i], c[(i + 1) % n], c[j], c[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Polygonal disk: a multi-domain bounded by straight edges whose developed
/// boundary traverses a flux polygon. Kept coarse so strips can be glued
/// before refinement.
struct PolygonalDisk {
  MultiDomain coarse;
  std::vector<int> corner_ids;  // P_1..P_r in flux order
  FluxPolygon polygon;
};

/// Ear clipping for a simple counter-clockwise polygon.
inline std::vector<Tri> ear_clip(const std::vector<Vec2>& p) {
  std::vector<int> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Tri> out;
  while (idx.size() > 3) {
    const int n = static_cast<int>(idx.size());
    bool clipped = false;
    for (int i = 0; i < n && !clipped; ++i) {
      const int a = idx[(i + n - 1) % n], b = idx[i], c = idx[(i + 1) % n];
      if (signed_area(p[a], p[b], p[c]) <= 0.0) continue;
      bool empty = true;
      for (int k : idx) {
        if (k == a || k == b || k == c) continue;
        const auto bc = barycentric(p[a], p[b], p[c], p[k]);
        if (bc[0] >= -1e-14 && bc[1] >= -1e-14 && bc[2] >= -1e-14) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      out.push_back({a, b, c});
      idx.erase(idx.begin() + i);
      clipped = true;
    }
    if (!clipped) throw Error(ErrorCode::SelfIntersecting, "ear clipping failed; polygon is not simple");
  }
  out.push_back({idx[0], idx[1], idx[2]});
  return out;
}

/// Triangulates the planar region bounded by a simple flux polygon. Convex
/// polygons are fanned from the centroid so their symmetries carry over to
/// the mesh; other polygons are ear-clipped.
inline PolygonalDisk find_embedded_disk(const FluxPolygon& poly) {
  if (poly.size() < 3) throw Error(ErrorCode::DegeneratePolygon, "flux polygon needs at least three edges");
  if (!polygon_is_simple(poly.corners)) {
    throw Error(ErrorCode::SelfIntersecting, "flux polygon crosses itself; supply an immersed disk explicitly");
  }
  if (poly.degenerate) throw Error(ErrorCode::DegeneratePolygon, "flux polygon is degenerate");
  const int r = poly.size();
  const bool ccw = poly.signed_area() > 0.0;
  // boundary order (counter-clockwise) of the flux corners
  std::vector<int> order(r);
  for (int i = 0; i < r; ++i) order[i] = ccw ? i : (r - i) % r;

  detail::CoarseMesh cm;
  std::vector<int> id(r);
  for (int i = 0; i < r; ++i) id[i] = cm.add_point(poly.corners[i]);
  bool convex = true;
  for (int k = 0; k < r; ++k) {
    const Vec2& a = poly.corners[order[k]];
    const Vec2& b = poly.corners[order[(k + 1) % r]];
    const Vec2& c = poly.corners[order[(k + 2) % r]];
    if (signed_area(a, b, c) <= 0.0) convex = false;
  }
  if (convex) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : poly.corners) c += p;
    const int center = cm.add_point(c / r);
    for (int k = 0; k < r; ++k) cm.add_tri(center, id[order[k]], id[order[(k + 1) % r]], 0);
  } else {
    std::vector<Vec2> ring;
    for (int k = 0; k < r; ++k) ring.push_back(poly.corners[order[k]]);
    for (const auto& t : ear_clip(ring)) cm.add_tri(id[order[t[0]]], id[order[t[1]]], id[order[t[2]]], 0);
  }
  std::vector<BoundaryArc> arcs;
  for (int k = 0; k < r; ++k) {
    arcs.push_back({"side" + std::to_string(order[k]), {id[order[k]], id[order[(k + 1) % r]]}, true});
  }
  PolygonalDisk d{MultiDomain::from_developed(cm.pts, cm.tris, arcs, {}, cm.regions), id, poly};
  return d;
}

/// Wraps an explicitly supplied (possibly immersed) disk after checking that
/// its developed boundary reproduces the flux vectors up to one rigid motion.
inline PolygonalDisk polygonal_disk_from_domain(const MultiDomain& dom, const std::vector<int>& corner_ids,
                                                const FluxPolygon& poly) {
  const int r = poly.size();
  if (static_cast<int>(corner_ids.size()) != r) {
    throw Error(ErrorCode::SchemaError, "one disk corner per flux vector is required");
  }
  const Vec2 e0 = dom.point(corner_ids[1 % r]) - dom.point(corner_ids[0]);
  const double angle = std::atan2(cross(poly.vectors[0], e0), poly.vectors[0].dot(e0));
  const Isometry2 rot = Isometry2::from_angle(angle);
  for (int i = 0; i < r; ++i) {
    const Vec2 e = dom.point(corner_ids[(i + 1) % r]) - dom.point(corner_ids[i]);
    if ((e - rot.rot * poly.vectors[i]).norm() > 1e-10 * std::max(1.0, e.norm())) {
      throw Error(ErrorCode::InconsistentIsometry, "disk edge " + std::to_string(i) + " does not match its flux");
    }
  }
  return {dom, corner_ids, poly};
}

/// The strip-glued domain: either the truncated Omega(P) (rectangular
/// half-strips of length l with caps) or the exhaustion domain Omega_k
/// (each strip closed by the triangle P_i Q_i^k P_{i+1}).
struct StripDomain {
  MultiDomain domain;
  std::vector<int> corner_ids;     // P_i, flux order
  std::vector<int> apex_ids;       // Q_i^k (exhaustion) or empty
  std::vector<Vec2> base_from;     // developed P_i of strip i
  std::vector<Vec2> base_to;       // developed P_{i+1} of strip i
  std::vector<Vec2> outward;       // unit normal pointing into strip i
  double length = 0.0;             // truncation length l or k

  /// Arc id by label ("plus{i}", "cap{i}", "minus{i}"); -1 if absent.
  int arc_id(const std::string& label) const {
    for (int a = 0; a < static_cast<int>(domain.arcs().size()); ++a) {
      if (domain.arc(a).label == label) return a;
    }
    return -1;
  }

  /// Distance into strip i of a developed point (region i+1).
  double strip_coordinate(int strip, const Vec2& p) const { return (p - base_from[strip]).dot(outward[strip]); }
};

namespace detail {

struct DiskSide {
  std::vector<int> chain;  // boundary vertices from P_i to P_{i+1}
  bool forward = true;     // chain follows the CCW boundary
};

inline DiskSide disk_side(const PolygonalDisk& disk, int i) {
  const auto loop = disk.coarse.boundary_loop();
  const int r = disk.polygon.size();
  const int a = disk.corner_ids[i], b = disk.corner_ids[(i + 1) % r];
  const int n = static_cast<int>(loop.size());
  const int ia = static_cast<int>(std::find(loop.begin(), loop.end(), a) - loop.begin());
  // walk forward from a; the side must not pass another corner
  auto walk = [&](int dir) {
    std::vector<int> c{a};
    for (int k = 1; k <= n; ++k) {
      const int v = loop[((ia + dir * k) % n + n) % n];
      c.push_back(v);
      if (v == b) return c;
      if (std::find(disk.corner_ids.begin(), disk.corner_ids.end(), v) != disk.corner_ids.end()) break;
    }
    return std::vector<int>{};
  };
  auto f = walk(1);
  if (!f.empty()) return {f, true};
  auto g = walk(-1);
  if (!g.empty()) return {g, false};
  throw Error(ErrorCode::DegeneratePolygon, "corners are not consecutive on the disk boundary");
}

}  // namespace detail

/// Glues r strips to a disk. With `exhaustion`, strip i is the triangle
/// P_i Q_i P_{i+1} of height `length` with Q_i the midpoint of the far cap;
/// otherwise it is the rectangle of height `length`. Returns the coarse
/// glued domain; callers refine it.
inline StripDomain glue_strips_coarse(const PolygonalDisk& disk, double length, bool exhaustion) {
  const int r = disk.polygon.size();
  if (r < 3 || disk.polygon.degenerate) throw Error(ErrorCode::DegeneratePolygon, "polygon needs r >= 3 non-zero edges");
  if (!(length > 0.0)) throw Error(ErrorCode::SchemaError, "strip length must be positive");

  detail::CoarseMesh cm;
  cm.pts = disk.coarse.points();
  cm.tris = disk.coarse.triangles();
  cm.regions.assign(cm.tris.size(), 0);

  StripDomain out;
  out.corner_ids = disk.corner_ids;
  out.length = length;
  std::vector<std::vector<int>> plus(r), cap(r), minus(r);

  for (int i = 0; i < r; ++i) {
    const auto side = detail::disk_side(disk, i);
    const Vec2 pa = cm.pts[side.chain.front()], pb = cm.pts[side.chain.back()];
    const Vec2 dir = (pb - pa).normalized();
    // the disk lies on the left of the CCW boundary, the strip on the right
    const Vec2 n = side.forward ? Vec2(dir.y(), -dir.x()) : Vec2(-dir.y(), dir.x());
    out.base_from.push_back(pa);
    out.base_to.push_back(pb);
    out.outward.push_back(n);
    const double w = (pb - pa).norm();
    const int m = static_cast<int>(side.chain.size()) - 1;
    // base parameters of the disk's side vertices
    std::vector<double> s(m + 1);
    for (int k = 0; k <= m; ++k) s[k] = (cm.pts[side.chain[k]] - pa).dot(dir) / w;

    auto width_at = [&](double t) { return exhaustion ? w * (1.0 - t / length) : w; };
    auto point_at = [&](double t, double sk) {
      if (!exhaustion) return Vec2(pa + sk * w * dir + t * n);
      const double frac = t / length;
      const Vec2 q = 0.5 * (pa + pb) + length * n;
      const Vec2 left = pa + frac * (q - pa), right = pb + frac * (q - pb);
      return Vec2(left + sk * (right - left));
    };
    std::vector<int> prev = side.chain;
    double t = 0.0;
    plus[i].push_back(prev.front());
    minus[i].push_back(prev.back());
    const double cell = w / m;
    for (;;) {
      const double wt = width_at(t);
      double step = wt / m;
      if (!exhaustion) step = std::min(step, length - t);
      double next = t + step;
      const bool last_row = exhaustion ? width_at(next) < 0.25 * cell : next >= length - 1e-12 * length;
      if (exhaustion && last_row) {
        // close with a fan to the apex
        const int q = cm.add_point(point_at(length, 0.5));
        for (int k = 0; k < m; ++k) cm.add_tri(prev[k], prev[k + 1], q, i + 1);
        out.apex_ids.push_back(q);
        plus[i].push_back(q);
        minus[i].push_back(q);
        break;
      }
      if (!exhaustion && last_row) next = length;
      std::vector<int> row(m + 1);
      for (int k = 0; k <= m; ++k) row[k] = cm.add_point(point_at(next, s[k]));
      for (int k = 0; k < m; ++k) cm.add_quad(prev[k], prev[k + 1], row[k + 1], row[k], i + 1);
      plus[i].push_back(row.front());
      minus[i].push_back(row.back());
      prev = std::move(row);
      t = next;
      if (!exhaustion && last_row) {
        cap[i] = prev;
        break;
      }
    }
  }

  std::vector<BoundaryArc> arcs;
  for (int i = 0; i < r; ++i) {
    // plus ray runs outward from P_i, minus ray inward to P_{i+1}; the
    // boundary direction depends on which side of the strip is P_i
    const auto side = detail::disk_side(disk, i);
    std::vector<int> pl = plus[i], mi(minus[i].rbegin(), minus[i].rend());
    BoundaryArc a_plus{"plus" + std::to_string(i), pl, true};
    BoundaryArc a_cap{"cap" + std::to_string(i), {}, true};
    BoundaryArc a_minus{"minus" + std::to_string(i), mi, true};
    if (!exhaustion) a_cap.chain = cap[i];
    if (!side.forward) {
      // boundary runs from the P_{i+1} side to the P_i side
      std::reverse(a_plus.chain.begin(), a_plus.chain.end());
      std::reverse(a_minus.chain.begin(), a_minus.chain.end());
      std::reverse(a_cap.chain.begin(), a_cap.chain.end());
    }
    arcs.push_back(a_plus);
    arcs.push_back(a_cap);
    arcs.push_back(a_minus);
  }
  // an exhaustion strip has no cap
  std::vector<BoundaryArc> real;
  std::vector<int> corners = disk.corner_ids;
  for (const auto& a : arcs) {
    if (!a.chain.empty()) real.push_back(a);
  }
  for (int q : out.apex_ids) corners.push_back(q);
  for (int i = 0; i < r && !exhaustion; ++i) {
    corners.push_back(cap[i].front());
    corners.push_back(cap[i].back());
  }
  out.domain = MultiDomain::from_developed(cm.pts, cm.tris, real, corners, cm.regions);
  return out;
}

/// Truncated Omega(P): the disk with r rectangular half-strips of length l.
/// Element size grows linearly with the distance into each strip when
/// `grading` > 0: size = h * (1 + grading * x / width).
inline StripDomain build_omega_p(const PolygonalDisk& disk, double l, double h, double grading = 0.0) {
  StripDomain s = glue_strips_coarse(disk, l, false);
  s.domain = refine(s.domain, [&](const Vec2& c, int region) {
    if (region == 0) return h;
    const int i = region - 1;
    const double w = (s.base_to[i] - s.base_from[i]).norm();
    return h * (1.0 + grading * std::max(0.0, s.strip_coordinate(i, c)) / w);
  });
  return s;
}

/// Exhaustion domain Omega_k: strips closed at the apex Q_i^k.
inline StripDomain build_exhaustion_domain(const PolygonalDisk& disk, double k, double h, double grading = 0.0) {
  StripDomain s = glue_strips_coarse(disk, k, true);
  s.domain = refine(s.domain, [&](const Vec2& c, int region) {
    if (region == 0) return h;
    const int i = region - 1;
    const double w = (s.base_to[i] - s.base_from[i]).norm();
    return h * (1.0 + grading * std::max(0.0, s.strip_coordinate(i, c)) / w);
  });
  return s;
}

}  // namespace msekit
