#pragma once
// Genus-zero r-noids from a balanced flux polygon: exhaustion of Omega(P)
// by the domains Omega_k, conjugation, and reflection through {x3 = 0}.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "msekit/conjfield.hpp"
#include "msekit/divscan.hpp"
#include "msekit/flatgeom.hpp"
#include "msekit/jscheck.hpp"
#include "msekit/msesolve.hpp"

namespace msekit {

/// Truncation lengths k and ramp heights M(k) = k + m0. Lengths, heights
/// and the mesh size are in units of the longest flux vector, so scaling
/// the fluxes scales the whole computation.
struct ExhaustionSchedule {
  std::vector<double> k{2.0, 4.0, 8.0};
  double m0 = 4.0;
  double h = 0.05;
  double grading = 0.0;
  std::optional<Vec2> anchor;  // P0 in the disk; default the corner centroid
  SolverOptions solver{};

  double M(double kk) const { return kk + m0; }

  void validate() const {
    if (k.size() < 3) throw Error(ErrorCode::SchemaError, "an exhaustion schedule needs at least three lengths");
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (!(k[i] > 0.0)) throw Error(ErrorCode::SchemaError, "truncation lengths must be positive");
      if (i > 0 && !(k[i - 1] < k[i])) throw Error(ErrorCode::SchemaError, "truncation lengths must increase");
      if (!(M(k[i]) > 0.0)) throw Error(ErrorCode::SchemaError, "ramp height M(k) must be positive");
    }
    if (!(h > 0.0)) throw Error(ErrorCode::SchemaError, "mesh size must be positive");
    if (grading < 0.0) throw Error(ErrorCode::SchemaError, "grading must be non-negative");
  }
};

struct ExhaustionLevel {
  double k = 0.0;
  double M = 0.0;  // absolute ramp height
  StripDomain strips;
  BoundaryData data;
  DiscreteSolution sol;
  int anchor = -1;
};

struct ExhaustionRun {
  PolygonalDisk disk;
  ExhaustionSchedule sched;
  double scale = 1.0;  // longest flux
  Vec2 anchor_point = Vec2::Zero();
  std::vector<ExhaustionLevel> levels;
  DomainPtr disk_mesh;                      // common comparison mesh
  std::vector<DiscreteSolution> on_disk;    // each level interpolated onto it
  std::vector<double> successive_difference;  // max |u_j - u_{j-1}| on the disk

  double h() const { return sched.h * scale; }
  const ExhaustionLevel& final_level() const { return levels.back(); }
};

namespace detail {

inline double longest_flux(const FluxPolygon& p) {
  double a = 0.0;
  for (const auto& v : p.vectors) a = std::max(a, v.norm());
  return a;
}

inline int nearest_vertex(const MultiDomain& d, const Vec2& p) {
  int best = 0;
  for (int v = 1; v < d.num_vertices(); ++v) {
    if ((d.point(v) - p).squaredNorm() < (d.point(best) - p).squaredNorm()) best = v;
  }
  return best;
}

/// +infinity on the rays leaving P_i, -infinity on the rays entering P_{i+1}.
inline BoundaryData exhaustion_data(const MultiDomain& d) {
  BoundaryData data;
  for (const auto& a : d.arcs()) {
    data.arcs.push_back(a.label.rfind("plus", 0) == 0 ? ArcCondition::plus() : ArcCondition::minus());
  }
  return data;
}

/// Value of a level's solution at a disk point (region 0 hit preferred).
inline double disk_value(const DiscreteSolution& sol, const Locator& loc, const Vec2& p) {
  const auto hits = loc.locate_all(p);
  for (const auto& h : hits) {
    if (sol.dom().region(h.tri) == 0) return sol.interpolate(h);
  }
  if (hits.empty()) throw Error(ErrorCode::SchemaError, "disk point outside the exhaustion domain");
  return sol.interpolate(hits.front());
}

/// Mesh vertices on the straight disk side from a to b, in order.
inline std::vector<int> segment_path(const MultiDomain& d, const Vec2& a, const Vec2& b) {
  const Vec2 t = (b - a).normalized();
  const double L = (b - a).norm(), tol = 1e-9 * L;
  std::vector<std::pair<double, int>> on;
  for (int v = 0; v < d.num_vertices(); ++v) {
    const Vec2 r = d.point(v) - a;
    const double s = r.dot(t);
    if (s > -tol && s < L + tol && std::abs(cross(t, r)) < tol) on.emplace_back(s, v);
  }
  std::sort(on.begin(), on.end());
  std::vector<int> path;
  for (const auto& [s, v] : on) path.push_back(v);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!d.find_edge(path[i], path[i + 1])) throw Error(ErrorCode::SchemaError, "disk side is not a mesh edge chain");
  }
  return path;
}

}  // namespace detail

/// Solves on Omega_k for each truncation length behind the Jenkins-Serrin
/// gate, normalizes u_k(P0) = 0 and compares the levels on the disk.
inline ExhaustionRun exhaustion_solve(const PolygonalDisk& disk, const ExhaustionSchedule& sched,
                                      bool check_divergence = true) {
  sched.validate();
  ExhaustionRun run;
  run.disk = disk;
  run.sched = sched;
  run.scale = detail::longest_flux(disk.polygon);
  const double a = run.scale, h = sched.h * a;
  if (sched.anchor) {
    run.anchor_point = *sched.anchor;
  } else {
    for (int c : disk.corner_ids) run.anchor_point += disk.coarse.point(c);
    run.anchor_point /= static_cast<double>(disk.corner_ids.size());
  }
  if (!Locator(disk.coarse).locate(run.anchor_point)) {
    throw Error(ErrorCode::SchemaError, "anchor P0 lies outside the disk");
  }

  for (double k : sched.k) {
    ExhaustionLevel lev;
    lev.k = k;
    lev.M = sched.M(k) * a;
    lev.strips = build_exhaustion_domain(disk, k * a, h, sched.grading);
    auto dom = share(lev.strips.domain);
    lev.data = detail::exhaustion_data(*dom);
    const auto verdict = check_solvability(*dom, lev.data);
    if (verdict.status != Solvability::SolvableUpToConstant) {
      throw Error(ErrorCode::SolvabilityFailure, "Jenkins-Serrin conditions fail on Omega_k for k = " +
                                                     std::to_string(k) + " (" + to_string(verdict.status) + ")");
    }
    lev.anchor = detail::nearest_vertex(*dom, run.anchor_point);
    const double M = lev.M;
    auto seq = solve_ramp_sequence(dom, lev.data, {{M / 3.0, 2.0 * M / 3.0, M}}, lev.anchor, sched.solver);
    lev.sol = std::move(seq.back());
    run.levels.push_back(std::move(lev));
  }

  run.disk_mesh = share(refine_uniform(disk.coarse, h));
  const auto& D = *run.disk_mesh;
  for (const auto& lev : run.levels) {
    const Locator loc(lev.sol.dom());
    DiscreteSolution s;
    s.domain = run.disk_mesh;
    s.u.resize(D.num_vertices());
    for (int v = 0; v < D.num_vertices(); ++v) s.u[v] = detail::disk_value(lev.sol, loc, D.point(v));
    s.update_gradients();
    s.ramp_level = lev.M;
    run.on_disk.push_back(std::move(s));
  }
  for (std::size_t j = 1; j < run.on_disk.size(); ++j) {
    double m = 0.0;
    for (int v = 0; v < D.num_vertices(); ++v) m = std::max(m, std::abs(run.on_disk[j].u[v] - run.on_disk[j - 1].u[v]));
    run.successive_difference.push_back(m);
  }
  if (check_divergence) {
    try {
      const auto rep = detect_divergence_lines(run.on_disk);
      throw Error(ErrorCode::DivergenceDetected,
                  std::to_string(rep.lines.size()) + " divergence line(s) in the disk across the exhaustion");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoDivergence) throw;
    }
  }
  return run;
}

struct VertexBehaviour {
  int corner = 0;
  double min_psi_near = 0.0;      // min of Psi - Psi(P_i) within 3h of P_i
  double ray_error = 0.0;         // max | Psi(Q) - Psi(P_i) - |QP_i| | on the rays, |QP_i| <= 3h
  std::vector<double> level_distance_plus;   // per level: level set {u = +c} to P_i
  std::vector<double> level_distance_minus;  // {u = -c}
  double level = 0.0;             // c = M(k_1) / 2
  bool psi_ok = false;
  bool approaching = false;       // both distances decrease across the last two levels
};

namespace detail {

/// Distance from p to the level set {u = c} restricted to edges between
/// interior vertices; +inf if it does not cross them.
inline double level_set_distance(const DiscreteSolution& sol, const Vec2& p, double c) {
  const auto& d = sol.dom();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [key, e] : d.edges()) {
    if (d.is_boundary(e.a) || d.is_boundary(e.b)) continue;
    const double fa = sol.u[e.a] - c, fb = sol.u[e.b] - c;
    if (fa * fb > 0.0 || fa == fb) continue;
    const double t = fa / (fa - fb);
    best = std::min(best, (d.point(e.a) + t * (d.point(e.b) - d.point(e.a)) - p).norm());
  }
  return best;
}

}  // namespace detail

/// Behaviour at the corner P_i, where a +infinity ray meets a -infinity
/// ray: the conjugate function near P_i and the level sets approaching the
/// vertical line over it.
inline VertexBehaviour verify_vertex_behaviour(const ExhaustionRun& run, int corner) {
  const int r = static_cast<int>(run.disk.corner_ids.size());
  if (corner < 0 || corner >= r) throw Error(ErrorCode::SchemaError, "corner index out of range");
  VertexBehaviour out;
  out.corner = corner;
  const double h = run.h();
  out.level = 0.5 * run.levels.front().M;
  for (const auto& lev : run.levels) {
    const int P = lev.strips.corner_ids[corner];
    const Vec2 p = lev.sol.dom().point(P);
    out.level_distance_plus.push_back(detail::level_set_distance(lev.sol, p, out.level));
    out.level_distance_minus.push_back(detail::level_set_distance(lev.sol, p, -out.level));
  }
  const auto& lev = run.final_level();
  const auto& d = lev.sol.dom();
  const int P = lev.strips.corner_ids[corner];
  const auto field = conjugate_form(lev.sol, P);
  const Vec2 p = d.point(P);
  out.min_psi_near = std::numeric_limits<double>::infinity();
  for (int v = 0; v < d.num_vertices(); ++v) {
    const double dist = (d.point(v) - p).norm();
    if (dist > 3.0 * h) continue;
    const double psi = field.psi[v] - field.psi[P];
    out.min_psi_near = std::min(out.min_psi_near, psi);
    if (v != P && d.is_boundary(v)) out.ray_error = std::max(out.ray_error, std::abs(psi - dist));
  }
  out.psi_ok = out.min_psi_near >= -2.0 * h && out.ray_error <= 2.0 * h;
  const auto n = out.level_distance_plus.size();
  out.approaching = n >= 2 && out.level_distance_plus[n - 1] < out.level_distance_plus[n - 2] &&
                    out.level_distance_minus[n - 1] < out.level_distance_minus[n - 2];
  return out;
}

struct CurvatureReport {
  double total = 0.0;          // integrated |K| over Sigma
  std::vector<double> vertex;  // angle defect per Sigma vertex (0 on the boundary)
  double disk = 0.0;           // over the disk part of Sigma
  std::vector<double> x0;      // tail thresholds (absolute)
  std::vector<double> tail;    // |K| over strip points with coordinate >= x0
  std::vector<double> ratio;   // tail(2 x0) / tail(x0), thresholds with 2 x0 inside the strips
  double max_ratio = 0.0;
  bool tail_ok = false;
  double degree_estimate = 0.0;  // total / (4 pi)
  int degree_oracle = 0;         // most frequent preimage count of the Gauss map
  std::map<int, int> preimage_counts;
  bool degree_ok = false;
};

struct StrongSymmetry {
  int checked = 0;     // off-plane triangles
  int violations = 0;
  double eps = 0.0;
  double fraction() const { return checked ? 1.0 - static_cast<double>(violations) / checked : 1.0; }
  bool ok() const { return fraction() >= 0.99; }
};

/// Sign of N3 on the two halves: counts off-plane triangles (|centroid z|
/// > eps) whose unit normal has N3 sign(z) < -eps.
inline StrongSymmetry strong_symmetry(const ReflectedSurface& sig, double eps) {
  StrongSymmetry out;
  out.eps = eps;
  for (const auto& f : sig.triangles) {
    const Vec3& A = sig.X[f[0]];
    const Vec3& B = sig.X[f[1]];
    const Vec3& C = sig.X[f[2]];
    const double z = (A.z() + B.z() + C.z()) / 3.0;
    if (std::abs(z) <= eps) continue;
    ++out.checked;
    const double n3 = (B - A).cross(C - A).normalized().z();
    if (n3 * (z > 0.0 ? 1.0 : -1.0) < -eps) ++out.violations;
  }
  return out;
}

struct RnoidResult {
  ExhaustionRun run;
  ConjugateField field;
  ConjugateSurface surface;  // M*
  ReflectedSurface sigma;
  std::vector<int> glue;
  std::vector<Vec2> fluxes;        // measured f_i
  std::vector<Vec2> targets;       // 2 v_i
  double flux_error = 0.0;         // max |f_i - 2 v_i|
  Vec2 flux_sum = Vec2::Zero();
  std::vector<double> psi_corners;
  double psi_corner_spread = 0.0;
  double psi_interior_min = 0.0;
  std::vector<std::vector<double>> corner_flux;  // [level][i] of the integral of dPsi over [P_i, P_{i+1}]
  double planarity_tol = 0.0;
  StrongSymmetry symmetry;
  CurvatureReport curvature;

  int ends() const { return static_cast<int>(targets.size()); }
  double h() const { return run.h(); }
};

namespace detail {

inline double polygon_diameter(const FluxPolygon& p) {
  double d = 0.0;
  for (const auto& a : p.corners) {
    for (const auto& b : p.corners) d = std::max(d, (a - b).norm());
  }
  return d;
}

inline Vec3 unit_normal(const Vec3& a, const Vec3& b, const Vec3& c) { return (b - a).cross(c - a).normalized(); }

/// Conormal integral over the image of a mesh path on M*, the conormal
/// pointing into the region-0 side.
inline Vec3 conormal_integral(const ConjugateSurface& s, const std::vector<int>& path) {
  const auto& d = s.dom();
  Vec3 f = Vec3::Zero();
  for (std::size_t j = 0; j + 1 < path.size(); ++j) {
    const auto* e = d.find_edge(path[j], path[j + 1]);
    int t = -1;
    for (int c : {e->left, e->right}) {
      if (c >= 0 && d.region(c) == 0) t = c;
    }
    if (t < 0) throw Error(ErrorCode::SchemaError, "flux path does not border the disk");
    const auto& tri = d.triangle(t);
    const int third = tri[0] + tri[1] + tri[2] - path[j] - path[j + 1];
    const Vec3 n = unit_normal(s.X[tri[0]], s.X[tri[1]], s.X[tri[2]]);
    const Vec3 edge = s.X[path[j + 1]] - s.X[path[j]];
    Vec3 nu = edge.cross(n);
    if (nu.dot(s.X[third] - s.X[path[j]]) < 0.0) nu = -nu;
    f += nu;
  }
  return f;
}

inline std::vector<Vec3> vertex_normals(const std::vector<Vec3>& X, const std::vector<Tri>& tris) {
  std::vector<Vec3> n(X.size(), Vec3::Zero());
  for (const auto& f : tris) {
    const Vec3 c = (X[f[1]] - X[f[0]]).cross(X[f[2]] - X[f[0]]);
    for (int v : f) n[v] += c;
  }
  for (auto& x : n) {
    if (x.norm() > 0.0) x.normalize();
  }
  return n;
}

/// Points of a Fibonacci lattice on the unit sphere.
inline std::vector<Vec3> fibonacci_sphere(int n) {
  std::vector<Vec3> out;
  const double g = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n, r = std::sqrt(1.0 - z * z);
    out.emplace_back(r * std::cos(g * i), r * std::sin(g * i), z);
  }
  return out;
}

}  // namespace detail

inline constexpr int kGaussSamples = 1000;

/// Integrated |K| of Sigma from angle defects, split into disk and strip
/// tails, and the Gauss-map degree against a preimage count. Angles come
/// from the graph mesh, which is isometric to M*; the Gauss map of M* is
/// that of the graph.
/// Angle defect 2 pi - (sum of angles) at each interior vertex of Sigma,
/// measured on the graph triangles (isometric to the conjugate ones);
/// boundary vertices get 0.
inline std::vector<double> angle_defects(const DiscreteSolution& sol, const ReflectedSurface& sig) {
  const auto& d = sol.dom();
  const auto G = graph_positions(sol);
  const int nt = d.num_triangles();
  const int nv = static_cast<int>(sig.X.size());
  std::vector<double> angle(nv, 0.0);
  std::unordered_map<std::uint64_t, int> edge_use;
  for (int t = 0; t < static_cast<int>(sig.triangles.size()); ++t) {
    const auto& f = sig.triangles[t];
    const auto& src = d.triangle(t % nt);
    for (int q = 0; q < 3; ++q) {
      ++edge_use[edge_key(f[q], f[(q + 1) % 3])];
      // the mirrored copy lists the same source corners in another order
      const int s = sig.source[f[q]];
      int k = 0;
      while (src[k] != s) ++k;
      const Vec3 a = G[src[(k + 1) % 3]] - G[s], b = G[src[(k + 2) % 3]] - G[s];
      angle[f[q]] += std::atan2(a.cross(b).norm(), a.dot(b));
    }
  }
  std::vector<double> defect(nv);
  for (int v = 0; v < nv; ++v) defect[v] = 2.0 * std::numbers::pi - angle[v];
  for (const auto& [key, c] : edge_use) {
    if (c == 1) {
      defect[static_cast<int>(key >> 32)] = 0.0;
      defect[static_cast<int>(key & 0xffffffffu)] = 0.0;
    }
  }
  return defect;
}

inline CurvatureReport total_curvature_report(const RnoidResult& res) {
  CurvatureReport rep;
  const auto& lev = res.run.final_level();
  const auto& d = lev.sol.dom();
  const auto& sig = res.sigma;
  const int nt = d.num_triangles();
  const int nv = static_cast<int>(sig.X.size());
  rep.vertex = angle_defects(lev.sol, sig);
  const double a = res.run.scale;
  for (double x : {2.0, 4.0, 8.0}) rep.x0.push_back(x * a);
  for (double x : {2.0, 4.0, 8.0}) rep.x0.push_back(2.0 * x * a);
  std::sort(rep.x0.begin(), rep.x0.end());
  rep.x0.erase(std::unique(rep.x0.begin(), rep.x0.end()), rep.x0.end());
  rep.tail.assign(rep.x0.size(), 0.0);

  // strip coordinate of each graph vertex (-1 in the disk)
  std::vector<double> xs(d.num_vertices(), -1.0);
  for (int t = 0; t < nt; ++t) {
    const int reg = d.region(t);
    if (reg == 0) continue;
    for (int v : d.triangle(t)) xs[v] = std::max(xs[v], lev.strips.strip_coordinate(reg - 1, d.point(v)));
  }
  for (int v = 0; v < nv; ++v) {
    const double K = std::abs(rep.vertex[v]);
    rep.total += K;
    const double x = xs[sig.source[v]];
    if (x <= 0.0) rep.disk += K;
    for (std::size_t j = 0; j < rep.x0.size(); ++j) {
      if (x >= rep.x0[j]) rep.tail[j] += K;
    }
  }
  const double kmax = lev.k * a;
  rep.tail_ok = true;
  for (double x : {2.0, 4.0, 8.0}) {
    if (2.0 * x * a > kmax) continue;
    const auto j1 = std::find(rep.x0.begin(), rep.x0.end(), x * a) - rep.x0.begin();
    const auto j2 = std::find(rep.x0.begin(), rep.x0.end(), 2.0 * x * a) - rep.x0.begin();
    const double q = rep.tail[j1] > 0.0 ? rep.tail[j2] / rep.tail[j1] : 0.0;
    rep.ratio.push_back(q);
    rep.max_ratio = std::max(rep.max_ratio, q);
    rep.tail_ok = rep.tail_ok && q <= 0.6;
  }
  rep.degree_estimate = rep.total / (4.0 * std::numbers::pi);

  // Gauss map of Sigma: graph normals on M*, reflected on the mirror copy
  const auto n = detail::vertex_normals(graph_positions(lev.sol), d.triangles());
  const auto sigma_normals = [&](int t) {
    std::array<Vec3, 3> m;
    for (int q = 0; q < 3; ++q) {
      m[q] = n[sig.source[sig.triangles[t][q]]];
      if (sig.mirrored_triangle[t]) m[q].z() = -m[q].z();
    }
    return m;
  };
  for (const auto& dir : detail::fibonacci_sphere(kGaussSamples)) {
    int count = 0;
    for (int t = 0; t < static_cast<int>(sig.triangles.size()); ++t) {
      const auto [A, B, C] = sigma_normals(t);
      if (A.dot(dir) < 0.5 || B.dot(dir) < 0.5 || C.dot(dir) < 0.5) continue;
      const double s1 = A.cross(B).dot(dir), s2 = B.cross(C).dot(dir), s3 = C.cross(A).dot(dir);
      if ((s1 > 0 && s2 > 0 && s3 > 0) || (s1 < 0 && s2 < 0 && s3 < 0)) ++count;
    }
    ++rep.preimage_counts[count];
  }
  int best = -1;
  for (const auto& [c, m] : rep.preimage_counts) {
    if (best < 0 || m > rep.preimage_counts[best]) best = c;
  }
  rep.degree_oracle = best;
  rep.degree_ok = best > 0 && std::abs(rep.degree_estimate - best) <= 0.1 * best;
  return rep;
}

/// The full pipeline on a supplied disk.
inline RnoidResult build_rnoid(const PolygonalDisk& disk, const ExhaustionSchedule& sched) {
  RnoidResult res;
  res.run = exhaustion_solve(disk, sched);
  const auto& run = res.run;
  const auto& poly = disk.polygon;
  const int r = poly.size();
  const double h = run.h();

  for (const auto& lev : run.levels) {
    const auto f = conjugate_form(lev.sol, lev.strips.corner_ids[0]);
    std::vector<double> cf;
    for (int i = 0; i < r; ++i) {
      const auto& s = lev.strips;
      cf.push_back(flux_along(f, detail::segment_path(s.domain, s.base_from[i], s.base_to[i])));
    }
    res.corner_flux.push_back(std::move(cf));
  }

  const auto& lev = run.final_level();
  const auto& d = lev.sol.dom();
  const int root = lev.strips.corner_ids[0];
  res.field = conjugate_form(lev.sol, root);
  const auto cmesh = conformal_map(lev.sol, root);
  res.surface = conjugate_surface(lev.sol, res.field, cmesh);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int c : lev.strips.corner_ids) {
    res.psi_corners.push_back(res.field.psi[c]);
    lo = std::min(lo, res.field.psi[c]);
    hi = std::max(hi, res.field.psi[c]);
  }
  res.psi_corner_spread = hi - lo;
  res.psi_interior_min = std::numeric_limits<double>::infinity();
  for (int v = 0; v < d.num_vertices(); ++v) {
    if (!d.is_boundary(v)) res.psi_interior_min = std::min(res.psi_interior_min, res.field.psi[v]);
  }

  // symmetry curves: the vertical segments over the corners P_i
  for (int c : lev.strips.corner_ids) {
    res.glue.push_back(c);
    for (int w : d.vertex_neighbors(c)) {
      const auto* e = d.find_edge(c, w);
      if (e->left < 0 || e->right < 0) res.glue.push_back(w);
    }
  }
  std::sort(res.glue.begin(), res.glue.end());
  res.glue.erase(std::unique(res.glue.begin(), res.glue.end()), res.glue.end());
  res.planarity_tol = 5.0 * h * detail::polygon_diameter(poly);
  res.sigma = reflect_union(res.surface, res.glue, res.planarity_tol);

  // end fluxes: the loop through [P_i, P_{i+1}] on M* and its mirror; the
  // conormal points away from the end, and the vertical parts cancel
  double max_target = 0.0;
  for (int i = 0; i < r; ++i) {
    const auto path = detail::segment_path(d, lev.strips.base_from[i], lev.strips.base_to[i]);
    const Vec3 f = detail::conormal_integral(res.surface, path);
    res.fluxes.emplace_back(2.0 * f.x(), 2.0 * f.y());
    res.targets.push_back(2.0 * poly.vectors[i]);
    res.flux_sum += res.fluxes.back();
    res.flux_error = std::max(res.flux_error, (res.fluxes.back() - res.targets.back()).norm());
    max_target = std::max(max_target, res.targets.back().norm());
  }

  res.symmetry = strong_symmetry(res.sigma, h);
  res.curvature = total_curvature_report(res);

  if (res.flux_error > 0.1 * max_target) {
    throw Error(ErrorCode::FluxMismatch, "end flux off by " + std::to_string(res.flux_error) + " > 10% of " +
                                             std::to_string(max_target));
  }
  return res;
}

/// The full pipeline from flux vectors: the embedded disk bounded by the
/// flux polygon.
inline RnoidResult build_rnoid(const FluxPolygon& fluxes, const ExhaustionSchedule& sched) {
  return build_rnoid(find_embedded_disk(fluxes), sched);
}

struct UniquenessReport {
  double max_deviation = 0.0;  // max |(u - u') - mean(u - u')| on the disk
  double mean_offset = 0.0;
  double tolerance = 0.0;      // 3 (solver tol + h)
  bool ok = false;
};

/// Runs the exhaustion twice with different anchors and compares the final
/// solutions on the disk.
inline UniquenessReport uniqueness_check(const PolygonalDisk& disk, const ExhaustionSchedule& sched, const Vec2& anchor2) {
  auto s2 = sched;
  s2.anchor = anchor2;
  const auto a = exhaustion_solve(disk, sched, false);
  const auto b = exhaustion_solve(disk, s2, false);
  if ((a.anchor_point - b.anchor_point).norm() == 0.0) {
    throw Error(ErrorCode::SchemaError, "uniqueness check needs two different anchors");
  }
  const auto& u = a.on_disk.back().u;
  const auto& w = b.on_disk.back().u;
  UniquenessReport rep;
  for (std::size_t i = 0; i < u.size(); ++i) rep.mean_offset += u[i] - w[i];
  rep.mean_offset /= static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    rep.max_deviation = std::max(rep.max_deviation, std::abs(u[i] - w[i] - rep.mean_offset));
  }
  rep.tolerance = 3.0 * (sched.solver.tol + a.h());
  rep.ok = rep.max_deviation <= rep.tolerance;
  return rep;
}

}  // namespace msekit
