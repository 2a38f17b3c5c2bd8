#pragma once

// Conjugate 1-form dPsi = (p/W)dy - (q/W)dx, the conformal coordinates
// Phi = (xi, eta) of a minimal graph, and its conjugate surface M*.

#include "msekit/msesolve.hpp"

#include <numeric>
#include <queue>

namespace msekit {

/// How a per-triangle covector field is turned into vertex values.
enum class Integration {
  SpanningTree,  // sum of edge increments along a BFS tree
  LeastSquares,  // P1 function whose gradient best fits the field
};

/// Loop integrals of the edge-averaged form count as closed when
/// |circulation| <= kClosednessConstant * h * len(loop) on interior loops.
inline constexpr double kClosednessConstant = 2.0;

/// A vertex function integrated from a per-triangle covector field.
struct IntegratedForm {
  std::vector<double> values;
  std::vector<double> circulation;  // per triangle, of the edge-averaged form
  double max_closedness_ratio = 0.0;  // max |circ| / (h * len), h the mesh size
  double max_interior_closedness_ratio = 0.0;  // triangles off the boundary
  double max_star_ratio = 0.0;  // midpoint loops around interior vertices
};

namespace detail {

/// Edge increment of a per-triangle covector field: the average of the
/// adjacent triangles' fields (one triangle on the boundary) applied to b-a.
inline double edge_increment(const MultiDomain& dom, const std::vector<Vec2>& F, int a, int b) {
  const auto* e = dom.find_edge(a, b);
  const Vec2 d = dom.point(b) - dom.point(a);
  Vec2 f = Vec2::Zero();
  int n = 0;
  for (int t : {e->left, e->right}) {
    if (t < 0) continue;
    f += F[t];
    ++n;
  }
  return (f / n).dot(d);
}

inline IntegratedForm integrate_form(const MultiDomain& dom, const std::vector<Vec2>& F, int root, Integration method,
                                     const std::vector<double>& weight = {}) {
  const int nv = dom.num_vertices();
  IntegratedForm out;
  out.values.assign(nv, 0.0);
  if (method == Integration::SpanningTree) {
    std::vector<bool> seen(nv, false);
    std::queue<int> q;
    q.push(root);
    seen[root] = true;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : dom.vertex_neighbors(v)) {
        if (seen[w]) continue;
        seen[w] = true;
        out.values[w] = out.values[v] + edge_increment(dom, F, v, w);
        q.push(w);
      }
    }
  } else {
    // minimize sum_T w_T |T| |grad f - F_T|^2 with f(root) = 0
    std::vector<int> idx(nv, -1);
    int n = 0;
    for (int v = 0; v < nv; ++v) {
      if (v != root) idx[v] = n++;
    }
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < dom.num_triangles(); ++t) {
      const auto& f = dom.triangle(t);
      const auto G = hat_gradients(dom.point(f[0]), dom.point(f[1]), dom.point(f[2]));
      const double A = dom.area(t) * (weight.empty() ? 1.0 : weight[t]);
      for (int i = 0; i < 3; ++i) {
        const int I = idx[f[i]];
        if (I < 0) continue;
        rhs[I] += A * F[t].dot(G[i]);
        for (int j = 0; j < 3; ++j) {
          const int J = idx[f[j]];
          if (J >= 0) trip.emplace_back(I, J, A * G[i].dot(G[j]));
        }
      }
    }
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "conjugate least-squares system is singular");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    for (int v = 0; v < nv; ++v) {
      if (idx[v] >= 0) out.values[v] = x[idx[v]];
    }
  }
  out.circulation.assign(dom.num_triangles(), 0.0);
  const double h = dom.max_edge_length();
  for (int t = 0; t < dom.num_triangles(); ++t) {
    const auto& f = dom.triangle(t);
    double c = 0.0, len = 0.0;
    for (int k = 0; k < 3; ++k) {
      c += edge_increment(dom, F, f[k], f[(k + 1) % 3]);
      len += (dom.point(f[(k + 1) % 3]) - dom.point(f[k])).norm();
    }
    out.circulation[t] = c;
    out.max_closedness_ratio = std::max(out.max_closedness_ratio, std::abs(c) / (h * len));
    if (!dom.is_boundary(f[0]) && !dom.is_boundary(f[1]) && !dom.is_boundary(f[2])) {
      out.max_interior_closedness_ratio = std::max(out.max_interior_closedness_ratio, std::abs(c) / (h * len));
    }
  }
  // Around an interior vertex v the loop through the midpoints of its edges
  // crosses triangle (v, a, b) from mid(v, a) to mid(v, b); the per-triangle
  // field integrates exactly on it.
  for (int v = 0; v < nv; ++v) {
    if (dom.is_boundary(v)) continue;
    double c = 0.0, len = 0.0;
    for (int t : dom.vertex_triangles(v)) {
      const auto& f = dom.triangle(t);
      int k = 0;
      while (f[k] != v) ++k;
      const Vec2 d = 0.5 * (dom.point(f[(k + 2) % 3]) - dom.point(f[(k + 1) % 3]));
      c += F[t].dot(d);
      len += d.norm();
    }
    out.max_star_ratio = std::max(out.max_star_ratio, std::abs(c) / (h * len));
  }
  return out;
}

}  // namespace detail

struct ConjugateField {
  DomainPtr domain;
  std::vector<double> psi;
  std::vector<Vec2> form;  // per triangle: grad Psi = (-q/W, p/W)
  std::vector<double> circulation;
  double max_closedness_ratio = 0.0;
  double max_interior_closedness_ratio = 0.0;
  double max_star_ratio = 0.0;
  int root = 0;

  const MultiDomain& dom() const { return *domain; }

  /// Midpoint-rule increment of dPsi along the mesh edge a -> b.
  double increment(int a, int b) const { return detail::edge_increment(dom(), form, a, b); }

  /// Largest |Psi(a) - Psi(b)| / |a - b| over mesh edges.
  double lipschitz_ratio() const {
    double worst = 0.0;
    for (const auto& [k, e] : dom().edges()) {
      worst = std::max(worst, std::abs(psi[e.a] - psi[e.b]) / (dom().point(e.a) - dom().point(e.b)).norm());
    }
    return worst;
  }
};

/// Integrates dPsi from `root` (Psi(root) = 0). Tree sums pick up the
/// large corner circulations of infinite data, so the default is the
/// least-squares primitive.
inline ConjugateField conjugate_form(const DiscreteSolution& sol, int root = 0,
                                     Integration method = Integration::LeastSquares, bool check = true) {
  const auto& dom = sol.dom();
  ConjugateField c;
  c.domain = sol.domain;
  c.root = root;
  c.form.resize(dom.num_triangles());
  for (int t = 0; t < dom.num_triangles(); ++t) {
    c.form[t] = Vec2(-sol.grad[t].y(), sol.grad[t].x()) / sol.W[t];
  }
  auto f = detail::integrate_form(dom, c.form, root, method);
  c.psi = std::move(f.values);
  c.circulation = std::move(f.circulation);
  c.max_closedness_ratio = f.max_closedness_ratio;
  c.max_interior_closedness_ratio = f.max_interior_closedness_ratio;
  c.max_star_ratio = f.max_star_ratio;
  if (check && c.max_star_ratio > 10.0 * kClosednessConstant) {
    throw Error(ErrorCode::ClosednessViolation,
                "loop integral of dPsi reaches " + std::to_string(c.max_star_ratio) + " h len");
  }
  return c;
}

/// Sum of edge increments along a vertex chain of mesh edges.
inline double flux_along(const ConjugateField& field, const std::vector<int>& path) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!field.dom().find_edge(path[i], path[i + 1])) {
      throw Error(ErrorCode::SchemaError, "path step " + std::to_string(path[i]) + "->" +
                                              std::to_string(path[i + 1]) + " is not a mesh edge");
    }
    s += field.increment(path[i], path[i + 1]);
  }
  return s;
}

/// d(xi, eta) = (I + G/W) d(x, y) with G = [[1+p^2, pq], [pq, 1+q^2]].
inline Mat2 conformal_differential(const Vec2& g) {
  const double W = std::sqrt(1.0 + g.squaredNorm());
  Mat2 G;
  G << 1.0 + g.x() * g.x(), g.x() * g.y(), g.x() * g.y(), 1.0 + g.y() * g.y();
  return Mat2::Identity() + G / W;
}

struct ConformalMesh {
  DomainPtr domain;
  std::vector<Vec2> phi;          // (xi, eta) per vertex
  std::vector<double> jacobian;   // det of the integrated P1 map per triangle
  std::vector<double> expected;   // W + 2 + 1/W per triangle
  double max_closedness_ratio = 0.0;
  double min_stretch = 0.0;       // min over edges of |dPhi| - |d(x,y)|

  std::vector<double> area;       // source triangle areas

  double max_jacobian_error() const {
    double e = 0.0;
    for (std::size_t t = 0; t < jacobian.size(); ++t) e = std::max(e, std::abs(jacobian[t] - expected[t]) / expected[t]);
    return e;
  }

  /// Area-weighted mean of the per-triangle relative Jacobian error.
  double mean_jacobian_error() const {
    double e = 0.0, a = 0.0;
    for (std::size_t t = 0; t < jacobian.size(); ++t) {
      e += area[t] * std::abs(jacobian[t] - expected[t]) / expected[t];
      a += area[t];
    }
    return e / a;
  }
};

inline ConformalMesh conformal_map(const DiscreteSolution& sol, int root = 0,
                                   Integration method = Integration::SpanningTree) {
  const auto& dom = sol.dom();
  const int nt = dom.num_triangles();
  std::vector<Vec2> fx(nt), fy(nt);
  ConformalMesh m;
  m.domain = sol.domain;
  m.expected.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const Mat2 D = conformal_differential(sol.grad[t]);
    fx[t] = D.row(0).transpose();
    fy[t] = D.row(1).transpose();
    m.expected[t] = sol.W[t] + 2.0 + 1.0 / sol.W[t];
  }
  auto xi = detail::integrate_form(dom, fx, root, method);
  auto eta = detail::integrate_form(dom, fy, root, method);
  m.max_closedness_ratio = std::max(xi.max_closedness_ratio, eta.max_closedness_ratio);
  m.phi.resize(dom.num_vertices());
  // the forms integrate to Phi - Phi(root); anchor Phi(root) = 2 * root point
  for (int v = 0; v < dom.num_vertices(); ++v) m.phi[v] = Vec2(xi.values[v], eta.values[v]) + 2.0 * dom.point(root);
  m.jacobian.resize(nt);
  m.area.resize(nt);
  for (int t = 0; t < nt; ++t) {
    m.area[t] = dom.area(t);
    const auto& f = dom.triangle(t);
    m.jacobian[t] = signed_area(m.phi[f[0]], m.phi[f[1]], m.phi[f[2]]) / dom.area(t);
  }
  m.min_stretch = 1e300;
  for (const auto& [k, e] : dom.edges()) {
    m.min_stretch = std::min(m.min_stretch, (m.phi[e.a] - m.phi[e.b]).norm() - (dom.point(e.a) - dom.point(e.b)).norm());
  }
  if (m.max_closedness_ratio > 10.0 * kClosednessConstant * (1.0 + sol.max_W())) {
    throw Error(ErrorCode::ClosednessViolation,
                "loop integral of dPhi reaches " + std::to_string(m.max_closedness_ratio) + " h len");
  }
  return m;
}

/// Per-triangle differential of the conjugate immersion X*: the graph
/// differential dX composed with a quarter turn in the conformal chart,
/// dX* = dX D^{-1} R D with D = dPhi. Row k is the covector of x_k*.
inline Eigen::Matrix<double, 3, 2> conjugate_differential(const Vec2& g) {
  Eigen::Matrix<double, 3, 2> dX;
  dX << 1.0, 0.0, 0.0, 1.0, g.x(), g.y();
  const Mat2 D = conformal_differential(g);
  Mat2 R;
  R << 0.0, 1.0, -1.0, 0.0;
  return dX * D.inverse() * R * D;
}

struct ConjugateSurface {
  DomainPtr domain;
  std::vector<Vec3> X;               // M* vertex positions
  double max_period_ratio = 0.0;     // closedness of the x1*, x2* forms
  double max_edge_distortion = 0.0;  // relative, against the graph M

  const MultiDomain& dom() const { return *domain; }
};

/// Graph vertex positions (x, y, u).
inline std::vector<Vec3> graph_positions(const DiscreteSolution& sol) {
  std::vector<Vec3> X(sol.dom().num_vertices());
  for (int v = 0; v < sol.dom().num_vertices(); ++v) X[v] = Vec3(sol.dom().point(v).x(), sol.dom().point(v).y(), sol.u[v]);
  return X;
}

inline ConjugateSurface conjugate_surface(const DiscreteSolution& sol, const ConjugateField& field,
                                          const ConformalMesh& cmesh, Integration method = Integration::SpanningTree) {
  (void)cmesh;  // the conformal chart enters through its per-triangle differential
  const auto& dom = sol.dom();
  const int nt = dom.num_triangles();
  std::vector<Vec2> f1(nt), f2(nt);
  for (int t = 0; t < nt; ++t) {
    const auto J = conjugate_differential(sol.grad[t]);
    f1[t] = J.row(0).transpose();
    f2[t] = J.row(1).transpose();
  }
  auto x1 = detail::integrate_form(dom, f1, field.root, method);
  auto x2 = detail::integrate_form(dom, f2, field.root, method);
  ConjugateSurface s;
  s.domain = sol.domain;
  s.max_period_ratio = std::max(x1.max_closedness_ratio, x2.max_closedness_ratio);
  s.X.resize(dom.num_vertices());
  for (int v = 0; v < dom.num_vertices(); ++v) s.X[v] = Vec3(x1.values[v], x2.values[v], field.psi[v]);
  const auto G = graph_positions(sol);
  for (const auto& [k, e] : dom.edges()) {
    const double a = (G[e.a] - G[e.b]).norm();
    const double b = (s.X[e.a] - s.X[e.b]).norm();
    s.max_edge_distortion = std::max(s.max_edge_distortion, std::abs(a - b) / a);
  }
  if (s.max_period_ratio > 10.0 * kClosednessConstant * (1.0 + sol.max_W())) {
    throw Error(ErrorCode::PeriodViolation,
                "conjugate differentials fail to close: " + std::to_string(s.max_period_ratio) + " h len");
  }
  return s;
}

/// Sigma = M* united with its mirror image in {x3 = 0}.
struct ReflectedSurface {
  std::vector<Vec3> X;
  std::vector<Tri> triangles;
  std::vector<int> source;   // M* vertex of each Sigma vertex
  std::vector<bool> mirror;  // vertex lies on the mirrored copy (glued vertices: false)
  std::vector<bool> mirrored_triangle;
  bool degenerate = false;   // M* lies in the plane: the union is a doubled sheet
  double max_plane_offset = 0.0;

  int euler_characteristic() const {
    std::unordered_map<std::uint64_t, int> edges;
    for (const auto& f : triangles) {
      for (int k = 0; k < 3; ++k) ++edges[edge_key(f[k], f[(k + 1) % 3])];
    }
    return static_cast<int>(X.size()) - static_cast<int>(edges.size()) + static_cast<int>(triangles.size());
  }

  /// Closed boundary loops (each edge used by one triangle).
  int boundary_loops() const {
    std::unordered_map<std::uint64_t, int> count;
    for (const auto& f : triangles) {
      for (int k = 0; k < 3; ++k) ++count[edge_key(f[k], f[(k + 1) % 3])];
    }
    std::vector<std::vector<int>> adj(X.size());
    for (const auto& [key, c] : count) {
      if (c != 1) continue;
      const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::vector<bool> seen(X.size(), false);
    int loops = 0;
    for (std::size_t v = 0; v < X.size(); ++v) {
      if (adj[v].empty() || seen[v]) continue;
      ++loops;
      std::vector<int> stack{static_cast<int>(v)};
      seen[v] = true;
      while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        for (int y : adj[x]) {
          if (!seen[y]) {
            seen[y] = true;
            stack.push_back(y);
          }
        }
      }
    }
    return loops;
  }
};

/// Reflects M* through {x3 = 0}. Vertices in `glue` (the symmetry curves)
/// are identified with their mirror images; each must satisfy |x3*| <= tol.
inline ReflectedSurface reflect_union(const ConjugateSurface& surface, const std::vector<int>& glue, double tol) {
  const int nv = static_cast<int>(surface.X.size());
  ReflectedSurface out;
  for (int v : glue) {
    out.max_plane_offset = std::max(out.max_plane_offset, std::abs(surface.X[v].z()));
  }
  if (out.max_plane_offset > tol) {
    throw Error(ErrorCode::NonPlanarBoundary, "symmetry curve leaves the plane by " +
                                                  std::to_string(out.max_plane_offset) + " > " + std::to_string(tol));
  }
  double zmax = 0.0;
  for (const auto& x : surface.X) zmax = std::max(zmax, std::abs(x.z()));
  out.degenerate = zmax <= tol;

  std::vector<bool> glued(nv, false);
  for (int v : glue) glued[v] = true;
  out.X = surface.X;
  out.source.resize(nv);
  std::iota(out.source.begin(), out.source.end(), 0);
  out.mirror.assign(nv, false);
  for (int v : glue) out.X[v].z() = 0.0;
  std::vector<int> twin(nv);
  for (int v = 0; v < nv; ++v) {
    if (glued[v]) {
      twin[v] = v;
      continue;
    }
    twin[v] = static_cast<int>(out.X.size());
    out.X.emplace_back(surface.X[v].x(), surface.X[v].y(), -surface.X[v].z());
    out.source.push_back(v);
    out.mirror.push_back(true);
  }
  for (const auto& f : surface.dom().triangles()) {
    out.triangles.push_back(f);
    out.mirrored_triangle.push_back(false);
  }
  for (const auto& f : surface.dom().triangles()) {
    out.triangles.push_back({twin[f[0]], twin[f[2]], twin[f[1]]});
    out.mirrored_triangle.push_back(true);
  }
  return out;
}

}  // namespace msekit
