#pragma once

// P1 discretization of the minimal-surface equation: u minimizes
// sum_T |T| sqrt(1 + |grad u|^2) with Dirichlet data on every boundary
// vertex. Infinite data are approached by ramp levels.

#include "msekit/flatgeom.hpp"
#include "msekit/jscheck.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace msekit {

using DomainPtr = std::shared_ptr<const MultiDomain>;

inline DomainPtr share(MultiDomain dom) { return std::make_shared<const MultiDomain>(std::move(dom)); }

struct SolverOptions {
  double tol = 1e-10;      // Newton decrement in the energy norm
  int max_iter = 200;
  int polish_steps = 1;    // full Newton steps taken after convergence
  bool throw_on_failure = true;
};

struct NewtonTrace {
  std::vector<double> decrement;
  std::vector<double> energy;
  std::vector<double> step;
  int picard_steps = 0;
  bool converged = false;
};

struct DiscreteSolution {
  DomainPtr domain;
  std::vector<double> u;
  std::vector<Vec2> grad;  // (p, q) per triangle, developed coordinates
  std::vector<double> W;   // per triangle
  double ramp_level = 0.0;
  NewtonTrace trace;
  double residual = 0.0;
  bool max_principle = true;

  const MultiDomain& dom() const { return *domain; }

  double energy() const {
    double e = 0.0;
    for (int t = 0; t < dom().num_triangles(); ++t) e += dom().area(t) * W[t];
    return e;
  }

  double max_W() const { return *std::max_element(W.begin(), W.end()); }

  /// Linear interpolation at a located point.
  double interpolate(const Locator::Hit& h) const {
    const auto& f = dom().triangle(h.tri);
    return h.bary[0] * u[f[0]] + h.bary[1] * u[f[1]] + h.bary[2] * u[f[2]];
  }

  void update_gradients() {
    const auto& d = dom();
    grad.resize(d.num_triangles());
    W.resize(d.num_triangles());
    for (int t = 0; t < d.num_triangles(); ++t) {
      const auto& f = d.triangle(t);
      const auto g = hat_gradients(d.point(f[0]), d.point(f[1]), d.point(f[2]));
      grad[t] = u[f[0]] * g[0] + u[f[1]] * g[1] + u[f[2]] * g[2];
      W[t] = std::sqrt(1.0 + grad[t].squaredNorm());
    }
  }
};

/// Newton solver bound to one mesh; the sparsity pattern is analysed once.
class MseSolver {
 public:
  explicit MseSolver(DomainPtr dom) : dom_(std::move(dom)) {
    const auto& d = *dom_;
    const int nv = d.num_vertices();
    free_index_.assign(nv, -1);
    for (int v = 0; v < nv; ++v) {
      if (!d.is_boundary(v)) free_index_[v] = n_free_++;
    }
    gradients_.resize(d.num_triangles());
    areas_.resize(d.num_triangles());
    for (int t = 0; t < d.num_triangles(); ++t) {
      const auto& f = d.triangle(t);
      gradients_[t] = hat_gradients(d.point(f[0]), d.point(f[1]), d.point(f[2]));
      areas_[t] = d.area(t);
    }
  }

  const MultiDomain& dom() const { return *dom_; }
  int num_free() const { return n_free_; }

  /// Discrete harmonic function with the given boundary values.
  std::vector<double> harmonic_extension(const std::vector<double>& values) const {
    std::vector<double> u = values;
    for (int v = 0; v < dom().num_vertices(); ++v) {
      if (!dom().is_boundary(v)) u[v] = 0.0;
    }
    if (n_free_ == 0) return u;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_free_);
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < dom().num_triangles(); ++t) {
      const auto& f = dom().triangle(t);
      for (int i = 0; i < 3; ++i) {
        const int I = free_index_[f[i]];
        if (I < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const double k = areas_[t] * gradients_[t][i].dot(gradients_[t][j]);
          const int J = free_index_[f[j]];
          if (J >= 0) {
            trip.emplace_back(I, J, k);
          } else {
            rhs[I] -= k * u[f[j]];
          }
        }
      }
    }
    Eigen::SparseMatrix<double> K(n_free_, n_free_);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> llt(K);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "stiffness factorization failed");
    const Eigen::VectorXd x = llt.solve(rhs);
    for (int v = 0; v < dom().num_vertices(); ++v) {
      if (free_index_[v] >= 0) u[v] = x[free_index_[v]];
    }
    return u;
  }

  /// Minimizes the discrete area with the boundary entries of `values`
  /// held fixed. `initial` (full vertex vector) defaults to the harmonic
  /// extension; its boundary entries are overwritten.
  DiscreteSolution solve(const std::vector<double>& values, std::optional<std::vector<double>> initial = {},
                         const SolverOptions& opt = {}) {
    const auto& d = dom();
    const int nv = d.num_vertices();
    if (static_cast<int>(values.size()) != nv) throw Error(ErrorCode::SchemaError, "boundary value vector has wrong size");
    for (int v = 0; v < nv; ++v) {
      if (d.is_boundary(v) && !std::isfinite(values[v])) {
        throw Error(ErrorCode::SchemaError, "non-finite boundary value at vertex " + std::to_string(v));
      }
    }
    std::vector<double> u = initial ? *initial : harmonic_extension(values);
    for (int v = 0; v < nv; ++v) {
      if (d.is_boundary(v)) u[v] = values[v];
    }

    DiscreteSolution sol;
    sol.domain = dom_;
    double E = energy(u);
    int polish_left = opt.polish_steps;
    for (int it = 0; it < opt.max_iter && n_free_ > 0; ++it) {
      Eigen::VectorXd g;
      assemble(u, g, true);
      Eigen::VectorXd delta;
      bool newton_ok = factor_and_solve(g, delta);
      double lambda2 = newton_ok ? -g.dot(delta) : -1.0;
      if (!newton_ok || !(lambda2 >= 0.0)) {
        assemble(u, g, false);
        newton_ok = factor_and_solve(g, delta);
        lambda2 = -g.dot(delta);
        ++sol.trace.picard_steps;
        if (!newton_ok || !(lambda2 >= 0.0)) break;
      }
      const double lambda = std::sqrt(lambda2);
      sol.trace.decrement.push_back(lambda);
      sol.trace.energy.push_back(E);
      if (lambda <= opt.tol) {
        sol.trace.converged = true;
        if (polish_left-- <= 0) break;
        // in the quadratic regime a full step only improves the iterate
        apply(u, delta, 1.0);
        E = energy(u);
        sol.trace.step.push_back(1.0);
        continue;
      }
      // Armijo backtracking; near the optimum the energy gain sits below
      // round-off, where the full Newton step is taken unchecked
      double alpha = 1.0;
      std::vector<double> trial = u;
      bool accepted = false;
      const bool quadratic_regime = lambda2 < 1e-13 * std::max(1.0, std::abs(E));
      for (int ls = 0; ls < 60; ++ls) {
        trial = u;
        apply(trial, delta, alpha);
        const double Et = energy(trial);
        if (quadratic_regime || Et <= E - 1e-4 * alpha * lambda2) {
          u.swap(trial);
          E = Et;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      sol.trace.step.push_back(accepted ? alpha : 0.0);
      if (!accepted) break;
    }
    if (n_free_ == 0) sol.trace.converged = true;

    sol.u = std::move(u);
    sol.update_gradients();
    sol.residual = sol.trace.decrement.empty() ? 0.0 : sol.trace.decrement.back();
    // discrete maximum principle
    double bmin = 1e300, bmax = -1e300, imin = 1e300, imax = -1e300;
    for (int v = 0; v < nv; ++v) {
      if (d.is_boundary(v)) {
        bmin = std::min(bmin, sol.u[v]);
        bmax = std::max(bmax, sol.u[v]);
      } else {
        imin = std::min(imin, sol.u[v]);
        imax = std::max(imax, sol.u[v]);
      }
    }
    const double slack = 1e-10 * std::max(1.0, std::max(std::abs(bmin), std::abs(bmax)));
    sol.max_principle = imin >= bmin - slack && imax <= bmax + slack;
    if (!sol.trace.converged && opt.throw_on_failure) {
      throw Error(ErrorCode::NonConvergence, "Newton stopped after " + std::to_string(sol.trace.decrement.size()) +
                                                 " iterations with decrement " + std::to_string(sol.residual));
    }
    return sol;
  }

 private:
  double energy(const std::vector<double>& u) const {
    double e = 0.0;
    for (int t = 0; t < dom().num_triangles(); ++t) {
      const auto& f = dom().triangle(t);
      const Vec2 g = u[f[0]] * gradients_[t][0] + u[f[1]] * gradients_[t][1] + u[f[2]] * gradients_[t][2];
      e += areas_[t] * std::sqrt(1.0 + g.squaredNorm());
    }
    return e;
  }

  void apply(std::vector<double>& u, const Eigen::VectorXd& delta, double alpha) const {
    for (int v = 0; v < dom().num_vertices(); ++v) {
      if (free_index_[v] >= 0) u[v] += alpha * delta[free_index_[v]];
    }
  }

  // gradient of the energy and either the Hessian (newton) or the lagged
  // diffusion matrix |T| grad phi_i . grad phi_j / W
  void assemble(const std::vector<double>& u, Eigen::VectorXd& g, bool newton) {
    g = Eigen::VectorXd::Zero(n_free_);
    trip_.clear();
    for (int t = 0; t < dom().num_triangles(); ++t) {
      const auto& f = dom().triangle(t);
      const auto& G = gradients_[t];
      const Vec2 gr = u[f[0]] * G[0] + u[f[1]] * G[1] + u[f[2]] * G[2];
      const double W = std::sqrt(1.0 + gr.squaredNorm());
      Mat2 A;
      if (newton) {
        A = (Mat2::Identity() - gr * gr.transpose() / (W * W)) / W;
      } else {
        A = Mat2::Identity() / W;
      }
      for (int i = 0; i < 3; ++i) {
        const int I = free_index_[f[i]];
        if (I < 0) continue;
        g[I] += areas_[t] * gr.dot(G[i]) / W;
        for (int j = 0; j < 3; ++j) {
          const int J = free_index_[f[j]];
          if (J < 0) continue;
          trip_.emplace_back(I, J, areas_[t] * G[i].dot(A * G[j]));
        }
      }
    }
    H_.resize(n_free_, n_free_);
    H_.setFromTriplets(trip_.begin(), trip_.end());
  }

  bool factor_and_solve(const Eigen::VectorXd& g, Eigen::VectorXd& delta) {
    if (!analysed_) {
      ldlt_.analyzePattern(H_);
      analysed_ = true;
    }
    ldlt_.factorize(H_);
    if (ldlt_.info() != Eigen::Success) return false;
    delta = ldlt_.solve(-g);
    return ldlt_.info() == Eigen::Success && delta.allFinite();
  }

  DomainPtr dom_;
  std::vector<int> free_index_;
  int n_free_ = 0;
  std::vector<std::array<Vec2, 3>> gradients_;
  std::vector<double> areas_;
  std::vector<Eigen::Triplet<double>> trip_;
  Eigen::SparseMatrix<double> H_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool analysed_ = false;
};

inline DiscreteSolution solve_dirichlet(DomainPtr dom, const std::vector<double>& values, const SolverOptions& opt = {}) {
  MseSolver s(std::move(dom));
  return s.solve(values, std::nullopt, opt);
}

/// Samples a function at the boundary vertices (interior entries are 0).
inline std::vector<double> boundary_samples(const MultiDomain& dom, const std::function<double(const Vec2&)>& f) {
  std::vector<double> v(dom.num_vertices(), 0.0);
  for (int i = 0; i < dom.num_vertices(); ++i) {
    if (dom.is_boundary(i)) v[i] = f(dom.point(i));
  }
  return v;
}

/// Increasing levels substituted for +/- infinity.
struct RampSchedule {
  std::vector<double> levels;

  void validate() const {
    if (levels.size() < 3) throw Error(ErrorCode::SchemaError, "a ramp schedule needs at least three levels");
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
      if (!(levels[i] < levels[i + 1])) throw Error(ErrorCode::SchemaError, "ramp levels must increase strictly");
    }
  }
};

/// Boundary values at ramp level M. A vertex on a finite arc takes the
/// finite value; a vertex joining a +infinity and a -infinity arc takes 0.
inline std::vector<double> ramp_values(const MultiDomain& dom, const BoundaryData& data, double M) {
  std::vector<double> v(dom.num_vertices(), 0.0);
  for (int i = 0; i < dom.num_vertices(); ++i) {
    if (!dom.is_boundary(i)) continue;
    bool plus = false, minus = false, finite = false;
    double fv = 0.0;
    for (int a : dom.vertex_arcs(i)) {
      const auto& c = data.arcs[a];
      if (c.kind == ArcKind::Finite && !finite) {
        finite = true;
        fv = c.value(dom.point(i)) * (c.scales_with_ramp ? M : 1.0);
      }
      plus |= c.kind == ArcKind::PlusInf;
      minus |= c.kind == ArcKind::MinusInf;
    }
    if (finite) {
      v[i] = fv;
    } else if (plus && minus) {
      v[i] = 0.0;
    } else {
      v[i] = plus ? M : -M;
    }
  }
  return v;
}

/// Solves at each ramp level without the solvability gate. Level j starts
/// from level j-1 plus the harmonic extension of the boundary increment.
inline std::vector<DiscreteSolution> solve_ramp_sequence(DomainPtr dom, const BoundaryData& data,
                                                         const RampSchedule& ramp, std::optional<int> anchor = {},
                                                         const SolverOptions& opt = {}) {
  data.validate(*dom);
  MseSolver solver(dom);
  std::vector<DiscreteSolution> out;
  std::vector<double> prev_values, prev_u;
  for (double M : ramp.levels) {
    const auto values = ramp_values(*dom, data, M);
    std::optional<std::vector<double>> init;
    if (!prev_u.empty()) {
      std::vector<double> inc(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) inc[i] = values[i] - prev_values[i];
      auto h = solver.harmonic_extension(inc);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += prev_u[i];
      init = std::move(h);
    }
    auto sol = solver.solve(values, init, opt);
    sol.ramp_level = M;
    prev_values = values;
    prev_u = sol.u;
    if (anchor && !data.has_finite()) {
      const double c = sol.u[*anchor];
      for (double& x : sol.u) x -= c;
    }
    out.push_back(std::move(sol));
  }
  return out;
}

/// Ramp solves behind the Jenkins-Serrin gate.
inline std::vector<DiscreteSolution> solve_infinite(DomainPtr dom, const BoundaryData& data, const RampSchedule& ramp,
                                                    std::optional<int> anchor = {}, const SolverOptions& opt = {}) {
  ramp.validate();
  const auto verdict = check_solvability(*dom, data);
  if (verdict.status == Solvability::Unsolvable) {
    std::string w;
    for (int v : verdict.witness->vertices) w += (w.empty() ? "" : ",") + std::to_string(v);
    throw Error(ErrorCode::UnsolvableConfiguration, "Jenkins-Serrin condition fails on polygon [" + w + "]");
  }
  return solve_ramp_sequence(std::move(dom), data, ramp, anchor, opt);
}

/// -ln cos x + ln cos y on the square |x|, |y| < pi/2.
inline double scherk_exact(double x, double y) {
  const double cx = std::cos(x), cy = std::cos(y);
  const double half = 0.5 * std::numbers::pi;
  if (!(std::abs(x) < half) || !(std::abs(y) < half) || !(cx > 0.0) || !(cy > 0.0)) {
    throw Error(ErrorCode::OutOfDomain, "Scherk surface is defined for |x|,|y| < pi/2");
  }
  return -std::log(cx) + std::log(cy);
}

/// Second derivatives (r, s, t) at a vertex from a quadratic least-squares
/// fit over its two-ring.
inline std::array<double, 3> recover_hessian(const DiscreteSolution& sol, int v) {
  const auto& d = sol.dom();
  std::vector<int> ring{v};
  for (int w : d.vertex_neighbors(v)) ring.push_back(w);
  const std::size_t first = ring.size();
  for (std::size_t k = 1; k < first; ++k) {
    for (int w : d.vertex_neighbors(ring[k])) {
      if (std::find(ring.begin(), ring.end(), w) == ring.end()) ring.push_back(w);
    }
  }
  const Vec2 o = d.point(v);
  Eigen::MatrixXd A(ring.size(), 6);
  Eigen::VectorXd b(ring.size());
  for (std::size_t k = 0; k < ring.size(); ++k) {
    const Vec2 p = d.point(ring[k]) - o;
    A.row(k) << 1.0, p.x(), p.y(), 0.5 * p.x() * p.x(), p.x() * p.y(), 0.5 * p.y() * p.y();
    b[k] = sol.u[ring[k]];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  return {c[3], c[4], c[5]};
}

struct SectorBoundsReport {
  double alpha = 0.0;
  std::vector<double> levels;
  std::vector<double> M;        // sup u over beta in [alpha, beta2], r <= R/4
  std::vector<double> M_prime;  // inf u over beta in [beta1, alpha], r <= R/4
  bool finite = true;
  bool M_stable = true;
  bool M_prime_stable = true;
};

/// Empirical bounds on the two sub-sectors of radius R/4 for a ramp
/// sequence on a sector with +inf on L(beta1) and -inf on L(beta2).
inline SectorBoundsReport sector_bounds_check(const SectorDomain& sector, const std::vector<DiscreteSolution>& seq,
                                              double alpha) {
  SectorBoundsReport rep;
  rep.alpha = alpha;
  const double rmax = 0.25 * sector.radius * (1.0 + 1e-12);
  const double tol = 1e-12;
  for (const auto& sol : seq) {
    double M = -1e300, Mp = 1e300;
    for (int v = 0; v < sol.dom().num_vertices(); ++v) {
      if (sector.r[v] > rmax) continue;
      // the origin belongs to every sub-sector
      const bool origin = sector.r[v] == 0.0;
      if (origin || sector.theta[v] >= alpha - tol) M = std::max(M, sol.u[v]);
      if (origin || sector.theta[v] <= alpha + tol) Mp = std::min(Mp, sol.u[v]);
    }
    rep.levels.push_back(sol.ramp_level);
    rep.M.push_back(M);
    rep.M_prime.push_back(Mp);
    rep.finite &= std::isfinite(M) && std::isfinite(Mp);
  }
  const std::size_t n = rep.M.size();
  if (n >= 2) {
    auto stable = [](double a, double b) { return std::abs(a - b) <= 0.05 * std::abs(b) + 1e-9; };
    rep.M_stable = stable(rep.M[n - 2], rep.M[n - 1]);
    rep.M_prime_stable = stable(rep.M_prime[n - 2], rep.M_prime[n - 1]);
  }
  return rep;
}

struct StripCheckReport {
  int checked = 0;
  int violations = 0;
  int worst_triangle = -1;
  double worst_margin = std::numeric_limits<double>::infinity();  // min slack over both bounds
  double eps = 0.0;
};

/// Strip [0,l] x [0,a] with x along the strip: checks |p|/W <= sqrt2 a/x + eps
/// and |q|/W >= 1 - a^2/x^2 - eps at centroids with x >= 4a.
inline StripCheckReport strip_gradient_check(const DiscreteSolution& sol, double a, double h,
                                             bool throw_on_violation = true) {
  StripCheckReport rep;
  rep.eps = 10.0 * h;
  const auto& d = sol.dom();
  for (int t = 0; t < d.num_triangles(); ++t) {
    const double x = d.centroid(t).x();
    if (x < 4.0 * a) continue;
    ++rep.checked;
    const double pw = std::abs(sol.grad[t].x()) / sol.W[t];
    const double qw = std::abs(sol.grad[t].y()) / sol.W[t];
    const double m1 = std::sqrt(2.0) * a / x + rep.eps - pw;
    const double m2 = qw - (1.0 - a * a / (x * x) - rep.eps);
    const double m = std::min(m1, m2);
    if (m < 0.0) ++rep.violations;
    if (m < rep.worst_margin) {
      rep.worst_margin = m;
      rep.worst_triangle = t;
    }
  }
  if (rep.violations > 0 && throw_on_violation) {
    throw Error(ErrorCode::EstimateViolated, std::to_string(rep.violations) + " triangles violate the strip estimate; worst " +
                                                 std::to_string(rep.worst_triangle));
  }
  return rep;
}

}  // namespace msekit
