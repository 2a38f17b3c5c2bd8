#pragma once
// run(spec): dispatch a problem spec to the solver modules and collect a
// deterministic report plus mesh and table artifacts.

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "msekit/conjfield.hpp"
#include "msekit/divscan.hpp"
#include "msekit/io.hpp"
#include "msekit/rnoid.hpp"

#ifndef MSEKIT_VERSION
#define MSEKIT_VERSION "dev"
#endif

namespace msekit::cli {

using io::json;
namespace fs = std::filesystem;

/// An error raised inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& e)
      : Error(e.code(), "stage '" + stage + "': " + strip(e.what())), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  static std::string strip(const std::string& w) {
    const auto p = w.find(": ");
    return p == std::string::npos ? w : w.substr(p + 2);
  }
  std::string stage_;
};

struct RunOptions {
  fs::path out = ".";
  std::uint64_t seed = 0;
};

struct RunResult {
  json report;   // deterministic
  json timings;  // wall-clock seconds per stage, written to a sidecar
  bool gates_passed = true;
};

namespace detail {

class Run {
 public:
  Run(const io::ProblemSpec& spec, RunOptions opt) : spec_(spec), opt_(std::move(opt)) {
    fs::create_directories(opt_.out);
    res_.report["tool"] = "msekit";
    res_.report["version"] = MSEKIT_VERSION;
    res_.report["mode"] = io::to_string(spec.mode);
    res_.report["seed"] = opt_.seed;
    res_.report["config"] = io::problem_to_json(spec);
    res_.report["checks"] = json::array();
    res_.report["artifacts"] = json::array();
    res_.timings = json::object();
  }

  template <class F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      res_.timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        finish();
      } else {
        auto r = f();
        finish();
        return r;
      }
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      finish();
      write_partial();
      throw StageError(name, e);
    }
  }

  /// Records a measured value against its threshold. Non-gating checks are
  /// diagnostics and do not affect the exit status.
  void check(const std::string& name, double value, double threshold, bool pass, bool gate = true) {
    res_.report["checks"].push_back(
        {{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}, {"gate", gate}});
    if (gate && !pass) res_.gates_passed = false;
  }
  void check_le(const std::string& name, double value, double threshold, bool gate = true) {
    check(name, value, threshold, value <= threshold, gate);
  }
  void check_ge(const std::string& name, double value, double threshold, bool gate = true) {
    check(name, value, threshold, value >= threshold, gate);
  }

  fs::path artifact(const std::string& name) {
    res_.report["artifacts"].push_back(name);
    fs::create_directories((opt_.out / name).parent_path());
    return opt_.out / name;
  }

  json& results() { return res_.report["results"]; }
  const io::ProblemSpec& spec() const { return spec_; }

  RunResult finish() {
    res_.report["pass"] = res_.gates_passed;
    io::write_json(opt_.out / "report.json", res_.report);
    io::write_json(opt_.out / "timings.json", res_.timings);
    return res_;
  }

 private:
  void write_partial() {
    res_.report["pass"] = false;
    try {
      io::write_json(opt_.out / "report.partial.json", res_.report);
    } catch (const Error&) {
    }
  }

  io::ProblemSpec spec_;
  RunOptions opt_;
  RunResult res_;
};

inline int nearest_vertex(const MultiDomain& d, const Vec2& p) {
  int best = 0;
  for (int v = 1; v < d.num_vertices(); ++v) {
    if ((d.point(v) - p).squaredNorm() < (d.point(best) - p).squaredNorm()) best = v;
  }
  return best;
}

/// Per-vertex W as the area-weighted mean over incident triangles.
inline std::vector<double> vertex_W(const DiscreteSolution& sol) {
  const auto& d = sol.dom();
  std::vector<double> W(d.num_vertices(), 0.0), A(d.num_vertices(), 0.0);
  for (int t = 0; t < d.num_triangles(); ++t) {
    for (int v : d.triangle(t)) {
      W[v] += d.area(t) * sol.W[t];
      A[v] += d.area(t);
    }
  }
  for (int v = 0; v < d.num_vertices(); ++v) W[v] = A[v] > 0 ? W[v] / A[v] : 1.0;
  return W;
}

inline double domain_diameter(const MultiDomain& d) {
  Vec2 lo = d.point(0), hi = d.point(0);
  for (int v = 1; v < d.num_vertices(); ++v) {
    lo = lo.cwiseMin(d.point(v));
    hi = hi.cwiseMax(d.point(v));
  }
  return (hi - lo).norm();
}

inline json point(const Vec2& p) { return json::array({p.x(), p.y()}); }
inline json point(const Vec3& p) { return json::array({p.x(), p.y(), p.z()}); }

inline void write_graph_obj(const fs::path& path, const DiscreteSolution& sol) {
  io::write_obj(path, graph_positions(sol), sol.dom().triangles());
}

/// Ramp levels with the solver trace of each level.
inline json level_json(const DiscreteSolution& s) {
  return {{"ramp_level", s.ramp_level},
          {"newton_iterations", static_cast<int>(s.trace.decrement.size())},
          {"converged", s.trace.converged},
          {"residual", s.residual},
          {"max_W", s.max_W()},
          {"max_principle", s.max_principle}};
}

struct Solved {
  DomainPtr dom;
  BoundaryData data;
  std::vector<DiscreteSolution> seq;
  std::optional<int> anchor;
};

/// Mesh, boundary data and solves of a domain spec. With infinite data the
/// ramp sequence runs behind the solvability gate unless `gated` is false.
inline Solved solve_spec(Run& run, bool gated) {
  const auto& spec = run.spec();
  Solved s;
  s.dom = run.stage("mesh", [&] { return share(io::build_domain(*spec.domain, spec.h)); });
  s.data = run.stage("boundary", [&] {
    auto d = io::boundary_data(spec, *s.dom);
    d.validate(*s.dom);
    return d;
  });
  if (spec.anchor) s.anchor = nearest_vertex(*s.dom, *spec.anchor);
  SolverOptions opt;
  opt.tol = spec.tol;
  const RampSchedule ramp{spec.ramp};
  s.seq = run.stage("solve", [&] {
    if (!s.data.has_infinite()) {
      return std::vector<DiscreteSolution>{
          solve_dirichlet(s.dom, ramp_values(*s.dom, s.data, ramp.levels.back()), opt)};
    }
    if (gated) return solve_infinite(s.dom, s.data, ramp, s.anchor, opt);
    ramp.validate();
    return solve_ramp_sequence(s.dom, s.data, ramp, s.anchor, opt);
  });
  json levels = json::array();
  bool converged = true;
  for (const auto& sol : s.seq) {
    levels.push_back(level_json(sol));
    converged = converged && sol.trace.converged;
  }
  run.results()["levels"] = levels;
  run.results()["num_vertices"] = s.dom->num_vertices();
  run.results()["num_triangles"] = s.dom->num_triangles();
  run.check("newton_converged", converged ? 1.0 : 0.0, 1.0, converged);
  return s;
}

// ------------------------------------------------------------------ modes

inline void run_check(Run& run) {
  const auto& spec = run.spec();
  const auto dom = run.stage("mesh", [&] { return io::build_domain(*spec.domain, spec.h); });
  const auto data = run.stage("boundary", [&] { return io::boundary_data(spec, dom); });
  const auto v = run.stage("jscheck", [&] { return check_solvability(dom, data); });
  json verdict;
  verdict["status"] = to_string(v.status);
  verdict["witness_vertices"] = v.witness ? json(v.witness->vertices) : json::array();
  verdict["alpha"] = v.witness ? json(v.witness->alpha) : json(nullptr);
  verdict["beta"] = v.witness ? json(v.witness->beta) : json(nullptr);
  verdict["gamma"] = v.witness ? json(v.witness->gamma) : json(nullptr);
  run.results()["verdict"] = verdict;
  run.results()["subdomains_checked"] = v.subdomains_checked;
  io::write_json(run.artifact("verdict.json"), verdict);
}

inline void run_solve(Run& run) {
  const auto s = solve_spec(run, true);
  run.stage("write", [&] { write_graph_obj(run.artifact("graph.obj"), s.seq.back()); });
}

inline void run_conjugate(Run& run) {
  const auto& spec = run.spec();
  const auto s = solve_spec(run, true);
  const auto& sol = s.seq.back();
  const int root = s.anchor.value_or(0);
  const double eps = 10.0 * spec.h;
  const auto field = run.stage("conjugate", [&] { return conjugate_form(sol, root); });
  const auto cm = run.stage("conformal", [&] { return conformal_map(sol, root); });
  const auto surf = run.stage("surface", [&] { return conjugate_surface(sol, field, cm); });
  for (int v : spec.glue) {
    if (v < 0 || v >= s.dom->num_vertices()) {
      throw StageError("reflect", Error(ErrorCode::SchemaError, "field 'glue': vertex " + std::to_string(v) +
                                                                    " is not a mesh vertex"));
    }
  }
  const double plane_tol = 5.0 * spec.h * domain_diameter(*s.dom);
  const auto sig = run.stage("reflect", [&] { return reflect_union(surf, spec.glue, plane_tol); });

  run.check_le("interior_closedness_ratio", field.max_interior_closedness_ratio, kClosednessConstant);
  run.check_le("psi_lipschitz_ratio", field.lipschitz_ratio(), 1.0 + eps);
  run.check_ge("conformal_min_stretch", cm.min_stretch, -eps);
  run.check_le("surface_edge_distortion", surf.max_edge_distortion, 5.0 * spec.h, false);
  run.check_le("plane_offset", sig.max_plane_offset, plane_tol);
  run.results()["euler_characteristic"] = sig.euler_characteristic();
  run.results()["boundary_loops"] = sig.boundary_loops();
  run.results()["sigma_vertices"] = sig.X.size();

  run.stage("write", [&] {
    const auto Wv = vertex_W(sol);
    const auto K = angle_defects(sol, sig);
    std::vector<double> psi(sig.X.size()), W(sig.X.size());
    for (std::size_t v = 0; v < sig.X.size(); ++v) {
      psi[v] = field.psi[sig.source[v]];
      W[v] = Wv[sig.source[v]];
    }
    io::write_obj(run.artifact("sigma.obj"), sig.X, sig.triangles);
    io::write_ply(run.artifact("sigma.ply"), sig.X, sig.triangles, {{"psi", psi}, {"W", W}, {"K", K}});
    std::vector<std::vector<double>> rows;
    for (int v = 0; v < s.dom->num_vertices(); ++v) {
      rows.push_back({static_cast<double>(v), s.dom->point(v).x(), s.dom->point(v).y(), field.psi[v]});
    }
    io::write_csv(run.artifact("psi.csv"), {"vertex_id", "x", "y", "psi"}, rows);
  });
}

inline void run_diverge(Run& run) {
  const auto s = solve_spec(run, false);
  std::optional<DivergenceReport> rep;
  run.stage("divscan", [&] {
    try {
      rep = detect_divergence_lines(s.seq, s.data);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoDivergence) throw;
    }
  });
  json lines = json::array();
  if (rep) {
    for (const auto& l : rep->lines) {
      // at the last index of the sequence
      const double spread = l.angular_spread_deg.back();
      const double sat = std::min({l.saturation.back()[0], l.saturation.back()[1], l.saturation.back()[2]});
      lines.push_back({{"from", point(l.at(l.s_min))},
                       {"to", point(l.at(l.s_max))},
                       {"length", l.length()},
                       {"straightness", l.straightness},
                       {"limit_normal", point(l.limit_normal)},
                       {"angular_spread_deg", spread},
                       {"saturation", sat},
                       {"vertices", l.vertices.size()}});
    }
    run.results()["crossing_violations"] = rep->crossing_violations;
  }
  run.results()["verdict"] = rep ? "DivergenceLines" : "NoDivergence";
  run.results()["lines"] = lines;
  run.stage("write", [&] {
    const auto& d = *s.dom;
    for (std::size_t n = 0; n < s.seq.size(); ++n) {
      std::vector<std::vector<double>> rows;
      for (int t = 0; t < d.num_triangles(); ++t) {
        const Vec2 c = d.centroid(t);
        rows.push_back({c.x(), c.y(), s.seq[n].W[t]});
      }
      io::write_csv(run.artifact("W_" + std::to_string(n) + ".csv"), {"x", "y", "W"}, rows);
    }
  });
}

inline void run_scherk(Run& run) {
  const auto& spec = run.spec();
  const double half = spec.side / 2.0;
  if (!(half < std::numbers::pi / 2)) {
    throw StageError("mesh", Error(ErrorCode::SchemaError, "field 'side': must be below pi"));
  }
  const auto dom = run.stage("mesh", [&] { return share(make_square(spec.side, spec.h)); });
  SolverOptions opt;
  opt.tol = spec.tol;
  const auto sol = run.stage("solve", [&] {
    return solve_dirichlet(dom, boundary_samples(*dom, [](const Vec2& p) { return scherk_exact(p.x(), p.y()); }), opt);
  });
  double err = 0.0;
  for (int v = 0; v < dom->num_vertices(); ++v) {
    const Vec2 p = dom->point(v);
    err = std::max(err, std::abs(sol.u[v] - scherk_exact(p.x(), p.y())));
  }
  run.results()["levels"] = json::array({level_json(sol)});
  run.results()["num_vertices"] = dom->num_vertices();
  run.check("newton_converged", sol.trace.converged ? 1.0 : 0.0, 1.0, sol.trace.converged);
  // 0.01 at h = 0.02, scaled with the second-order rate for coarser meshes
  run.check_le("max_error", err, 0.01 * std::max(1.0, std::pow(spec.h / 0.02, 2)));
  run.stage("write", [&] { write_graph_obj(run.artifact("graph.obj"), sol); });
}

inline json level_checkpoint(const ExhaustionLevel& lev) {
  return {{"k", lev.k}, {"M", lev.M}, {"anchor", lev.anchor}, {"u", lev.sol.u}, {"W", lev.sol.W}};
}

inline void run_rnoid(Run& run) {
  const auto& spec = run.spec();
  const auto poly = run.stage("fluxes", [&] { return flux_polygon_from_vectors(spec.fluxes); });
  const auto disk = run.stage("disk", [&] { return find_embedded_disk(poly); });
  ExhaustionSchedule sched;
  sched.k = spec.schedule->k;
  sched.m0 = spec.schedule->m0;
  sched.h = spec.schedule->h;
  sched.grading = spec.schedule->grading;
  sched.anchor = spec.anchor;
  sched.solver.tol = spec.tol;
  const auto res = run.stage("pipeline", [&] { return build_rnoid(disk, sched); });
  const double h = res.h();

  run.stage("checkpoints", [&] {
    json d;
    d["corners"] = json::array();
    for (const auto& c : disk.polygon.corners) d["corners"].push_back(point(c));
    d["scale"] = res.run.scale;
    d["anchor"] = point(res.run.anchor_point);
    io::write_json(run.artifact("checkpoints/01_disk.json"), d);
    for (std::size_t i = 0; i < res.run.levels.size(); ++i) {
      io::write_json(run.artifact("checkpoints/02_level_" + std::to_string(i) + ".json"),
                     level_checkpoint(res.run.levels[i]));
    }
    io::write_json(run.artifact("checkpoints/03_conjugate.json"), {{"root", res.field.root}, {"psi", res.field.psi}});
    std::vector<Vec3> X = res.surface.X;
    io::write_obj(run.artifact("checkpoints/04_mstar.obj"), X, res.surface.dom().triangles());
  });

  double corner = 0.0;
  for (const auto& lev : res.corner_flux) {
    for (double f : lev) corner = std::max(corner, std::abs(f));
  }
  double max_target = 0.0;
  for (const auto& t : res.targets) max_target = std::max(max_target, t.norm());
  const auto& c = res.curvature;
  run.check_le("corner_flux", corner, 2.0 * h);
  run.check_le("psi_corner_spread", res.psi_corner_spread, 2.0 * h);
  run.check_ge("psi_interior_min", res.psi_interior_min, -2.0 * h);
  run.check_le("boundary_planarity", res.sigma.max_plane_offset, res.planarity_tol);
  run.check_le("end_flux_error", res.flux_error, 0.1 * max_target);
  run.check_ge("strong_symmetry_fraction", res.symmetry.fraction(), 0.99, false);
  run.check_le("curvature_tail_ratio", c.max_ratio, 0.6, false);
  run.check_le("gauss_degree_relative_error",
               std::abs(c.degree_estimate - c.degree_oracle) / std::max(1, c.degree_oracle), 0.1, false);

  json r;
  r["ends"] = res.ends();
  r["euler_characteristic"] = res.sigma.euler_characteristic();
  r["boundary_loops"] = res.sigma.boundary_loops();
  r["fluxes"] = json::array();
  r["targets"] = json::array();
  for (const auto& f : res.fluxes) r["fluxes"].push_back(point(f));
  for (const auto& f : res.targets) r["targets"].push_back(point(f));
  r["successive_difference"] = res.run.successive_difference;
  r["total_curvature"] = c.total;
  r["degree_estimate"] = c.degree_estimate;
  r["degree_oracle"] = c.degree_oracle;
  r["symmetry_checked"] = res.symmetry.checked;
  r["symmetry_violations"] = res.symmetry.violations;
  run.results() = r;

  run.stage("write", [&] {
    const auto& sol = res.run.final_level().sol;
    const auto Wv = vertex_W(sol);
    std::vector<double> psi(res.sigma.X.size()), W(res.sigma.X.size());
    for (std::size_t v = 0; v < res.sigma.X.size(); ++v) {
      psi[v] = res.field.psi[res.sigma.source[v]];
      W[v] = Wv[res.sigma.source[v]];
    }
    io::write_obj(run.artifact("sigma.obj"), res.sigma.X, res.sigma.triangles);
    io::write_ply(run.artifact("sigma.ply"), res.sigma.X, res.sigma.triangles,
                  {{"psi", psi}, {"W", W}, {"K", c.vertex}});
    io::write_json(run.artifact("rnoid.json"), r);
  });
}

}  // namespace detail

/// Runs one spec, writing report.json, timings.json and the mode's
/// artifacts into opt.out. Errors are rethrown as StageError.
inline RunResult run(const io::ProblemSpec& spec, const RunOptions& opt = {}) {
  detail::Run r(spec, opt);
  r.results() = json::object();
  switch (spec.mode) {
    case io::Mode::Check: detail::run_check(r); break;
    case io::Mode::Solve: detail::run_solve(r); break;
    case io::Mode::Conjugate: detail::run_conjugate(r); break;
    case io::Mode::Diverge: detail::run_diverge(r); break;
    case io::Mode::Rnoid: detail::run_rnoid(r); break;
    case io::Mode::Scherk: detail::run_scherk(r); break;
  }
  return r.finish();
}

}  // namespace msekit::cli
