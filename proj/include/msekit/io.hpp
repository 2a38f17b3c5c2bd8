#pragma once
// Problem specs (strict JSON), mesh and table writers.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "msekit/errors.hpp"
#include "msekit/flatgeom.hpp"
#include "msekit/jscheck.hpp"
#include "msekit/msesolve.hpp"

namespace msekit::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- writers

/// ASCII OBJ with 1-based faces.
inline void write_obj(const std::filesystem::path& path, const std::vector<Vec3>& X, const std::vector<Tri>& tris) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (const auto& x : X) out << "v " << x.x() << ' ' << x.y() << ' ' << x.z() << '\n';
  for (const auto& f : tris) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

}  // namespace detail

/// Binary little-endian PLY. Positions and the named per-vertex properties
/// are stored as doubles, faces as uchar count + int32 indices.
inline void write_ply(const std::filesystem::path& path, const std::vector<Vec3>& X, const std::vector<Tri>& tris,
                      const std::vector<std::pair<std::string, std::vector<double>>>& props = {}) {
  for (const auto& [name, v] : props) {
    if (v.size() != X.size()) throw Error(ErrorCode::SchemaError, "property " + name + " needs one value per vertex");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << X.size() << "\nproperty double x\nproperty double y\nproperty double z\n";
  for (const auto& [name, v] : props) out << "property double " << name << '\n';
  out << "element face " << tris.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (int k = 0; k < 3; ++k) detail::put_le(out, X[i][k]);
    for (const auto& [name, v] : props) detail::put_le(out, v[i]);
  }
  for (const auto& f : tris) {
    detail::put_le<std::uint8_t>(out, 3);
    for (int k = 0; k < 3; ++k) detail::put_le<std::int32_t>(out, f[k]);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

struct PlyMesh {
  std::vector<Vec3> X;
  std::vector<Tri> tris;
  std::map<std::string, std::vector<double>> props;
};

/// Reads back what write_ply produces.
inline PlyMesh read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::string line;
  std::size_t nv = 0, nf = 0;
  std::vector<std::string> names;
  bool in_vertex = false;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ss(line);
    std::string w;
    ss >> w;
    if (w == "format" && line != "format binary_little_endian 1.0") {
      throw Error(ErrorCode::SchemaError, "unsupported PLY format: " + line);
    }
    if (w == "element") {
      std::string what;
      std::size_t n = 0;
      ss >> what >> n;
      in_vertex = what == "vertex";
      (in_vertex ? nv : nf) = n;
    } else if (w == "property" && in_vertex) {
      std::string type, name;
      ss >> type >> name;
      if (type != "double") throw Error(ErrorCode::SchemaError, "unsupported PLY property type " + type);
      names.push_back(name);
    }
  }
  auto get = [&](auto& v) {
    unsigned char b[sizeof(v)];
    in.read(reinterpret_cast<char*>(b), sizeof(v));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(v));
    std::memcpy(&v, b, sizeof(v));
  };
  PlyMesh m;
  for (std::size_t k = 3; k < names.size(); ++k) m.props[names[k]].resize(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    Vec3 x;
    for (std::size_t k = 0; k < names.size(); ++k) {
      double v = 0.0;
      get(v);
      if (k < 3) {
        x[static_cast<int>(k)] = v;
      } else {
        m.props[names[k]][i] = v;
      }
    }
    m.X.push_back(x);
  }
  for (std::size_t i = 0; i < nf; ++i) {
    std::uint8_t c = 0;
    get(c);
    if (c != 3) throw Error(ErrorCode::SchemaError, "only triangular PLY faces are supported");
    Tri f;
    for (int k = 0; k < 3; ++k) {
      std::int32_t v = 0;
      get(v);
      f[k] = v;
    }
    m.tris.push_back(f);
  }
  if (!in) throw Error(ErrorCode::IoError, "truncated PLY file " + path.string());
  return m;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ------------------------------------------------------------ problem spec

enum class Mode { Check, Solve, Conjugate, Diverge, Rnoid, Scherk };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Check: return "check";
    case Mode::Solve: return "solve";
    case Mode::Conjugate: return "conjugate";
    case Mode::Diverge: return "diverge";
    case Mode::Rnoid: return "rnoid";
    case Mode::Scherk: return "scherk";
  }
  return "?";
}

inline Mode mode_from_string(const std::string& s) {
  for (Mode m : {Mode::Check, Mode::Solve, Mode::Conjugate, Mode::Diverge, Mode::Rnoid, Mode::Scherk}) {
    if (s == to_string(m)) return m;
  }
  throw Error(ErrorCode::SchemaError, "field 'mode': unknown mode '" + s + "'");
}

/// Boundary condition of one arc.
struct ArcSpec {
  std::string kind = "constant";  // plus, minus, constant, linear, scherk
  double value = 0.0;             // constant
  Vec2 a = Vec2::Zero();          // linear: a . p + b
  double b = 0.0;
  bool ramped = false;            // finite value times the ramp level

  bool operator==(const ArcSpec& o) const {
    return kind == o.kind && value == o.value && a == o.a && b == o.b && ramped == o.ramped;
  }

  ArcCondition condition() const {
    if (kind == "plus") return ArcCondition::plus();
    if (kind == "minus") return ArcCondition::minus();
    std::function<double(const Vec2&)> f;
    if (kind == "constant") {
      const double c = value;
      f = [c](const Vec2&) { return c; };
    } else if (kind == "linear") {
      const Vec2 aa = a;
      const double bb = b;
      f = [aa, bb](const Vec2& p) { return aa.dot(p) + bb; };
    } else {
      f = [](const Vec2& p) { return scherk_exact(p.x(), p.y()); };
    }
    return ramped ? ArcCondition::ramped(f) : ArcCondition::finite(f);
  }
};

/// Domain description: a generated shape or an explicit chart atlas.
struct DomainSpec {
  std::string kind = "square";  // square, rectangle, polygon, atlas
  double side = 1.0;
  double width = 1.0, height = 1.0;
  std::vector<Vec2> corners;
  std::vector<std::string> labels;
  json atlas;  // triangles, charts, transitions, arcs, corners

  bool operator==(const DomainSpec& o) const {
    return kind == o.kind && side == o.side && width == o.width && height == o.height && corners == o.corners &&
           labels == o.labels && atlas == o.atlas;
  }
};

struct ScheduleSpec {
  std::vector<double> k{2.0, 4.0, 8.0};
  double m0 = 4.0;
  double h = 0.05;
  double grading = 0.0;

  bool operator==(const ScheduleSpec&) const = default;
};

struct ProblemSpec {
  Mode mode = Mode::Scherk;
  double h = 0.05;
  std::optional<DomainSpec> domain;
  std::vector<ArcSpec> boundary;
  std::vector<double> ramp{2.0, 4.0, 8.0, 16.0, 32.0};
  std::optional<Vec2> anchor;
  std::vector<int> glue;
  std::vector<Vec2> fluxes;
  std::optional<ScheduleSpec> schedule;
  double side = std::numbers::pi - 0.2;  // scherk
  double tol = 1e-10;

  bool operator==(const ProblemSpec& o) const {
    return mode == o.mode && h == o.h && domain == o.domain && boundary == o.boundary && ramp == o.ramp &&
           anchor == o.anchor && glue == o.glue && fluxes == o.fluxes && schedule == o.schedule && side == o.side &&
           tol == o.tol;
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "field '" + where + "': expected an object");
  for (const auto& [key, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw Error(ErrorCode::SchemaError, "unknown key '" + key + "'" + (where.empty() ? "" : " in '" + where + "'"));
    }
  }
}

inline double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorCode::SchemaError, "field '" + where + "': expected a number");
  return j.get<double>();
}

inline Vec2 get_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::SchemaError, "field '" + where + "': expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<Vec2> get_points(const json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "field '" + where + "': expected a list of points");
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_point(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<double> get_numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "field '" + where + "': expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline double get_positive(const json& j, const std::string& where) {
  const double v = get_number(j, where);
  if (!(v > 0.0)) throw Error(ErrorCode::SchemaError, "field '" + where + "': must be positive");
  return v;
}

inline json point(const Vec2& p) { return json::array({p.x(), p.y()}); }

inline ArcSpec parse_arc(const json& j, const std::string& where) {
  ArcSpec a;
  if (j.is_string()) {
    a.kind = j.get<std::string>();
    if (a.kind != "plus" && a.kind != "minus" && a.kind != "scherk") {
      throw Error(ErrorCode::SchemaError, "field '" + where + "': unknown boundary kind '" + a.kind + "'");
    }
    return a;
  }
  if (j.is_number()) {
    a.value = j.get<double>();
    return a;
  }
  check_keys(j, where, {"kind", "value", "a", "b", "ramped"});
  if (!j.contains("kind") || !j["kind"].is_string()) throw Error(ErrorCode::SchemaError, "field '" + where + ".kind' is required");
  a.kind = j["kind"].get<std::string>();
  const std::set<std::string> kinds{"plus", "minus", "constant", "linear", "scherk"};
  if (!kinds.count(a.kind)) throw Error(ErrorCode::SchemaError, "field '" + where + "': unknown boundary kind '" + a.kind + "'");
  if (j.contains("value")) a.value = get_number(j["value"], where + ".value");
  if (j.contains("a")) a.a = get_point(j["a"], where + ".a");
  if (j.contains("b")) a.b = get_number(j["b"], where + ".b");
  if (j.contains("ramped")) {
    if (!j["ramped"].is_boolean()) throw Error(ErrorCode::SchemaError, "field '" + where + ".ramped': expected a boolean");
    a.ramped = j["ramped"].get<bool>();
  }
  if ((a.kind == "plus" || a.kind == "minus") && a.ramped) {
    throw Error(ErrorCode::SchemaError, "field '" + where + "': infinite arcs cannot be ramped");
  }
  return a;
}

inline json arc_json(const ArcSpec& a) {
  json j;
  j["kind"] = a.kind;
  if (a.kind == "constant") j["value"] = a.value;
  if (a.kind == "linear") {
    j["a"] = point(a.a);
    j["b"] = a.b;
  }
  if (a.ramped) j["ramped"] = true;
  return j;
}

inline DomainSpec parse_domain(const json& j) {
  check_keys(j, "domain", {"kind", "side", "width", "height", "corners", "labels", "triangles", "charts", "transitions",
                           "arcs", "vertex_corners"});
  DomainSpec d;
  if (!j.contains("kind") || !j["kind"].is_string()) throw Error(ErrorCode::SchemaError, "field 'domain.kind' is required");
  d.kind = j["kind"].get<std::string>();
  auto only = [&](std::initializer_list<const char*> keys) { check_keys(j, "domain", keys); };
  if (d.kind == "square") {
    only({"kind", "side"});
    if (j.contains("side")) d.side = get_positive(j["side"], "domain.side");
  } else if (d.kind == "rectangle") {
    only({"kind", "width", "height"});
    if (j.contains("width")) d.width = get_positive(j["width"], "domain.width");
    if (j.contains("height")) d.height = get_positive(j["height"], "domain.height");
  } else if (d.kind == "polygon") {
    only({"kind", "corners", "labels"});
    if (!j.contains("corners")) throw Error(ErrorCode::SchemaError, "field 'domain.corners' is required");
    d.corners = get_points(j["corners"], "domain.corners");
    if (d.corners.size() < 3) throw Error(ErrorCode::SchemaError, "field 'domain.corners': at least three corners");
    if (j.contains("labels")) {
      if (!j["labels"].is_array()) throw Error(ErrorCode::SchemaError, "field 'domain.labels': expected strings");
      for (const auto& l : j["labels"]) {
        if (!l.is_string()) throw Error(ErrorCode::SchemaError, "field 'domain.labels': expected strings");
        d.labels.push_back(l.get<std::string>());
      }
    }
  } else if (d.kind == "atlas") {
    only({"kind", "triangles", "charts", "transitions", "arcs", "vertex_corners"});
    for (const char* req : {"triangles", "charts", "arcs"}) {
      if (!j.contains(req)) throw Error(ErrorCode::SchemaError, std::string("field 'domain.") + req + "' is required");
    }
    d.atlas = j;
    d.atlas.erase("kind");
  } else {
    throw Error(ErrorCode::SchemaError, "field 'domain.kind': unknown kind '" + d.kind + "'");
  }
  return d;
}

inline json domain_json(const DomainSpec& d) {
  json j;
  j["kind"] = d.kind;
  if (d.kind == "square") j["side"] = d.side;
  if (d.kind == "rectangle") {
    j["width"] = d.width;
    j["height"] = d.height;
  }
  if (d.kind == "polygon") {
    j["corners"] = json::array();
    for (const auto& c : d.corners) j["corners"].push_back(point(c));
    if (!d.labels.empty()) j["labels"] = d.labels;
  }
  if (d.kind == "atlas") {
    for (const auto& [k, v] : d.atlas.items()) j[k] = v;
  }
  return j;
}

/// Chart atlas from its JSON description.
inline ChartAtlas atlas_from_json(const json& j) {
  ChartAtlas a;
  try {
    a.triangles = j.at("triangles").get<std::vector<Tri>>();
    for (const auto& c : j.at("charts")) {
      std::array<Vec2, 3> ch;
      for (int k = 0; k < 3; ++k) ch[k] = get_point(c.at(k), "domain.charts");
      a.charts.push_back(ch);
    }
    if (j.contains("transitions")) {
      for (const auto& t : j["transitions"]) {
        check_keys(t, "domain.transitions", {"from", "to", "angle", "translation"});
        ChartTransition tr;
        tr.from = t.at("from").get<int>();
        tr.to = t.at("to").get<int>();
        tr.map = Isometry2::from_angle(t.value("angle", 0.0));
        if (t.contains("translation")) tr.map.shift = get_point(t["translation"], "domain.transitions.translation");
        a.transitions.push_back(tr);
      }
    }
    for (const auto& arc : j.at("arcs")) {
      check_keys(arc, "domain.arcs", {"label", "chain"});
      a.arcs.push_back({arc.at("label").get<std::string>(), arc.at("chain").get<std::vector<int>>(), true});
    }
    if (j.contains("vertex_corners")) a.corners = j["vertex_corners"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("field 'domain': ") + e.what());
  }
  int nv = 0;
  for (const auto& t : a.triangles) {
    for (int v : t) {
      if (v < 0) throw Error(ErrorCode::SchemaError, "field 'domain.triangles': negative vertex index");
      nv = std::max(nv, v + 1);
    }
  }
  a.num_vertices = nv;
  return a;
}

}  // namespace detail

/// Builds the mesh of a domain spec at element size h.
inline MultiDomain build_domain(const DomainSpec& d, double h) {
  if (d.kind == "square") return make_square(d.side, h);
  if (d.kind == "rectangle") return make_rectangle(-d.width / 2, -d.height / 2, d.width / 2, d.height / 2, h);
  if (d.kind == "polygon") return make_convex_polygon(d.corners, d.labels, h);
  return refine_uniform(build_multidomain(detail::atlas_from_json(d.atlas)), h);
}

inline ProblemSpec problem_from_json(const json& j) {
  detail::check_keys(j, "", {"mode", "h", "domain", "boundary", "ramp", "anchor", "glue", "fluxes", "schedule", "side",
                             "tol"});
  if (!j.contains("mode") || !j["mode"].is_string()) throw Error(ErrorCode::SchemaError, "field 'mode' is required");
  ProblemSpec p;
  p.mode = mode_from_string(j["mode"].get<std::string>());
  if (j.contains("h")) p.h = detail::get_positive(j["h"], "h");
  if (j.contains("tol")) p.tol = detail::get_positive(j["tol"], "tol");
  if (j.contains("side")) p.side = detail::get_positive(j["side"], "side");
  if (j.contains("domain")) p.domain = detail::parse_domain(j["domain"]);
  if (j.contains("boundary")) {
    if (!j["boundary"].is_array()) throw Error(ErrorCode::SchemaError, "field 'boundary': expected a list");
    for (std::size_t i = 0; i < j["boundary"].size(); ++i) {
      p.boundary.push_back(detail::parse_arc(j["boundary"][i], "boundary[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("ramp")) p.ramp = detail::get_numbers(j["ramp"], "ramp");
  if (j.contains("anchor")) p.anchor = detail::get_point(j["anchor"], "anchor");
  if (j.contains("glue")) {
    if (!j["glue"].is_array()) throw Error(ErrorCode::SchemaError, "field 'glue': expected vertex indices");
    for (const auto& v : j["glue"]) {
      if (!v.is_number_integer()) throw Error(ErrorCode::SchemaError, "field 'glue': expected vertex indices");
      p.glue.push_back(v.get<int>());
    }
  }
  if (j.contains("fluxes")) p.fluxes = detail::get_points(j["fluxes"], "fluxes");
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    detail::check_keys(s, "schedule", {"k", "m0", "h", "grading"});
    ScheduleSpec sc;
    sc.h = p.h;
    if (s.contains("k")) sc.k = detail::get_numbers(s["k"], "schedule.k");
    if (s.contains("m0")) sc.m0 = detail::get_number(s["m0"], "schedule.m0");
    if (s.contains("h")) sc.h = detail::get_positive(s["h"], "schedule.h");
    if (s.contains("grading")) sc.grading = detail::get_number(s["grading"], "schedule.grading");
    p.schedule = sc;
  }

  // per-mode requirements
  const bool needs_domain = p.mode == Mode::Check || p.mode == Mode::Solve || p.mode == Mode::Conjugate ||
                            p.mode == Mode::Diverge;
  if (needs_domain) {
    if (!p.domain) throw Error(ErrorCode::SchemaError, "field 'domain' is required in mode " + std::string(to_string(p.mode)));
    if (p.boundary.empty()) {
      throw Error(ErrorCode::SchemaError, "field 'boundary' is required in mode " + std::string(to_string(p.mode)));
    }
  }
  if (p.mode == Mode::Rnoid) {
    if (p.fluxes.empty()) throw Error(ErrorCode::SchemaError, "field 'fluxes' is required in mode rnoid");
    if (!p.schedule) {
      p.schedule = ScheduleSpec{};
      p.schedule->h = p.h;
    }
  }
  if (p.ramp.size() < 3) throw Error(ErrorCode::SchemaError, "field 'ramp': at least three levels");
  for (std::size_t i = 1; i < p.ramp.size(); ++i) {
    if (!(p.ramp[i - 1] < p.ramp[i])) throw Error(ErrorCode::SchemaError, "field 'ramp': levels must increase");
  }
  return p;
}

/// Canonical JSON of a spec with all defaults written out.
inline json problem_to_json(const ProblemSpec& p) {
  json j;
  j["mode"] = to_string(p.mode);
  j["h"] = p.h;
  j["tol"] = p.tol;
  if (p.domain) j["domain"] = detail::domain_json(*p.domain);
  if (!p.boundary.empty()) {
    j["boundary"] = json::array();
    for (const auto& a : p.boundary) j["boundary"].push_back(detail::arc_json(a));
  }
  j["ramp"] = p.ramp;
  if (p.anchor) j["anchor"] = detail::point(*p.anchor);
  if (!p.glue.empty()) j["glue"] = p.glue;
  if (!p.fluxes.empty()) {
    j["fluxes"] = json::array();
    for (const auto& f : p.fluxes) j["fluxes"].push_back(detail::point(f));
  }
  if (p.schedule) {
    j["schedule"] = {{"k", p.schedule->k}, {"m0", p.schedule->m0}, {"h", p.schedule->h}, {"grading", p.schedule->grading}};
  }
  if (p.mode == Mode::Scherk) j["side"] = p.side;
  return j;
}

inline ProblemSpec parse_problem_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed JSON: ") + e.what());
  }
  return problem_from_json(j);
}

inline ProblemSpec parse_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str());
}

/// Boundary data of a spec on a built domain.
inline BoundaryData boundary_data(const ProblemSpec& p, const MultiDomain& dom) {
  if (p.boundary.size() != dom.arcs().size()) {
    throw Error(ErrorCode::SchemaError, "field 'boundary': domain has " + std::to_string(dom.arcs().size()) +
                                            " arcs but " + std::to_string(p.boundary.size()) + " conditions were given");
  }
  BoundaryData data;
  for (const auto& a : p.boundary) data.arcs.push_back(a.condition());
  return data;
}

}  // namespace msekit::io
