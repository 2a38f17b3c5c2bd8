// msekit command-line front end.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "msekit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace msekit;

namespace {

enum Exit { kOk = 0, kGateFailed = 1, kError = 2 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("msekit");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("MSEKIT_LOG");
  const std::string level = env ? env : "warn";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    if (level != "warn") spdlog::warn("MSEKIT_LOG={} not understood, using warn", level);
    spdlog::set_level(spdlog::level::warn);
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::SchemaError, "expected comma separated numbers, got '" + s + "'");
    }
  }
  return out;
}

struct SolveFlags {
  std::string ramp, anchor, report, mesh;
  double mesh_h = 0.0;
};

void log_report(const cli::RunResult& r) {
  for (const auto& c : r.report["checks"]) {
    spdlog::info("check {} = {} (threshold {}) {}", c["name"].get<std::string>(), c["value"].get<double>(),
                 c["threshold"].get<double>(), c["pass"].get<bool>() ? "pass" : "FAIL");
  }
  for (const auto& [stage, secs] : r.timings.items()) spdlog::debug("stage {} took {:.3f} s", stage, secs.get<double>());
}

int run_one(io::Mode mode, const fs::path& spec_path, const fs::path& out, std::uint64_t seed, const SolveFlags* flags) {
  auto spec = io::parse_problem(spec_path);
  if (spec.mode != mode) {
    throw Error(ErrorCode::SchemaError, "field 'mode': spec is '" + std::string(io::to_string(spec.mode)) +
                                            "' but the subcommand is '" + io::to_string(mode) + "'");
  }
  if (flags) {
    if (!flags->ramp.empty()) spec.ramp = parse_list(flags->ramp);
    if (flags->mesh_h > 0) spec.h = flags->mesh_h;
    if (!flags->anchor.empty()) {
      const auto a = parse_list(flags->anchor);
      if (a.size() != 2) throw Error(ErrorCode::SchemaError, "--anchor expects x,y");
      spec.anchor = Vec2(a[0], a[1]);
    }
    spec = io::problem_from_json(io::problem_to_json(spec));  // revalidate overrides
  }
  spdlog::info("running {} from {}", io::to_string(mode), spec_path.string());
  const auto r = cli::run(spec, {out, seed});
  log_report(r);
  if (flags && !flags->report.empty()) io::write_json(flags->report, r.report);
  if (flags && !flags->mesh.empty()) fs::copy_file(out / "graph.obj", flags->mesh, fs::copy_options::overwrite_existing);
  std::cout << io::to_string(mode) << ": " << (r.gates_passed ? "ok" : "gates failed") << " (" << (out / "report.json").string()
            << ")\n";
  return r.gates_passed ? kOk : kGateFailed;
}

int report_error(const std::exception& e) {
  if (const auto* se = dynamic_cast<const cli::StageError*>(&e)) {
    spdlog::error("[{}] {}", to_string(se->code()), se->what());
  } else {
    spdlog::error("{}", e.what());
  }
  return kError;
}

int run_corpus(const fs::path& dir, const fs::path& out, int jobs, std::uint64_t seed) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<fs::path> specs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") specs.push_back(e.path());
  }
  std::sort(specs.begin(), specs.end());
  std::vector<int> codes(specs.size(), kOk);
  std::vector<std::string> notes(specs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        const auto spec = io::parse_problem(specs[i]);
        const auto r = cli::run(spec, {out / specs[i].stem(), seed});
        codes[i] = r.gates_passed ? kOk : kGateFailed;
        notes[i] = r.gates_passed ? "ok" : "gates failed";
      } catch (const std::exception& e) {
        codes[i] = kError;
        notes[i] = e.what();
        std::lock_guard lock(log_mutex);
        spdlog::error("{}: {}", specs[i].filename().string(), e.what());
      }
    }
  };
  const int n = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, specs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  io::json summary = io::json::array();
  int worst = kOk;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    std::cout << specs[i].filename().string() << ": " << notes[i] << '\n';
    summary.push_back({{"spec", specs[i].filename().string()}, {"exit", codes[i]}, {"note", notes[i]}});
    worst = std::max(worst, codes[i]);
  }
  fs::create_directories(out);
  io::write_json(out / "corpus.json", summary);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Minimal surface equation solver on multi-domains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MSEKIT_VERSION);

  std::string spec_path, out_dir = "out", corpus_dir;
  int jobs = 1;
  std::uint64_t seed = 0;
  SolveFlags solve_flags;

  struct Sub {
    io::Mode mode;
    CLI::App* app;
  };
  std::vector<Sub> subs;
  const std::pair<io::Mode, const char*> modes[] = {
      {io::Mode::Check, "decide solvability of infinite boundary data"},
      {io::Mode::Solve, "solve the Dirichlet problem (ramp sequence for infinite data)"},
      {io::Mode::Conjugate, "conjugate surface and its reflection"},
      {io::Mode::Diverge, "divergence lines of a ramp sequence"},
      {io::Mode::Rnoid, "r-noid from flux vectors"},
      {io::Mode::Scherk, "regression against the Scherk surface"},
  };
  for (const auto& [mode, help] : modes) {
    auto* sub = app.add_subcommand(io::to_string(mode), help);
    sub->add_option("--spec", spec_path, "problem spec (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--jobs", jobs, "worker threads (corpus mode only)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "recorded in the report");
    if (mode == io::Mode::Solve) {
      sub->add_option("--ramp", solve_flags.ramp, "ramp levels, comma separated");
      sub->add_option("--mesh-h", solve_flags.mesh_h, "element size")->check(CLI::PositiveNumber);
      sub->add_option("--anchor", solve_flags.anchor, "anchor point x,y");
      sub->add_option("--report", solve_flags.report, "extra copy of the JSON report");
      sub->add_option("--mesh", solve_flags.mesh, "extra copy of the graph OBJ");
    }
    subs.push_back({mode, sub});
  }
  auto* corpus = app.add_subcommand("corpus", "run every spec in a directory");
  corpus->add_option("--dir", corpus_dir, "directory of spec files")->required();
  corpus->add_option("--out", out_dir, "output directory")->capture_default_str();
  corpus->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  corpus->add_option("--seed", seed, "recorded in each report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*corpus) return run_corpus(corpus_dir, out_dir, jobs, seed);
    for (const auto& s : subs) {
      if (*s.app) return run_one(s.mode, spec_path, out_dir, seed, s.mode == io::Mode::Solve ? &solve_flags : nullptr);
    }
  } catch (const std::exception& e) {
    return report_error(e);
  }
  return kOk;
}
