#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace fracdiff;
using namespace fracdiff::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("fracdiff_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config round trip") {
  const RunConfig defaults;
  CHECK(parse_config(serialize_config(defaults)) == defaults);
  CHECK(parse_config("") == defaults);

  const std::string text =
      "# comment\n[operator]\ns = 0.3   # trailing\nkind = periodic-spectral\n\n[problem]\nnonlinearity = power:1.5\n"
      "[sweep]\neps_values = 0.5, 0.05, 0.005, 0.0005\n";
  const auto c = parse_config(text);
  CHECK(c.s == 0.3);
  CHECK(config_value(c, "problem.nonlinearity") == "power:1.5");
  CHECK(c.eps_values == std::vector<double>{0.5, 0.05, 0.005, 0.0005});
  const auto again = serialize_config(c);
  CHECK(serialize_config(parse_config(again)) == again);
  CHECK(parse_config(again) == c);
  CHECK(format_number(0.1) == "0.1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("config errors") {
  const auto range = config_error("[operator]\ns = 1.2\n");
  CHECK(range.find("line 2") != std::string::npos);
  CHECK(range.find("s must lie in (0,1)") != std::string::npos);

  const auto unknown = config_error("[operator]\nkindd = periodic-spectral\n");
  CHECK(unknown.find("kindd") != std::string::npos);
  CHECK(unknown.find("operator.kind") != std::string::npos);
  CHECK(nearest_key("grid.point") == "grid.points");

  CHECK(config_error("[grid]\npoints = many\n").find("line 2") != std::string::npos);
  CHECK_FALSE(config_error("[grid\n").empty());
  CHECK_FALSE(config_error("points = 64\n").empty());
  CHECK_FALSE(config_error("[grid]\npoints = 64\npoints = 128\n").empty());
  CHECK_FALSE(config_error("[problem]\nnonlinearity = power:\n").empty());
  CHECK_FALSE(config_error("[sweep]\neps_values = 0.1, 0.2\n").empty());
  CHECK_FALSE(config_error("[grid]\npoints = 4\n").empty());
}

TEST_CASE("usage errors exit with 2") {
  const auto missing = run({"solve-parabolic"});
  CHECK(missing.code == UsageError);
  CHECK(missing.err.find("--config") != std::string::npos);
  CHECK(run({}).code == UsageError);
  CHECK(run({"frobnicate"}).code == UsageError);
  CHECK(run({"verify", "--config", "/nonexistent/config.toml", "--suite", "operator"}).code == UsageError);

  TempDir dir("usage");
  write_file(dir.path / "bad.toml", "[operator]\ns = 1.2\n");
  const auto bad = run({"solve-elliptic", "--config", (dir.path / "bad.toml").string(), "--out", dir.path.string()});
  CHECK(bad.code == UsageError);
  CHECK(bad.err.find("s must lie in (0,1)") != std::string::npos);
}

TEST_CASE("operator suite passes on defaults and writes a complete manifest") {
  TempDir dir("operator");
  write_file(dir.path / "c.toml", "");
  const auto r = run({"verify", "--suite", "operator", "--config", (dir.path / "c.toml").string(), "--out",
                      dir.path.string()});
  CHECK(r.code == Success);
  CHECK(fs::exists(dir.path / "verify_operator.csv"));

  const auto manifest = nlohmann::json::parse(read_file(dir.path / "manifest.json"));
  std::set<std::string> config_entries;
  for (const auto& [k, v] : manifest.items()) {
    if (k.rfind("config.", 0) == 0) config_entries.insert(k.substr(7));
  }
  const auto& keys = config_keys();
  CHECK(config_entries == std::set<std::string>(keys.begin(), keys.end()));
  CHECK(config_entries.size() == keys.size());
  CHECK(manifest.contains("grid_checksum"));
  CHECK(manifest.contains("code_version"));
  CHECK(manifest.contains("wall_clock_seconds"));
  CHECK(manifest["report.exit_code"] == 0);
  CHECK(manifest["config.sweep.theta"] == config_value(RunConfig{}, "sweep.theta"));
}

TEST_CASE("identical runs give byte-identical outputs") {
  TempDir a("det_a"), b("det_b");
  const std::string cfg =
      "[grid]\npoints = 128\nhalf_width = 8\n[problem]\nnonlinearity = power:1\n[time]\nt_end = 0.05\ndt = 0.01\n";
  for (const auto* d : {&a, &b}) {
    write_file(d->path / "c.toml", cfg);
    REQUIRE(run({"solve-parabolic", "--config", (d->path / "c.toml").string(), "--out", d->path.string()}).code ==
            Success);
  }
  for (const auto& e : fs::directory_iterator(a.path)) {
    if (e.path().extension() != ".csv") continue;
    CAPTURE(e.path().filename().string());
    CHECK(read_file(e.path()) == read_file(b.path / e.path().filename()));
  }
  CHECK(fs::exists(a.path / "trajectory.csv"));
  CHECK(fs::exists(a.path / "field_t0.csv"));
  CHECK(read_file(a.path / "trajectory.csv").rfind("t,mass,ball_mass,linf,min,max\n", 0) == 0);
}

TEST_CASE("solve-elliptic prints its report line") {
  TempDir dir("elliptic");
  write_file(dir.path / "c.toml", "[grid]\npoints = 256\n[problem]\nnonlinearity = power:1.5\n");
  const auto r = run({"solve-elliptic", "--config", (dir.path / "c.toml").string(), "--out", dir.path.string()});
  CHECK(r.code == Success);
  CHECK(r.out.rfind("iterations,final_residual,converged\n", 0) == 0);
  CHECK(r.out.substr(r.out.size() - 3) == ",1\n");
  CHECK(fs::exists(dir.path / "solution.csv"));
}

TEST_CASE("empty phase set gives a header-only CSV") {
  TempDir dir("phase_empty");
  write_file(dir.path / "c.toml", "[phase]\ns_values = 0.75\nn_values = 0.5\n");
  const auto r = run({"phase-diagram", "--config", (dir.path / "c.toml").string(), "--out", dir.path.string()});
  CHECK(r.code == Success);
  CHECK(read_file(dir.path / "phase.csv") == "s,n,classification,margin,final_mass,slope\n");
}

TEST_CASE("phase output does not depend on the thread count") {
  TempDir a("threads_a"), b("threads_b");
  const std::string base =
      "[sweep]\neps_values = 0.1, 0.01, 0.001, 0.0001\n[phase]\ns_values = 0.3, 0.9\nn_values = 0.5\n"
      "half_width = 20\npoints = 256\n";
  write_file(a.path / "c.toml", base + "threads = 1\n");
  write_file(b.path / "c.toml", base + "threads = 2\n");
  const auto ra = run({"phase-diagram", "--config", (a.path / "c.toml").string(), "--out", a.path.string()});
  const auto rb = run({"phase-diagram", "--config", (b.path / "c.toml").string(), "--out", b.path.string()});
  CHECK(ra.code == rb.code);
  CHECK(read_file(a.path / "phase.csv") == read_file(b.path / "phase.csv"));
}

TEST_CASE("3 x 3 phase-diagram smoke run" * doctest::timeout(300)) {
  TempDir dir("phase_smoke");
  write_file(dir.path / "c.toml", "");
  const auto start = std::chrono::steady_clock::now();
  const auto r = run({"phase-diagram", "--config", (dir.path / "c.toml").string(), "--out", dir.path.string(),
                      "--s-steps", "3", "--n-steps", "3"});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(r.code != UsageError);
  CHECK(seconds < 300.0);
  std::istringstream csv(read_file(dir.path / "phase.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 9);
}
