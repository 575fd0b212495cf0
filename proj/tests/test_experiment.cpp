#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "mbw/experiment.hpp"

using namespace mbw;
namespace fs = std::filesystem;

namespace {

ExperimentPreset parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mbw_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(MBW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small, fast variant: one body-pair on a coarse lattice.
ExperimentPreset small_preset() {
  auto p = builtin_preset("fig3");
  p.name = "small";
  p.cfg.m_max = 16;
  p.cfg.t_final = 0.1;
  p.snapshot_times = {0.0, 0.1};
  p.particles = 20'000;
  p.cfg.dissipation.r_prob = 0.2;
  return p;
}

}  // namespace

TEST_CASE("every builtin preset validates") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    CHECK(validate_preset(builtin_preset(name)).empty());
  }
  CHECK_THROWS_AS(builtin_preset("fig4"), ConfigError);
}

TEST_CASE("preset parameters") {
  const auto f2 = builtin_preset("fig2");
  CHECK(f2.cfg.dissipation.enabled);
  CHECK(f2.cfg.dissipation.r_prob == 0.02);
  CHECK(f2.cfg.dissipation.r_pct == 0.15);
  const auto f5 = builtin_preset("fig5");
  CHECK(f5.entangled.sigma_ent_x == 2.5);
  CHECK(f5.entangled.sigma_ent_p == 0.5);
  CHECK(f5.cfg.dissipation.r_prob == 0.01);
  const auto f1 = builtin_preset("fig1_ballistic");
  CHECK_FALSE(f1.cfg.dissipation.enabled);
  CHECK(f1.cfg.t_final == 3.0);
  CHECK(f1.potential.kind == "zero");
}

TEST_CASE("config: overrides on top of a preset") {
  const auto p = parse(
      "[run]\npreset = fig2\nseed = 42\nsnapshots = 0, 0.5\n"
      "[dissipation]\nr_prob = 0.05\n"
      "[geometry]\nm_max = 32\n");
  CHECK(p.name == "fig2");
  CHECK(p.cfg.seed == 42u);
  CHECK(p.cfg.dissipation.r_prob == 0.05);
  CHECK(p.cfg.dissipation.r_pct == 0.15);
  CHECK(p.cfg.m_max == 32);
  CHECK(p.snapshot_times == std::vector<double>{0.0, 0.5});
  CHECK(validate_preset(p).empty());
}

TEST_CASE("config: explicit enabled = false wins") {
  const auto p = parse("[dissipation]\nr_prob = 0.05\nenabled = false\n");
  CHECK_FALSE(p.cfg.dissipation.enabled);
}

TEST_CASE("config: errors are reported") {
  CHECK_THROWS_AS(parse("[run]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[run]\nseed = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse("[run]\npreset = nope\n"), ConfigError);
  CHECK_THROWS_AS(parse("[dissipation]\nrounding = up\n"), ConfigError);
  CHECK_THROWS_AS(parse("[[broken\n"), ConfigError);
}

TEST_CASE("validation catches violated invariants") {
  auto p = builtin_preset("fig3");
  p.cfg.dissipation.r_pct = 0.0;
  CHECK_FALSE(validate_preset(p).empty());

  p = builtin_preset("fig3");
  p.momentum_step = 0.07;
  CHECK_FALSE(validate_preset(p).empty());
  p.momentum_step = p.cfg.momentum_step();
  CHECK(validate_preset(p).empty());

  p = builtin_preset("fig3");
  p.snapshot_times = {0.5, 0.2};
  CHECK_FALSE(validate_preset(p).empty());
  p.snapshot_times = {0.123};
  CHECK_FALSE(validate_preset(p).empty());

  p = builtin_preset("fig3");
  p.cfg.n_bodies = 1;
  CHECK_FALSE(validate_preset(p).empty());
  CHECK_THROWS_AS(simulate(p), ConfigError);
}

TEST_CASE("validate_config reads files") {
  const auto dir = scratch("validate");
  std::ofstream(dir / "good.ini") << "[run]\npreset = fig6\n";
  std::ofstream(dir / "bad.ini") << "[run]\npreset = fig6\n[dissipation]\nr_pct = 0\n";
  CHECK(validate_config(dir / "good.ini").empty());
  CHECK_FALSE(validate_config(dir / "bad.ini").empty());
  CHECK_THROWS_AS(validate_config(dir / "missing.ini"), ConfigError);
}

TEST_CASE("snapshot file names") {
  CHECK(snapshot_file_name(0.0) == "snapshot_t0fs.txt");
  CHECK(snapshot_file_name(0.5) == "snapshot_t0.5fs.txt");
  CHECK(snapshot_file_name(3.0) == "snapshot_t3fs.txt");
}

TEST_CASE("run_experiment writes the documented files and reruns identically") {
  const auto p = small_preset();
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  const auto res = run_experiment(p, a);
  SimulationOptions four;
  four.threads = 4;
  run_experiment(p, b, four);

  CHECK(res.metrics.size() == 3u);  // t = 0, 0.05, 0.1
  CHECK(res.snapshots.size() == 2u);
  for (const auto* name : {"snapshot_t0fs.txt", "snapshot_t0.1fs.txt", "metrics.log", "report.json"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const auto snap = snapshot_read(a / "snapshot_t0.1fs.txt");
  CHECK(snap.time == doctest::Approx(0.1));
  CHECK(snap.values.rows() == 100);
  CHECK(snap.values.cols() == 33);

  std::istringstream log(slurp(a / "metrics.log"));
  double t = -1, nu = -1, amp = -1;
  std::size_t n = 0;
  REQUIRE(static_cast<bool>(log >> t >> nu >> amp >> n));
  CHECK(t == 0.0);
  CHECK(nu > 0.0);
  CHECK(n == res.seeded);
}

TEST_CASE("different seeds differ") {
  auto p = small_preset();
  const auto r1 = simulate(p);
  p.cfg.seed = 2;
  const auto r2 = simulate(p);
  CHECK(r1.metrics.front().nu == r2.metrics.front().nu);  // seeding is deterministic
  CHECK(r1.metrics.back().nu != r2.metrics.back().nu);
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("cli");
  CHECK(cli("list-presets") == 0);
  CHECK(cli("run no_such_preset --out " + dir.string()) == 2);
  std::ofstream(dir / "bad.ini") << "[run]\nunknown_key = 1\n";
  std::ofstream(dir / "good.ini") << "[run]\npreset = fig2\n";
  CHECK(cli("validate " + (dir / "bad.ini").string()) == 2);
  CHECK(cli("validate " + (dir / "good.ini").string()) == 0);
  CHECK(cli("run --bogus-flag") != 0);
  std::ofstream(dir / "empty.ini") << "[run]\npreset = fig3\nparticles = 1\n";
  CHECK(cli("run " + (dir / "empty.ini").string() + " --quiet --out " + (dir / "empty").string()) == 2);

  std::ofstream(dir / "tiny.ini") << "[run]\npreset = fig3\nparticles = 2000\nt_final = 0.05\nsnapshots = 0.05\n"
                                     "[geometry]\nm_max = 8\nspatial_cell = 2.5\n";
  CHECK(cli("run " + (dir / "tiny.ini").string() + " --quiet --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "snapshot_t0.05fs.txt"));
  CHECK(fs::exists(dir / "out" / "report.json"));
}
