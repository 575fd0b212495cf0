// mbw: run, validate and list signed-particle Wigner experiments.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime abort.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "mbw/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("MBW_OUTPUT_DIR"); env && *env) return env;
  return "mbw_out";
}

bool is_preset(const std::string& name) {
  for (const auto& n : mbw::preset_names())
    if (n == name) return true;
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Many-body signed-particle Wigner Monte Carlo"};
  app.require_subcommand(1);

  std::string target;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::size_t particles = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run a built-in preset or an INI config");
  run->add_option("target", target, "Preset name or config file")->required();
  run->add_option("--out", out_dir, "Output directory (default: $MBW_OUTPUT_DIR/<name> or mbw_out/<name>)");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* particles_opt = run->add_option("--particles", particles, "Target particle count")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "No per-epoch progress on stderr");

  std::string config_path;
  auto* validate = app.add_subcommand("validate", "Check a config file and list every violation");
  validate->add_option("config", config_path, "INI config file")->required();

  auto* list = app.add_subcommand("list-presets", "List the built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : mbw::preset_names()) {
        const auto p = mbw::builtin_preset(name);
        std::cout << name << "  noise=" << p.noise << " sigma_ent_x=" << p.entangled.sigma_ent_x
                  << " sigma_ent_p=" << p.entangled.sigma_ent_p << " t_final=" << p.cfg.t_final << '\n';
      }
      return 0;
    }

    if (validate->parsed()) {
      const auto violations = mbw::validate_config(config_path);
      if (violations.empty()) {
        std::cout << "ok\n";
        return 0;
      }
      for (const auto& v : violations) std::cout << v << '\n';
      return kExitConfig;
    }

    mbw::ExperimentPreset preset;
    if (is_preset(target)) {
      preset = mbw::builtin_preset(target);
    } else if (std::filesystem::is_regular_file(target)) {
      preset = mbw::load_config(target);
    } else {
      std::cerr << "mbw: '" << target << "' is neither a preset (see list-presets) nor a config file\n";
      return kExitConfig;
    }
    if (*seed_opt) preset.cfg.seed = seed;
    if (*particles_opt) preset.particles = particles;
    const std::filesystem::path out = out_dir.empty() ? default_output_root() / preset.name : std::filesystem::path(out_dir);

    mbw::SimulationOptions opt;
    opt.threads = threads;
    opt.progress = quiet ? nullptr : &std::cerr;
    const auto res = mbw::run_experiment(preset, out, opt);
    std::cout << "wrote " << res.snapshots.size() << " snapshots, metrics.log and report.json to " << out.string()
              << '\n';
    return 0;
  } catch (const mbw::ConfigError& e) {
    std::cerr << "mbw: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mbw::EmptyInitialState& e) {
    std::cerr << "mbw: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mbw::RuntimeAbort& e) {
    std::cerr << "mbw: aborted: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "mbw: " << e.what() << '\n';
    return kExitRuntime;
  }
}
