#include "mbw/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

namespace mbw {

namespace {

ExperimentPreset entangled_base(const std::string& name, double sigma_ent_x, double sigma_ent_p,
                                const std::string& noise) {
  ExperimentPreset p;
  p.name = name;
  p.entangled.sigma_ent_x = sigma_ent_x;
  p.entangled.sigma_ent_p = sigma_ent_p;
  p.noise = noise;
  p.cfg.dissipation = noise_preset(noise);
  p.cfg.t_final = 1.0;
  p.snapshot_times = {0.1, 0.2, 0.5, 1.0};
  return p;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& raw) {
  const std::string s = trim(raw);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

long long to_integer(const std::string& raw) {
  const std::string s = trim(raw);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

std::vector<double> to_list(const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_double(item));
  }
  return out;
}

using Setter = std::function<void(ExperimentPreset&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const std::string& key, std::function<double&(ExperimentPreset&)> get) {
      t[key] = [get](ExperimentPreset& p, const std::string& v) { get(p) = to_double(v); };
    };
    auto integer = [&t](const std::string& key, std::function<void(ExperimentPreset&, long long)> set) {
      t[key] = [set](ExperimentPreset& p, const std::string& v) { set(p, to_integer(v)); };
    };

    t["run.name"] = [](ExperimentPreset& p, const std::string& v) { p.name = trim(v); };
    t["run.initial"] = [](ExperimentPreset& p, const std::string& v) { p.initial = trim(v); };
    t["run.snapshots"] = [](ExperimentPreset& p, const std::string& v) { p.snapshot_times = to_list(v); };
    real("run.t_final", [](ExperimentPreset& p) -> double& { return p.cfg.t_final; });
    real("run.dt", [](ExperimentPreset& p) -> double& { return p.cfg.dt; });
    real("run.dt_obs", [](ExperimentPreset& p) -> double& { return p.cfg.dt_obs; });
    integer("run.seed", [](ExperimentPreset& p, long long v) {
      if (v < 0) throw ConfigError("seed must be non-negative");
      p.cfg.seed = static_cast<std::uint64_t>(v);
    });
    integer("run.particles", [](ExperimentPreset& p, long long v) {
      if (v < 1) throw ConfigError("particles must be >= 1");
      p.particles = static_cast<std::size_t>(v);
    });

    integer("geometry.n_bodies", [](ExperimentPreset& p, long long v) { p.cfg.n_bodies = static_cast<int>(v); });
    integer("geometry.dims", [](ExperimentPreset& p, long long v) { p.cfg.dims = static_cast<int>(v); });
    real("geometry.domain_length", [](ExperimentPreset& p) -> double& { return p.cfg.domain_length; });
    real("geometry.spatial_cell", [](ExperimentPreset& p) -> double& { return p.cfg.spatial_cell; });
    real("geometry.coherence_length", [](ExperimentPreset& p) -> double& { return p.cfg.coherence_length; });
    integer("geometry.m_max", [](ExperimentPreset& p, long long v) { p.cfg.m_max = static_cast<int>(v); });
    real("geometry.mass", [](ExperimentPreset& p) -> double& { return p.cfg.mass; });
    real("geometry.hbar", [](ExperimentPreset& p) -> double& { return p.cfg.hbar; });
    t["geometry.momentum_step"] = [](ExperimentPreset& p, const std::string& v) { p.momentum_step = to_double(v); };

    real("initial.x1", [](ExperimentPreset& p) -> double& { return p.entangled.x1; });
    real("initial.x2", [](ExperimentPreset& p) -> double& { return p.entangled.x2; });
    real("initial.p1", [](ExperimentPreset& p) -> double& { return p.entangled.p1; });
    real("initial.p2", [](ExperimentPreset& p) -> double& { return p.entangled.p2; });
    real("initial.sigma_x1", [](ExperimentPreset& p) -> double& { return p.entangled.sigma_x1; });
    real("initial.sigma_x2", [](ExperimentPreset& p) -> double& { return p.entangled.sigma_x2; });
    real("initial.sigma_p1", [](ExperimentPreset& p) -> double& { return p.entangled.sigma_p1; });
    real("initial.sigma_p2", [](ExperimentPreset& p) -> double& { return p.entangled.sigma_p2; });
    real("initial.sigma_0", [](ExperimentPreset& p) -> double& { return p.entangled.sigma_0; });
    real("initial.sigma_ent_x", [](ExperimentPreset& p) -> double& { return p.entangled.sigma_ent_x; });
    real("initial.sigma_ent_p", [](ExperimentPreset& p) -> double& { return p.entangled.sigma_ent_p; });
    real("initial.center", [](ExperimentPreset& p) -> double& { return p.ferry.center; });
    real("initial.x0", [](ExperimentPreset& p) -> double& { return p.ferry.x0; });
    real("initial.p0", [](ExperimentPreset& p) -> double& { return p.ferry.p0; });
    real("initial.sigma", [](ExperimentPreset& p) -> double& { return p.ferry.sigma; });

    t["dissipation.preset"] = [](ExperimentPreset& p, const std::string& v) {
      p.noise = trim(v);
      p.cfg.dissipation = noise_preset(p.noise);
    };
    t["dissipation.enabled"] = [](ExperimentPreset& p, const std::string& v) {
      p.cfg.dissipation.enabled = to_bool(v);
      p.noise = "custom";
    };
    t["dissipation.r_prob"] = [](ExperimentPreset& p, const std::string& v) {
      p.cfg.dissipation.r_prob = to_double(v);
      p.cfg.dissipation.enabled = true;
      p.noise = "custom";
    };
    t["dissipation.r_pct"] = [](ExperimentPreset& p, const std::string& v) {
      p.cfg.dissipation.r_pct = to_double(v);
      p.cfg.dissipation.enabled = true;
      p.noise = "custom";
    };
    t["dissipation.rounding"] = [](ExperimentPreset& p, const std::string& v) {
      const std::string s = trim(v);
      if (s == "stochastic") p.cfg.dissipation.rounding = SnapRule::stochastic;
      else if (s == "nearest") p.cfg.dissipation.rounding = SnapRule::nearest;
      else throw ConfigError("rounding must be stochastic or nearest");
    };

    t["potential.kind"] = [](ExperimentPreset& p, const std::string& v) { p.potential.kind = trim(v); };
    real("potential.height", [](ExperimentPreset& p) -> double& { return p.potential.height; });
    real("potential.center", [](ExperimentPreset& p) -> double& { return p.potential.center; });
    real("potential.width", [](ExperimentPreset& p) -> double& { return p.potential.width; });

    t["reduce.body"] = [](ExperimentPreset& p, const std::string& v) {
      try {
        p.reduce_body = parse_reduce_body(trim(v));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    };

    integer("kernel.points_per_cell", [](ExperimentPreset& p, long long v) {
      p.kernel.points_per_cell = static_cast<int>(v);
    });
    integer("kernel.max_refinements", [](ExperimentPreset& p, long long v) {
      p.kernel.max_refinements = static_cast<int>(v);
    });
    real("kernel.tolerance", [](ExperimentPreset& p) -> double& { return p.kernel.tolerance; });
    t["kernel.memory_budget_gib"] = [](ExperimentPreset& p, const std::string& v) {
      const double gib = to_double(v);
      if (!(gib > 0.0)) throw ConfigError("memory_budget_gib must be positive");
      p.kernel.memory_budget = static_cast<std::size_t>(gib * 1073741824.0);
    };
    t["kernel.cache"] = [](ExperimentPreset& p, const std::string& v) { p.kernel_cache = trim(v); };
    return t;
  }();
  return table;
}

struct Parsed {
  ExperimentPreset preset;
  std::vector<std::string> errors;
};

Parsed parse_ini(std::istream& is) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Parsed out;
  if (auto base = tree.get_optional<std::string>("run.preset")) {
    out.preset = builtin_preset(trim(*base));
  } else {
    out.preset = builtin_preset("fig2");
    out.preset.name = "custom";
  }
  const auto& table = setters();
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) {
      out.errors.push_back("key '" + section + "' must be inside a section");
      continue;
    }
    for (const auto& [key, value] : keys) {
      const std::string full = section + "." + key;
      if (full == "run.preset") continue;
      const auto it = table.find(full);
      if (it == table.end()) {
        out.errors.push_back("unknown key '" + full + "'");
        continue;
      }
      try {
        it->second(out.preset, value.data());
      } catch (const ConfigError& e) {
        out.errors.push_back(full + ": " + e.what());
      }
    }
  }
  // an explicit `enabled` wins over the implicit enabling by r_prob / r_pct
  if (auto enabled = tree.get_optional<std::string>("dissipation.enabled")) {
    try {
      out.preset.cfg.dissipation.enabled = to_bool(*enabled);
    } catch (const ConfigError&) {
    }
  }
  return out;
}

Parsed parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read " + path.string());
  return parse_ini(is);
}

bool on_epoch_grid(double t, const SimConfig& cfg) { return t == 0.0 || is_multiple_of(t, cfg.dt_obs); }

double mid_point(const ExperimentPreset& p) {
  return p.initial == "entangled_pair" ? 0.5 * (p.entangled.x1 + p.entangled.x2) : p.ferry.center;
}

std::unique_ptr<InitialDistribution> make_initial(const ExperimentPreset& p) {
  if (p.initial == "entangled_pair")
    return std::make_unique<EntangledDistribution>(EntangledDistribution::normalized(p.entangled, p.cfg));
  return std::make_unique<FerryPairDistribution>(p.ferry);
}

KernelTable make_table(const ExperimentPreset& p) {
  const Potential v = p.potential.build(p.cfg.n_bodies);
  if (!p.kernel_cache) return build_table(v, p.cfg, p.kernel);
  const auto hash = table_hash(v, p.cfg, p.kernel);
  if (std::filesystem::exists(*p.kernel_cache)) {
    try {
      return load_table(*p.kernel_cache, p.cfg, hash);
    } catch (const std::runtime_error&) {
      // stale or foreign cache: rebuild and overwrite below
    }
  }
  KernelTable table = build_table(v, p.cfg, p.kernel);
  save_table(table, *p.kernel_cache, hash);
  return table;
}

MetricSample observe(const Ensemble& e, const ExperimentPreset& p) {
  MetricSample m;
  m.t = e.t;
  m.particles = e.particles.size();
  m.nu = entanglement_negativity(e, p.cfg);
  m.amplitude = oscillation_amplitude(reduce(e, p.cfg, p.reduce_body), p.cfg, mid_point(p));
  return m;
}

nlohmann::ordered_json config_json(const ExperimentPreset& p) {
  const auto& c = p.cfg;
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["initial"] = p.initial;
  j["noise"] = p.noise;
  j["seed"] = c.seed;
  j["particles_target"] = p.particles;
  j["geometry"] = {{"n_bodies", c.n_bodies},
                   {"dims", c.dims},
                   {"domain_length", c.domain_length},
                   {"spatial_cell", c.spatial_cell},
                   {"coherence_length", c.coherence_length},
                   {"momentum_step", c.momentum_step()},
                   {"m_max", c.m_max},
                   {"mass", c.mass},
                   {"hbar", c.hbar}};
  j["time"] = {{"dt", c.dt}, {"dt_obs", c.dt_obs}, {"t_final", c.t_final}};
  j["dissipation"] = {{"enabled", c.dissipation.enabled},
                      {"r_prob", c.dissipation.r_prob},
                      {"r_pct", c.dissipation.r_pct},
                      {"rounding", c.dissipation.rounding == SnapRule::stochastic ? "stochastic" : "nearest"}};
  if (p.initial == "entangled_pair") {
    const auto& e = p.entangled;
    j["initial_params"] = {{"x1", e.x1},           {"x2", e.x2},           {"p1", e.p1},
                           {"p2", e.p2},           {"sigma_x1", e.sigma_x1}, {"sigma_x2", e.sigma_x2},
                           {"sigma_p1", e.sigma_p1}, {"sigma_p2", e.sigma_p2}, {"sigma_0", e.sigma_0},
                           {"sigma_ent_x", e.sigma_ent_x}, {"sigma_ent_p", e.sigma_ent_p}};
  } else {
    j["initial_params"] = {{"center", p.ferry.center}, {"x0", p.ferry.x0}, {"p0", p.ferry.p0},
                           {"sigma", p.ferry.sigma}};
  }
  j["potential"] = {{"kind", p.potential.kind},
                    {"height", p.potential.height},
                    {"center", p.potential.center},
                    {"width", p.potential.width}};
  j["reduce_body"] = to_string(p.reduce_body);
  j["snapshot_times"] = p.snapshot_times;
  return j;
}

}  // namespace

Potential PotentialSpec::build(int bodies) const {
  if (kind == "zero") return Potential::zero(bodies);
  if (kind == "gaussian_barrier") return Potential::gaussian_barrier(bodies, height, center, width);
  throw ConfigError("unknown potential kind '" + kind + "'");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"fig1_ballistic", "fig2", "fig3", "fig5", "fig6", "fig7"};
  return names;
}

DissipationParams noise_preset(const std::string& name) {
  DissipationParams d;
  if (name == "none") return d;
  d.enabled = true;
  if (name == "noise_strong") {
    d.r_prob = 0.02;
    d.r_pct = 0.15;
  } else if (name == "noise_weak") {
    d.r_prob = 0.01;
    d.r_pct = 0.05;
  } else {
    throw ConfigError("unknown dissipation preset '" + name + "'");
  }
  return d;
}

ExperimentPreset builtin_preset(const std::string& name) {
  if (name == "fig1_ballistic") {
    ExperimentPreset p = entangled_base(name, 2.5, 1.5, "none");
    p.cfg.t_final = 3.0;
    p.snapshot_times = {0.0, 1.0, 2.0, 3.0};
    return p;
  }
  if (name == "fig2") return entangled_base(name, 2.5, 1.5, "noise_strong");
  if (name == "fig3") return entangled_base(name, 2.5, 1.5, "noise_weak");
  if (name == "fig5") return entangled_base(name, 2.5, 0.5, "noise_weak");
  if (name == "fig6") return entangled_base(name, 3.5, 1.5, "noise_weak");
  if (name == "fig7") return entangled_base(name, 3.5, 0.5, "noise_weak");
  throw ConfigError("unknown preset '" + name + "'");
}

ExperimentPreset parse_config(std::istream& is) {
  Parsed parsed = parse_ini(is);
  if (!parsed.errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : parsed.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return parsed.preset;
}

ExperimentPreset load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read " + path.string());
  return parse_config(is);
}

std::vector<std::string> validate_preset(const ExperimentPreset& p) {
  std::vector<std::string> out = p.cfg.violations();
  auto fail = [&out](std::string msg) { out.push_back(std::move(msg)); };
  const auto& d = p.cfg.dissipation;
  if (d.enabled) {
    if (!(d.r_prob >= 0.0 && d.r_prob <= 1.0)) fail("dissipation.r_prob must lie in [0, 1]");
    if (!(d.r_pct > 0.0 && d.r_pct <= 1.0)) fail("dissipation.r_pct must lie in (0, 1]");
  }
  if (p.momentum_step) {
    const double derived = p.cfg.momentum_step();
    if (!(std::abs(*p.momentum_step - derived) <= 1e-9 * derived))
      fail("geometry.momentum_step " + format_double(*p.momentum_step) +
           " is inconsistent with hbar * pi / coherence_length = " + format_double(derived));
  }
  if (p.particles < 1) fail("run.particles must be >= 1");
  if (p.initial == "entangled_pair") {
    if (p.cfg.n_bodies != 2) fail("entangled_pair needs n_bodies = 2");
    try {
      p.entangled.check();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  } else if (p.initial == "ferry_pair") {
    if (p.cfg.n_bodies != 1) fail("ferry_pair needs n_bodies = 1");
    if (!(p.ferry.sigma > 0.0)) fail("initial.sigma must be positive");
  } else {
    fail("run.initial must be entangled_pair or ferry_pair");
  }
  if (p.potential.kind != "zero" && p.potential.kind != "gaussian_barrier")
    fail("potential.kind must be zero or gaussian_barrier");
  if (p.potential.kind == "gaussian_barrier" && !(p.potential.width > 0.0)) fail("potential.width must be positive");
  if (p.kernel.points_per_cell < 1) fail("kernel.points_per_cell must be >= 1");
  if (p.kernel.max_refinements < 1) fail("kernel.max_refinements must be >= 1");
  if (!(p.kernel.tolerance > 0.0)) fail("kernel.tolerance must be positive");
  if (!std::is_sorted(p.snapshot_times.begin(), p.snapshot_times.end()) ||
      std::adjacent_find(p.snapshot_times.begin(), p.snapshot_times.end()) != p.snapshot_times.end())
    fail("run.snapshots must be strictly increasing");
  for (double t : p.snapshot_times) {
    if (!(t >= 0.0 && t <= p.cfg.t_final + 1e-12)) fail("snapshot time " + format_double(t) + " outside [0, t_final]");
    else if (p.cfg.dt_obs > 0.0 && !on_epoch_grid(t, p.cfg))
      fail("snapshot time " + format_double(t) + " is not a multiple of dt_obs");
  }
  if (p.reduce_body == ReduceBody::second && p.cfg.n_bodies < 2) fail("reduce.body = 2 needs two bodies");
  return out;
}

std::vector<std::string> validate_config(const std::filesystem::path& path) {
  Parsed parsed = parse_file(path);
  auto out = parsed.errors;
  for (auto& v : validate_preset(parsed.preset)) out.push_back(std::move(v));
  return out;
}

std::string snapshot_file_name(double t) { return "snapshot_t" + format_double(t) + "fs.txt"; }

SimulationResult simulate(const ExperimentPreset& p, const SimulationOptions& opt) {
  const auto violations = validate_preset(p);
  if (!violations.empty()) {
    std::string msg = "invalid preset '" + p.name + "':";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }

  const auto f0 = make_initial(p);
  const KernelTable table = make_table(p);

  SimulationResult res;
  Ensemble e = seed_ensemble(*f0, p.particles, p.cfg);
  res.seeded = e.particles.size();
  res.normalization = e.normalization;

  std::size_t next_snapshot = 0;
  auto maybe_snapshot = [&](const Ensemble& ens) {
    while (next_snapshot < p.snapshot_times.size() &&
           std::abs(p.snapshot_times[next_snapshot] - ens.t) <= 1e-9 * std::max(1.0, ens.t)) {
      res.snapshots.push_back(reduce(ens, p.cfg, p.reduce_body));
      ++next_snapshot;
    }
  };
  res.metrics.push_back(observe(e, p));
  maybe_snapshot(e);

  RunOptions ro;
  ro.threads = opt.threads;
  ro.particle_cap = opt.particle_cap;
  ro.descendant_cap = opt.descendant_cap;
  ro.progress = opt.progress;
  ro.on_epoch = [&](const Ensemble& ens, const EpochReport&) {
    res.metrics.push_back(observe(ens, p));
    maybe_snapshot(ens);
  };
  res.epochs = run(e, p.cfg, table, ro);
  res.counters = e.counters;
  res.final_state = std::move(e);
  return res;
}

SimulationResult run_experiment(const ExperimentPreset& p, const std::filesystem::path& out_dir,
                                const SimulationOptions& opt) {
  SimulationResult res = simulate(p, opt);
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> snapshot_files;
  for (const auto& s : res.snapshots) {
    const std::string name = snapshot_file_name(s.time);
    snapshot_write(s, out_dir / name);
    snapshot_files.push_back(name);
  }

  {
    std::ofstream log(out_dir / "metrics.log", std::ios::binary);
    if (!log) throw std::runtime_error("cannot write " + (out_dir / "metrics.log").string());
    for (const auto& m : res.metrics) log << metric_line(m.t, m.nu, m.amplitude, m.particles) << '\n';
  }

  nlohmann::ordered_json report;
  report["preset"] = config_json(p);
  report["seeded_particles"] = res.seeded;
  report["normalization"] = res.normalization;
  report["nu0"] = res.metrics.front().nu;
  report["final"] = {{"t", res.metrics.back().t},
                     {"nu", res.metrics.back().nu},
                     {"amplitude", res.metrics.back().amplitude},
                     {"particles", res.metrics.back().particles}};
  report["totals"] = {{"created_pairs", res.counters.created_pairs},
                      {"annihilated_pairs", res.counters.annihilated_pairs},
                      {"dissipation_hits", res.counters.dissipation_hits},
                      {"removed", res.counters.removed},
                      {"discarded_pairs", res.counters.discarded_pairs}};
  auto epochs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < res.epochs.size(); ++i) {
    const auto& r = res.epochs[i];
    const auto& m = res.metrics[i + 1];
    epochs.push_back({{"t", r.t},
                      {"particles_before", r.particles_before},
                      {"particles_after", r.particles_after},
                      {"created_pairs", r.created_pairs},
                      {"annihilated_pairs", r.annihilated_pairs},
                      {"removed", r.removed},
                      {"discarded_pairs", r.discarded_pairs},
                      {"dissipation_hits", r.dissipation_hits},
                      {"nu", m.nu},
                      {"amplitude", m.amplitude}});
  }
  report["epochs"] = std::move(epochs);
  report["snapshots"] = snapshot_files;
  std::ofstream rj(out_dir / "report.json", std::ios::binary);
  if (!rj) throw std::runtime_error("cannot write " + (out_dir / "report.json").string());
  rj << report.dump(2) << '\n';
  return res;
}

}  // namespace mbw
