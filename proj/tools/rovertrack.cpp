// Command-line entry point: terrain export, training, evaluation, sweeps,
// plotting and the bridge server.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "rovertrack/bridge.hpp"
#include "rovertrack/config.hpp"
#include "rovertrack/episode_log.hpp"
#include "rovertrack/metrics.hpp"
#include "rovertrack/plot.hpp"
#include "rovertrack/ppo.hpp"

namespace fs = std::filesystem;
using namespace rovertrack;

namespace {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level log_level() {
  const char* v = std::getenv("ROVERTRACK_LOG");
  if (!v) return Level::kInfo;
  const std::string s = v;
  if (s == "error" || s == "0") return Level::kError;
  if (s == "warn" || s == "1") return Level::kWarn;
  if (s == "debug" || s == "3") return Level::kDebug;
  return Level::kInfo;
}

void log(Level level, const std::string& msg) {
  static const Level threshold = log_level();
  if (level > threshold) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "JSON run configuration (defaults are used for missing keys)");
  cmd->add_option("--set", c.overrides, "override a config value, e.g. --set ppo.total_steps=500000")
      ->type_name("KEY=JSON");
}

/// Applies `a.b.c=value` overrides on the JSON form, then decodes strictly.
RunConfig resolve_config(const Common& c) {
  Json j = to_json(c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path));
  for (const auto& ov : c.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + ov + "'");
    const std::string key = ov.substr(0, eq), raw = ov.substr(eq + 1);
    Json value;
    try {
      value = Json::parse(raw);
    } catch (const nlohmann::json::exception&) {
      value = raw;  // bare strings
    }
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const Json::json_pointer ptr(pointer);
    if (!j.contains(ptr)) throw ConfigError("unknown config key '" + key + "'");
    j[ptr] = value;
  }
  return run_config_from_json(j);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << v;
  return s.str();
}

// --- gen-terrain ---------------------------------------------------------------

struct GenTerrainArgs {
  Common common;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "terrain";
};

int cmd_gen_terrain(const GenTerrainArgs& a) {
  RunConfig cfg = resolve_config(a.common);
  TerrainParams p = cfg.regime.terrain;
  if (a.seed_set) p.seed = a.seed;
  p.validate();
  const Terrain t = generate_terrain(p);
  const fs::path prefix(a.out);
  if (prefix.has_parent_path()) ensure_dir(prefix.parent_path());
  {
    std::ofstream out(prefix.string() + ".hf", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write heightfield");
    write_heightfield_binary(out, t.field, p.seed);
  }
  {
    std::ofstream out(prefix.string() + ".pgm", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write PGM");
    write_heightfield_pgm(out, t.field);
  }
  cfg.regime.terrain = p;
  save_run_config(prefix.string() + ".config.json", cfg);
  std::cout << "terrain seed " << p.seed << ": " << t.craters.size() << " craters, " << t.boulders.size()
            << " boulders, checksum " << std::hex << t.field.checksum() << std::dec << "\n";
  return 0;
}

// --- train ---------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string out = "run";
};

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = resolve_config(a.common);
  const fs::path dir(a.out);
  ensure_dir(dir);
  save_run_config((dir / "config.json").string(), cfg);
  const PpoConfig ppo = cfg.resolved_ppo();
  log(Level::kInfo, "training " + std::string(to_string(cfg.regime.regime)) + " regime, " +
                        std::to_string(ppo.n_envs) + " envs, " + std::to_string(ppo.total_steps) + " steps");
  const auto t0 = std::chrono::steady_clock::now();
  Policy last_good;
  TrainResult result;
  try {
    result = train(ppo, cfg.regime,
                   [&](const UpdateStats& u, const LearningCurveRow& row) {
                     const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                     log(Level::kInfo, "update " + std::to_string(u.update + 1) + "/" + std::to_string(ppo.updates()) +
                                           " step " + std::to_string(row.step) + " return " + fmt(row.mean_return, 1) +
                                           " kl " + fmt(u.loss.approx_kl, 5) + " (" + fmt(s, 0) + " s)");
                   },
                   &last_good);
  } catch (const TrainingError& e) {
    last_good.config_json = to_json(cfg).dump();
    save_policy((dir / "policy.last_good.bin").string(), last_good);
    throw;
  }
  result.policy.config_json = to_json(cfg).dump();
  save_policy((dir / "policy.bin").string(), result.policy);
  std::ofstream curve(dir / "learning_curve.csv");
  write_learning_curve_csv(curve, result.curve);
  std::cout << "wrote " << (dir / "policy.bin").string() << "\n";
  return 0;
}

// --- eval ----------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string policy;
  std::string controller = "policy";
  std::string trajectory = "capsule";
  double speed = 0.15;
  std::string filter = "none";
  int episodes = 0;
  std::string out = "eval";
  bool jsonl = false;
};

std::function<Controller(std::shared_ptr<const WaypointTrajectory>)> controller_factory(
    const std::string& kind, const Policy* policy, const DynamicsParams& dyn) {
  if (kind == "policy") {
    if (!policy) throw ConfigError("--policy is required for the policy controller");
    Controller c = greedy_controller(*policy);
    return [c](std::shared_ptr<const WaypointTrajectory>) { return c; };
  }
  if (kind == "tracking")
    return [dyn](std::shared_ptr<const WaypointTrajectory> t) { return tracking_controller(std::move(t), dyn); };
  if (kind == "zero") return [](std::shared_ptr<const WaypointTrajectory>) { return zero_controller(); };
  throw ConfigError("unknown controller '" + kind + "' (policy|tracking|zero)");
}

void write_logs(const fs::path& dir, const std::vector<EpisodeLog>& logs, bool jsonl) {
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const std::string stem = "episode_" + std::to_string(i);
    std::ofstream csv(dir / (stem + ".csv"));
    write_episode_csv(csv, logs[i]);
    if (jsonl) {
      std::ofstream js(dir / (stem + ".jsonl"));
      write_episode_jsonl(js, logs[i]);
    }
  }
}

int cmd_eval(const EvalArgs& a) {
  RunConfig cfg = resolve_config(a.common);
  if (a.episodes > 0) cfg.eval.episodes = a.episodes;
  std::optional<Policy> policy;
  if (a.controller == "policy") {
    if (a.policy.empty()) throw ConfigError("--policy is required for the policy controller");
    policy = load_policy(a.policy);
  }
  const auto make = controller_factory(a.controller, policy ? &*policy : nullptr, cfg.regime.env.dynamics);
  const TrajectoryKind kind = parse_trajectory_kind(a.trajectory);
  const FilterSpec filter = FilterSpec::from_name(a.filter);
  const EvalConfig ec = cfg.eval_config(kind, a.speed, filter);

  std::optional<EvalResult> baseline;
  if (filter.kind != FilterKind::kNone) baseline = evaluate(make, cfg.eval_config(kind, a.speed, FilterSpec::none()));
  const EvalResult res = evaluate(make, ec, baseline ? &baseline->logs : nullptr);

  const fs::path dir(a.out);
  ensure_dir(dir);
  save_run_config((dir / "config.json").string(), cfg);
  write_text(dir / "metrics.json", to_json(res.mean) + "\n");
  write_logs(dir, res.logs, a.jsonl);
  std::cout << to_json(res.mean) << "\n";
  return 0;
}

// --- sweep ---------------------------------------------------------------------

struct SweepArgs {
  Common common;
  std::vector<std::string> policies;  // name=path
  std::string controller = "policy";
  std::string out = "sweep";
};

int cmd_sweep(const SweepArgs& a) {
  const RunConfig cfg = resolve_config(a.common);
  std::vector<std::pair<std::string, std::optional<Policy>>> variants;
  if (a.controller == "policy") {
    if (a.policies.empty()) throw ConfigError("sweep needs at least one --policy NAME=PATH");
    for (const auto& spec : a.policies) {
      const auto eq = spec.find('=');
      const std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
      const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
      variants.emplace_back(name, load_policy(path));
    }
  } else {
    variants.emplace_back(a.controller, std::nullopt);
  }
  const bool multi_policy = variants.size() > 1;
  const fs::path dir(a.out);
  ensure_dir(dir);
  save_run_config((dir / "config.json").string(), cfg);

  std::vector<SweepEntry> entries;
  int job = 0;
  for (auto kind : cfg.eval.trajectories) {
    for (double speed : cfg.eval.speeds) {
      for (const auto& [vname, policy] : variants) {
        const auto make =
            controller_factory(a.controller, policy ? &*policy : nullptr, cfg.regime.env.dynamics);
        const EvalResult base = evaluate(make, cfg.eval_config(kind, speed, FilterSpec::none()));
        for (const auto& fname : cfg.eval.filters) {
          const FilterSpec filter = FilterSpec::from_name(fname);
          const EvalResult res = evaluate(make, cfg.eval_config(kind, speed, filter), &base.logs);
          SweepEntry e;
          e.trajectory = std::string(to_string(kind));
          e.speed = speed;
          e.variant = multi_policy ? (cfg.eval.filters.size() > 1 ? vname + "/" + fname : vname) : fname;
          e.metrics = res.mean;
          entries.push_back(e);
          const fs::path job_dir = dir / ("job_" + std::to_string(job++));
          ensure_dir(job_dir);
          write_text(job_dir / "metrics.json", to_json(res.mean) + "\n");
          write_logs(job_dir, res.logs, false);
          log(Level::kInfo, e.trajectory + " " + fmt(speed, 2) + " m/s " + e.variant + ": ATE " +
                                fmt(res.mean.ate_pos * 100, 2) + " cm");
        }
      }
    }
  }
  write_text(dir / "summary.json", sweep_to_json(entries) + "\n");
  std::string tables;
  for (auto kind : cfg.eval.trajectories) tables += format_table(entries, std::string(to_string(kind))) + "\n";
  write_text(dir / "tables.txt", tables);
  std::cout << tables;
  return 0;
}

// --- serve ---------------------------------------------------------------------

struct ServeArgs {
  Common common;
  std::string listen = "127.0.0.1:5555";
  bool keep_running = false;
};

int cmd_serve(const ServeArgs& a) {
  const RunConfig cfg = resolve_config(a.common);
  auto [host, port] = bridge::parse_address(a.listen);
  bridge::ServerOptions opts;
  opts.host = host;
  opts.port = port;
  opts.defaults = cfg.regime;
  opts.stop_on_close = !a.keep_running;
  bridge::Server server(opts);
  std::cout << "listening on " << host << ":" << server.port() << std::endl;
  server.serve();
  return 0;
}

// --- plot ----------------------------------------------------------------------

struct PlotArgs {
  Common common;
  std::vector<std::string> logs;
  std::string out = "trajectory.svg";
  std::int64_t terrain_seed = -1;
  double scale = 100.0;
};

int cmd_plot(const PlotArgs& a) {
  std::vector<EpisodeLog> logs;
  for (const auto& path : a.logs) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open log '" + path + "'");
    logs.push_back(read_episode_csv(in));
  }
  PlotOptions opt;
  opt.px_per_m = a.scale;
  std::optional<Terrain> terrain;
  if (a.terrain_seed >= 0) {
    const RunConfig cfg = resolve_config(a.common);
    TerrainParams p = cfg.regime.terrain;
    p.seed = static_cast<std::uint64_t>(a.terrain_seed);
    terrain = generate_terrain(p);
    opt.terrain = &*terrain;
  }
  write_text(a.out, render_trajectory_svg(logs, opt));
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rovertrack: terrain generation, rover tracking training and evaluation"};
  app.require_subcommand(1);

  GenTerrainArgs gen;
  auto* c_gen = app.add_subcommand("gen-terrain", "generate a terrain and export heightfield files");
  add_common(c_gen, gen.common);
  c_gen->add_option("--seed", gen.seed, "terrain seed (overrides config)")->each([&](const std::string&) {
    gen.seed_set = true;
  });
  c_gen->add_option("-o,--out", gen.out, "output prefix (.hf, .pgm, .config.json)");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a PPO policy");
  add_common(c_train, tr.common);
  c_train->add_option("-o,--out", tr.out, "output directory");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "evaluate a controller on one trajectory/speed/filter");
  add_common(c_eval, ev.common);
  c_eval->add_option("-p,--policy", ev.policy, "policy artifact");
  c_eval->add_option("--controller", ev.controller, "policy | tracking | zero");
  c_eval->add_option("--trajectory", ev.trajectory, "capsule | rectangle | circle | lissajous | lemniscate");
  c_eval->add_option("--speed", ev.speed, "target speed in m/s");
  c_eval->add_option("--filter", ev.filter, "none | ma | sg | bw");
  c_eval->add_option("--episodes", ev.episodes, "episodes (overrides config)");
  c_eval->add_flag("--jsonl", ev.jsonl, "also write JSONL episode logs");
  c_eval->add_option("-o,--out", ev.out, "output directory");

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "evaluate trajectories x speeds x filters x policies");
  add_common(c_sweep, sw.common);
  c_sweep->add_option("-p,--policy", sw.policies, "NAME=PATH, repeatable");
  c_sweep->add_option("--controller", sw.controller, "policy | tracking | zero");
  c_sweep->add_option("-o,--out", sw.out, "output directory");

  ServeArgs sv;
  auto* c_serve = app.add_subcommand("serve", "run the bridge server");
  add_common(c_serve, sv.common);
  c_serve->add_option("--listen", sv.listen, "host:port (port 0 picks a free port)");
  c_serve->add_flag("--keep-running", sv.keep_running, "keep accepting sessions after a close request");

  PlotArgs pl;
  auto* c_plot = app.add_subcommand("plot", "render episode CSV logs to an SVG overhead plot");
  add_common(c_plot, pl.common);
  c_plot->add_option("logs", pl.logs, "episode CSV files")->required();
  c_plot->add_option("-o,--out", pl.out, "SVG output path");
  c_plot->add_option("--terrain-seed", pl.terrain_seed, "outline craters and boulders of this terrain");
  c_plot->add_option("--scale", pl.scale, "pixels per meter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_gen->parsed()) return cmd_gen_terrain(gen);
    if (c_train->parsed()) return cmd_train(tr);
    if (c_eval->parsed()) return cmd_eval(ev);
    if (c_sweep->parsed()) return cmd_sweep(sw);
    if (c_serve->parsed()) return cmd_serve(sv);
    if (c_plot->parsed()) return cmd_plot(pl);
  } catch (const ConfigError& e) {
    log(Level::kError, e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    log(Level::kError, std::string("config: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log(Level::kError, e.what());
    return 3;
  }
  return 0;
}
