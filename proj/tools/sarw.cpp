// sarw: headless runs, condition comparisons, interactive serving, log
// replay and VPT reports.
//
// Exit codes: 0 ok, 2 scenario/log/endpoint error, 3 incomplete run,
// 64 usage error. Option precedence: flag > SARW_* env > --config > default.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "sarw/bundled_scenarios.hpp"
#include "sarw/scenario.hpp"
#include "sarw/sim.hpp"
#include "sarw/sync_server.hpp"
#include "sarw/vpt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sarw;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitIncomplete = 3;
constexpr int kExitUsage = 64;

struct Options {
  std::string scenario;
  std::string log;
  int seeds = 1;
  std::optional<std::uint64_t> seed;
  std::string robot;
  std::string human;
  std::string delivery;
  std::string out = "sarw_out";
  double dt = 0.05;
  double max_time = 600.0;
  double noise_pos = 0.02;
  double noise_rot = 0.01;
  std::string endpoint = "127.0.0.1:8765";
  double rate = 20.0;
  double speed = 1.0;
  bool paused = false;
  bool serve = false;
  bool as_json = false;
  std::string baseline = "off";
  std::string treatment = "on";
  std::string event_log;
};

/// Config file values become the starting values of the option variables;
/// CLI11 overwrites them only when a flag or SARW_* variable is present.
void apply_config(const json& c, Options& o) {
  auto take = [&](const char* key, auto& dst) {
    if (c.contains(key)) dst = c.at(key).get<std::remove_reference_t<decltype(dst)>>();
  };
  take("seeds", o.seeds);
  if (c.contains("seed")) o.seed = c.at("seed").get<std::uint64_t>();
  take("robot", o.robot);
  take("human", o.human);
  take("delivery", o.delivery);
  take("out", o.out);
  take("dt", o.dt);
  take("max_time", o.max_time);
  take("noise_pos", o.noise_pos);
  take("noise_rot", o.noise_rot);
  take("endpoint", o.endpoint);
  take("rate", o.rate);
  take("speed", o.speed);
  take("paused", o.paused);
  take("baseline", o.baseline);
  take("treatment", o.treatment);
}

std::optional<std::string> config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  if (const char* env = std::getenv("SARW_CONFIG")) return std::string(env);
  return std::nullopt;
}

ScenarioConfig resolve_scenario(const std::string& arg) {
  if (!fs::exists(arg)) {
    for (const auto& e : bundled::all) {
      if (e.name == arg) return parse_scenario_text(std::string(e.text));
    }
  }
  return read_scenario_file(arg);
}

SimConfig sim_config(const ScenarioConfig& scn, const Options& o) {
  SimConfig c = sim_config_for(scn);
  if (o.seed) c.seed = *o.seed;
  if (!o.robot.empty()) c.robot_enabled = o.robot == "on";
  if (!o.human.empty()) c.human_policy = human_policy_from(o.human);
  if (!o.delivery.empty()) c.delivery = delivery_from(o.delivery);
  c.dt = o.dt;
  c.max_time = o.max_time;
  c.noise = {o.noise_pos, o.noise_rot};
  c.validate();
  return c;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + p.string());
  f << text;
}

std::string lines_text(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + '\n';
  return s;
}

void write_run(const fs::path& dir, const RunResult& r) {
  write_file(dir / "metrics.json", to_json(r.metrics).dump(2) + "\n");
  write_file(dir / "metrics.csv", metrics_csv_header() + "\n" + metrics_csv_row(r.metrics) + "\n");
  write_file(dir / "events.jsonl", lines_text(r.log));
}

std::string seconds(double t) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << t;
  return os.str();
}

int cmd_run(const Options& o) {
  const ScenarioConfig scn = resolve_scenario(o.scenario);
  SimConfig cfg = sim_config(scn, o);
  const std::uint64_t base = cfg.seed;
  const fs::path out(o.out);
  std::vector<Metrics> all;
  std::vector<double> times;
  int incomplete = 0;
  for (int i = 0; i < o.seeds; ++i) {
    cfg.seed = base + static_cast<std::uint64_t>(i);
    const RunResult r = run(scn, cfg);
    write_run(out / ("seed_" + std::to_string(cfg.seed)), r);
    const Metrics& m = r.metrics;
    std::cout << "seed " << cfg.seed << ": "
              << (m.complete ? "complete in " + seconds(m.completion_time) + " s" : "INCOMPLETE at " + seconds(m.end_time) + " s")
              << " (human " << m.delivered_count(AgentId::Human) << ", robot " << m.delivered_count(AgentId::Robot)
              << ")\n";
    incomplete += m.complete ? 0 : 1;
    times.push_back(m.completion_time);
    all.push_back(m);
  }
  const ConditionSummary agg = summarize(times, incomplete);
  cfg.seed = base;
  json report = {{"scenario", scn.name()}, {"config", to_json(cfg)}, {"seeds", json::array()}, {"runs", json::array()}};
  std::string csv = metrics_csv_header() + "\n";
  for (const auto& m : all) {
    report["seeds"].push_back(m.seed);
    report["runs"].push_back(to_json(m));
    csv += metrics_csv_row(m) + "\n";
  }
  report["aggregate"] = {{"runs", all.size()}, {"mean", agg.mean}, {"median", agg.median}, {"incomplete", incomplete}};
  write_file(out / "report.json", report.dump(2) + "\n");
  write_file(out / "report.csv", csv);
  std::cout << "runs " << all.size() << ", mean " << seconds(agg.mean) << " s, median " << seconds(agg.median)
            << " s, incomplete " << incomplete << "\nwrote " << out.string() << "\n";
  return incomplete ? kExitIncomplete : kExitOk;
}

int cmd_compare(const Options& o) {
  const ScenarioConfig scn = resolve_scenario(o.scenario);
  const SimConfig cfg = sim_config(scn, o);
  const fs::path out(o.out);
  const Comparison c = compare_conditions(
      scn, cfg, o.seeds, o.baseline == "on", o.treatment == "on",
      [&](const PairedRun& p, const RunResult& a, const RunResult& b) {
        const fs::path dir = out / ("seed_" + std::to_string(p.seed));
        write_run(dir / "human", a);
        write_run(dir / "human_robot", b);
      });
  std::cout << "  seed      human  human+robot\n";
  std::string csv = "seed,human,human_robot,human_complete,human_robot_complete\n";
  for (const auto& p : c.pairs) {
    std::cout << std::setw(6) << p.seed << std::setw(11) << seconds(p.human_only.completion_time) << std::setw(13)
              << seconds(p.with_robot.completion_time) << "\n";
    csv += std::to_string(p.seed) + "," + seconds(p.human_only.completion_time) + "," +
           seconds(p.with_robot.completion_time) + "," + (p.human_only.complete ? "1" : "0") + "," +
           (p.with_robot.complete ? "1" : "0") + "\n";
  }
  std::cout << "median  human " << seconds(c.human_only.median) << " s, human+robot " << seconds(c.with_robot.median)
            << " s (difference " << seconds(c.median_difference()) << " s)\n"
            << "mean    human " << seconds(c.human_only.mean) << " s, human+robot " << seconds(c.with_robot.mean)
            << " s\nhuman+robot faster in " << c.robot_faster << "/" << c.pairs.size() << " pairs\n";
  json report = to_json(c);
  report["scenario"] = scn.name();
  report["config"] = to_json(cfg);
  report["conditions"] = {{"human", o.baseline}, {"human_robot", o.treatment}};
  write_file(out / "report.json", report.dump(2) + "\n");
  write_file(out / "report.csv", csv);
  std::cout << "wrote " << out.string() << "\n";
  return c.human_only.incomplete + c.with_robot.incomplete ? kExitIncomplete : kExitOk;
}

ServerOptions server_options(const Options& o) {
  ServerOptions s;
  s.endpoint = Endpoint::parse(o.endpoint);
  s.snapshot_rate = o.rate;
  s.speed = o.speed;
  s.start_paused = o.paused;
  return s;
}

int serve(SyncServer& server, const ServerOptions& s, const std::string& name) {
  server.run([&] {
    std::cout << "serving " << name << " on ws://" << s.endpoint.host << ":" << server.port() << " (Ctrl-C stops)"
              << std::endl;
  });
  return kExitOk;
}

int cmd_serve(const Options& o) {
  const ScenarioConfig scn = resolve_scenario(o.scenario);
  Options eff = o;
  if (eff.human.empty()) eff.human = "external";
  const SimConfig cfg = sim_config(scn, eff);
  ServerOptions s = server_options(o);
  std::shared_ptr<std::ofstream> log;
  if (!o.event_log.empty()) {
    log = std::make_shared<std::ofstream>(o.event_log, std::ios::binary);
    if (!*log) throw Error(ErrorCode::Io, "cannot write " + o.event_log);
    s.log_sink = [log](const std::string& line) { *log << line << '\n' << std::flush; };
  }
  SyncServer server(scn, cfg, s);
  return serve(server, s, scn.name());
}

int cmd_replay(const Options& o) {
  std::ifstream in(o.log, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open log " + o.log);
  const auto lines = read_log_lines(in);
  const ReplaySummary s = replay(lines);
  std::cout << "replay verified: " << s.entries_verified << " entries, " << s.hashes_verified << " state hashes, "
            << s.ticks << " ticks, final hash " << s.final_hash
            << (s.reached_end ? "" : " (log ends before the run finished)") << "\n";
  if (!o.serve) return kExitOk;

  const json start = json::parse(lines.front()).at("payload");
  const ScenarioConfig scn = parse_scenario(start.at("scenario"));
  const SimConfig cfg = sim_config_from_json(start.at("config"));
  ServerOptions so = server_options(o);
  so.accept_commands = false;
  for (const auto& l : lines) {
    if (l.find("\"human-command\"") == std::string::npos) continue;
    const json j = json::parse(l);
    if (j.at("kind") == "human-command") {
      so.scripted_commands[j["payload"]["tick"].get<std::uint64_t>()] =
          human_command_from_json(j["payload"]["command"]);
    }
  }
  SyncServer server(scn, cfg, so);
  return serve(server, so, scn.name() + " (replay)");
}

int cmd_vpt_report(const Options& o) {
  const ScenarioConfig scn = resolve_scenario(o.scenario);
  const WorldState w = load_scenario(scn);
  const auto as = assess_all(w);
  if (o.as_json) {
    json arr = json::array();
    for (const auto& a : as) {
      arr.push_back({{"id", a.hologram_id},
                     {"label", w.get(a.hologram_id).label},
                     {"angle_deg", rad2deg(a.angle)},
                     {"occluded", a.occluded},
                     {"blocked_fraction", a.blocked_fraction},
                     {"cost", a.cost},
                     {"region", std::string(to_string(a.region))}});
    }
    std::cout << arr.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << scn.name() << " at t=0\n"
            << "  id  label            angle_deg  occluded    cost  region\n";
  double max_cost = -1.0;
  for (const auto& a : as) max_cost = std::max(max_cost, a.cost);
  for (const auto& a : as) {
    char row[160];
    std::snprintf(row, sizeof row, "%4d  %-15s %10.2f  %8s  %6.3f  %-10s%s\n", a.hologram_id,
                  w.get(a.hologram_id).label.c_str(), rad2deg(a.angle), a.occluded ? "yes" : "no", a.cost,
                  std::string(to_string(a.region)).c_str(), a.cost == max_cost ? "  <- max cost" : "");
    std::cout << row;
  }
  return kExitOk;
}

/// CLI11 silently drops SARW_* values that fail a validator, so option
/// values are checked here instead, whatever their source.
std::string usage_problem(const Options& o) {
  auto member = [](const std::string& v, std::initializer_list<const char*> allowed) {
    if (v.empty()) return true;
    for (const char* a : allowed) {
      if (v == a) return true;
    }
    return false;
  };
  if (o.seeds < 1) return "--seeds must be >= 1";
  if (!(o.dt > 0.0)) return "--dt must be > 0";
  if (!(o.max_time >= 0.0)) return "--max-time must be >= 0";
  if (!(o.noise_pos >= 0.0) || !(o.noise_rot >= 0.0)) return "noise must be >= 0";
  if (!(o.rate > 0.0)) return "--rate must be > 0";
  if (!(o.speed > 0.0)) return "--speed must be > 0";
  if (!member(o.robot, {"on", "off"})) return "--robot must be on or off";
  if (!member(o.baseline, {"on", "off"}) || !member(o.treatment, {"on", "off"}))
    return "--baseline/--treatment must be on or off";
  if (!member(o.human, {"greedy_lowest_cost", "scripted_waypoints", "external"}))
    return "--human must be greedy_lowest_cost, scripted_waypoints or external";
  if (!member(o.delivery, {"goal_zone", "deliver_to_human"})) return "--delivery must be goal_zone or deliver_to_human";
  return "";
}

void add_sim_options(CLI::App* app, Options& o, bool multi_seed) {
  if (multi_seed) {
    app->add_option("--seeds", o.seeds, "number of seeds (runs per condition)")
        ->envname("SARW_SEEDS");
  }
  app->add_option("--seed", o.seed, "first seed (default: the scenario's seed)")->envname("SARW_SEED");
  app->add_option("--human", o.human, "human policy: greedy_lowest_cost|scripted_waypoints|external (serve defaults to external)")
      ->envname("SARW_HUMAN");
  app->add_option("--delivery", o.delivery, "robot delivery: goal_zone|deliver_to_human")
      ->envname("SARW_DELIVERY");
  app->add_option("--dt", o.dt, "time step in seconds")->envname("SARW_DT");
  app->add_option("--max-time", o.max_time, "sim time limit in seconds")
      ->envname("SARW_MAX_TIME");
  app->add_option("--noise-pos", o.noise_pos, "RMS error of the robot's human position estimate (m)")
      ->envname("SARW_NOISE_POS");
  app->add_option("--noise-rot", o.noise_rot, "RMS error of the robot's human orientation estimate (rad)")
      ->envname("SARW_NOISE_ROT");
}

void add_server_options(CLI::App* app, Options& o) {
  app->add_option("--endpoint", o.endpoint, "host:port to listen on")->envname("SARW_ENDPOINT");
  app->add_option("--rate", o.rate, "snapshots per second of sim time")
      ->envname("SARW_RATE");
  app->add_option("--speed", o.speed, "sim seconds per wall-clock second")
      ->envname("SARW_SPEED");
  app->add_flag("--paused", o.paused, "start paused")->envname("SARW_PAUSED");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"sarw: simulated robot perspective taking for AR hologram collection"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  app.add_option("--config", config_file, "JSON file with option defaults")->envname("SARW_CONFIG");

  try {
    if (auto p = config_path(argc, argv)) {
      std::ifstream in(*p);
      if (!in) throw Error(ErrorCode::Io, "cannot open config " + *p);
      apply_config(json::parse(in), o);
    }
  } catch (const json::exception& e) {
    std::cerr << "error: bad config file: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto* run_cmd = app.add_subcommand("run", "run the scenario headless for one or more seeds");
  run_cmd->add_option("scenario", o.scenario, "bundled scenario name or JSON path")->required();
  add_sim_options(run_cmd, o, true);
  run_cmd->add_option("--robot", o.robot, "robot on|off (default: scenario policy)")
      ->envname("SARW_ROBOT");
  run_cmd->add_option("--out", o.out, "output directory")->envname("SARW_OUT");

  auto* compare_cmd = app.add_subcommand("compare", "paired runs with the robot off and on");
  compare_cmd->add_option("scenario", o.scenario, "bundled scenario name or JSON path")->required();
  add_sim_options(compare_cmd, o, true);
  compare_cmd->add_option("--out", o.out, "output directory")->envname("SARW_OUT");
  compare_cmd->add_option("--baseline", o.baseline, "robot in the baseline condition (on|off)")
      ->envname("SARW_BASELINE");
  compare_cmd->add_option("--treatment", o.treatment, "robot in the treatment condition (on|off)")
      ->envname("SARW_TREATMENT");

  auto* serve_cmd = app.add_subcommand("serve", "interactive simulation over WebSocket");
  serve_cmd->add_option("scenario", o.scenario, "bundled scenario name or JSON path")->required();
  add_sim_options(serve_cmd, o, false);
  serve_cmd->add_option("--robot", o.robot, "robot on|off")->envname("SARW_ROBOT");
  serve_cmd->add_option("--log", o.event_log, "write the event log (JSONL) here");
  add_server_options(serve_cmd, o);

  auto* replay_cmd = app.add_subcommand("replay", "verify a recorded event log, optionally serving it");
  replay_cmd->add_option("log", o.log, "events.jsonl")->required();
  replay_cmd->add_flag("--serve", o.serve, "after verifying, stream the replay to clients");
  add_server_options(replay_cmd, o);

  auto* vpt_cmd = app.add_subcommand("vpt-report", "per-hologram assessments at t=0");
  vpt_cmd->add_option("scenario", o.scenario, "bundled scenario name or JSON path")->required();
  vpt_cmd->add_flag("--json", o.as_json, "print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (const std::string bad = usage_problem(o); !bad.empty()) {
    std::cerr << "error: " << bad << "\n";
    return kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(o);
    if (*compare_cmd) return cmd_compare(o);
    if (*serve_cmd) return cmd_serve(o);
    if (*replay_cmd) return cmd_replay(o);
    if (*vpt_cmd) return cmd_vpt_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}
