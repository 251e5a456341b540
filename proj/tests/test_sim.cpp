#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "sarw/sim.hpp"
#include "support/scenes.hpp"

using namespace sarw;

namespace {

SimConfig config_for(const ScenarioConfig& scn, bool robot, std::uint64_t seed) {
  SimConfig c = sim_config_for(scn);
  c.robot_enabled = robot;
  c.seed = seed;
  return c;
}

std::vector<nlohmann::json> entries_of_kind(const std::vector<std::string>& log, const std::string& kind) {
  std::vector<nlohmann::json> out;
  for (const auto& l : log) {
    auto j = nlohmann::json::parse(l);
    if (j["kind"] == kind) out.push_back(std::move(j));
  }
  return out;
}

ErrorCode replay_error(const std::vector<std::string>& lines) {
  try {
    replay(lines);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

// Human at (2,3) facing +x; three holograms ahead at well separated angles.
ScenarioConfig fan_room() {
  auto doc = scenes::room(8, 6);
  scenes::add_hologram(doc, 1, scenes::ball(0.1), 4.0, 3.0, 1.2);
  scenes::add_hologram(doc, 2, scenes::ball(0.1), 3.5, 4.6, 1.2);
  scenes::add_hologram(doc, 3, scenes::ball(0.1), 2.6, 5.2, 1.2);
  doc["policies"] = {{"human", "greedy_lowest_cost"}, {"robot", "none"}};
  return parse_scenario(doc);
}

}  // namespace

TEST(Step, IdleWorldOnlyAdvancesTime) {
  auto doc = scenes::room(6, 6);
  doc["policies"] = {{"human", "external"}, {"robot", "none"}};
  const ScenarioConfig scn = parse_scenario(doc);
  SimConfig cfg = sim_config_for(scn);
  Simulation sim(scn, cfg);
  // Nothing to deliver: completes at t=0, but stepping is still well defined.
  WorldState expect = sim.world();
  sim.step();
  expect.time = cfg.dt;
  expect.tick = 1;
  EXPECT_EQ(world_hash(sim.world()), world_hash(expect));
}

TEST(Step, ExternalMoveSpeedIsCapped) {
  auto doc = scenes::room(6, 6);
  scenes::add_hologram(doc, 1, scenes::ball(0.1), 5.0, 5.0, 1.0);
  doc["policies"] = {{"human", "external"}, {"robot", "none"}};
  const ScenarioConfig scn = parse_scenario(doc);
  for (const Vec2 move : {Vec2(1, 0), Vec2(1, 1), Vec2(-1, 1), Vec2(0.3, 0.4)}) {
    Simulation sim(scn, sim_config_for(scn));
    const Vec2 p0 = sim.world().human.body_position;
    HumanCommand c;
    c.move = move;
    sim.push_command(c);
    sim.step();
    const double step = (sim.world().human.body_position - p0).norm();
    const double cap = sim.world().human.max_speed * sim.config().dt;
    EXPECT_NEAR(step, std::min(1.0, move.norm()) * cap, 1e-12) << move.transpose();
  }
}

TEST(Step, AttachWhenRobotIsAdjacent) {
  auto doc = scenes::room(6, 6);
  scenes::add_hologram(doc, 1, scenes::ball(0.1), 4.0, 1.1, 0.5);
  doc["robot"]["position"] = {4.0, 1.0};
  doc["policies"] = {{"human", "external"}};
  const ScenarioConfig scn = parse_scenario(doc);
  Simulation sim(scn, sim_config_for(scn));
  sim.step();  // first VPT assessment and ranking
  const auto ev = sim.step();
  const bool attached = std::any_of(ev.begin(), ev.end(), [](const LogEntry& e) {
    return e.kind == "attach" && e.payload["agent"] == "robot" && e.payload["hologram"] == 1;
  });
  EXPECT_TRUE(attached);
  EXPECT_EQ(sim.world().robot.carried.value_or(-1), 1);
}

TEST(Run, ZeroHologramsCompletesAtZero) {
  const ScenarioConfig scn = parse_scenario(scenes::room(5, 5));
  const RunResult r = run(scn, sim_config_for(scn));
  EXPECT_TRUE(r.metrics.complete);
  EXPECT_EQ(r.metrics.completion_time, 0.0);
  EXPECT_EQ(r.log.size(), 1u);
}

TEST(Run, Fig5HumanAloneDeliversAll) {
  const ScenarioConfig scn = scenes::bundled("fig5_room");
  const RunResult r = run(scn, config_for(scn, false, 7));
  ASSERT_TRUE(r.metrics.complete);
  EXPECT_LT(r.metrics.completion_time, sim_config_for(scn).max_time);
  EXPECT_EQ(r.metrics.delivered_count(AgentId::Human), 6);
}

TEST(Run, Fig5RobotDeliversOccludedHologram) {
  const ScenarioConfig scn = scenes::bundled("fig5_room");
  for (std::uint64_t seed : {1, 2, 3}) {
    const RunResult r = run(scn, config_for(scn, true, seed));
    ASSERT_TRUE(r.metrics.complete) << seed;
    EXPECT_TRUE(r.metrics.delivered_by(6) == AgentId::Robot) << seed;
  }
}

TEST(Run, IncompleteWhenOutOfTime) {
  const ScenarioConfig scn = scenes::bundled("fig5_room");
  SimConfig cfg = config_for(scn, true, 1);
  cfg.max_time = 3.0;
  const RunResult r = run(scn, cfg);
  EXPECT_FALSE(r.metrics.complete);
  EXPECT_NEAR(r.metrics.completion_time, 3.0, 1e-9);
  EXPECT_LE(r.metrics.completion_time, cfg.max_time + 1e-9);
}

TEST(Run, ConfigIsValidated) {
  const ScenarioConfig scn = scenes::bundled("empty");
  SimConfig cfg = sim_config_for(scn);
  cfg.dt = 0.0;
  EXPECT_THROW(Simulation(scn, cfg), Error);
  cfg.dt = 0.05;
  cfg.max_time = -1;
  EXPECT_THROW(Simulation(scn, cfg), Error);
}

TEST(Determinism, IdenticalLogs) {
  for (const auto& e : bundled::all) {
    const ScenarioConfig scn = scenes::bundled(e.name);
    const SimConfig cfg = config_for(scn, true, 11);
    const RunResult a = run(scn, cfg);
    const RunResult b = run(scn, cfg);
    EXPECT_EQ(a.log, b.log) << e.name;
  }
}

TEST(Determinism, SeedChangesOutcome) {
  const ScenarioConfig scn = scenes::bundled("fig5_room");
  EXPECT_NE(run(scn, config_for(scn, true, 1)).log, run(scn, config_for(scn, true, 2)).log);
}

TEST(Log, TimesNondecreasingAndKindsKnown) {
  const ScenarioConfig scn = scenes::bundled("fig5_room");
  const RunResult r = run(scn, config_for(scn, true, 4));
  const std::set<std::string> kinds = {"start",  "tick-summary",  "attach",       "detach",
                                       "deliver", "rerank", "snapshot-hash", "human-command"};
  double t = 0.0;
  for (const auto& l : r.log) {
    const auto j = nlohmann::json::parse(l);
    ASSERT_TRUE(kinds.contains(j["kind"].get<std::string>())) << l;
    ASSERT_GE(j["t"].get<double>(), t);
    t = j["t"].get<double>();
  }
}

TEST(Replay, EveryBundledScenario) {
  for (const auto& e : bundled::all) {
    const ScenarioConfig scn = scenes::bundled(e.name);
    for (bool robot : {false, true}) {
      const RunResult r = run(scn, config_for(scn, robot, 5));
      const ReplaySummary s = replay(r.log);
      EXPECT_EQ(s.entries_verified, r.log.size()) << e.name;
      EXPECT_EQ(s.ticks, r.metrics.ticks) << e.name;
      EXPECT_TRUE(s.reached_end) << e.name;
      EXPECT_GT(s.hashes_verified, 0u) << e.name;
    }
  }
}

TEST(Replay, SnapshotsMatchLiveRun) {
  const ScenarioConfig scn = scenes::bundled("corridor");
  std::vector<std::uint64_t> live, replayed;
  const RunResult r = run(scn, config_for(scn, true, 2), [&](const WorldState& w) { live.push_back(world_hash(w)); });
  replay(r.log, [&](const WorldState& w) { replayed.push_back(world_hash(w)); });
  EXPECT_EQ(live, replayed);
}

TEST(Replay, TruncatedStopsAtLastCompleteEntry) {
  const ScenarioConfig scn = scenes::bundled("empty");
  const RunResult r = run(scn, config_for(scn, true, 3));
  std::string text;
  for (const auto& l : r.log) text += l + "\n";
  const std::size_t cut = text.size() / 2;
  std::istringstream in(text.substr(0, cut));
  const auto lines = read_log_lines(in);
  ASSERT_LT(lines.size(), r.log.size());
  const ReplaySummary s = replay(lines);
  EXPECT_EQ(s.entries_verified, lines.size());
  EXPECT_FALSE(s.reached_end);
}

TEST(Replay, TamperedLogIsCorrupt) {
  const ScenarioConfig scn = scenes::bundled("empty");
  const RunResult r = run(scn, config_for(scn, true, 3));

  auto tampered = r.log;
  std::size_t k = 10;
  while (k < tampered.size() && tampered[k].find("\"hash\":\"") == std::string::npos) ++k;
  ASSERT_LT(k, tampered.size());
  char& c = tampered[k][tampered[k].find("\"hash\":\"") + 8];
  c = c == '0' ? '1' : '0';
  EXPECT_EQ(replay_error(tampered), ErrorCode::CorruptLog);

  // An attach moved to another hologram.
  tampered = r.log;
  for (auto& l : tampered) {
    if (l.find("\"kind\":\"attach\"") != std::string::npos) {
      auto j = nlohmann::json::parse(l);
      j["payload"]["hologram"] = j["payload"]["hologram"].get<int>() % 3 + 1;
      l = j.dump();
      break;
    }
  }
  EXPECT_EQ(replay_error(tampered), ErrorCode::CorruptLog);

  tampered = r.log;
  tampered.push_back(tampered.back());
  EXPECT_EQ(replay_error(tampered), ErrorCode::CorruptLog);
  EXPECT_EQ(replay_error({}), ErrorCode::CorruptLog);
  EXPECT_EQ(replay_error({"{\"kind\":\"tick-summary\"}"}), ErrorCode::CorruptLog);
}

TEST(Metrics, AttributionConservation) {
  for (const auto& e : bundled::all) {
    const ScenarioConfig scn = scenes::bundled(e.name);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const RunResult r = run(scn, config_for(scn, true, seed));
      ASSERT_TRUE(r.metrics.complete) << e.name;
      const auto delivers = entries_of_kind(r.log, "deliver");
      std::map<int, int> times;
      for (const auto& d : delivers) ++times[d["payload"]["hologram"].get<int>()];
      ASSERT_EQ(times.size(), r.metrics.holograms.size()) << e.name;
      for (const auto& [id, n] : times) EXPECT_EQ(n, 1) << e.name << " hologram " << id;
      for (const auto& h : r.metrics.holograms) {
        ASSERT_TRUE(h.delivered_by);
        ASSERT_TRUE(h.delivered_at);
        EXPECT_LE(*h.delivered_at, r.metrics.completion_time);
      }
      EXPECT_EQ(r.metrics.delivered_count(AgentId::Human) + r.metrics.delivered_count(AgentId::Robot),
                static_cast<int>(r.metrics.holograms.size()));
    }
  }
}

TEST(Metrics, CsvMatchesJson) {
  const ScenarioConfig scn = scenes::bundled("empty");
  const Metrics m = run(scn, config_for(scn, true, 1)).metrics;
  const auto j = to_json(m);
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
    return out;
  };
  const auto head = split(metrics_csv_header());
  const auto row = split(metrics_csv_row(m));
  ASSERT_EQ(head.size(), row.size());
  std::map<std::string, std::string> f;
  for (std::size_t i = 0; i < head.size(); ++i) f[head[i]] = row[i];
  EXPECT_EQ(std::stoull(f.at("seed")), j["seed"].get<std::uint64_t>());
  EXPECT_EQ(f.at("complete") == "1", j["complete"].get<bool>());
  EXPECT_EQ(f.at("robot_enabled") == "1", j["robot_enabled"].get<bool>());
  EXPECT_NEAR(std::stod(f.at("completion_time")), j["completion_time"].get<double>(), 1e-6);
  EXPECT_NEAR(std::stod(f.at("human_distance")), j["distance"]["human"].get<double>(), 1e-6);
  EXPECT_NEAR(std::stod(f.at("robot_distance")), j["distance"]["robot"].get<double>(), 1e-6);
  int by_human = 0, by_robot = 0;
  for (const auto& h : j["holograms"]) {
    by_human += h["delivered_by"] == "human" ? 1 : 0;
    by_robot += h["delivered_by"] == "robot" ? 1 : 0;
  }
  EXPECT_EQ(std::stoi(f.at("delivered_by_human")), by_human);
  EXPECT_EQ(std::stoi(f.at("delivered_by_robot")), by_robot);
}

TEST(Properties, DtRobustness) {
  for (const auto& e : bundled::all) {
    const ScenarioConfig scn = scenes::bundled(e.name);
    for (bool robot : {false, true}) {
      SimConfig cfg = config_for(scn, robot, 1);
      const double coarse = run(scn, cfg).metrics.completion_time;
      cfg.dt /= 2;
      const double fine = run(scn, cfg).metrics.completion_time;
      EXPECT_LT(std::abs(coarse - fine) / coarse, 0.05) << e.name << " robot=" << robot << " " << coarse << " vs "
                                                         << fine;
    }
  }
}

TEST(Properties, RobotStaysOutOfInflatedCells) {
  for (const auto& e : bundled::all) {
    const ScenarioConfig scn = scenes::bundled(e.name);
    const WorldState w0 = load_scenario(scn);
    const OccupancyGrid inflated = w0.scene.floor_grid.inflated(w0.robot.footprint_radius);
    std::size_t violations = 0;
    run(scn, config_for(scn, true, 2), [&](const WorldState& w) {
      if (inflated.occupied_at(w.robot.position)) ++violations;
    });
    EXPECT_EQ(violations, 0u) << e.name;
  }
}

TEST(Properties, SpeedLimitsRespected) {
  const ScenarioConfig scn = scenes::bundled("fig5_room");
  const SimConfig cfg = config_for(scn, true, 3);
  std::optional<WorldState> prev;
  double worst_robot = 0.0, worst_human = 0.0;
  run(scn, cfg, [&](const WorldState& w) {
    if (prev) {
      worst_robot = std::max(worst_robot, (w.robot.position - prev->robot.position).norm() / cfg.dt);
      worst_human = std::max(worst_human, (w.human.body_position - prev->human.body_position).norm() / cfg.dt);
    }
    prev = w;
  });
  EXPECT_LE(worst_robot, prev->robot.max_speed + 1e-9);
  EXPECT_LE(worst_human, prev->human.max_speed + 1e-9);
}

TEST(Properties, RobotLiveness) {
  // Human never moves; the robot alone must clear every bundled scene.
  for (const auto& e : bundled::all) {
    ScenarioConfig scn = scenes::bundled(e.name);
    nlohmann::json doc = scn.doc;
    doc["policies"]["human"] = "external";
    scn = parse_scenario(doc);
    const RunResult r = run(scn, config_for(scn, true, 1));
    EXPECT_TRUE(r.metrics.complete) << e.name;
    EXPECT_EQ(r.metrics.delivered_count(AgentId::Robot), static_cast<int>(r.metrics.holograms.size())) << e.name;
  }
}

TEST(Properties, GreedyHumanTargetsMinimumCost) {
  for (const auto& e : bundled::all) {
    const ScenarioConfig scn = scenes::bundled(e.name);
    Simulation sim(scn, config_for(scn, true, 6));
    std::optional<int> last;
    int choices = 0;
    while (!sim.finished()) {
      const WorldState before = sim.world();
      sim.step();
      const auto t = sim.human_controller().target();
      if (t && t != last) {
        ++choices;
        const auto a = assess_all(before, viewpoint_of(before.human), sim.config().vpt);
        const auto best = std::min_element(a.begin(), a.end(), [](const CostAssessment& x, const CostAssessment& y) {
          return x.cost < y.cost;
        });
        ASSERT_NE(best, a.end());
        EXPECT_EQ(best->hologram_id, *t) << e.name << " t=" << before.time;
      }
      last = t;
    }
    EXPECT_GT(choices, 0) << e.name;
  }
}

TEST(Properties, GreedyStartsWithInitialMinimumCost) {
  // Later choices are re-ranked from the viewpoint after each delivery, so
  // only the first one is fixed by the t=0 costs.
  const ScenarioConfig scn = fan_room();
  const WorldState w0 = load_scenario(scn);
  const auto initial = assess_all(w0);
  const auto best = std::min_element(initial.begin(), initial.end(),
                                     [](const auto& a, const auto& b) { return a.cost < b.cost; });
  const RunResult r = run(scn, config_for(scn, false, 1));
  std::vector<int> order;
  for (const auto& d : entries_of_kind(r.log, "deliver")) order.push_back(d["payload"]["hologram"].get<int>());
  ASSERT_EQ(order.size(), initial.size());
  EXPECT_EQ(order.front(), best->hologram_id);
  std::sort(order.begin(), order.end());
  EXPECT_EQ(std::adjacent_find(order.begin(), order.end()), order.end());
}

TEST(Compare, SingleSeedSummaryEqualsPair) {
  const ScenarioConfig scn = scenes::bundled("empty");
  const Comparison c = compare_conditions(scn, config_for(scn, true, 1), 1);
  ASSERT_EQ(c.pairs.size(), 1u);
  EXPECT_EQ(c.human_only.median, c.pairs[0].human_only.completion_time);
  EXPECT_EQ(c.human_only.mean, c.pairs[0].human_only.completion_time);
  EXPECT_EQ(c.with_robot.median, c.pairs[0].with_robot.completion_time);
  EXPECT_FALSE(c.pairs[0].human_only.robot_enabled);
  EXPECT_TRUE(c.pairs[0].with_robot.robot_enabled);
}

TEST(Compare, IdenticalConditionsGiveZeroDifference) {
  const ScenarioConfig scn = scenes::bundled("corridor");
  const Comparison c = compare_conditions(scn, config_for(scn, true, 1), 3, true, true);
  EXPECT_EQ(c.median_difference(), 0.0);
  EXPECT_EQ(c.robot_faster, 0);
}

TEST(Compare, RejectsZeroSeeds) {
  const ScenarioConfig scn = scenes::bundled("empty");
  EXPECT_THROW(compare_conditions(scn, sim_config_for(scn), 0), Error);
}

TEST(Compare, AggregatesRecomputableFromPairs) {
  const ScenarioConfig scn = scenes::bundled("empty");
  const Comparison c = compare_conditions(scn, config_for(scn, true, 1), 4);
  std::vector<double> h, hr;
  for (const auto& p : c.pairs) {
    h.push_back(p.human_only.completion_time);
    hr.push_back(p.with_robot.completion_time);
  }
  EXPECT_EQ(median_of(h), c.human_only.median);
  EXPECT_EQ(median_of(hr), c.with_robot.median);
}
