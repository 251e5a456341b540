#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarw/error.hpp"
#include "sarw/interaction.hpp"
#include "sarw/perception.hpp"
#include "sarw/planner.hpp"
#include "sarw/rng.hpp"
#include "sarw/scenario.hpp"
#include "sarw/vpt.hpp"
#include "sarw/workspace.hpp"

namespace sarw {

inline constexpr int kLogVersion = 1;

enum class HumanPolicyKind { GreedyLowestCost, ScriptedWaypoints, External };

inline std::string_view to_string(HumanPolicyKind k) {
  switch (k) {
    case HumanPolicyKind::GreedyLowestCost: return "greedy_lowest_cost";
    case HumanPolicyKind::ScriptedWaypoints: return "scripted_waypoints";
    case HumanPolicyKind::External: return "external";
  }
  return "?";
}

inline HumanPolicyKind human_policy_from(const std::string& s) {
  if (s == "greedy_lowest_cost") return HumanPolicyKind::GreedyLowestCost;
  if (s == "scripted_waypoints") return HumanPolicyKind::ScriptedWaypoints;
  if (s == "external") return HumanPolicyKind::External;
  throw Error(ErrorCode::SchemaError, "unknown human policy '" + s + "'");
}

inline DeliveryMode delivery_from(const std::string& s) {
  if (s == "goal_zone") return DeliveryMode::GoalZone;
  if (s == "deliver_to_human") return DeliveryMode::DeliverToHuman;
  throw Error(ErrorCode::SchemaError, "unknown delivery mode '" + s + "'");
}

inline std::string_view to_string(DeliveryMode m) {
  return m == DeliveryMode::GoalZone ? "goal_zone" : "deliver_to_human";
}

struct SimConfig {
  double dt = 0.05;
  double max_time = 600.0;
  std::uint64_t seed = 0;
  HumanPolicyKind human_policy = HumanPolicyKind::GreedyLowestCost;
  bool robot_enabled = true;
  VptParams vpt;
  double vpt_period = 0.5;
  NoiseModel noise{0.02, 0.01};
  DeliveryMode delivery = DeliveryMode::GoalZone;
  std::optional<double> human_speed;  // overrides the scenario when set
  std::optional<double> robot_speed;
  double summary_period = 1.0;

  void validate() const {
    if (!(dt > 0.0)) throw Error(ErrorCode::SchemaError, "dt must be > 0");
    if (!(max_time >= 0.0)) throw Error(ErrorCode::SchemaError, "max_time must be >= 0");
    if (vpt.n_rays < 1) throw Error(ErrorCode::SchemaError, "n_rays must be >= 1");
    if (vpt.occlusion_threshold && !(*vpt.occlusion_threshold > 0.0 && *vpt.occlusion_threshold <= 1.0)) {
      throw Error(ErrorCode::SchemaError, "occlusion threshold must be in (0,1]");
    }
    if (!(vpt_period > 0.0)) throw Error(ErrorCode::SchemaError, "vpt_period must be > 0");
    if (noise.sigma_pos < 0.0 || noise.sigma_rot < 0.0) throw Error(ErrorCode::SchemaError, "negative noise");
  }
};

/// Config taken from the scenario's policies block, with seed from the
/// scenario unless a caller overrides it afterwards.
inline SimConfig sim_config_for(const ScenarioConfig& scn) {
  SimConfig c;
  c.seed = scn.seed();
  c.human_policy = human_policy_from(scn.policies().at("human").get<std::string>());
  c.robot_enabled = scn.policies().at("robot").get<std::string>() != "none";
  c.delivery = delivery_from(scn.policies().at("delivery").get<std::string>());
  return c;
}

inline nlohmann::json to_json(const SimConfig& c) {
  nlohmann::json j;
  j["dt"] = c.dt;
  j["max_time"] = c.max_time;
  j["seed"] = c.seed;
  j["human_policy"] = std::string(to_string(c.human_policy));
  j["robot_enabled"] = c.robot_enabled;
  j["n_rays"] = c.vpt.n_rays;
  j["occlusion_threshold"] = c.vpt.occlusion_threshold ? nlohmann::json(*c.vpt.occlusion_threshold) : nlohmann::json();
  j["vpt_period"] = c.vpt_period;
  j["noise"] = {{"sigma_pos", c.noise.sigma_pos}, {"sigma_rot", c.noise.sigma_rot}};
  j["delivery"] = std::string(to_string(c.delivery));
  j["human_speed"] = c.human_speed ? nlohmann::json(*c.human_speed) : nlohmann::json();
  j["robot_speed"] = c.robot_speed ? nlohmann::json(*c.robot_speed) : nlohmann::json();
  j["summary_period"] = c.summary_period;
  return j;
}

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  try {
    c.dt = j.at("dt").get<double>();
    c.max_time = j.at("max_time").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.human_policy = human_policy_from(j.at("human_policy").get<std::string>());
    c.robot_enabled = j.at("robot_enabled").get<bool>();
    c.vpt.n_rays = j.at("n_rays").get<int>();
    if (!j.at("occlusion_threshold").is_null()) c.vpt.occlusion_threshold = j["occlusion_threshold"].get<double>();
    c.vpt_period = j.at("vpt_period").get<double>();
    c.noise = {j.at("noise").at("sigma_pos").get<double>(), j.at("noise").at("sigma_rot").get<double>()};
    c.delivery = delivery_from(j.at("delivery").get<std::string>());
    if (!j.at("human_speed").is_null()) c.human_speed = j["human_speed"].get<double>();
    if (!j.at("robot_speed").is_null()) c.robot_speed = j["robot_speed"].get<double>();
    c.summary_period = j.at("summary_period").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("sim config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Events

struct LogEntry {
  double t = 0.0;
  std::string kind;  // start | tick-summary | attach | detach | deliver | rerank | snapshot-hash | human-command
  nlohmann::json payload;

  nlohmann::json to_json() const { return {{"t", t}, {"kind", kind}, {"payload", payload}}; }
  std::string line() const { return to_json().dump(); }
};

inline nlohmann::json vec_json(const Vec2& v) { return {v.x(), v.y()}; }
inline nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Human input for the external policy (and the wire protocol)

struct HumanCommand {
  Vec2 move = Vec2::Zero();  // x forward, y left, relative to the gaze yaw; each in [-1, 1]
  double head_yaw_delta = 0.0;
  double head_pitch_delta = 0.0;
  bool interact = false;

  HumanCommand clamped() const {
    HumanCommand c = *this;
    c.move = move.cwiseMax(Vec2::Constant(-1.0)).cwiseMin(Vec2::Constant(1.0));
    if (!c.move.allFinite()) c.move = Vec2::Zero();
    if (!std::isfinite(c.head_yaw_delta)) c.head_yaw_delta = 0.0;
    if (!std::isfinite(c.head_pitch_delta)) c.head_pitch_delta = 0.0;
    return c;
  }
};

inline nlohmann::json to_json(const HumanCommand& c) {
  return {{"move", vec_json(c.move)},
          {"head_yaw_delta", c.head_yaw_delta},
          {"head_pitch_delta", c.head_pitch_delta},
          {"interact", c.interact}};
}

inline HumanCommand human_command_from_json(const nlohmann::json& j) {
  HumanCommand c;
  const auto& m = j.at("move");
  if (!m.is_array() || m.size() != 2) throw Error(ErrorCode::MalformedFrame, "move must be [x, y]");
  c.move = Vec2(m[0].get<double>(), m[1].get<double>());
  c.head_yaw_delta = j.at("head_yaw_delta").get<double>();
  c.head_pitch_delta = j.at("head_pitch_delta").get<double>();
  c.interact = j.at("interact").get<bool>();
  return c;
}

// ---------------------------------------------------------------------------
// Kinematics

/// Unicycle-style step toward `target`: turn in place while the heading
/// error exceeds 45 degrees, otherwise turn and advance along the straight
/// segment. Returns the distance moved.
inline double advance_toward(Vec2& pos, double& heading, const Vec2& target, double max_speed,
                             double max_turn, double dt) {
  const Vec2 d = target - pos;
  const double dist = d.norm();
  if (dist < 1e-12) return 0.0;
  const double bearing = std::atan2(d.y(), d.x());
  const double err = wrap_angle(bearing - heading);
  const double max_dw = max_turn * dt;
  heading = wrap_angle(heading + std::clamp(err, -max_dw, max_dw));
  if (std::abs(err) > std::numbers::pi / 4.0) return 0.0;
  const double step = max_speed * dt;
  if (dist <= step) {
    pos = target;
    return dist;
  }
  pos += d / dist * step;
  return step;
}

// ---------------------------------------------------------------------------
// Metrics

struct HologramOutcome {
  int id = 0;
  std::optional<double> delivered_at;
  std::optional<AgentId> delivered_by;
};

struct Metrics {
  bool complete = false;
  double completion_time = 0.0;  // time of the last delivery; max_time when incomplete
  double end_time = 0.0;
  std::uint64_t ticks = 0;
  std::vector<HologramOutcome> holograms;
  double human_distance = 0.0;
  double robot_distance = 0.0;
  std::uint64_t seed = 0;
  bool robot_enabled = true;

  std::optional<AgentId> delivered_by(int id) const {
    for (const auto& h : holograms) {
      if (h.id == id) return h.delivered_by;
    }
    return std::nullopt;
  }
  int delivered_count(AgentId a) const {
    return static_cast<int>(std::count_if(holograms.begin(), holograms.end(),
                                          [a](const HologramOutcome& h) { return h.delivered_by == a; }));
  }
};

inline nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j;
  j["complete"] = m.complete;
  j["completion_time"] = m.completion_time;
  j["end_time"] = m.end_time;
  j["ticks"] = m.ticks;
  j["seed"] = m.seed;
  j["robot_enabled"] = m.robot_enabled;
  j["distance"] = {{"human", m.human_distance}, {"robot", m.robot_distance}};
  j["holograms"] = nlohmann::json::array();
  for (const auto& h : m.holograms) {
    j["holograms"].push_back({{"id", h.id},
                              {"delivered_at", h.delivered_at ? nlohmann::json(*h.delivered_at) : nlohmann::json()},
                              {"delivered_by", h.delivered_by ? nlohmann::json(std::string(to_string(*h.delivered_by)))
                                                              : nlohmann::json()}});
  }
  return j;
}

inline std::string metrics_csv_header() {
  return "seed,robot_enabled,complete,completion_time,human_distance,robot_distance,delivered_by_human,"
         "delivered_by_robot";
}

inline std::string metrics_csv_row(const Metrics& m) {
  std::ostringstream os;
  os << std::setprecision(10) << m.seed << ',' << (m.robot_enabled ? 1 : 0) << ',' << (m.complete ? 1 : 0) << ','
     << m.completion_time << ',' << m.human_distance << ',' << m.robot_distance << ','
     << m.delivered_count(AgentId::Human) << ',' << m.delivered_count(AgentId::Robot);
  return os.str();
}

// ---------------------------------------------------------------------------
// Human policies

/// Scripted human. Greedy: picks the free hologram with the lowest cost from
/// its own view, pauses to locate it (longer for costlier targets), walks
/// over, grabs it and carries it to the goal zone.
class HumanController {
 public:
  HumanController() = default;
  HumanController(const WorldState& w, const ScenarioConfig& scn, const SimConfig& cfg, Rng& rng)
      : kind_(cfg.human_policy), vpt_(cfg.vpt) {
    inflated_ = w.scene.floor_grid.inflated(w.human.footprint_radius);
    for (const auto& p : scn.policies().at("waypoints")) {
      waypoints_.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    // Walking pace varies between runs; drawn from the human stream only.
    speed_factor_ = rng.uniform(0.85, 1.0);
  }

  HumanPolicyKind kind() const { return kind_; }
  std::optional<int> target() const { return target_; }
  double speed_factor() const { return speed_factor_; }

  struct Intent {
    std::optional<Vec2> move_to;
    std::optional<int> attach;
    std::optional<Vec2> place;
  };

  Intent decide(const WorldState& w, double dt, Rng& rng) {
    switch (kind_) {
      case HumanPolicyKind::GreedyLowestCost: return greedy(w, dt, rng);
      case HumanPolicyKind::ScriptedWaypoints: return scripted(w);
      case HumanPolicyKind::External: return {};
    }
    return {};
  }

  /// Perception delay before committing to a target of the given cost.
  static double search_delay(double cost, Rng& rng) { return (0.4 + 1.2 * cost) * rng.uniform(0.7, 1.3); }

 private:
  Intent greedy(const WorldState& w, double dt, Rng& rng) {
    Intent out;
    const HumanAgent& h = w.human;
    if (h.carried) {
      target_.reset();
      const Circle2D& gz = w.scene.goal_zone;
      if ((h.body_position - gz.center).norm() <= gz.radius && !w.scene.floor_grid.occupied_at(h.body_position)) {
        out.place = h.body_position;
        return out;
      }
      out.move_to = next_on_path(w, gz.center);
      return out;
    }
    if (target_) {
      const Hologram* t = w.find(*target_);
      if (!t || !t->free()) {
        target_.reset();
        path_.reset();
        delay_left_ = 0.0;
      }
    }
    if (!target_) {
      choose_target(w, rng);
      if (!target_) return out;
    }
    if (delay_left_ > 0.0) {
      delay_left_ -= dt;
      return out;
    }
    const Hologram& t = w.get(*target_);
    if (can_attach(w, AgentId::Human, t)) {
      out.attach = t.id;
      return out;
    }
    out.move_to = next_on_path(w, approach_);
    if (!out.move_to) {
      unreachable_.push_back(*target_);
      target_.reset();
    }
    return out;
  }

  void choose_target(const WorldState& w, Rng& rng) {
    const auto assessments = assess_all(w, viewpoint_of(w.human), vpt_);
    const CostAssessment* best = nullptr;
    for (const auto& a : assessments) {
      if (std::find(unreachable_.begin(), unreachable_.end(), a.hologram_id) != unreachable_.end()) continue;
      if (!best || a.cost < best->cost) best = &a;
    }
    if (!best) return;
    const Hologram& h = w.get(best->hologram_id);
    const auto start = inflated_.cell_of(w.human.body_position);
    std::optional<Cell> cell;
    if (start && inflated_.free(*start)) {
      const Circle2D hc = interaction_circle(h);
      cell = nearest_reachable_cell(inflated_, *start, hc.center,
                                    hc.radius + kInteractionEnlargement * w.human.footprint_radius);
    }
    if (!cell) {
      unreachable_.push_back(h.id);
      return;
    }
    target_ = h.id;
    approach_ = inflated_.center_of(*cell);
    path_.reset();
    delay_left_ = search_delay(best->cost, rng);
  }

  std::optional<Vec2> next_on_path(const WorldState& w, const Vec2& goal) {
    const Vec2& pos = w.human.body_position;
    if (!path_ || path_goal_ != goal) {
      const auto s = inflated_.cell_of(pos);
      const auto g = inflated_.cell_of(goal);
      if (!s || !g) return std::nullopt;
      try {
        path_ = plan_path_cells(inflated_, *s, *g);
      } catch (const Error&) {
        path_.reset();
        return std::nullopt;
      }
      if (goal != path_->waypoints.back()) path_->waypoints.push_back(goal);
      path_goal_ = goal;
      next_ = 0;
    }
    while (next_ < path_->waypoints.size() && (path_->waypoints[next_] - pos).norm() < 1e-9) ++next_;
    if (next_ >= path_->waypoints.size()) return pos;
    return path_->waypoints[next_];
  }

  Intent scripted(const WorldState& w) {
    Intent out;
    const HumanAgent& h = w.human;
    // Opportunistic interaction along the route.
    if (h.carried) {
      const Circle2D& gz = w.scene.goal_zone;
      if ((h.body_position - gz.center).norm() <= gz.radius && !w.scene.floor_grid.occupied_at(h.body_position)) {
        out.place = h.body_position;
      }
    } else {
      for (const auto& holo : w.holograms) {
        if (can_attach(w, AgentId::Human, holo)) {
          out.attach = holo.id;
          break;
        }
      }
    }
    while (wp_index_ < waypoints_.size() && (waypoints_[wp_index_] - h.body_position).norm() < 1e-9) {
      ++wp_index_;
      path_.reset();
    }
    if (wp_index_ < waypoints_.size()) {
      out.move_to = next_on_path(w, waypoints_[wp_index_]);
      if (!out.move_to) ++wp_index_;
    }
    return out;
  }

  HumanPolicyKind kind_ = HumanPolicyKind::GreedyLowestCost;
  VptParams vpt_;
  OccupancyGrid inflated_;
  std::vector<Vec2> waypoints_;
  std::size_t wp_index_ = 0;
  double speed_factor_ = 1.0;
  std::optional<int> target_;
  std::vector<int> unreachable_;
  Vec2 approach_ = Vec2::Zero();
  double delay_left_ = 0.0;
  std::optional<Path> path_;
  Vec2 path_goal_ = Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
  std::size_t next_ = 0;
};

/// The human viewpoint as the robot believes it. A noise-free estimate is
/// the ground truth itself, so it is used as is rather than recomposed.
inline Viewpoint believed_viewpoint(const WorldState& w, const HumanEstimate& est) {
  Viewpoint vp = viewpoint_of(w.human);
  if (est.noise.sigma_pos == 0.0 && est.noise.sigma_rot == 0.0) return vp;
  vp.head = compose(w.frames.world_from(FrameId::robot()), est.frame);
  vp.body_heading = est.body_heading;
  return vp;
}

// ---------------------------------------------------------------------------
// Engine

/// Fixed-timestep simulation of one game. Owns the only mutable WorldState.
/// Every call to step() returns the log entries produced during that tick;
/// the concatenation of all entries (starting with start_entry()) is the
/// replayable event log.
class Simulation {
 public:
  Simulation(ScenarioConfig scenario, SimConfig cfg)
      : scenario_(std::move(scenario)), cfg_(std::move(cfg)) {
    cfg_.validate();
    world_ = load_scenario(scenario_);
    if (cfg_.human_speed) world_.human.max_speed = *cfg_.human_speed;
    if (cfg_.robot_speed) world_.robot.max_speed = *cfg_.robot_speed;
    human_rng_ = Rng(mix_seed(cfg_.seed, 0x48554D414EULL));
    human_ = HumanController(world_, scenario_, cfg_, human_rng_);
    if (cfg_.robot_enabled) robot_ = RobotController(world_, cfg_.delivery);
    metrics_.seed = cfg_.seed;
    metrics_.robot_enabled = cfg_.robot_enabled;
    for (const auto& h : world_.holograms) metrics_.holograms.push_back({h.id, std::nullopt, std::nullopt});
    if (world_.all_delivered()) {
      metrics_.complete = true;
      metrics_.completion_time = 0.0;
    }
  }

  const WorldState& world() const { return world_; }
  const SimConfig& config() const { return cfg_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const Metrics& metrics() const { return metrics_; }
  const std::vector<CostAssessment>& robot_assessments() const { return assessments_; }
  const RobotController& robot_controller() const { return robot_; }
  const HumanController& human_controller() const { return human_; }
  std::optional<HumanEstimate> human_estimate() const { return estimate_; }

  bool finished() const {
    return world_.all_delivered() || world_.time >= cfg_.max_time - 1e-9;
  }

  LogEntry start_entry() const {
    return {0.0, "start",
            {{"log_version", kLogVersion}, {"scenario", scenario_.doc}, {"config", to_json(cfg_)}}};
  }

  /// Commands are applied at the start of the next tick, in arrival order.
  void push_command(const HumanCommand& c) { pending_.push_back(c.clamped()); }

  std::vector<LogEntry> step() {
    std::vector<LogEntry> ev;
    const double dt = cfg_.dt;
    const double t_new = static_cast<double>(world_.tick + 1) * dt;

    // 1. policies
    std::optional<HumanCommand> cmd;
    if (!pending_.empty()) {
      HumanCommand merged = pending_.back();
      merged.head_yaw_delta = 0.0;
      merged.head_pitch_delta = 0.0;
      merged.interact = false;
      for (const auto& c : pending_) {
        merged.head_yaw_delta += c.head_yaw_delta;
        merged.head_pitch_delta += c.head_pitch_delta;
        merged.interact = merged.interact || c.interact;
      }
      pending_.clear();
      cmd = merged;
      ev.push_back({t_new, "human-command", nlohmann::json{{"tick", world_.tick + 1}, {"command", to_json(merged)}}});
    }
    HumanController::Intent hi;
    if (human_.kind() != HumanPolicyKind::External) hi = human_.decide(world_, dt, human_rng_);

    RobotCommand rc = Idle{};
    if (cfg_.robot_enabled) {
      std::optional<RerankNotice> notice;
      rc = robot_.next_command(world_, &notice);
      if (notice) ev.push_back(rerank_entry(t_new, *notice));
    }

    // 2. motion
    HumanAgent& hu = world_.human;
    if (hi.move_to) {
      metrics_.human_distance += advance_toward(hu.body_position, hu.body_heading, *hi.move_to,
                                                hu.max_speed * human_.speed_factor(), hu.max_turn_rate, dt);
      hu.head_yaw = 0.0;
      hu.head_pitch = 0.0;
    }
    if (cmd) apply_external_motion(*cmd, dt);
    if (const auto* mv = std::get_if<MoveToward>(&rc)) {
      RobotAgent& r = world_.robot;
      metrics_.robot_distance += advance_toward(r.position, r.heading, mv->waypoint, r.max_speed, r.max_turn_rate, dt);
    }
    world_.time = t_new;
    ++world_.tick;
    sync_frames(world_);

    // 3. interactions, human first
    bool changed = false;
    if (hi.attach) changed |= do_attach(AgentId::Human, *hi.attach, ev);
    if (hi.place) changed |= do_place(AgentId::Human, *hi.place, ev);
    if (cmd && cmd->interact) changed |= external_interact(ev);
    if (const auto* a = std::get_if<AttachCmd>(&rc)) {
      if (do_attach(AgentId::Robot, a->hologram_id, ev)) {
        changed = true;
        robot_.on_attached();
      }
    }
    if (const auto* p = std::get_if<PlaceCmd>(&rc)) {
      const int id = *world_.robot.carried;
      if (do_place(AgentId::Robot, p->target, ev)) {
        changed = true;
        robot_.on_placed(id, world_.get(id).status == HologramStatus::Delivered);
      }
    }
    sync_frames(world_);

    // 4. robot-side perspective taking
    if (cfg_.robot_enabled && (changed || !last_vpt_ || world_.time - *last_vpt_ >= cfg_.vpt_period - 1e-9)) {
      last_vpt_ = world_.time;
      estimate_ = estimate_human_frame(world_, cfg_.noise, mix_seed(mix_seed(cfg_.seed, 0x4E4F495345ULL), world_.tick));
      const Viewpoint vp = believed_viewpoint(world_, *estimate_);
      assessments_ = assess_all(world_, vp, cfg_.vpt);
      if (auto n = robot_.update(world_, assessments_, vp)) ev.push_back(rerank_entry(world_.time, *n));
    }

    if (world_.all_delivered() && !metrics_.complete) {
      metrics_.complete = true;
      metrics_.completion_time = world_.time;
    }
    metrics_.ticks = world_.tick;
    metrics_.end_time = world_.time;
    if (!metrics_.complete) metrics_.completion_time = world_.time;

    if (cfg_.summary_period > 0.0 && (world_.tick % summary_every() == 0 || finished())) {
      ev.push_back({world_.time, "tick-summary", summary_payload()});
    }
    ev.push_back({world_.time, "snapshot-hash", {{"tick", world_.tick}, {"hash", hash_hex(world_hash(world_))}}});
    return ev;
  }

 private:
  std::uint64_t summary_every() const {
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(cfg_.summary_period / cfg_.dt)));
  }

  nlohmann::json summary_payload() const {
    int delivered = 0;
    for (const auto& h : world_.holograms) delivered += h.status == HologramStatus::Delivered ? 1 : 0;
    return {{"tick", world_.tick},
            {"human", {{"position", vec_json(world_.human.body_position)}, {"heading", world_.human.body_heading}}},
            {"robot", {{"position", vec_json(world_.robot.position)}, {"heading", world_.robot.heading}}},
            {"delivered", delivered}};
  }

  static LogEntry rerank_entry(double t, const RerankNotice& n) {
    return {t, "rerank", {{"queue", n.queue}, {"reason", n.reason}}};
  }

  void apply_external_motion(const HumanCommand& c, double dt) {
    HumanAgent& h = world_.human;
    const double max_dw = h.max_turn_rate * dt;
    h.head_yaw = wrap_angle(h.head_yaw + std::clamp(c.head_yaw_delta, -max_dw, max_dw));
    h.head_pitch = clamp_pitch(h, h.head_pitch + std::clamp(c.head_pitch_delta, -max_dw, max_dw));
    if (c.move.norm() < 1e-12) return;
    // Walk relative to the gaze; the body turns to the gaze yaw.
    h.body_heading = wrap_angle(h.body_heading + h.head_yaw);
    h.head_yaw = 0.0;
    const Vec2 move = c.move.norm() > 1.0 ? Vec2(c.move.normalized()) : c.move;
    const Vec2 dir = Eigen::Rotation2Dd(h.body_heading) * move;
    const Vec2 next = h.body_position + dir * (h.max_speed * dt);
    if (!external_grid_) external_grid_ = world_.scene.floor_grid.inflated(h.footprint_radius);
    if (!external_grid_->occupied_at(next)) {
      metrics_.human_distance += (next - h.body_position).norm();
      h.body_position = next;
    }
  }

  bool external_interact(std::vector<LogEntry>& ev) {
    if (world_.human.carried) return do_place(AgentId::Human, world_.human.body_position, ev);
    for (const auto& h : world_.holograms) {
      if (can_attach(world_, AgentId::Human, h)) return do_attach(AgentId::Human, h.id, ev);
    }
    return false;
  }

  bool do_attach(AgentId agent, int id, std::vector<LogEntry>& ev) {
    const Hologram* h = world_.find(id);
    if (!h || !h->free() || world_.carried_by(agent)) return false;
    auto a = attach_in_place(world_, agent, id);
    if (!a) return false;
    ev.push_back({world_.time, "attach",
                  {{"agent", std::string(to_string(agent))}, {"hologram", id}, {"position", vec_json(a->position)}}});
    return true;
  }

  bool do_place(AgentId agent, const Vec2& target, std::vector<LogEntry>& ev) {
    if (!world_.carried_by(agent)) return false;
    if (world_.scene.floor_grid.occupied_at(target)) return false;
    const DetachEvent d = place_in_place(world_, agent, target);
    ev.push_back({world_.time, "detach",
                  {{"agent", std::string(to_string(agent))},
                   {"hologram", d.hologram_id},
                   {"position", vec_json(d.position)},
                   {"delivered", d.delivered}}});
    if (d.delivered) {
      ev.push_back({world_.time, "deliver", {{"agent", std::string(to_string(agent))}, {"hologram", d.hologram_id}}});
      for (auto& o : metrics_.holograms) {
        if (o.id == d.hologram_id) {
          o.delivered_at = world_.time;
          o.delivered_by = agent;
        }
      }
    }
    return true;
  }

  ScenarioConfig scenario_;
  SimConfig cfg_;
  WorldState world_;
  Rng human_rng_;
  HumanController human_;
  RobotController robot_;
  Metrics metrics_;
  std::vector<CostAssessment> assessments_;
  std::optional<HumanEstimate> estimate_;
  std::optional<double> last_vpt_;
  std::vector<HumanCommand> pending_;
  std::optional<OccupancyGrid> external_grid_;
};

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
  Metrics metrics;
  std::vector<std::string> log;  // JSONL lines without newlines
};

inline RunResult run(const ScenarioConfig& scn, const SimConfig& cfg,
                     const std::function<void(const WorldState&)>& on_tick = {}) {
  Simulation sim(scn, cfg);
  RunResult out;
  out.log.push_back(sim.start_entry().line());
  if (on_tick) on_tick(sim.world());
  while (!sim.finished()) {
    for (const auto& e : sim.step()) out.log.push_back(e.line());
    if (on_tick) on_tick(sim.world());
  }
  out.metrics = sim.metrics();
  return out;
}

inline void write_log(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& l : lines) out << l << '\n';
}

struct ConditionSummary {
  double mean = 0.0;
  double median = 0.0;
  int incomplete = 0;
};

struct PairedRun {
  std::uint64_t seed = 0;
  Metrics human_only;
  Metrics with_robot;
};

struct Comparison {
  std::vector<PairedRun> pairs;
  ConditionSummary human_only;
  ConditionSummary with_robot;
  int robot_faster = 0;  // pairs where the robot condition finished strictly earlier

  double median_difference() const { return human_only.median - with_robot.median; }
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline ConditionSummary summarize(const std::vector<double>& times, int incomplete) {
  ConditionSummary s;
  if (!times.empty()) {
    double total = 0.0;
    for (double t : times) total += t;
    s.mean = total / static_cast<double>(times.size());
  }
  s.median = median_of(times);
  s.incomplete = incomplete;
  return s;
}

/// Paired runs over seeds base_seed .. base_seed+n-1. The "human" condition
/// uses robot_a (default off), the other robot_b (default on).
inline Comparison compare_conditions(const ScenarioConfig& scn, SimConfig cfg, int n_seeds, bool robot_a = false,
                                     bool robot_b = true,
                                     const std::function<void(const PairedRun&, const RunResult&, const RunResult&)>&
                                         on_pair = {}) {
  if (n_seeds < 1) throw Error(ErrorCode::SchemaError, "n_seeds must be >= 1");
  Comparison c;
  std::vector<double> ta, tb;
  int ia = 0, ib = 0;
  const std::uint64_t base = cfg.seed;
  for (int i = 0; i < n_seeds; ++i) {
    cfg.seed = base + static_cast<std::uint64_t>(i);
    cfg.robot_enabled = robot_a;
    RunResult a = run(scn, cfg);
    cfg.robot_enabled = robot_b;
    RunResult b = run(scn, cfg);
    PairedRun p{cfg.seed, a.metrics, b.metrics};
    ta.push_back(a.metrics.completion_time);
    tb.push_back(b.metrics.completion_time);
    ia += a.metrics.complete ? 0 : 1;
    ib += b.metrics.complete ? 0 : 1;
    if (b.metrics.completion_time < a.metrics.completion_time) ++c.robot_faster;
    if (on_pair) on_pair(p, a, b);
    c.pairs.push_back(std::move(p));
  }
  c.human_only = summarize(ta, ia);
  c.with_robot = summarize(tb, ib);
  return c;
}

inline nlohmann::json to_json(const Comparison& c) {
  nlohmann::json j;
  auto cond = [](const ConditionSummary& s) {
    return nlohmann::json{{"mean", s.mean}, {"median", s.median}, {"incomplete", s.incomplete}};
  };
  j["human"] = cond(c.human_only);
  j["human_robot"] = cond(c.with_robot);
  j["robot_faster_pairs"] = c.robot_faster;
  j["median_difference"] = c.median_difference();
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : c.pairs) {
    j["pairs"].push_back({{"seed", p.seed},
                          {"human", p.human_only.completion_time},
                          {"human_robot", p.with_robot.completion_time}});
  }
  return j;
}

// ---------------------------------------------------------------------------
// Replay

struct ReplaySummary {
  std::size_t entries_verified = 0;
  std::size_t hashes_verified = 0;
  std::uint64_t ticks = 0;
  bool reached_end = false;  // the re-simulated run finished within the log
  std::string final_hash;
};

/// Splits a JSONL stream into complete entries; a trailing partial line
/// (no newline, or unparsable at the very end) is dropped.
inline std::vector<std::string> read_log_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  while (pos < all.size()) {
    const std::size_t nl = all.find('\n', pos);
    if (nl == std::string::npos) break;  // incomplete final line
    std::string line = all.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
    pos = nl + 1;
  }
  return lines;
}

/// Re-simulates a log from its start entry and checks every regenerated
/// entry against the recorded one. Stops at the last recorded entry.
inline ReplaySummary replay(const std::vector<std::string>& lines,
                            const std::function<void(const WorldState&)>& on_snapshot = {}) {
  auto corrupt = [](std::size_t i, const std::string& what) {
    throw Error(ErrorCode::CorruptLog, "entry " + std::to_string(i + 1) + ": " + what);
  };
  if (lines.empty()) corrupt(0, "empty log");
  nlohmann::json start;
  try {
    start = nlohmann::json::parse(lines[0]);
  } catch (const nlohmann::json::exception&) {
    corrupt(0, "unparsable start entry");
  }
  if (start.value("kind", "") != "start") corrupt(0, "first entry is not a start entry");
  std::optional<Simulation> sim;
  try {
    if (start.at("payload").at("log_version").get<int>() != kLogVersion) corrupt(0, "unsupported log version");
    const ScenarioConfig scn = parse_scenario(start.at("payload").at("scenario"));
    sim.emplace(scn, sim_config_from_json(start.at("payload").at("config")));
  } catch (const nlohmann::json::exception& e) {
    corrupt(0, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptLog) throw;
    corrupt(0, e.what());
  }
  if (sim->start_entry().line() != lines[0]) corrupt(0, "start entry does not round-trip");

  // External commands recorded in the log are fed back at their tick.
  std::map<std::uint64_t, HumanCommand> commands;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].find("\"human-command\"") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      if (j.at("kind") == "human-command") {
        commands[j.at("payload").at("tick").get<std::uint64_t>()] =
            human_command_from_json(j.at("payload").at("command"));
      }
    } catch (const nlohmann::json::exception&) {
      corrupt(i, "unparsable entry");
    } catch (const Error&) {
      corrupt(i, "bad human command");
    }
  }

  ReplaySummary s;
  s.entries_verified = 1;
  if (on_snapshot) on_snapshot(sim->world());
  std::size_t i = 1;
  while (i < lines.size()) {
    if (sim->finished()) corrupt(i, "log continues past the end of the run");
    if (auto it = commands.find(sim->world().tick + 1); it != commands.end()) sim->push_command(it->second);
    for (const auto& e : sim->step()) {
      if (i >= lines.size()) break;  // truncated log: stop here
      const std::string regenerated = e.line();
      if (regenerated != lines[i]) {
        corrupt(i, e.kind == "snapshot-hash" ? "state hash mismatch" : "entry differs from re-simulation");
      }
      if (e.kind == "snapshot-hash") {
        ++s.hashes_verified;
        s.final_hash = e.payload.at("hash").get<std::string>();
      }
      ++s.entries_verified;
      ++i;
    }
    if (on_snapshot) on_snapshot(sim->world());
  }
  s.ticks = sim->world().tick;
  s.reached_end = sim->finished();
  return s;
}

}  // namespace sarw
