#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sarw/error.hpp"
#include "sarw/geometry.hpp"
#include "sarw/grid.hpp"
#include "sarw/mesh.hpp"

namespace sarw {

enum class AgentId { Human, Robot };

constexpr std::string_view to_string(AgentId a) { return a == AgentId::Human ? "human" : "robot"; }

enum class HologramStatus { Free, Carried, Delivered };

constexpr std::string_view to_string(HologramStatus s) {
  switch (s) {
    case HologramStatus::Free: return "free";
    case HologramStatus::Carried: return "carried";
    case HologramStatus::Delivered: return "delivered";
  }
  return "?";
}

struct Hologram {
  int id = 0;
  std::string label;
  TriangleMesh mesh;  // local coordinates
  Sphere local_sphere;
  Transform pose;  // world frame
  HologramStatus status = HologramStatus::Free;
  AgentId carrier = AgentId::Human;  // meaningful only while carried
  Transform grasp_offset;            // carrier body -> hologram, frozen at attach
  std::optional<AgentId> delivered_by;

  bool free() const { return status == HologramStatus::Free; }
  bool carried() const { return status == HologramStatus::Carried; }

  Sphere world_sphere() const { return {pose.apply(local_sphere.center), local_sphere.radius}; }
  TriangleMesh world_mesh() const { return mesh.transformed(pose); }
};

struct HumanAgent {
  Vec2 body_position = Vec2::Zero();
  double body_heading = 0.0;
  double head_yaw = 0.0;    // relative to body
  double head_pitch = 0.0;  // positive looks up
  double eye_height = 1.6;
  double fov_h = deg2rad(30.0);
  double fov_v = deg2rad(17.5);
  double max_speed = 1.2;
  double max_turn_rate = 2.0;
  double footprint_radius = 0.25;
  double pitch_limit = deg2rad(80.0);
  std::optional<int> carried;
};

struct RobotAgent {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double footprint_radius = 0.2;
  double max_speed = 0.5;
  double max_turn_rate = 1.5;
  std::optional<int> carried;
  CameraIntrinsics camera;
  Transform camera_mount = Transform{camera_to_body_rotation(), Vec3(0.1, 0.0, 0.45)};
};

struct Occluder {
  std::string name;
  TriangleMesh mesh;  // world coordinates
  Aabb box;
};

struct StaticScene {
  std::vector<Occluder> occluders;
  OccupancyGrid floor_grid;
  Circle2D goal_zone;
  double clearance_height = 0.5;
};

struct WorldState {
  double time = 0.0;
  std::uint64_t tick = 0;
  HumanAgent human;
  RobotAgent robot;
  std::vector<Hologram> holograms;  // sorted by id
  StaticScene scene;
  TransformGraph frames;

  const Hologram* find(int id) const {
    auto it = std::lower_bound(holograms.begin(), holograms.end(), id,
                               [](const Hologram& h, int v) { return h.id < v; });
    return it != holograms.end() && it->id == id ? &*it : nullptr;
  }

  Hologram* find(int id) {
    return const_cast<Hologram*>(static_cast<const WorldState&>(*this).find(id));
  }

  const Hologram& get(int id) const {
    const Hologram* h = find(id);
    if (!h) throw Error(ErrorCode::UnknownHologram, "hologram " + std::to_string(id));
    return *h;
  }

  Hologram& get(int id) {
    Hologram* h = find(id);
    if (!h) throw Error(ErrorCode::UnknownHologram, "hologram " + std::to_string(id));
    return *h;
  }

  bool all_delivered() const {
    return std::all_of(holograms.begin(), holograms.end(),
                       [](const Hologram& h) { return h.status == HologramStatus::Delivered; });
  }

  std::optional<int>& carried_by(AgentId a) { return a == AgentId::Human ? human.carried : robot.carried; }
  const std::optional<int>& carried_by(AgentId a) const {
    return a == AgentId::Human ? human.carried : robot.carried;
  }
};

inline double clamp_pitch(const HumanAgent& h, double pitch) {
  return std::clamp(pitch, -h.pitch_limit, h.pitch_limit);
}

/// World pose of the human head: origin at the eyes, +x along the face.
inline Transform head_frame(const HumanAgent& h) {
  return Transform::from_yaw_pitch(h.body_heading + h.head_yaw, clamp_pitch(h, h.head_pitch),
                                   Vec3(h.body_position.x(), h.body_position.y(), h.eye_height));
}

inline Vec3 facing_direction(const HumanAgent& h) {
  return head_frame(h).apply_vector(Vec3::UnitX()).normalized();
}

inline Transform robot_pose(const RobotAgent& r) {
  return Transform::from_yaw_pitch(r.heading, 0.0, Vec3(r.position.x(), r.position.y(), 0.0));
}

inline Transform camera_pose(const RobotAgent& r) { return compose(robot_pose(r), r.camera_mount); }

/// Floor-level body frame an agent carries holograms in.
inline Transform carrier_pose(const WorldState& w, AgentId a) {
  if (a == AgentId::Robot) return robot_pose(w.robot);
  return Transform::from_yaw_pitch(w.human.body_heading, 0.0,
                                   Vec3(w.human.body_position.x(), w.human.body_position.y(), 0.0));
}

inline Vec2 agent_position(const WorldState& w, AgentId a) {
  return a == AgentId::Robot ? w.robot.position : w.human.body_position;
}

inline double agent_radius(const WorldState& w, AgentId a) {
  return a == AgentId::Robot ? w.robot.footprint_radius : w.human.footprint_radius;
}

/// Re-registers every frame from the current agent and hologram poses;
/// carried holograms are first moved to carrier ∘ grasp offset.
inline void sync_frames(WorldState& w) {
  for (auto& h : w.holograms) {
    if (h.carried()) h.pose = compose(carrier_pose(w, h.carrier), h.grasp_offset);
  }
  w.frames.set(FrameId::world(), FrameId::robot(), robot_pose(w.robot));
  w.frames.set(FrameId::robot(), FrameId::robot_camera(), w.robot.camera_mount);
  w.frames.set(FrameId::world(), FrameId::human_head(), head_frame(w.human));
  for (const auto& h : w.holograms) w.frames.set(FrameId::world(), FrameId::hologram(h.id), h.pose);
}

inline WorldState synced(WorldState w) {
  sync_frames(w);
  return w;
}

/// FNV-1a over the dynamic state; used for replay verification.
class StateHasher {
 public:
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xFF;
      h_ *= 0x100000001B3ull;
    }
  }
  void add(double d) { add(std::bit_cast<std::uint64_t>(d)); }
  void add(const Vec2& v) { add(v.x()), add(v.y()); }
  void add(const Vec3& v) { add(v.x()), add(v.y()), add(v.z()); }
  void add(const Transform& t) {
    add(t.translation);
    add(t.rotation.w()), add(t.rotation.x()), add(t.rotation.y()), add(t.rotation.z());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ull;
};

inline std::uint64_t world_hash(const WorldState& w) {
  StateHasher s;
  s.add(w.time);
  s.add(w.tick);
  s.add(w.human.body_position);
  s.add(w.human.body_heading);
  s.add(w.human.head_yaw);
  s.add(w.human.head_pitch);
  s.add(static_cast<std::uint64_t>(w.human.carried.value_or(-1)));
  s.add(w.robot.position);
  s.add(w.robot.heading);
  s.add(static_cast<std::uint64_t>(w.robot.carried.value_or(-1)));
  for (const auto& h : w.holograms) {
    s.add(static_cast<std::uint64_t>(h.id));
    s.add(static_cast<std::uint64_t>(h.status));
    s.add(static_cast<std::uint64_t>(h.carrier));
    s.add(h.pose);
  }
  return s.value();
}

}  // namespace sarw
