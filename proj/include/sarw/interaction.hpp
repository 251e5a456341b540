#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "sarw/error.hpp"
#include "sarw/geometry.hpp"
#include "sarw/workspace.hpp"

namespace sarw {

/// Both the hologram's and the agent's bounding spheres are enlarged by 20%
/// before projecting them to floor circles.
constexpr double kInteractionEnlargement = 1.2;

inline Circle2D interaction_circle(const Hologram& h) {
  const Sphere s = h.world_sphere();
  return {s.center.head<2>(), kInteractionEnlargement * s.radius};
}

inline Circle2D interaction_circle(const RobotAgent& r) {
  return {r.position, kInteractionEnlargement * r.footprint_radius};
}

inline Circle2D interaction_circle(const HumanAgent& h) {
  return {h.body_position, kInteractionEnlargement * h.footprint_radius};
}

inline Circle2D interaction_circle(const WorldState& w, AgentId a) {
  return a == AgentId::Robot ? interaction_circle(w.robot) : interaction_circle(w.human);
}

/// Closed-disk intersection (touching counts).
inline bool circles_intersect(const Circle2D& a, const Circle2D& b) {
  return std::hypot(a.center.x() - b.center.x(), a.center.y() - b.center.y()) <= a.radius + b.radius;
}

struct AttachEvent {
  double time = 0.0;
  AgentId agent = AgentId::Robot;
  int hologram_id = 0;
  Vec2 position = Vec2::Zero();
};

struct DetachEvent {
  double time = 0.0;
  AgentId agent = AgentId::Robot;
  int hologram_id = 0;
  Vec2 position = Vec2::Zero();
  bool delivered = false;
};

inline bool can_attach(const WorldState& w, AgentId agent, const Hologram& h) {
  return h.free() && !w.carried_by(agent) &&
         circles_intersect(interaction_circle(w, agent), interaction_circle(h));
}

/// Attaches `hologram_id` to `agent` if their circles intersect; the world
/// is untouched when they do not.
inline std::optional<AttachEvent> attach_in_place(WorldState& w, AgentId agent, int hologram_id) {
  Hologram& h = w.get(hologram_id);
  if (w.carried_by(agent)) throw Error(ErrorCode::AgentBusy, std::string(to_string(agent)) + " already carries a hologram");
  if (!h.free()) throw Error(ErrorCode::HologramUnavailable, "hologram " + std::to_string(hologram_id) + " is " + std::string(to_string(h.status)));
  if (!circles_intersect(interaction_circle(w, agent), interaction_circle(h))) return std::nullopt;

  h.status = HologramStatus::Carried;
  h.carrier = agent;
  h.grasp_offset = compose(invert(carrier_pose(w, agent)), h.pose);
  w.carried_by(agent) = hologram_id;
  sync_frames(w);
  return AttachEvent{w.time, agent, hologram_id, agent_position(w, agent)};
}

inline std::pair<WorldState, std::optional<AttachEvent>> try_attach(WorldState w, AgentId agent, int hologram_id) {
  auto ev = attach_in_place(w, agent, hologram_id);
  return {std::move(w), ev};
}

/// Moves every carried hologram to carrier pose ∘ grasp offset.
inline WorldState carry_tick(WorldState w) {
  sync_frames(w);
  return w;
}

/// Puts the carried hologram down at `target` (same height and orientation
/// it was carried at). Inside the goal zone it counts as delivered.
inline DetachEvent place_in_place(WorldState& w, AgentId agent, const Vec2& target) {
  auto& slot = w.carried_by(agent);
  if (!slot) throw Error(ErrorCode::NotCarrying, std::string(to_string(agent)) + " is not carrying");
  if (w.scene.floor_grid.occupied_at(target)) {
    throw Error(ErrorCode::TargetOccupied, "placement target is not free floor");
  }
  Hologram& h = w.get(*slot);
  sync_frames(w);
  h.pose.translation.x() = target.x();
  h.pose.translation.y() = target.y();
  const bool delivered = (target - w.scene.goal_zone.center).norm() <= w.scene.goal_zone.radius;
  h.status = delivered ? HologramStatus::Delivered : HologramStatus::Free;
  if (delivered) h.delivered_by = agent;
  const int id = h.id;
  slot.reset();
  sync_frames(w);
  return DetachEvent{w.time, agent, id, target, delivered};
}

inline std::pair<WorldState, DetachEvent> place(WorldState w, AgentId agent, const Vec2& target) {
  DetachEvent ev = place_in_place(w, agent, target);
  return {std::move(w), ev};
}

}  // namespace sarw
