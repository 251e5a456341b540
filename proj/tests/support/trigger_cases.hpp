#pragma once

// Random attach configurations with the analytic expectation computed from
// raw geometry: floor distance between sphere centers against the sum of
// both radii scaled by 1.2.

#include <cmath>
#include <random>

#include "sarw/interaction.hpp"
#include "sarw/scenario.hpp"
#include "support/scenes.hpp"

namespace trigger_cases {

struct Case {
  sarw::WorldState world;
  sarw::AgentId agent = sarw::AgentId::Robot;
  int id = 1;
  bool expected = false;
  bool exact_boundary = false;
};

inline const sarw::WorldState& base_world() {
  static const sarw::WorldState w = [] {
    auto doc = scenes::room(20, 20);
    scenes::add_hologram(doc, 1, scenes::ball(0.1), 10, 10, 1.0);
    scenes::add_hologram(doc, 2, scenes::box(0.3, 0.2, 0.1), 12, 10, 1.0);
    return sarw::load_scenario(sarw::parse_scenario(doc));
  }();
  return w;
}

inline double analytic_radius(double agent_radius, double sphere_radius) {
  return 1.2 * agent_radius + 1.2 * sphere_radius;
}

/// Random pose and size for the hologram and the agent; the distance is
/// drawn around the trigger radius so both outcomes are common.
inline Case random_case(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Case c;
  c.world = base_world();
  c.agent = u(gen) < 0.5 ? sarw::AgentId::Robot : sarw::AgentId::Human;
  c.id = u(gen) < 0.5 ? 1 : 2;
  sarw::Hologram& h = c.world.get(c.id);
  const double scale = 0.2 + 3.0 * u(gen);
  for (auto& v : h.mesh.vertices) v *= scale;
  h.local_sphere = sarw::circumscribed_sphere(h.mesh);
  h.pose = sarw::Transform::from_yaw_pitch(6.28 * u(gen), 1.5 * (u(gen) - 0.5),
                                           sarw::Vec3(2 + 16 * u(gen), 2 + 16 * u(gen), 0.1 + 2 * u(gen)));
  const double agent_r = 0.05 + 0.5 * u(gen);
  if (c.agent == sarw::AgentId::Robot) {
    c.world.robot.footprint_radius = agent_r;
  } else {
    c.world.human.footprint_radius = agent_r;
  }
  const sarw::Vec3 center = h.pose.apply(h.local_sphere.center);
  const double reach = analytic_radius(agent_r, h.local_sphere.radius);
  const double d = reach * (0.5 + u(gen));
  const double a = 6.28 * u(gen);
  const sarw::Vec2 pos(center.x() + d * std::cos(a), center.y() + d * std::sin(a));
  if (c.agent == sarw::AgentId::Robot) {
    c.world.robot.position = pos;
  } else {
    c.world.human.body_position = pos;
  }
  sarw::sync_frames(c.world);
  c.expected = std::hypot(pos.x() - center.x(), pos.y() - center.y()) <= reach;
  return c;
}

/// Agent and hologram axis-aligned at exactly the trigger distance (or one
/// ulp beyond it). The hologram is an origin-centered icosphere translated
/// by whole coordinates, so every quantity involved is exact.
inline Case boundary_case(int k) {
  Case c;
  c.world = base_world();
  c.exact_boundary = true;
  c.agent = k % 2 ? sarw::AgentId::Human : sarw::AgentId::Robot;
  sarw::Hologram& h = c.world.get(1);
  const double agent_r = 0.1 + 0.05 * (k % 7);
  if (c.agent == sarw::AgentId::Robot) {
    c.world.robot.footprint_radius = agent_r;
  } else {
    c.world.human.footprint_radius = agent_r;
  }
  const double reach = analytic_radius(agent_r, h.local_sphere.radius);
  const bool beyond = (k / 2) % 2 == 1;
  const double d = beyond ? std::nextafter(reach, 1e9) : reach;
  const sarw::Vec2 agent(0.0, 0.0);
  const int axis = (k / 4) % 4;
  const sarw::Vec2 offset = axis == 0 ? sarw::Vec2(d, 0) : axis == 1 ? sarw::Vec2(-d, 0)
                          : axis == 2 ? sarw::Vec2(0, d) : sarw::Vec2(0, -d);
  h.pose = sarw::Transform::from_translation(sarw::Vec3(offset.x(), offset.y(), 1.0));
  if (c.agent == sarw::AgentId::Robot) {
    c.world.robot.position = agent;
  } else {
    c.world.human.body_position = agent;
  }
  sarw::sync_frames(c.world);
  c.expected = !beyond;
  return c;
}

}  // namespace trigger_cases
