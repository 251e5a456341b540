#include <gtest/gtest.h>

#include <random>

#include "sarw/interaction.hpp"
#include "sarw/scenario.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"
#include "support/trigger_cases.hpp"

using namespace sarw;

namespace {

// 8x6 room: human at (2,3), robot at (7,1), goal at (1,3).
WorldState small_world() {
  auto doc = scenes::room(8, 6);
  scenes::add_hologram(doc, 1, scenes::ball(0.25), 5.0, 3.0, 1.0);
  scenes::add_hologram(doc, 2, scenes::box(0.2, 0.2, 0.2), 6.0, 4.5, 0.5);
  return load_scenario(parse_scenario(doc));
}

WorldState robot_holding_1() {
  WorldState w = small_world();
  w.robot.position = Vec2(5.3, 3.0);
  w.robot.heading = 0.7;
  sync_frames(w);
  EXPECT_TRUE(attach_in_place(w, AgentId::Robot, 1));
  return w;
}

template <typename Fn>
ErrorCode error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST(InteractionCircle, Radii) {
  const WorldState w = small_world();
  EXPECT_NEAR(interaction_circle(w.get(1)).radius, 0.30, 1e-12);
  EXPECT_NEAR(interaction_circle(w.robot).radius, 0.24, 1e-12);
  RobotAgent point;
  point.footprint_radius = 0.0;
  EXPECT_EQ(interaction_circle(point).radius, 0.0);
}

TEST(InteractionCircle, IntersectExamples) {
  EXPECT_TRUE(circles_intersect({Vec2(0, 0), 0.30}, {Vec2(0.5, 0), 0.24}));
  EXPECT_TRUE(circles_intersect({Vec2(0, 0), 0.5}, {Vec2(0, 1.0), 0.5}));
  EXPECT_FALSE(circles_intersect({Vec2(0, 0), 0.30}, {Vec2(10, 0), 0.24}));
}

TEST(Attach, MatchesAnalyticPredicate) {
  std::mt19937_64 gen(77);
  int fired = 0;
  for (int i = 0; i < 10000; ++i) {
    const trigger_cases::Case c = trigger_cases::random_case(gen);
    const auto before = world_hash(c.world);
    auto [after, ev] = try_attach(c.world, c.agent, c.id);
    ASSERT_EQ(ev.has_value(), c.expected) << "case " << i;
    if (ev) {
      ++fired;
      EXPECT_EQ(after.get(c.id).status, HologramStatus::Carried);
      EXPECT_EQ(after.get(c.id).carrier, c.agent);
      EXPECT_EQ(after.carried_by(c.agent).value_or(-1), c.id);
    } else {
      ASSERT_EQ(world_hash(after), before);
    }
  }
  EXPECT_GT(fired, 3000);
  EXPECT_LT(fired, 7000);
}

TEST(Attach, ExactBoundaryIsInclusive) {
  for (int k = 0; k < 64; ++k) {
    const trigger_cases::Case c = trigger_cases::boundary_case(k);
    ASSERT_EQ(c.world.get(1).local_sphere.center, Vec3::Zero());
    auto [after, ev] = try_attach(c.world, c.agent, c.id);
    EXPECT_EQ(ev.has_value(), c.expected) << "boundary case " << k;
  }
}

TEST(Attach, FarAwayLeavesWorldUnchanged) {
  WorldState w = small_world();
  const auto before = world_hash(w);
  EXPECT_FALSE(attach_in_place(w, AgentId::Robot, 1));
  EXPECT_EQ(world_hash(w), before);
  EXPECT_TRUE(w.get(1).free());
}

TEST(Attach, GraspOffsetIsRelativeToCarrier) {
  const WorldState w = robot_holding_1();
  const Hologram& h = w.get(1);
  EXPECT_TRUE(approx_equal(compose(carrier_pose(w, AgentId::Robot), h.grasp_offset), h.pose, 1e-12));
}

TEST(Attach, Errors) {
  WorldState w = robot_holding_1();
  w.robot.position = Vec2(6.0, 4.2);
  sync_frames(w);
  EXPECT_EQ(error_of([&] { attach_in_place(w, AgentId::Robot, 2); }), ErrorCode::AgentBusy);
  w.human.body_position = w.get(1).pose.translation.head<2>();
  sync_frames(w);
  EXPECT_EQ(error_of([&] { attach_in_place(w, AgentId::Human, 1); }), ErrorCode::HologramUnavailable);
  EXPECT_EQ(error_of([&] { attach_in_place(w, AgentId::Human, 9); }), ErrorCode::UnknownHologram);
}

TEST(Carry, FollowsTranslation) {
  WorldState w = robot_holding_1();
  const Vec3 before = w.get(1).pose.translation;
  const Vec2 step = Vec2(std::cos(w.robot.heading), std::sin(w.robot.heading));
  w.robot.position += step;
  w = carry_tick(w);
  const Vec3 moved = w.get(1).pose.translation - before;
  EXPECT_LE((moved - Vec3(step.x(), step.y(), 0)).norm(), 1e-12);
}

TEST(Carry, RotationKeepsRelativePose) {
  WorldState w = robot_holding_1();
  const Transform rel = compose(invert(robot_pose(w.robot)), w.get(1).pose);
  w.robot.heading += std::numbers::pi / 2;
  w = carry_tick(w);
  EXPECT_TRUE(approx_equal(compose(invert(robot_pose(w.robot)), w.get(1).pose), rel, 1e-12));
  // Hologram center orbits the robot by the same quarter turn.
  const Vec2 r = w.robot.position;
  const WorldState ref = robot_holding_1();
  const Vec2 d0 = ref.get(1).pose.translation.head<2>() - r;
  const Vec2 d1 = w.get(1).pose.translation.head<2>() - r;
  EXPECT_LE((d1 - Vec2(-d0.y(), d0.x())).norm(), 1e-12);
}

TEST(Carry, Idempotent) {
  WorldState w = robot_holding_1();
  w.robot.position += Vec2(-0.4, 0.1);
  const WorldState once = carry_tick(w);
  const WorldState twice = carry_tick(once);
  EXPECT_EQ(world_hash(once), world_hash(twice));
  EXPECT_TRUE(once.frames == twice.frames);
}

TEST(Place, InsideGoalIsDelivered) {
  WorldState w = robot_holding_1();
  auto [after, ev] = place(w, AgentId::Robot, Vec2(1.1, 3.0));
  EXPECT_TRUE(ev.delivered);
  EXPECT_EQ(after.get(1).status, HologramStatus::Delivered);
  EXPECT_TRUE(after.get(1).delivered_by == AgentId::Robot);
  EXPECT_FALSE(after.robot.carried);
}

TEST(Place, OnFloorIsFreeAtTarget) {
  WorldState w = robot_holding_1();
  const double z = w.get(1).pose.translation.z();
  auto [after, ev] = place(w, AgentId::Robot, Vec2(4.0, 2.0));
  EXPECT_FALSE(ev.delivered);
  EXPECT_TRUE(after.get(1).free());
  EXPECT_EQ(after.get(1).pose.translation.x(), 4.0);
  EXPECT_EQ(after.get(1).pose.translation.y(), 2.0);
  EXPECT_EQ(after.get(1).pose.translation.z(), z);
}

TEST(Place, IntoWallIsRejectedWithoutChange) {
  WorldState w = robot_holding_1();
  const auto before = world_hash(w);
  EXPECT_EQ(error_of([&] { place_in_place(w, AgentId::Robot, Vec2(0.02, 3.0)); }), ErrorCode::TargetOccupied);
  EXPECT_EQ(world_hash(w), before);
  EXPECT_EQ(w.robot.carried.value_or(-1), 1);
  EXPECT_EQ(error_of([&] { place_in_place(w, AgentId::Human, Vec2(4.0, 2.0)); }), ErrorCode::NotCarrying);
}

TEST(Place, RoundTripRestoresFree) {
  WorldState w = robot_holding_1();
  const Vec2 target(3.25, 1.75);
  auto [after, ev] = place(w, AgentId::Robot, target);
  const Hologram& h = after.get(1);
  EXPECT_TRUE(h.free());
  EXPECT_EQ(h.pose.translation.head<2>(), target);
  EXPECT_FALSE(after.robot.carried);
}

TEST(Interaction, HologramsAreConserved) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.5, 7.5), v(0.5, 5.5);
  WorldState w = small_world();
  for (int step = 0; step < 2000; ++step) {
    const AgentId a = gen() % 2 ? AgentId::Robot : AgentId::Human;
    const Vec2 p(u(gen), v(gen));
    if (a == AgentId::Robot) {
      w.robot.position = p;
    } else {
      w.human.body_position = p;
    }
    w = carry_tick(w);
    try {
      if (w.carried_by(a)) {
        place_in_place(w, a, Vec2(u(gen), v(gen)));
      } else {
        attach_in_place(w, a, 1 + static_cast<int>(gen() % 2));
      }
    } catch (const Error&) {
    }
    ASSERT_EQ(w.holograms.size(), 2u);
    for (const auto& h : w.holograms) {
      const int holders = (w.robot.carried == h.id) + (w.human.carried == h.id);
      ASSERT_EQ(holders, h.carried() ? 1 : 0);
    }
  }
}
