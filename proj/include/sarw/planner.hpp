#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sarw/error.hpp"
#include "sarw/grid.hpp"
#include "sarw/interaction.hpp"
#include "sarw/vpt.hpp"
#include "sarw/workspace.hpp"

namespace sarw {

// ---------------------------------------------------------------------------
// Target ranking

struct TaskQueue {
  std::vector<CostAssessment> items;

  bool empty() const { return items.empty(); }
  std::vector<int> ids() const {
    std::vector<int> out;
    for (const auto& a : items) out.push_back(a.hologram_id);
    return out;
  }
};

/// Occluded holograms first, then by descending cost, ties by ascending id.
inline TaskQueue rank_targets(std::vector<CostAssessment> assessments) {
  std::sort(assessments.begin(), assessments.end(), [](const CostAssessment& a, const CostAssessment& b) {
    if (a.occluded != b.occluded) return a.occluded;
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.hologram_id < b.hologram_id;
  });
  return TaskQueue{std::move(assessments)};
}

// ---------------------------------------------------------------------------
// Grid paths

struct Path {
  std::vector<Vec2> waypoints;  // cell centers, start to goal
  std::vector<Cell> cells;
  double total_length = 0.0;  // meters along the grid path
  int straight_steps = 0;
  int diagonal_steps = 0;
};

inline double grid_path_length(int straight, int diagonal, double cell_size) {
  return (straight + diagonal * std::numbers::sqrt2) * cell_size;
}

/// A* (octile heuristic) on an already-inflated grid.
inline Path plan_path_cells(const OccupancyGrid& inflated, Cell start, Cell goal) {
  if (inflated.occupied(start)) throw Error(ErrorCode::StartOccupied, "start cell is occupied");
  if (inflated.occupied(goal)) throw Error(ErrorCode::GoalOccupied, "goal cell is occupied");

  const int w = inflated.width();
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(inflated.height());
  auto idx = [w](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
  struct NodeInfo {
    int straight = 0;
    int diagonal = 0;
    double g = std::numeric_limits<double>::infinity();
    std::int64_t parent = -1;
    bool closed = false;
  };
  std::vector<NodeInfo> info(n);
  auto heuristic = [&](Cell c) {
    const int dx = std::abs(c.x - goal.x);
    const int dy = std::abs(c.y - goal.y);
    return std::max(dx, dy) - std::min(dx, dy) + std::numbers::sqrt2 * std::min(dx, dy);
  };
  using Entry = std::pair<double, std::size_t>;  // f, index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  info[idx(start)].g = 0.0;
  open.push({heuristic(start), idx(start)});
  while (!open.empty()) {
    const auto [f, i] = open.top();
    open.pop();
    if (info[i].closed) continue;
    info[i].closed = true;
    const Cell c{static_cast<int>(i % w), static_cast<int>(i / w)};
    if (c == goal) break;
    for_each_neighbor(inflated, c, [&](Cell nb, double step) {
      NodeInfo& ni = info[idx(nb)];
      if (ni.closed) return;
      const bool diag = step > 1.0;
      const int s = info[i].straight + (diag ? 0 : 1);
      const int d = info[i].diagonal + (diag ? 1 : 0);
      const double g = s + d * std::numbers::sqrt2;
      if (g < ni.g) {
        ni.g = g;
        ni.straight = s;
        ni.diagonal = d;
        ni.parent = static_cast<std::int64_t>(i);
        open.push({g + heuristic(nb), idx(nb)});
      }
    });
  }
  const NodeInfo& gi = info[idx(goal)];
  if (!gi.closed) throw Error(ErrorCode::Unreachable, "no path to goal");

  Path path;
  for (std::int64_t i = static_cast<std::int64_t>(idx(goal)); i >= 0; i = info[static_cast<std::size_t>(i)].parent) {
    const Cell c{static_cast<int>(i % w), static_cast<int>(i / w)};
    path.cells.push_back(c);
  }
  std::reverse(path.cells.begin(), path.cells.end());
  for (const Cell& c : path.cells) path.waypoints.push_back(inflated.center_of(c));
  path.straight_steps = gi.straight;
  path.diagonal_steps = gi.diagonal;
  path.total_length = grid_path_length(gi.straight, gi.diagonal, inflated.cell_size());
  return path;
}

/// Shortest 8-connected path for a disk robot: obstacles are inflated by
/// `robot_radius`, then searched with A*.
inline Path plan_path(const OccupancyGrid& grid, const Vec2& start, const Vec2& goal, double robot_radius) {
  const OccupancyGrid inflated = grid.inflated(robot_radius);
  const auto s = inflated.cell_of(start);
  const auto g = inflated.cell_of(goal);
  if (!s) throw Error(ErrorCode::StartOccupied, "start outside the grid");
  if (!g) throw Error(ErrorCode::GoalOccupied, "goal outside the grid");
  return plan_path_cells(inflated, *s, *g);
}

/// Free reachable cell closest to `target` (ties by scan order), searched
/// over cells reachable from `from`.
inline std::optional<Cell> nearest_reachable_cell(const OccupancyGrid& inflated, Cell from, const Vec2& target,
                                                  double max_distance = std::numeric_limits<double>::infinity()) {
  const auto reach = reachable_cells(inflated, from);
  std::optional<Cell> best;
  double best_d = max_distance;
  for (int y = 0; y < inflated.height(); ++y) {
    for (int x = 0; x < inflated.width(); ++x) {
      if (!reach[static_cast<std::size_t>(y) * inflated.width() + x]) continue;
      const double d = (inflated.center_of(Cell{x, y}) - target).norm();
      if (d < best_d) {
        best_d = d;
        best = Cell{x, y};
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Robot policy

struct MoveToward {
  Vec2 waypoint;
};
struct AttachCmd {
  int hologram_id;
};
struct PlaceCmd {
  Vec2 target;
};
struct Idle {};

using RobotCommand = std::variant<Idle, MoveToward, AttachCmd, PlaceCmd>;

enum class DeliveryMode { GoalZone, DeliverToHuman };

struct RerankNotice {
  std::vector<int> queue;
  std::string reason;
};

/// Fetch-and-deliver policy driven by the robot's VPT assessments. Stateful:
/// holds the ranked queue, the active path and the delivery target.
class RobotController {
 public:
  RobotController() = default;

  RobotController(const WorldState& w, DeliveryMode mode) : mode_(mode) {
    inflated_ = w.scene.floor_grid.inflated(w.robot.footprint_radius);
  }

  const TaskQueue& queue() const { return queue_; }
  const std::optional<Path>& active_path() const { return path_; }
  std::optional<int> target() const { return target_; }
  const OccupancyGrid& inflated_grid() const { return inflated_; }

  /// Feeds a fresh set of assessments. Re-ranks when this is the first set,
  /// when a region class changed, or when an event requested it.
  std::optional<RerankNotice> update(const WorldState& w, std::vector<CostAssessment> assessments,
                                     const Viewpoint& belief) {
    belief_ = belief;
    std::string reason;
    if (!initialized_) {
      reason = "initial";
    } else if (!pending_reason_.empty()) {
      reason = pending_reason_;
    } else if (region_signature(assessments) != last_regions_) {
      reason = "region_change";
    }
    latest_ = std::move(assessments);
    if (reason.empty()) return std::nullopt;
    initialized_ = true;
    pending_reason_.clear();
    return rerank(w, reason);
  }

  /// Requests a re-rank on the next update (deliveries, lost targets).
  void request_rerank(std::string reason) { pending_reason_ = std::move(reason); }

  RobotCommand next_command(const WorldState& w, std::optional<RerankNotice>* notice = nullptr) {
    const RobotAgent& r = w.robot;
    if (r.carried) {
      if (!delivery_target_) choose_delivery_target(w);
      const Vec2 goal = *delivery_target_;
      if (arrived_for_delivery(w, goal)) {
        return PlaceCmd{mode_ == DeliveryMode::GoalZone || !handover_ ? r.position : goal};
      }
      return follow(w, goal);
    }
    delivery_target_.reset();
    handover_ = false;

    // Drop heads that are no longer free (grabbed by the human, delivered).
    bool lost = false;
    while (!queue_.empty()) {
      const Hologram* h = w.find(queue_.items.front().hologram_id);
      if (h && h->free() && !skip_.contains(h->id)) break;
      queue_.items.erase(queue_.items.begin());
      lost = true;
    }
    if (lost) {
      auto n = rerank(w, "target_lost");
      if (notice) *notice = n;
    }
    if (queue_.empty()) {
      target_.reset();
      path_.reset();
      return Idle{};
    }
    const Hologram& h = w.get(queue_.items.front().hologram_id);
    if (target_ != h.id) {
      target_ = h.id;
      path_.reset();
    }
    if (can_attach(w, AgentId::Robot, h)) return AttachCmd{h.id};
    if (!path_) {
      const auto approach = approach_cell(w, h);
      if (!approach) {
        // Cannot get within reach: give up on this one.
        skip_.insert(h.id);
        queue_.items.erase(queue_.items.begin());
        target_.reset();
        return Idle{};
      }
      approach_goal_ = inflated_.center_of(*approach);
    }
    return follow(w, approach_goal_);
  }

  /// Called by the engine after the robot's own place succeeded.
  void on_placed(int hologram_id, bool delivered) {
    if (!delivered) skip_.insert(hologram_id);  // handed over; the human finishes it
    path_.reset();
    delivery_target_.reset();
    handover_ = false;
    target_.reset();
    request_rerank("delivery");
  }

  void on_attached() {
    path_.reset();
    delivery_target_.reset();
  }

 private:
  static std::vector<std::pair<int, RegionClass>> region_signature(const std::vector<CostAssessment>& as) {
    std::vector<std::pair<int, RegionClass>> out;
    for (const auto& a : as) out.emplace_back(a.hologram_id, a.region);
    return out;
  }

  RerankNotice rerank(const WorldState& w, const std::string& reason) {
    std::vector<CostAssessment> eligible;
    for (const auto& a : latest_) {
      const Hologram* h = w.find(a.hologram_id);
      if (h && h->free() && !skip_.contains(a.hologram_id)) eligible.push_back(a);
    }
    queue_ = rank_targets(std::move(eligible));
    last_regions_ = region_signature(latest_);
    return RerankNotice{queue_.ids(), reason};
  }

  std::optional<Cell> approach_cell(const WorldState& w, const Hologram& h) const {
    const auto start = inflated_.cell_of(w.robot.position);
    if (!start || inflated_.occupied(*start)) return std::nullopt;
    const Circle2D hc = interaction_circle(h);
    const double reach = hc.radius + kInteractionEnlargement * w.robot.footprint_radius;
    return nearest_reachable_cell(inflated_, *start, hc.center, reach);
  }

  bool arrived_for_delivery(const WorldState& w, const Vec2& goal) const {
    if (mode_ == DeliveryMode::GoalZone || !handover_) {
      const Circle2D& gz = w.scene.goal_zone;
      return (w.robot.position - gz.center).norm() <= gz.radius &&
             !w.scene.floor_grid.occupied_at(w.robot.position);
    }
    return (w.robot.position - goal).norm() < 1e-6;
  }

  void choose_delivery_target(const WorldState& w) {
    handover_ = false;
    delivery_target_ = w.scene.goal_zone.center;
    const auto start = inflated_.cell_of(w.robot.position);
    if (mode_ == DeliveryMode::DeliverToHuman && start && belief_) {
      const OcclusionScene scene(w);
      const auto reach = reachable_cells(inflated_, *start);
      const double min_gap = w.human.footprint_radius + w.robot.footprint_radius + 0.3;
      std::optional<Vec2> best;
      double best_d = std::numeric_limits<double>::infinity();
      for (int y = 0; y < inflated_.height(); ++y) {
        for (int x = 0; x < inflated_.width(); ++x) {
          if (!reach[static_cast<std::size_t>(y) * inflated_.width() + x]) continue;
          const Vec2 c = inflated_.center_of(Cell{x, y});
          if ((c - w.human.body_position).norm() < min_gap) continue;
          const Vec3 p(c.x(), c.y(), kHandoverHeight);
          if (!in_frustum(belief_->head, belief_->fov_h, belief_->fov_v, p)) continue;
          if (scene.blocked(belief_->eye(), p, -1)) continue;
          const double d = (c - w.robot.position).norm();
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
      }
      if (best) {
        delivery_target_ = *best;
        handover_ = true;
      }
    }
    path_.reset();
  }

  RobotCommand follow(const WorldState& w, const Vec2& goal) {
    if (!path_ || path_goal_ != goal) {
      path_goal_ = goal;
      const auto s = inflated_.cell_of(w.robot.position);
      const auto g = inflated_.cell_of(goal);
      try {
        if (!s || !g) throw Error(ErrorCode::Unreachable, "outside grid");
        path_ = plan_path_cells(inflated_, *s, *g);
        // The goal itself is the final waypoint when it differs from the cell center.
        if (goal != path_->waypoints.back()) path_->waypoints.push_back(goal);
      } catch (const Error&) {
        path_.reset();
        if (target_ && !w.robot.carried) {
          skip_.insert(*target_);
          queue_.items.erase(queue_.items.begin());
          target_.reset();
        }
        return Idle{};
      }
      next_waypoint_ = 0;
    }
    while (next_waypoint_ < path_->waypoints.size() &&
           (path_->waypoints[next_waypoint_] - w.robot.position).norm() < 1e-9) {
      ++next_waypoint_;
    }
    if (next_waypoint_ >= path_->waypoints.size()) return Idle{};
    return MoveToward{path_->waypoints[next_waypoint_]};
  }

  static constexpr double kHandoverHeight = 0.3;

  DeliveryMode mode_ = DeliveryMode::GoalZone;
  OccupancyGrid inflated_;
  TaskQueue queue_;
  std::vector<CostAssessment> latest_;
  std::vector<std::pair<int, RegionClass>> last_regions_;
  std::set<int> skip_;
  std::string pending_reason_;
  bool initialized_ = false;
  std::optional<int> target_;
  std::optional<Path> path_;
  Vec2 path_goal_ = Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
  std::size_t next_waypoint_ = 0;
  Vec2 approach_goal_ = Vec2::Zero();
  std::optional<Vec2> delivery_target_;
  bool handover_ = false;
  std::optional<Viewpoint> belief_;
};

}  // namespace sarw
