#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "sarw/error.hpp"
#include "sarw/geometry.hpp"
#include "sarw/mesh.hpp"
#include "sarw/rng.hpp"
#include "sarw/workspace.hpp"

namespace sarw {

// Visual perspective taking: how hard it is for the human to see each
// hologram (view angle plus occlusion) and which region it falls in.

enum class RegionClass { Focusing, Transition, Blocked };

constexpr std::string_view to_string(RegionClass r) {
  switch (r) {
    case RegionClass::Focusing: return "Focusing";
    case RegionClass::Transition: return "Transition";
    case RegionClass::Blocked: return "Blocked";
  }
  return "?";
}

/// Where the human looks from. Built from ground truth for the human's own
/// perspective, or from the robot's estimate of the head frame.
struct Viewpoint {
  Transform head;             // world pose; +x is the facing direction
  double body_heading = 0.0;  // reference for the head-rotation search
  double fov_h = deg2rad(30.0);
  double fov_v = deg2rad(17.5);
  double pitch_limit = deg2rad(80.0);

  Vec3 eye() const { return head.translation; }
  Vec3 facing() const { return head.apply_vector(Vec3::UnitX()).normalized(); }
};

inline Viewpoint viewpoint_of(const HumanAgent& h) {
  return {head_frame(h), h.body_heading, h.fov_h, h.fov_v, h.pitch_limit};
}

struct VptParams {
  int n_rays = 32;
  std::optional<double> occlusion_threshold;  // default: any blocked ray

  double threshold() const {
    return occlusion_threshold.value_or(1.0 / static_cast<double>(std::max(n_rays, 1)));
  }
};

struct VisibilityResult {
  bool occluded = false;
  double blocked_fraction = 0.0;
  int rays_cast = 0;
};

struct CostAssessment {
  int hologram_id = 0;
  double angle = 0.0;  // radians in [0, pi]
  bool occluded = false;
  double cost = 0.0;
  RegionClass region = RegionClass::Focusing;
  double blocked_fraction = 0.0;
};

constexpr double kOcclusionPenalty = std::numbers::pi;

inline double cost_from(double angle, bool occluded) {
  return angle + (occluded ? kOcclusionPenalty : 0.0);
}

/// Angle between the facing direction and the direction to `target`.
inline double view_angle(const Viewpoint& vp, const Vec3& target) {
  const Vec3 d = target - vp.eye();
  if (d.norm() < 1e-12) throw Error(ErrorCode::DegenerateTarget, "target coincides with the eye point");
  const Vec3 f = vp.facing();
  return std::atan2(f.cross(d).norm(), f.dot(d));
}

inline double view_angle(const HumanAgent& h, const Vec3& target) {
  return view_angle(viewpoint_of(h), target);
}

/// Pinhole frustum test in the head frame (x forward, y left, z up).
inline bool in_frustum(const Transform& head, double fov_h, double fov_v, const Vec3& target) {
  const Vec3 p = invert(head).apply(target);
  if (!(p.x() > 0.0)) return false;
  return std::abs(p.y()) <= p.x() * std::tan(0.5 * fov_h) &&
         std::abs(p.z()) <= p.x() * std::tan(0.5 * fov_v);
}

/// Point a hologram is looked at through: its circumscribed sphere center.
inline Vec3 look_target(const Hologram& h) { return h.world_sphere().center; }

/// Deterministic surface samples used as ray endpoints, seeded by id.
inline std::vector<Vec3> occlusion_samples(const Hologram& h, int n_rays) {
  std::vector<Vec3> out;
  const auto n = static_cast<std::size_t>(std::max(n_rays, 1));
  const PointCloud local = sample_surface(h.mesh, n, mix_seed(static_cast<std::uint64_t>(h.id), 0x0CC1));
  out.reserve(n);
  for (const auto& p : local.points) out.push_back(h.pose.apply(p.position));
  // Zero-area holograms are treated as a point at their center.
  while (out.size() < n) out.push_back(look_target(h));
  return out;
}

/// Everything a sight line can be blocked by, in world coordinates.
class OcclusionScene {
 public:
  explicit OcclusionScene(const WorldState& w) {
    for (const auto& o : w.scene.occluders) blockers_.push_back({-1, o.mesh, o.box});
    for (const auto& h : w.holograms) {
      TriangleMesh m = h.world_mesh();
      Aabb box = bounding_box(m);
      blockers_.push_back({h.id, std::move(m), box});
    }
  }

  /// True if the segment eye -> point is interrupted by anything other than
  /// the hologram `ignore_id`.
  bool blocked(const Vec3& eye, const Vec3& point, int ignore_id) const {
    for (const auto& b : blockers_) {
      if (b.owner == ignore_id && ignore_id >= 0) continue;
      if (segment_hits_mesh(eye, point, b.mesh, b.box)) return true;
    }
    return false;
  }

 private:
  struct Blocker {
    int owner;  // hologram id, or -1 for static occluders
    TriangleMesh mesh;
    Aabb box;
  };
  std::vector<Blocker> blockers_;
};

inline VisibilityResult check_occlusion(const WorldState& w, const OcclusionScene& scene,
                                        const Viewpoint& vp, int hologram_id, const VptParams& params = {}) {
  const Hologram& h = w.get(hologram_id);
  const auto samples = occlusion_samples(h, params.n_rays);
  int blocked = 0;
  for (const auto& s : samples) {
    if (scene.blocked(vp.eye(), s, h.id)) ++blocked;
  }
  VisibilityResult r;
  r.rays_cast = static_cast<int>(samples.size());
  r.blocked_fraction = static_cast<double>(blocked) / r.rays_cast;
  r.occluded = r.blocked_fraction >= params.threshold() - 1e-12;
  return r;
}

inline VisibilityResult check_occlusion(const WorldState& w, const Viewpoint& vp, int hologram_id,
                                        const VptParams& params = {}) {
  return check_occlusion(w, OcclusionScene(w), vp, hologram_id, params);
}

inline VisibilityResult check_occlusion(const WorldState& w, int hologram_id, const VptParams& params = {}) {
  return check_occlusion(w, viewpoint_of(w.human), hologram_id, params);
}

/// Pitch grid used by the head-rotation search: multiples of `step` within
/// the limit, plus the limits themselves.
inline std::vector<double> pitch_grid(double limit, double step) {
  std::vector<double> out;
  const int k = static_cast<int>(std::floor(limit / step + 1e-9));
  out.push_back(-limit);
  for (int i = -k; i <= k; ++i) {
    const double p = i * step;
    if (std::abs(p) < limit - 1e-12) out.push_back(p);
  }
  out.push_back(limit);
  return out;
}

/// True when some head rotation (body fixed) brings `target` into the
/// frustum. Yaw sweeps the full circle around the body heading.
inline bool reachable_by_head_rotation(const Viewpoint& vp, const Vec3& target, double step = deg2rad(5.0)) {
  const auto pitches = pitch_grid(vp.pitch_limit, step);
  const int n_yaw = static_cast<int>(std::lround(2.0 * std::numbers::pi / step));
  for (int i = 0; i <= n_yaw; ++i) {
    const double yaw = -std::numbers::pi + i * step;
    for (double pitch : pitches) {
      const Transform head = Transform::from_yaw_pitch(vp.body_heading + yaw, pitch, vp.eye());
      if (in_frustum(head, vp.fov_h, vp.fov_v, target)) return true;
    }
  }
  return false;
}

inline RegionClass classify_with(const Viewpoint& vp, const Vec3& target, bool occluded) {
  if (occluded) return RegionClass::Blocked;
  if (in_frustum(vp.head, vp.fov_h, vp.fov_v, target)) return RegionClass::Focusing;
  if (reachable_by_head_rotation(vp, target)) return RegionClass::Transition;
  return RegionClass::Blocked;
}

inline RegionClass classify_region(const WorldState& w, const Viewpoint& vp, int hologram_id,
                                   const VptParams& params = {}) {
  const Hologram& h = w.get(hologram_id);
  if (!h.free()) throw Error(ErrorCode::CarriedHologram, "hologram " + std::to_string(hologram_id));
  const bool occluded = check_occlusion(w, vp, hologram_id, params).occluded;
  return classify_with(vp, look_target(h), occluded);
}

inline RegionClass classify_region(const WorldState& w, int hologram_id, const VptParams& params = {}) {
  return classify_region(w, viewpoint_of(w.human), hologram_id, params);
}

inline CostAssessment compute_cost(const WorldState& w, const OcclusionScene& scene, const Viewpoint& vp,
                                   int hologram_id, const VptParams& params = {}) {
  const Hologram& h = w.get(hologram_id);
  if (!h.free()) throw Error(ErrorCode::CarriedHologram, "hologram " + std::to_string(hologram_id));
  const Vec3 target = look_target(h);
  const VisibilityResult vis = check_occlusion(w, scene, vp, hologram_id, params);
  CostAssessment a;
  a.hologram_id = hologram_id;
  a.angle = view_angle(vp, target);
  a.occluded = vis.occluded;
  a.blocked_fraction = vis.blocked_fraction;
  a.cost = cost_from(a.angle, a.occluded);
  a.region = classify_with(vp, target, a.occluded);
  return a;
}

inline CostAssessment compute_cost(const WorldState& w, const Viewpoint& vp, int hologram_id,
                                   const VptParams& params = {}) {
  return compute_cost(w, OcclusionScene(w), vp, hologram_id, params);
}

inline CostAssessment compute_cost(const WorldState& w, int hologram_id, const VptParams& params = {}) {
  return compute_cost(w, viewpoint_of(w.human), hologram_id, params);
}

/// Assessments for every free hologram, ordered by id.
inline std::vector<CostAssessment> assess_all(const WorldState& w, const Viewpoint& vp, const VptParams& params = {}) {
  const OcclusionScene scene(w);
  std::vector<CostAssessment> out;
  for (const auto& h : w.holograms) {
    if (h.free()) out.push_back(compute_cost(w, scene, vp, h.id, params));
  }
  return out;
}

inline std::vector<CostAssessment> assess_all(const WorldState& w, const VptParams& params = {}) {
  return assess_all(w, viewpoint_of(w.human), params);
}

}  // namespace sarw
