#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarw/geometry.hpp"
#include "sarw/mesh.hpp"
#include "sarw/mesh_io.hpp"
#include "sarw/rng.hpp"
#include "sarw/workspace.hpp"

namespace sarw {

// What the robot "sees": its camera point cloud enriched with sampled
// holograms, the 2D overlay of hologram outlines, and its estimate of the
// human's head frame.

struct CloudSegment {
  int hologram_id = -1;  // -1 for a static occluder
  std::string source;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct AugmentedCloud {
  PointCloud cloud;  // robot camera frame
  std::vector<CloudSegment> segments;
};

struct OverlayEntry {
  int hologram_id = 0;
  std::vector<Pixel> polygon;  // convex hull, counter-clockwise in pixel coordinates
};

struct SensorFrame {
  PointCloud cloud;
  std::vector<OverlayEntry> overlay;
  double stamp = 0.0;
};

/// Samples every occluder and hologram surface at `density` and expresses
/// the points in the robot camera frame. Each source gets its own stream so
/// removing one does not change the samples of the others.
inline AugmentedCloud augment_point_cloud_segments(const WorldState& w, double density, std::uint64_t seed) {
  AugmentedCloud out;
  const Transform camera_from_world =
      w.frames.resolve(FrameId::robot_camera(), FrameId::world());
  auto append = [&](const TriangleMesh& world_mesh, std::uint64_t stream, int id, const std::string& name) {
    const PointCloud pc = sample_mesh(world_mesh, density, mix_seed(seed, stream));
    CloudSegment seg{id, name, out.cloud.size(), 0};
    for (const auto& p : pc.points) out.cloud.points.push_back({camera_from_world.apply(p.position), p.color});
    seg.end = out.cloud.size();
    out.segments.push_back(std::move(seg));
  };
  for (std::size_t i = 0; i < w.scene.occluders.size(); ++i) {
    append(w.scene.occluders[i].mesh, 0x10000 + i, -1, w.scene.occluders[i].name);
  }
  for (const auto& h : w.holograms) {
    append(h.world_mesh(), static_cast<std::uint64_t>(h.id), h.id, h.label);
  }
  return out;
}

inline PointCloud augment_point_cloud(const WorldState& w, double density, std::uint64_t seed) {
  return augment_point_cloud_segments(w, density, seed).cloud;
}

namespace detail {

inline double cross2(const Pixel& o, const Pixel& a, const Pixel& b) {
  return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

/// Andrew's monotone chain.
inline std::vector<Pixel> convex_hull(std::vector<Pixel> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) {
    return a.u < b.u || (a.u == b.u && a.v < b.v);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Pixel& a, const Pixel& b) { return a.u == b.u && a.v == b.v; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Pixel> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

/// Hull of the projected vertices for every hologram with at least one
/// vertex inside the image, ordered by id.
inline std::vector<OverlayEntry> render_overlay(const WorldState& w) {
  std::vector<OverlayEntry> out;
  const Transform camera_from_world =
      w.frames.resolve(FrameId::robot_camera(), FrameId::world());
  for (const auto& h : w.holograms) {
    std::vector<Pixel> px;
    const Transform cam_from_local = compose(camera_from_world, h.pose);
    for (const auto& v : h.mesh.vertices) {
      if (auto p = project_point(w.robot.camera, cam_from_local.apply(v))) px.push_back(*p);
    }
    if (px.empty()) continue;
    out.push_back({h.id, detail::convex_hull(std::move(px))});
  }
  return out;
}

inline SensorFrame sense(const WorldState& w, double density, std::uint64_t seed) {
  return {augment_point_cloud(w, density, seed), render_overlay(w), w.time};
}

// ---------------------------------------------------------------------------
// Human frame estimate

enum class EstimateSource { CameraDetection, HeadsetOdometry };

constexpr std::string_view to_string(EstimateSource s) {
  return s == EstimateSource::CameraDetection ? "camera_detection" : "headset_odometry";
}

struct NoiseModel {
  double sigma_pos = 0.0;  // meters, RMS of the 3D position error
  double sigma_rot = 0.0;  // radians, RMS of the rotation angle error
};

struct HumanEstimate {
  Transform frame;  // robot -> human_head
  EstimateSource source = EstimateSource::HeadsetOdometry;
  NoiseModel noise;
  double body_heading = 0.0;  // reported alongside the head pose
};

/// True when the human's eye point projects inside the robot image.
inline bool human_in_robot_view(const WorldState& w) {
  const Transform camera_from_world = w.frames.resolve(FrameId::robot_camera(), FrameId::world());
  const Vec3 eye = head_frame(w.human).translation;
  return project_point(w.robot.camera, camera_from_world.apply(eye)).has_value();
}

/// Ground-truth robot->head transform, perturbed by isotropic Gaussian noise
/// when the camera detects the human. Outside the camera view the headset
/// odometry is taken as exact.
inline HumanEstimate estimate_human_frame(const WorldState& w, const NoiseModel& noise, std::uint64_t seed) {
  HumanEstimate est;
  est.frame = w.frames.resolve(FrameId::robot(), FrameId::human_head());
  est.body_heading = w.human.body_heading;
  est.noise = noise;
  if (!human_in_robot_view(w)) {
    est.source = EstimateSource::HeadsetOdometry;
    est.noise = {};
    return est;
  }
  est.source = EstimateSource::CameraDetection;
  Rng rng(seed);
  // Per-axis sigma chosen so the 3D error has the requested RMS.
  const double sp = noise.sigma_pos / std::sqrt(3.0);
  const double sr = noise.sigma_rot / std::sqrt(3.0);
  const Vec3 dp(rng.normal(0, sp), rng.normal(0, sp), rng.normal(0, sp));
  const Vec3 dr(rng.normal(0, sr), rng.normal(0, sr), rng.normal(0, sr));
  est.frame.translation += dp;
  if (dr.norm() > 0.0) {
    est.frame.rotation = (Quat(Eigen::AngleAxisd(dr.norm(), dr.normalized())) * est.frame.rotation).normalized();
  }
  return est;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json overlay_json(const std::vector<OverlayEntry>& overlay, double stamp) {
  nlohmann::json j = {{"stamp", stamp}, {"overlay", nlohmann::json::array()}};
  for (const auto& e : overlay) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& p : e.polygon) poly.push_back({p.u, p.v});
    j["overlay"].push_back({{"id", e.hologram_id}, {"polygon", poly}});
  }
  return j;
}

}  // namespace sarw
