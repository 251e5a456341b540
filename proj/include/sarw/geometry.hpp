#pragma once

#include <Eigen/Geometry>

#include <cmath>
#include <compare>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sarw/error.hpp"

namespace sarw {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rigid transform: p' = R p + t, with R stored as a unit quaternion.
struct Transform {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static Transform identity() { return {}; }

  static Transform from_translation(const Vec3& t) { return {Quat::Identity(), t}; }

  static Transform from_rotation(const Quat& q) { return {q.normalized(), Vec3::Zero()}; }

  /// Yaw about +z, then pitch about the rotated +y (positive pitch tilts +x
  /// upward), placed at `origin`.
  static Transform from_yaw_pitch(double yaw, double pitch, const Vec3& origin) {
    const Quat q = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) *
                   Quat(Eigen::AngleAxisd(-pitch, Vec3::UnitY()));
    return {q.normalized(), origin};
  }

  static Transform from_matrix(const Mat4& m) {
    Transform t;
    t.rotation = Quat(Mat3(m.topLeftCorner<3, 3>())).normalized();
    t.translation = m.topRightCorner<3, 1>();
    return t;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_vector(const Vec3& v) const { return rotation * v; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation.toRotationMatrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  /// Heading of the local +x axis projected on the floor plane.
  double yaw() const {
    const Vec3 x = rotation * Vec3::UnitX();
    return std::atan2(x.y(), x.x());
  }
};

/// a ∘ b: apply b first, then a. Matches the frame chain r_T_i = r_T_h · h_T_i.
inline Transform compose(const Transform& a, const Transform& b) {
  Transform out;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

inline Transform invert(const Transform& t) {
  Transform out;
  out.rotation = t.rotation.conjugate().normalized();
  out.translation = -(out.rotation * t.translation);
  return out;
}

inline Transform operator*(const Transform& a, const Transform& b) { return compose(a, b); }

inline bool approx_equal(const Transform& a, const Transform& b, double tol) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff() <= tol;
}

/// Named coordinate frames in the shared workspace.
struct FrameId {
  enum class Kind { World, Robot, RobotCamera, HumanHead, Hologram };

  Kind kind = Kind::World;
  int index = 0;  // hologram id; zero for the singleton frames

  static FrameId world() { return {Kind::World, 0}; }
  static FrameId robot() { return {Kind::Robot, 0}; }
  static FrameId robot_camera() { return {Kind::RobotCamera, 0}; }
  static FrameId human_head() { return {Kind::HumanHead, 0}; }
  static FrameId hologram(int id) { return {Kind::Hologram, id}; }

  auto operator<=>(const FrameId&) const = default;

  std::string name() const {
    switch (kind) {
      case Kind::World: return "world";
      case Kind::Robot: return "robot";
      case Kind::RobotCamera: return "robot_camera";
      case Kind::HumanHead: return "human_head";
      case Kind::Hologram: return "hologram(" + std::to_string(index) + ")";
    }
    return "?";
  }
};

/// Tree of rigid transforms rooted at `world`. Each edge stores the child's
/// pose expressed in its parent frame.
class TransformGraph {
 public:
  TransformGraph() { nodes_.emplace(FrameId::world(), Node{}); }

  bool contains(const FrameId& f) const { return nodes_.contains(f); }

  std::size_t size() const { return nodes_.size(); }

  /// Registers or updates the edge parent -> child. An edge that would close
  /// a cycle is accepted only when it agrees with the existing chain (within
  /// `tolerance`) and is then redundant: resolution keeps using the tree.
  void set(const FrameId& parent, const FrameId& child, const Transform& parent_T_child,
           double tolerance = 1e-9) {
    if (!contains(parent)) throw Error(ErrorCode::UnknownFrame, parent.name());
    if (child == FrameId::world()) {
      throw Error(ErrorCode::InconsistentEdge, "world is the root and cannot have a parent");
    }
    auto it = nodes_.find(child);
    if (it != nodes_.end() && it->second.parent != parent) {
      const Transform existing = resolve(parent, child);
      if (!approx_equal(existing, parent_T_child, tolerance)) {
        throw Error(ErrorCode::InconsistentEdge, parent.name() + " -> " + child.name());
      }
      return;
    }
    if (it == nodes_.end() && is_ancestor(child, parent)) {
      throw Error(ErrorCode::InconsistentEdge, "cycle through " + child.name());
    }
    nodes_[child] = Node{parent, parent_T_child, true};
  }

  void remove(const FrameId& f) {
    if (f == FrameId::world()) return;
    nodes_.erase(f);
    for (auto it = nodes_.begin(); it != nodes_.end();) {
      if (it->second.has_parent && !nodes_.contains(it->second.parent)) {
        it = nodes_.erase(it);
      } else {
        ++it;
      }
    }
  }

  /// Pose of `frame` expressed in world coordinates.
  Transform world_from(const FrameId& frame) const {
    auto it = nodes_.find(frame);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownFrame, frame.name());
    Transform acc = Transform::identity();
    const Node* node = &it->second;
    while (node->has_parent) {
      acc = compose(node->parent_T_child, acc);
      node = &nodes_.at(node->parent);
    }
    return acc;
  }

  /// Transform that maps coordinates in `to` into coordinates in `from`.
  Transform resolve(const FrameId& from, const FrameId& to) const {
    if (!contains(from)) throw Error(ErrorCode::UnknownFrame, from.name());
    if (!contains(to)) throw Error(ErrorCode::UnknownFrame, to.name());
    if (from == to) return Transform::identity();
    // Walk from `to` upward; if `from` is an ancestor the chain is exact.
    Transform acc = Transform::identity();
    FrameId cur = to;
    while (true) {
      if (cur == from) return acc;
      const Node& n = nodes_.at(cur);
      if (!n.has_parent) break;
      acc = compose(n.parent_T_child, acc);
      cur = n.parent;
    }
    return compose(invert(world_from(from)), world_from(to));
  }

  std::vector<FrameId> frames() const {
    std::vector<FrameId> out;
    out.reserve(nodes_.size());
    for (const auto& [id, _] : nodes_) out.push_back(id);
    return out;
  }

  std::optional<FrameId> parent_of(const FrameId& f) const {
    auto it = nodes_.find(f);
    if (it == nodes_.end() || !it->second.has_parent) return std::nullopt;
    return it->second.parent;
  }

  bool operator==(const TransformGraph& other) const {
    if (nodes_.size() != other.nodes_.size()) return false;
    for (const auto& [id, n] : nodes_) {
      auto it = other.nodes_.find(id);
      if (it == other.nodes_.end()) return false;
      const Node& m = it->second;
      if (n.has_parent != m.has_parent || n.parent != m.parent) return false;
      if (n.parent_T_child.translation != m.parent_T_child.translation) return false;
      if (n.parent_T_child.rotation.coeffs() != m.parent_T_child.rotation.coeffs()) return false;
    }
    return true;
  }

 private:
  struct Node {
    FrameId parent = FrameId::world();
    Transform parent_T_child;
    bool has_parent = false;
  };

  bool is_ancestor(const FrameId& candidate, const FrameId& of) const {
    auto it = nodes_.find(of);
    while (it != nodes_.end()) {
      if (it->first == candidate) return true;
      if (!it->second.has_parent) return false;
      it = nodes_.find(it->second.parent);
    }
    return false;
  }

  std::map<FrameId, Node> nodes_;
};

/// Pinhole intrinsics; camera frame is z forward, x right, y down.
struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
           cy < height;
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }
};

struct Pixel {
  double u = 0;
  double v = 0;
};

/// Perspective projection; empty for points behind the camera or outside
/// the image rectangle [0,width) x [0,height).
inline std::optional<Pixel> project_point(const CameraIntrinsics& intr, const Vec3& p_camera) {
  if (!(p_camera.z() > 0.0)) return std::nullopt;
  const double u = intr.fx * p_camera.x() / p_camera.z() + intr.cx;
  const double v = intr.fy * p_camera.y() / p_camera.z() + intr.cy;
  if (!(u >= 0.0 && u < intr.width && v >= 0.0 && v < intr.height)) return std::nullopt;
  return Pixel{u, v};
}

/// Rotation taking camera axes (x right, y down, z forward) into a body
/// frame whose +x is forward and +z is up.
inline Quat camera_to_body_rotation() {
  Mat3 r;
  r.col(0) = Vec3(0, -1, 0);
  r.col(1) = Vec3(0, 0, -1);
  r.col(2) = Vec3(1, 0, 0);
  return Quat(r);
}

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

}  // namespace sarw
