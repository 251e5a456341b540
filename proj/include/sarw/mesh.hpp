#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "sarw/error.hpp"
#include "sarw/geometry.hpp"
#include "sarw/rng.hpp"

namespace sarw {

struct Rgb {
  std::uint8_t r = 200;
  std::uint8_t g = 200;
  std::uint8_t b = 200;

  bool operator==(const Rgb&) const = default;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Rgb> colors;  // one per vertex; may be empty

  bool valid() const {
    if (!colors.empty() && colors.size() != vertices.size()) return false;
    for (const auto& v : vertices) {
      if (!v.allFinite()) return false;
    }
    const int n = static_cast<int>(vertices.size());
    for (const auto& t : triangles) {
      for (int i : t) {
        if (i < 0 || i >= n) return false;
      }
    }
    return true;
  }

  Rgb color_of(int vertex) const {
    return colors.empty() ? Rgb{} : colors[static_cast<std::size_t>(vertex)];
  }

  double triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec3& a = vertices[tri[0]];
    const Vec3& b = vertices[tri[1]];
    const Vec3& c = vertices[tri[2]];
    return 0.5 * (b - a).cross(c - a).norm();
  }

  double surface_area() const {
    double total = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) total += triangle_area(t);
    return total;
  }

  TriangleMesh transformed(const Transform& pose) const {
    TriangleMesh out = *this;
    for (auto& v : out.vertices) v = pose.apply(v);
    return out;
  }

  void set_color(Rgb c) { colors.assign(vertices.size(), c); }
};

struct CloudPoint {
  Vec3 position;
  Rgb color;
};

struct PointCloud {
  std::vector<CloudPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

struct Circle2D {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  bool empty() const { return (min.array() > max.array()).any(); }
  Vec3 center() const { return 0.5 * (min + max); }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

inline Aabb bounding_box(const TriangleMesh& mesh) {
  Aabb box;
  for (const auto& v : mesh.vertices) box.extend(v);
  return box;
}

/// Area-weighted stratified sampling of exactly `count` surface points,
/// each placed uniformly inside its triangle with barycentric color.
/// Zero-area meshes yield an empty cloud.
inline PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  PointCloud cloud;
  if (count == 0 || mesh.triangles.empty()) return cloud;

  std::vector<double> cdf(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cdf[t] = total;
  }
  if (!(total > 0.0)) return cloud;

  cloud.points.reserve(count);
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const double u = (static_cast<double>(k) + rng.uniform()) / static_cast<double>(count) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t t = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
    while (t > 0 && mesh.triangle_area(t) == 0.0) --t;

    const auto& tri = mesh.triangles[t];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const double wa = 1.0 - r1;
    const double wb = r1 * (1.0 - r2);
    const double wc = r1 * r2;
    const Vec3 p = wa * mesh.vertices[tri[0]] + wb * mesh.vertices[tri[1]] +
                   wc * mesh.vertices[tri[2]];
    const Rgb ca = mesh.color_of(tri[0]);
    const Rgb cb = mesh.color_of(tri[1]);
    const Rgb cc = mesh.color_of(tri[2]);
    auto mix = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c) {
      return static_cast<std::uint8_t>(std::lround(std::clamp(wa * a + wb * b + wc * c, 0.0, 255.0)));
    };
    cloud.points.push_back({p, Rgb{mix(ca.r, cb.r, cc.r), mix(ca.g, cb.g, cc.g), mix(ca.b, cb.b, cc.b)}});
  }
  return cloud;
}

/// Density-driven sampling: count = round(surface area * density).
inline PointCloud sample_mesh(const TriangleMesh& mesh, double density, std::uint64_t seed) {
  if (!(density > 0.0)) return {};
  const double area = mesh.surface_area();
  if (!(area > 0.0)) return {};
  return sample_surface(mesh, static_cast<std::size_t>(std::llround(area * density)), seed);
}

/// Circumscribing sphere centered on the axis-aligned bounding box.
inline Sphere circumscribed_sphere(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no vertices");
  const Vec3 center = bounding_box(mesh).center();
  double r = 0.0;
  for (const auto& v : mesh.vertices) r = std::max(r, (v - center).norm());
  return {center, r};
}

/// Möller-Trumbore. Returns the ray parameter t of the hit (origin + t*dir).
inline std::optional<double> intersect_ray_triangle(const Vec3& origin, const Vec3& dir,
                                                    const Vec3& a, const Vec3& b, const Vec3& c) {
  constexpr double kEps = 1e-12;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < kEps) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return e2.dot(q) * inv;
}

/// True when the open segment (from, to) crosses any triangle strictly
/// between its endpoints (parameter in (eps, 1 - eps)).
inline bool segment_hits_mesh(const Vec3& from, const Vec3& to, const TriangleMesh& mesh,
                              const Aabb& box, double eps = 1e-9) {
  // Slab rejection against the mesh bounds first.
  const Vec3 d = to - from;
  double t0 = 0.0;
  double t1 = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (from[i] < box.min[i] || from[i] > box.max[i]) return false;
      continue;
    }
    double ta = (box.min[i] - from[i]) / d[i];
    double tb = (box.max[i] - from[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1 + 1e-12) return false;
  }
  for (const auto& tri : mesh.triangles) {
    auto t = intersect_ray_triangle(from, d, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                    mesh.vertices[tri[2]]);
    if (t && *t > eps && *t < 1.0 - eps) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Primitives used by scenarios and tests.

inline TriangleMesh make_box(const Vec3& size, Rgb color = {}) {
  const Vec3 h = 0.5 * size;
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                            (i & 4) ? h.z() : -h.z());
  }
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  m.set_color(color);
  return m;
}

/// Regular icosahedron with circumradius `radius`.
inline TriangleMesh make_icosahedron(double radius, Rgb color = {}) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double s = radius / std::sqrt(1.0 + phi * phi);
  TriangleMesh m;
  const std::array<Vec3, 12> v = {Vec3(-1, phi, 0), Vec3(1, phi, 0),   Vec3(-1, -phi, 0),
                                  Vec3(1, -phi, 0), Vec3(0, -1, phi),   Vec3(0, 1, phi),
                                  Vec3(0, -1, -phi), Vec3(0, 1, -phi),  Vec3(phi, 0, -1),
                                  Vec3(phi, 0, 1),  Vec3(-phi, 0, -1), Vec3(-phi, 0, 1)};
  for (const auto& p : v) m.vertices.push_back(p * s);
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  m.set_color(color);
  return m;
}

/// Two triangles spanning [0,side]^2 in the z=0 plane.
inline TriangleMesh make_square(double side = 1.0, Rgb color = {}) {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(side, 0, 0), Vec3(side, side, 0), Vec3(0, side, 0)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.set_color(color);
  return m;
}

}  // namespace sarw
