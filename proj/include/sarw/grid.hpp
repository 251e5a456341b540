#pragma once

#include <algorithm>
#include <cmath>
#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "sarw/geometry.hpp"
#include "sarw/mesh.hpp"

namespace sarw {

struct Cell {
  int x = 0;
  int y = 0;

  bool operator==(const Cell&) const = default;
};

/// Floor occupancy on a regular grid; cell (0,0) has its lower-left corner
/// at `origin`. Anything outside the grid counts as occupied.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;

  OccupancyGrid(Vec2 origin, double cell_size, int width, int height)
      : origin_(std::move(origin)),
        cell_size_(cell_size),
        width_(width),
        height_(height),
        cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  const Vec2& origin() const { return origin_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  bool occupied(Cell c) const { return !in_bounds(c) || cells_[index(c)] != 0; }
  bool free(Cell c) const { return !occupied(c); }

  void set(Cell c, bool occ) {
    if (in_bounds(c)) cells_[index(c)] = occ ? 1 : 0;
  }

  std::optional<Cell> cell_of(const Vec2& p) const {
    const Cell c{static_cast<int>(std::floor((p.x() - origin_.x()) / cell_size_)),
                 static_cast<int>(std::floor((p.y() - origin_.y()) / cell_size_))};
    if (!in_bounds(c)) return std::nullopt;
    return c;
  }

  bool occupied_at(const Vec2& p) const {
    auto c = cell_of(p);
    return !c || occupied(*c);
  }

  Vec2 center_of(Cell c) const {
    return origin_ + cell_size_ * Vec2(c.x + 0.5, c.y + 0.5);
  }

  std::size_t occupied_count() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
  }

  /// Marks every cell whose square overlaps the triangle (a,b,c) on the floor.
  void mark_triangle(const Vec2& a, const Vec2& b, const Vec2& c) {
    const Vec2 lo = a.cwiseMin(b).cwiseMin(c);
    const Vec2 hi = a.cwiseMax(b).cwiseMax(c);
    const int x0 = std::max(0, static_cast<int>(std::floor((lo.x() - origin_.x()) / cell_size_)));
    const int y0 = std::max(0, static_cast<int>(std::floor((lo.y() - origin_.y()) / cell_size_)));
    const int x1 = std::min(width_ - 1, static_cast<int>(std::floor((hi.x() - origin_.x()) / cell_size_)));
    const int y1 = std::min(height_ - 1, static_cast<int>(std::floor((hi.y() - origin_.y()) / cell_size_)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (triangle_overlaps_cell(a, b, c, Cell{x, y})) set(Cell{x, y}, true);
      }
    }
  }

  /// Rasterizes a world-space mesh's floor footprint.
  void mark_footprint(const TriangleMesh& world_mesh) {
    for (const auto& t : world_mesh.triangles) {
      const Vec3& a = world_mesh.vertices[t[0]];
      const Vec3& b = world_mesh.vertices[t[1]];
      const Vec3& c = world_mesh.vertices[t[2]];
      mark_triangle(a.head<2>(), b.head<2>(), c.head<2>());
    }
  }

  /// Cells whose center is closer than `radius` to any occupied cell square
  /// or to the grid boundary become occupied.
  OccupancyGrid inflated(double radius) const {
    OccupancyGrid out = *this;
    if (radius <= 0.0) return out;
    const int reach = static_cast<int>(std::ceil(radius / cell_size_)) + 1;
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        if (occupied(Cell{x, y})) continue;
        const Vec2 p = center_of(Cell{x, y});
        bool blocked = false;
        // Boundary of the grid acts as a wall.
        const Vec2 hi = origin_ + cell_size_ * Vec2(width_, height_);
        if (p.x() - origin_.x() < radius || hi.x() - p.x() < radius ||
            p.y() - origin_.y() < radius || hi.y() - p.y() < radius) {
          blocked = true;
        }
        for (int dy = -reach; dy <= reach && !blocked; ++dy) {
          for (int dx = -reach; dx <= reach && !blocked; ++dx) {
            const Cell n{x + dx, y + dy};
            if (!in_bounds(n) || !occupied(n)) continue;
            const Vec2 lo = origin_ + cell_size_ * Vec2(n.x, n.y);
            const Vec2 nearest = p.cwiseMax(lo).cwiseMin(lo + Vec2::Constant(cell_size_));
            if ((p - nearest).norm() < radius) blocked = true;
          }
        }
        if (blocked) out.set(Cell{x, y}, true);
      }
    }
    return out;
  }

  bool operator==(const OccupancyGrid&) const = default;

 private:
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }

  // Separating-axis test between a triangle and an axis-aligned square.
  bool triangle_overlaps_cell(const Vec2& a, const Vec2& b, const Vec2& c, Cell cell) const {
    const Vec2 lo = origin_ + cell_size_ * Vec2(cell.x, cell.y);
    const Vec2 hi = lo + Vec2::Constant(cell_size_);
    const std::array<Vec2, 3> tri = {a, b, c};
    const std::array<Vec2, 4> box = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
    auto separated = [&](const Vec2& axis) {
      double tmin = 1e300, tmax = -1e300, bmin = 1e300, bmax = -1e300;
      for (const auto& p : tri) {
        tmin = std::min(tmin, axis.dot(p));
        tmax = std::max(tmax, axis.dot(p));
      }
      for (const auto& p : box) {
        bmin = std::min(bmin, axis.dot(p));
        bmax = std::max(bmax, axis.dot(p));
      }
      // Touching at a shared edge does not count as overlap.
      return tmax <= bmin + 1e-12 || bmax <= tmin + 1e-12;
    };
    if (separated(Vec2::UnitX()) || separated(Vec2::UnitY())) return false;
    for (int i = 0; i < 3; ++i) {
      const Vec2 e = tri[(i + 1) % 3] - tri[i];
      if (e.squaredNorm() < 1e-24) continue;
      if (separated(Vec2(-e.y(), e.x()))) return false;
    }
    return true;
  }

  Vec2 origin_ = Vec2::Zero();
  double cell_size_ = 0.1;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// 8-connected moves between free cells. A diagonal step is allowed only
/// when both orthogonal cells it passes are free (no corner cutting). The
/// callback receives the neighbor and the step length in cell units.
template <typename Fn>
void for_each_neighbor(const OccupancyGrid& grid, Cell c, Fn&& fn) {
  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  for (int k = 0; k < 8; ++k) {
    const Cell n{c.x + kDx[k], c.y + kDy[k]};
    if (grid.occupied(n)) continue;
    if (k >= 4) {
      if (grid.occupied(Cell{c.x + kDx[k], c.y}) || grid.occupied(Cell{c.x, c.y + kDy[k]})) continue;
      fn(n, std::numbers::sqrt2);
    } else {
      fn(n, 1.0);
    }
  }
}

/// Cells reachable from `start` (breadth-first); empty if start is occupied.
inline std::vector<std::uint8_t> reachable_cells(const OccupancyGrid& grid, Cell start) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(grid.width()) * grid.height(), 0);
  if (grid.occupied(start)) return seen;
  auto idx = [&](Cell c) { return static_cast<std::size_t>(c.y) * grid.width() + c.x; };
  std::vector<Cell> frontier{start};
  seen[idx(start)] = 1;
  while (!frontier.empty()) {
    const Cell c = frontier.back();
    frontier.pop_back();
    for_each_neighbor(grid, c, [&](Cell n, double) {
      if (!seen[idx(n)]) {
        seen[idx(n)] = 1;
        frontier.push_back(n);
      }
    });
  }
  return seen;
}

inline bool connected(const OccupancyGrid& grid, Cell a, Cell b) {
  if (grid.occupied(a) || grid.occupied(b)) return false;
  return reachable_cells(grid, a)[static_cast<std::size_t>(b.y) * grid.width() + b.x] != 0;
}

}  // namespace sarw
