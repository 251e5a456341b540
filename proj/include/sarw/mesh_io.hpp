#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "sarw/error.hpp"
#include "sarw/mesh.hpp"

namespace sarw {

// Minimal OBJ subset (docs/mesh_format.md):
//   v x y z [r g b]   vertex, optional color as floats in [0,1]
//   f i j k ...       1-based (or negative relative) indices; "i/t/n" accepted,
//                     polygons are fan-triangulated
// Every other record is ignored.

inline TriangleMesh parse_obj(std::istream& in, const std::string& source = "<obj>") {
  TriangleMesh mesh;
  std::vector<Rgb> colors;
  bool any_color = false;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::SchemaError, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail("vertex needs three coordinates");
      if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) fail("non-finite vertex");
      mesh.vertices.emplace_back(x, y, z);
      double r, g, b;
      if (ls >> r >> g >> b) {
        auto to8 = [](double c) {
          return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
        };
        colors.push_back({to8(r), to8(g), to8(b)});
        any_color = true;
      } else {
        colors.push_back(Rgb{});
      }
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        int value = 0;
        auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
        if (ec != std::errc{} || ptr != head.data() + head.size() || value == 0) {
          fail("bad face index '" + tok + "'");
        }
        const int n = static_cast<int>(mesh.vertices.size());
        const int resolved = value > 0 ? value - 1 : n + value;
        if (resolved < 0 || resolved >= n) fail("face index out of range");
        idx.push_back(resolved);
      }
      if (idx.size() < 3) fail("face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
      }
    }
  }
  if (any_color) mesh.colors = std::move(colors);
  return mesh;
}

inline TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return parse_obj(in, path);
}

inline void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z();
    if (!mesh.colors.empty()) {
      const Rgb c = mesh.colors[i];
      out << ' ' << c.r / 255.0 << ' ' << c.g / 255.0 << ' ' << c.b / 255.0;
    }
    out << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

/// ASCII PLY with float positions and uchar colors.
inline void write_ply(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << cloud.size() << '\n'
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  out << std::setprecision(9);
  for (const auto& p : cloud.points) {
    out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
        << int(p.color.r) << ' ' << int(p.color.g) << ' ' << int(p.color.b) << '\n';
  }
}

}  // namespace sarw
