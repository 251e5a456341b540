#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "sarw/error.hpp"
#include "sarw/geometry.hpp"
#include "sarw/grid.hpp"
#include "sarw/mesh.hpp"
#include "sarw/mesh_io.hpp"
#include "sarw/workspace.hpp"

namespace sarw {

using json = nlohmann::json;

/// A validated scenario document. `doc` is normalized: defaults are filled
/// in and file-referenced meshes are inlined, so the document alone is
/// enough to rebuild the world (event logs embed it verbatim).
struct ScenarioConfig {
  json doc;

  std::string name() const { return doc.value("name", std::string("unnamed")); }
  std::uint64_t seed() const { return doc.at("seed").get<std::uint64_t>(); }
  const json& policies() const { return doc.at("policies"); }
};

namespace detail {

inline std::string join_path(const std::string& ctx, const std::string& key) {
  return ctx.empty() ? key : ctx + "." + key;
}

[[noreturn]] inline void schema_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::SchemaError, where + ": " + what);
}

inline const json& require(const json& obj, const std::string& key, const std::string& ctx) {
  if (!obj.is_object()) schema_fail(ctx, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(join_path(ctx, key), "missing required field");
  return *it;
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) schema_fail(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema_fail(where, "expected a finite number");
  return d;
}

inline double number_or(const json& obj, const std::string& key, double def, const std::string& ctx) {
  auto it = obj.find(key);
  return it == obj.end() ? def : number(*it, join_path(ctx, key));
}

inline double positive_or(const json& obj, const std::string& key, double def, const std::string& ctx) {
  const double v = number_or(obj, key, def, ctx);
  if (!(v > 0.0)) schema_fail(join_path(ctx, key), "must be > 0");
  return v;
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != N) {
    schema_fail(where, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = number(v[static_cast<std::size_t>(i)], where);
  return out;
}

inline Rgb color(const json& v, const std::string& where) {
  const Vec3 c = vec<3>(v, where);
  auto to8 = [&](double x) {
    if (x < 0 || x > 255) schema_fail(where, "color components must be in [0,255]");
    return static_cast<std::uint8_t>(std::lround(x));
  };
  return {to8(c.x()), to8(c.y()), to8(c.z())};
}

/// Normalizes a shape spec; "obj" references are read and inlined.
inline json normalize_shape(const json& shape, const std::string& ctx, const std::string& base_dir) {
  const std::string type = [&] {
    const json& t = require(shape, "type", ctx);
    if (!t.is_string()) schema_fail(join_path(ctx, "type"), "expected a string");
    return t.get<std::string>();
  }();
  if (type == "box") {
    const Vec3 s = vec<3>(require(shape, "size", ctx), join_path(ctx, "size"));
    if ((s.array() < 0).any()) schema_fail(join_path(ctx, "size"), "negative extent");
    return {{"type", "box"}, {"size", {s.x(), s.y(), s.z()}}};
  }
  if (type == "icosphere") {
    const double r = number(require(shape, "radius", ctx), join_path(ctx, "radius"));
    if (r < 0) schema_fail(join_path(ctx, "radius"), "negative radius");
    return {{"type", "icosphere"}, {"radius", r}};
  }
  if (type == "obj" || type == "mesh") {
    TriangleMesh m;
    if (type == "obj") {
      const json& p = require(shape, "path", ctx);
      if (!p.is_string()) schema_fail(join_path(ctx, "path"), "expected a string");
      std::filesystem::path path(p.get<std::string>());
      if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
      try {
        m = load_obj(path.string());
      } catch (const Error& e) {
        schema_fail(join_path(ctx, "path"), e.what());
      }
    } else {
      const json& vs = require(shape, "vertices", ctx);
      const json& fs = require(shape, "faces", ctx);
      if (!vs.is_array() || !fs.is_array()) schema_fail(ctx, "vertices/faces must be arrays");
      for (std::size_t i = 0; i < vs.size(); ++i) {
        m.vertices.push_back(vec<3>(vs[i], join_path(ctx, "vertices[" + std::to_string(i) + "]")));
      }
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const Vec3 f = vec<3>(fs[i], join_path(ctx, "faces[" + std::to_string(i) + "]"));
        m.triangles.push_back({static_cast<int>(f.x()), static_cast<int>(f.y()), static_cast<int>(f.z())});
      }
      if (auto c = shape.find("colors"); c != shape.end()) {
        if (!c->is_array()) schema_fail(join_path(ctx, "colors"), "expected an array");
        for (std::size_t i = 0; i < c->size(); ++i) {
          m.colors.push_back(color((*c)[i], join_path(ctx, "colors")));
        }
      }
    }
    if (!m.valid()) schema_fail(ctx, "mesh has out-of-range indices, NaN vertices or mismatched colors");
    json out = {{"type", "mesh"}, {"vertices", json::array()}, {"faces", json::array()}};
    for (const auto& v : m.vertices) out["vertices"].push_back({v.x(), v.y(), v.z()});
    for (const auto& t : m.triangles) out["faces"].push_back({t[0], t[1], t[2]});
    if (!m.colors.empty()) {
      out["colors"] = json::array();
      for (const auto& c : m.colors) out["colors"].push_back({c.r, c.g, c.b});
    }
    return out;
  }
  schema_fail(join_path(ctx, "type"), "unknown shape type '" + type + "'");
}

inline TriangleMesh build_shape(const json& shape, Rgb color) {
  const std::string type = shape.at("type").get<std::string>();
  if (type == "box") {
    const auto s = shape.at("size");
    return make_box(Vec3(s[0].get<double>(), s[1].get<double>(), s[2].get<double>()), color);
  }
  if (type == "icosphere") return make_icosahedron(shape.at("radius").get<double>(), color);
  TriangleMesh m;
  for (const auto& v : shape.at("vertices")) {
    m.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  }
  for (const auto& f : shape.at("faces")) m.triangles.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
  if (auto c = shape.find("colors"); c != shape.end()) {
    for (const auto& col : *c) m.colors.push_back({col[0].get<std::uint8_t>(), col[1].get<std::uint8_t>(), col[2].get<std::uint8_t>()});
  } else {
    m.set_color(color);
  }
  return m;
}

inline json placed_entity(const json& in, const std::string& ctx, const std::string& base_dir,
                          std::array<int, 3> default_color) {
  json out;
  out["shape"] = normalize_shape(require(in, "shape", ctx), join_path(ctx, "shape"), base_dir);
  const Vec3 p = vec<3>(require(in, "position", ctx), join_path(ctx, "position"));
  out["position"] = {p.x(), p.y(), p.z()};
  out["yaw_deg"] = number_or(in, "yaw_deg", 0.0, ctx);
  if (auto c = in.find("color"); c != in.end()) {
    const Rgb col = color(*c, join_path(ctx, "color"));
    out["color"] = {col.r, col.g, col.b};
  } else {
    out["color"] = default_color;
  }
  return out;
}

inline Transform placed_pose(const json& e) {
  const auto& p = e.at("position");
  return Transform::from_yaw_pitch(deg2rad(e.at("yaw_deg").get<double>()), 0.0,
                                   Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>()));
}

inline CameraIntrinsics intrinsics(const json& cam) {
  CameraIntrinsics k;
  k.fx = cam.at("fx").get<double>();
  k.fy = cam.at("fy").get<double>();
  k.cx = cam.at("cx").get<double>();
  k.cy = cam.at("cy").get<double>();
  k.width = cam.at("width").get<int>();
  k.height = cam.at("height").get<int>();
  return k;
}

inline Rgb placed_color(const json& e) {
  const auto& c = e.at("color");
  return {c[0].get<std::uint8_t>(), c[1].get<std::uint8_t>(), c[2].get<std::uint8_t>()};
}

}  // namespace detail

/// Validates a raw scenario document and returns its normalized form.
/// `base_dir` resolves relative mesh paths.
inline ScenarioConfig parse_scenario(const json& raw, const std::string& base_dir = "") {
  using namespace detail;
  if (!raw.is_object()) schema_fail("scenario", "expected a JSON object");
  json doc;
  doc["schema_version"] = 1;
  if (auto v = raw.find("schema_version"); v != raw.end() && (!v->is_number_integer() || v->get<int>() != 1)) {
    schema_fail("schema_version", "only version 1 is supported");
  }
  doc["name"] = raw.value("name", std::string("unnamed"));

  // scene
  const json& scene = require(raw, "scene", "");
  json s;
  const json& bounds = require(scene, "bounds", "scene");
  const Vec2 bmin = vec<2>(require(bounds, "min", "scene.bounds"), "scene.bounds.min");
  const Vec2 bmax = vec<2>(require(bounds, "max", "scene.bounds.max"), "scene.bounds.max");
  if (!((bmax.array() > bmin.array()).all())) schema_fail("scene.bounds", "max must exceed min");
  s["bounds"] = {{"min", {bmin.x(), bmin.y()}}, {"max", {bmax.x(), bmax.y()}}};
  s["cell_size"] = positive_or(scene, "cell_size", 0.1, "scene");
  s["clearance_height"] = positive_or(scene, "clearance_height", 0.5, "scene");
  s["occluders"] = json::array();
  if (auto occ = scene.find("occluders"); occ != scene.end()) {
    if (!occ->is_array()) schema_fail("scene.occluders", "expected an array");
    for (std::size_t i = 0; i < occ->size(); ++i) {
      const std::string ctx = "scene.occluders[" + std::to_string(i) + "]";
      json o = placed_entity((*occ)[i], ctx, base_dir, {150, 150, 150});
      o["name"] = (*occ)[i].value("name", "occluder_" + std::to_string(i));
      s["occluders"].push_back(std::move(o));
    }
  }
  const json& goal = require(scene, "goal_zone", "scene");
  const Vec2 gc = vec<2>(require(goal, "center", "scene.goal_zone"), "scene.goal_zone.center");
  const double gr = number(require(goal, "radius", "scene.goal_zone"), "scene.goal_zone.radius");
  if (!(gr > 0)) schema_fail("scene.goal_zone.radius", "must be > 0");
  s["goal_zone"] = {{"center", {gc.x(), gc.y()}}, {"radius", gr}};
  doc["scene"] = std::move(s);

  // holograms
  doc["holograms"] = json::array();
  if (auto hs = raw.find("holograms"); hs != raw.end()) {
    if (!hs->is_array()) schema_fail("holograms", "expected an array");
    std::set<int> ids;
    for (std::size_t i = 0; i < hs->size(); ++i) {
      const std::string ctx = "holograms[" + std::to_string(i) + "]";
      const json& in = (*hs)[i];
      const json& idv = require(in, "id", ctx);
      if (!idv.is_number_integer()) schema_fail(ctx + ".id", "expected an integer");
      const int id = idv.get<int>();
      if (id < 1) schema_fail(ctx + ".id", "ids start at 1");
      if (!ids.insert(id).second) schema_fail(ctx + ".id", "duplicate id " + std::to_string(id));
      json h = placed_entity(in, ctx, base_dir, {90, 200, 90});
      h["id"] = id;
      h["label"] = in.value("label", "hologram_" + std::to_string(id));
      doc["holograms"].push_back(std::move(h));
    }
    std::sort(doc["holograms"].begin(), doc["holograms"].end(),
              [](const json& a, const json& b) { return a["id"].get<int>() < b["id"].get<int>(); });
  }

  // agents
  {
    const json& h = require(raw, "human", "");
    const Vec2 p = vec<2>(require(h, "position", "human"), "human.position");
    json o;
    o["position"] = {p.x(), p.y()};
    o["heading_deg"] = number_or(h, "heading_deg", 0.0, "human");
    o["head_yaw_deg"] = number_or(h, "head_yaw_deg", 0.0, "human");
    o["head_pitch_deg"] = number_or(h, "head_pitch_deg", 0.0, "human");
    o["eye_height"] = positive_or(h, "eye_height", 1.6, "human");
    o["fov_h_deg"] = positive_or(h, "fov_h_deg", 30.0, "human");
    o["fov_v_deg"] = positive_or(h, "fov_v_deg", 17.5, "human");
    o["max_speed"] = positive_or(h, "max_speed", 1.2, "human");
    o["max_turn_rate"] = positive_or(h, "max_turn_rate", 2.0, "human");
    o["footprint_radius"] = positive_or(h, "footprint_radius", 0.25, "human");
    o["pitch_limit_deg"] = positive_or(h, "pitch_limit_deg", 80.0, "human");
    if (o["pitch_limit_deg"].get<double>() >= 90.0) schema_fail("human.pitch_limit_deg", "must be < 90");
    doc["human"] = std::move(o);
  }
  {
    const json& r = require(raw, "robot", "");
    const Vec2 p = vec<2>(require(r, "position", "robot"), "robot.position");
    json o;
    o["position"] = {p.x(), p.y()};
    o["heading_deg"] = number_or(r, "heading_deg", 0.0, "robot");
    o["footprint_radius"] = positive_or(r, "footprint_radius", 0.2, "robot");
    o["max_speed"] = positive_or(r, "max_speed", 0.5, "robot");
    o["max_turn_rate"] = positive_or(r, "max_turn_rate", 1.5, "robot");
    const json cam_in = r.value("camera", json::object());
    json cam;
    cam["fx"] = positive_or(cam_in, "fx", 525.0, "robot.camera");
    cam["fy"] = positive_or(cam_in, "fy", 525.0, "robot.camera");
    cam["width"] = static_cast<int>(positive_or(cam_in, "width", 640, "robot.camera"));
    cam["height"] = static_cast<int>(positive_or(cam_in, "height", 480, "robot.camera"));
    cam["cx"] = number_or(cam_in, "cx", 319.5, "robot.camera");
    cam["cy"] = number_or(cam_in, "cy", 239.5, "robot.camera");
    const Vec3 mount = cam_in.contains("mount_position")
                           ? vec<3>(cam_in["mount_position"], "robot.camera.mount_position")
                           : Vec3(0.1, 0.0, 0.45);
    cam["mount_position"] = {mount.x(), mount.y(), mount.z()};
    cam["mount_pitch_deg"] = number_or(cam_in, "mount_pitch_deg", 0.0, "robot.camera");
    const CameraIntrinsics k = detail::intrinsics(cam);
    if (!k.valid()) schema_fail("robot.camera", "principal point must lie inside the image");
    o["camera"] = std::move(cam);
    doc["robot"] = std::move(o);
  }

  // policies
  {
    const json pin = raw.value("policies", json::object());
    if (!pin.is_object()) schema_fail("policies", "expected an object");
    json p;
    p["human"] = pin.value("human", std::string("greedy_lowest_cost"));
    p["robot"] = pin.value("robot", std::string("vpt_priority"));
    p["delivery"] = pin.value("delivery", std::string("goal_zone"));
    static const std::set<std::string> humans = {"greedy_lowest_cost", "scripted_waypoints", "external"};
    static const std::set<std::string> robots = {"vpt_priority", "none"};
    static const std::set<std::string> deliveries = {"goal_zone", "deliver_to_human"};
    if (!humans.contains(p["human"].get<std::string>())) schema_fail("policies.human", "unknown policy");
    if (!robots.contains(p["robot"].get<std::string>())) schema_fail("policies.robot", "unknown policy");
    if (!deliveries.contains(p["delivery"].get<std::string>())) schema_fail("policies.delivery", "unknown mode");
    p["waypoints"] = json::array();
    if (auto w = pin.find("waypoints"); w != pin.end()) {
      if (!w->is_array()) schema_fail("policies.waypoints", "expected an array");
      for (std::size_t i = 0; i < w->size(); ++i) {
        const Vec2 q = vec<2>((*w)[i], "policies.waypoints[" + std::to_string(i) + "]");
        p["waypoints"].push_back({q.x(), q.y()});
      }
    }
    doc["policies"] = std::move(p);
  }

  if (auto sd = raw.find("seed"); sd != raw.end()) {
    if (!sd->is_number_integer() || sd->get<std::int64_t>() < 0) schema_fail("seed", "expected a non-negative integer");
    doc["seed"] = sd->get<std::uint64_t>();
  } else {
    doc["seed"] = 0;
  }
  return ScenarioConfig{std::move(doc)};
}

inline ScenarioConfig parse_scenario_text(const std::string& text, const std::string& base_dir = "") {
  json raw;
  try {
    raw = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(raw, base_dir);
}

inline ScenarioConfig read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), std::filesystem::path(path).parent_path().string());
}

/// Builds the world from a normalized scenario. Throws PlacementCollision if
/// a hologram starts inside an occluder or an agent starts in an occupied
/// cell, and UnreachableGoal if an agent cannot drive to the goal zone.
inline WorldState load_scenario(const ScenarioConfig& cfg) {
  using detail::placed_pose;
  const json& d = cfg.doc;
  WorldState w;

  const json& sc = d.at("scene");
  const Vec2 bmin(sc["bounds"]["min"][0].get<double>(), sc["bounds"]["min"][1].get<double>());
  const Vec2 bmax(sc["bounds"]["max"][0].get<double>(), sc["bounds"]["max"][1].get<double>());
  const double cell = sc["cell_size"].get<double>();
  const int gw = static_cast<int>(std::ceil((bmax.x() - bmin.x()) / cell - 1e-9));
  const int gh = static_cast<int>(std::ceil((bmax.y() - bmin.y()) / cell - 1e-9));
  w.scene.floor_grid = OccupancyGrid(bmin, cell, gw, gh);
  w.scene.clearance_height = sc["clearance_height"].get<double>();
  for (const auto& o : sc["occluders"]) {
    Occluder occ;
    occ.name = o["name"].get<std::string>();
    occ.mesh = detail::build_shape(o["shape"], detail::placed_color(o)).transformed(placed_pose(o));
    occ.box = bounding_box(occ.mesh);
    // Anything lower than the clearance height blocks driving and walking.
    if (!occ.box.empty() && occ.box.min.z() < w.scene.clearance_height) w.scene.floor_grid.mark_footprint(occ.mesh);
    w.scene.occluders.push_back(std::move(occ));
  }
  w.scene.goal_zone = {Vec2(sc["goal_zone"]["center"][0].get<double>(), sc["goal_zone"]["center"][1].get<double>()),
                       sc["goal_zone"]["radius"].get<double>()};

  for (const auto& hj : d.at("holograms")) {
    Hologram h;
    h.id = hj["id"].get<int>();
    h.label = hj["label"].get<std::string>();
    h.mesh = detail::build_shape(hj["shape"], detail::placed_color(hj));
    if (h.mesh.vertices.empty()) {
      throw Error(ErrorCode::SchemaError, "hologram " + std::to_string(h.id) + " has an empty mesh");
    }
    h.local_sphere = circumscribed_sphere(h.mesh);
    h.pose = placed_pose(hj);
    const Vec3 c = h.world_sphere().center;
    for (const auto& occ : w.scene.occluders) {
      if (occ.box.contains(c)) {
        throw Error(ErrorCode::PlacementCollision,
                    "hologram " + std::to_string(h.id) + " lies inside occluder '" + occ.name + "'");
      }
    }
    if (!w.scene.floor_grid.cell_of(c.head<2>())) {
      throw Error(ErrorCode::PlacementCollision, "hologram " + std::to_string(h.id) + " is outside the scene bounds");
    }
    w.holograms.push_back(std::move(h));
  }

  const json& hu = d.at("human");
  w.human.body_position = Vec2(hu["position"][0].get<double>(), hu["position"][1].get<double>());
  w.human.body_heading = deg2rad(hu["heading_deg"].get<double>());
  w.human.head_yaw = deg2rad(hu["head_yaw_deg"].get<double>());
  w.human.eye_height = hu["eye_height"].get<double>();
  w.human.fov_h = deg2rad(hu["fov_h_deg"].get<double>());
  w.human.fov_v = deg2rad(hu["fov_v_deg"].get<double>());
  w.human.max_speed = hu["max_speed"].get<double>();
  w.human.max_turn_rate = hu["max_turn_rate"].get<double>();
  w.human.footprint_radius = hu["footprint_radius"].get<double>();
  w.human.pitch_limit = deg2rad(hu["pitch_limit_deg"].get<double>());
  w.human.head_pitch = clamp_pitch(w.human, deg2rad(hu["head_pitch_deg"].get<double>()));

  const json& ro = d.at("robot");
  w.robot.position = Vec2(ro["position"][0].get<double>(), ro["position"][1].get<double>());
  w.robot.heading = deg2rad(ro["heading_deg"].get<double>());
  w.robot.footprint_radius = ro["footprint_radius"].get<double>();
  w.robot.max_speed = ro["max_speed"].get<double>();
  w.robot.max_turn_rate = ro["max_turn_rate"].get<double>();
  const json& cam = ro["camera"];
  w.robot.camera = detail::intrinsics(cam);
  const auto& mp = cam["mount_position"];
  const Quat tilt(Eigen::AngleAxisd(-deg2rad(cam["mount_pitch_deg"].get<double>()), Vec3::UnitY()));
  w.robot.camera_mount = Transform{(tilt * camera_to_body_rotation()).normalized(),
                                   Vec3(mp[0].get<double>(), mp[1].get<double>(), mp[2].get<double>())};

  const OccupancyGrid& grid = w.scene.floor_grid;
  const auto goal_cell = grid.cell_of(w.scene.goal_zone.center);
  if (!goal_cell || grid.occupied(*goal_cell)) {
    throw Error(ErrorCode::PlacementCollision, "goal zone center is not in free space");
  }
  struct AgentCheck {
    const char* name;
    Vec2 pos;
    double radius;
  };
  for (const AgentCheck& a : {AgentCheck{"human", w.human.body_position, w.human.footprint_radius},
                              AgentCheck{"robot", w.robot.position, w.robot.footprint_radius}}) {
    const OccupancyGrid inflated = grid.inflated(a.radius);
    const auto c = inflated.cell_of(a.pos);
    if (!c || inflated.occupied(*c)) {
      throw Error(ErrorCode::PlacementCollision, std::string(a.name) + " start pose collides with the scene");
    }
    if (!connected(inflated, *c, *goal_cell)) {
      throw Error(ErrorCode::UnreachableGoal, std::string(a.name) + " cannot reach the goal zone");
    }
  }

  sync_frames(w);
  return w;
}

}  // namespace sarw
