#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarw/error.hpp"
#include "sarw/sim.hpp"

namespace sarw::protocol {

// Wire format v1: one JSON object per WebSocket text frame,
//   {"v": 1, "type": "...", "seq": n, "time": t, "payload": {...}}
// See protocol/v1.md.

using json = nlohmann::json;

inline constexpr int kVersion = 1;
inline constexpr std::array<int, 1> kSupportedVersions = {1};

enum class MessageType { ClientHello, ServerWelcome, Snapshot, HumanCommand, Control, Event, Error };

inline constexpr std::array<MessageType, 7> kAllTypes = {
    MessageType::ClientHello, MessageType::ServerWelcome, MessageType::Snapshot, MessageType::HumanCommand,
    MessageType::Control,     MessageType::Event,         MessageType::Error};

constexpr std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::ClientHello: return "ClientHello";
    case MessageType::ServerWelcome: return "ServerWelcome";
    case MessageType::Snapshot: return "Snapshot";
    case MessageType::HumanCommand: return "HumanCommand";
    case MessageType::Control: return "Control";
    case MessageType::Event: return "Event";
    case MessageType::Error: return "Error";
  }
  return "?";
}

inline std::optional<MessageType> type_from(std::string_view s) {
  for (MessageType t : kAllTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

struct Envelope {
  int v = kVersion;
  MessageType type = MessageType::Error;
  std::uint64_t seq = 0;
  double time = 0.0;
  json payload = json::object();

  bool operator==(const Envelope&) const = default;
};

namespace detail {

enum class Kind { Number, Integer, Bool, String, Array, Object, Vec2, Any };

struct Field {
  std::string_view name;
  Kind kind;
};

inline bool matches(const json& v, Kind k) {
  switch (k) {
    case Kind::Number: return v.is_number();
    case Kind::Integer: return v.is_number_integer();
    case Kind::Bool: return v.is_boolean();
    case Kind::String: return v.is_string();
    case Kind::Array: return v.is_array();
    case Kind::Object: return v.is_object();
    case Kind::Vec2: return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number();
    case Kind::Any: return true;
  }
  return false;
}

inline std::vector<Field> required_fields(MessageType t) {
  switch (t) {
    case MessageType::ClientHello: return {{"role", Kind::String}};
    case MessageType::ServerWelcome:
      return {{"session", Kind::Integer}, {"role", Kind::String}, {"scenario", Kind::Object},
              {"dt", Kind::Number},       {"snapshot_rate", Kind::Number}, {"supported", Kind::Array}};
    case MessageType::Snapshot:
      return {{"tick", Kind::Integer},      {"human", Kind::Object}, {"robot", Kind::Object},
              {"holograms", Kind::Array},   {"assessments", Kind::Array}, {"plan", Kind::Object},
              {"complete", Kind::Bool},     {"paused", Kind::Bool}};
    case MessageType::HumanCommand:
      return {{"move", Kind::Vec2},
              {"head_yaw_delta", Kind::Number},
              {"head_pitch_delta", Kind::Number},
              {"interact", Kind::Bool}};
    case MessageType::Control: return {{"action", Kind::String}};
    case MessageType::Event: return {{"kind", Kind::String}, {"t", Kind::Number}, {"payload", Kind::Any}};
    case MessageType::Error: return {{"code", Kind::String}, {"message", Kind::String}};
  }
  return {};
}

inline void validate_payload(MessageType t, const json& p) {
  if (!p.is_object()) throw Error(ErrorCode::MalformedFrame, "payload must be an object");
  for (const Field& f : required_fields(t)) {
    auto it = p.find(std::string(f.name));
    if (it == p.end()) {
      throw Error(ErrorCode::MalformedFrame, std::string(to_string(t)) + " payload lacks '" + std::string(f.name) + "'");
    }
    if (!matches(*it, f.kind)) {
      throw Error(ErrorCode::MalformedFrame, std::string(to_string(t)) + "." + std::string(f.name) + " has the wrong type");
    }
  }
  if (t == MessageType::ClientHello) {
    const auto role = p["role"].get<std::string>();
    if (role != "human_controller" && role != "observer") throw Error(ErrorCode::MalformedFrame, "unknown role");
  }
  if (t == MessageType::Control) {
    const auto a = p["action"].get<std::string>();
    if (a == "set_rate") {
      if (!p.contains("rate") || !p["rate"].is_number() || !(p["rate"].get<double>() > 0.0)) {
        throw Error(ErrorCode::MalformedFrame, "set_rate needs a positive 'rate'");
      }
    } else if (a != "pause" && a != "resume" && a != "reset") {
      throw Error(ErrorCode::MalformedFrame, "unknown control action '" + a + "'");
    }
  }
  if (t == MessageType::HumanCommand) {
    for (const auto& c : p["move"]) {
      const double x = c.get<double>();
      if (!(x >= -1.0 && x <= 1.0)) throw Error(ErrorCode::MalformedFrame, "move components must lie in [-1, 1]");
    }
  }
}

}  // namespace detail

inline std::string encode(const Envelope& e) {
  detail::validate_payload(e.type, e.payload);
  return json{{"v", e.v}, {"type", std::string(to_string(e.type))}, {"seq", e.seq}, {"time", e.time}, {"payload", e.payload}}
      .dump();
}

/// Parses and validates one frame. Throws MalformedFrame, VersionMismatch or
/// UnknownMessageType.
inline Envelope decode(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw Error(ErrorCode::MalformedFrame, "frame is not valid JSON");
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedFrame, "frame must be a JSON object");
  auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer()) throw Error(ErrorCode::MalformedFrame, "missing protocol version 'v'");
  if (v->get<int>() != kVersion) {
    throw Error(ErrorCode::VersionMismatch, "version " + v->dump() + " not supported; supported=[1]");
  }
  auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw Error(ErrorCode::MalformedFrame, "missing 'type'");
  const auto t = type_from(type->get<std::string>());
  if (!t) throw Error(ErrorCode::UnknownMessageType, "unknown message type '" + type->get<std::string>() + "'");
  auto seq = j.find("seq");
  if (seq == j.end() || !seq->is_number_unsigned()) throw Error(ErrorCode::MalformedFrame, "missing or negative 'seq'");
  auto time = j.find("time");
  if (time == j.end() || !time->is_number()) throw Error(ErrorCode::MalformedFrame, "missing 'time'");
  auto payload = j.find("payload");
  if (payload == j.end()) throw Error(ErrorCode::MalformedFrame, "missing 'payload'");
  detail::validate_payload(*t, *payload);
  return Envelope{kVersion, *t, seq->get<std::uint64_t>(), time->get<double>(), *payload};
}

// ---------------------------------------------------------------------------
// Payload builders

inline json error_payload(const std::string& code, const std::string& message) {
  json p = {{"code", code}, {"message", message}};
  if (code == "VersionMismatch") p["supported"] = kSupportedVersions;
  return p;
}

inline json error_payload(const sarw::Error& e) { return error_payload(std::string(to_string(e.code())), e.what()); }

inline json hello_payload(const std::string& role, const std::string& client = "") {
  json p = {{"role", role}};
  if (!client.empty()) p["client"] = client;
  return p;
}

inline json command_payload(const HumanCommand& c) { return to_json(c); }

inline json scenario_summary(const Simulation& sim) {
  const WorldState& w = sim.world();
  const auto& b = sim.scenario().doc.at("scene").at("bounds");
  json holos = json::array();
  for (const auto& h : w.holograms) holos.push_back({{"id", h.id}, {"label", h.label}});
  json occ = json::array();
  for (const auto& o : w.scene.occluders) {
    occ.push_back({{"name", o.name}, {"min", vec_json(o.box.min)}, {"max", vec_json(o.box.max)}});
  }
  return {{"name", sim.scenario().name()},
          {"bounds", b},
          {"goal_zone", {{"center", vec_json(w.scene.goal_zone.center)}, {"radius", w.scene.goal_zone.radius}}},
          {"holograms", holos},
          {"occluders", occ},
          {"human_policy", std::string(to_string(sim.config().human_policy))},
          {"robot_enabled", sim.config().robot_enabled}};
}

inline json welcome_payload(const Simulation& sim, std::uint64_t session, const std::string& role,
                            double snapshot_rate) {
  return {{"session", session},
          {"role", role},
          {"scenario", scenario_summary(sim)},
          {"dt", sim.config().dt},
          {"snapshot_rate", snapshot_rate},
          {"supported", kSupportedVersions}};
}

/// Full world state plus the robot's latest assessments and plan.
inline json snapshot_payload(const Simulation& sim, bool paused) {
  const WorldState& w = sim.world();
  auto opt_id = [](const std::optional<int>& v) { return v ? json(*v) : json(); };
  json holos = json::array();
  for (const auto& h : w.holograms) {
    const Quat& q = h.pose.rotation;
    json e = {{"id", h.id},
              {"label", h.label},
              {"status", std::string(to_string(h.status))},
              {"position", vec_json(h.pose.translation)},
              {"rotation", {q.w(), q.x(), q.y(), q.z()}},
              {"radius", h.local_sphere.radius}};
    e["carrier"] = h.carried() ? json(std::string(to_string(h.carrier))) : json();
    holos.push_back(std::move(e));
  }
  json as = json::array();
  for (const auto& a : sim.robot_assessments()) {
    as.push_back({{"id", a.hologram_id},
                  {"angle", a.angle},
                  {"angle_deg", rad2deg(a.angle)},
                  {"occluded", a.occluded},
                  {"cost", a.cost},
                  {"region", std::string(to_string(a.region))}});
  }
  const RobotController& rc = sim.robot_controller();
  json path = json::array();
  if (rc.active_path()) {
    for (const auto& p : rc.active_path()->waypoints) path.push_back(vec_json(p));
  }
  json estimate;
  if (auto e = sim.human_estimate()) estimate = {{"source", std::string(to_string(e->source))}};
  return {{"tick", w.tick},
          {"human",
           {{"position", vec_json(w.human.body_position)},
            {"heading", w.human.body_heading},
            {"head_yaw", w.human.head_yaw},
            {"head_pitch", w.human.head_pitch},
            {"fov_h", w.human.fov_h},
            {"fov_v", w.human.fov_v},
            {"carried", opt_id(w.human.carried)}}},
          {"robot",
           {{"position", vec_json(w.robot.position)},
            {"heading", w.robot.heading},
            {"carried", opt_id(w.robot.carried)},
            {"estimate", estimate}}},
          {"holograms", holos},
          {"assessments", as},
          {"plan", {{"queue", rc.queue().ids()}, {"target", opt_id(rc.target())}, {"path", path}}},
          {"complete", w.all_delivered()},
          {"paused", paused}};
}

inline json event_payload(const LogEntry& e) { return {{"kind", e.kind}, {"t", e.t}, {"payload", e.payload}}; }

}  // namespace sarw::protocol
