#pragma once

// Mechanism document (JSON) reader and writer. Unknown fields are rejected.

#include <set>
#include <string>

#include <json.hpp>

#include "kinmap/error.hpp"
#include "kinmap/mechanism.hpp"

namespace kinmap {

namespace detail {

using json = nlohmann::json;

inline int line_of(const std::string& text, size_t byte) {
  int line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, "line " + std::to_string(line_of(text, e.byte > 0 ? e.byte - 1 : 0)) + ": " + e.what());
  }
}

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::parse, "field '" + path + "': " + what);
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) field_error(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) field_error(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
}

inline const json& member(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) field_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

inline int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) field_error(path, "expected an integer");
  return v.get<int>();
}

inline bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) field_error(path, "expected true or false");
  return v.get<bool>();
}

}  // namespace detail

/// Parses and validates a mechanism document.
inline Mechanism parse_mechanism(const std::string& text) {
  using detail::json;
  const json doc = detail::parse_json_text(text);
  detail::reject_unknown(doc, "", {"name", "planar", "links", "base_frame", "joints"});

  Mechanism m;
  const json& name = detail::member(doc, "", "name");
  if (!name.is_string()) detail::field_error("name", "expected a string");
  m.name = name.get<std::string>();
  m.planar = detail::boolean(detail::member(doc, "", "planar"), "planar");
  m.links = detail::integer(detail::member(doc, "", "links"), "links");

  if (auto it = doc.find("base_frame"); it != doc.end()) {
    if (!it->is_array() || it->size() != 16) detail::field_error("base_frame", "expected 16 numbers");
    Mat4 h;
    for (int i = 0; i < 16; ++i) h(i / 4, i % 4) = detail::number((*it)[i], "base_frame[" + std::to_string(i) + "]");
    if (h.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) detail::field_error("base_frame", "last row must be 0 0 0 1");
    const Mat3 r = h.topLeftCorner<3, 3>();
    if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || r.determinant() < 0.0)
      detail::field_error("base_frame", "rotation block is not special orthogonal");
    m.base_frame = h;
  }

  const json& joints = detail::member(doc, "", "joints");
  if (!joints.is_array()) detail::field_error("joints", "expected an array");
  for (size_t i = 0; i < joints.size(); ++i) {
    const std::string at = "joints[" + std::to_string(i) + "]";
    const json& jd = joints[i];
    detail::reject_unknown(jd, at, {"kind", "parent", "child", "dh", "limits", "actuated", "pitch"});
    JointSpec j;
    const json& kind = detail::member(jd, at, "kind");
    if (!kind.is_string()) detail::field_error(at + ".kind", "expected a string");
    const auto k = joint_kind_from_string(kind.get<std::string>());
    if (!k) detail::field_error(at + ".kind", "must be one of R P H C S E");
    j.kind = *k;
    j.parent = detail::integer(detail::member(jd, at, "parent"), at + ".parent");
    j.child = detail::integer(detail::member(jd, at, "child"), at + ".child");
    if (auto dh = jd.find("dh"); dh != jd.end()) {
      const std::string p = at + ".dh";
      detail::reject_unknown(*dh, p, {"theta", "d", "a", "alpha"});
      j.dh.theta = detail::number(detail::member(*dh, p, "theta"), p + ".theta");
      j.dh.d = detail::number(detail::member(*dh, p, "d"), p + ".d");
      j.dh.a = detail::number(detail::member(*dh, p, "a"), p + ".a");
      j.dh.alpha = detail::number(detail::member(*dh, p, "alpha"), p + ".alpha");
    }
    if (auto lim = jd.find("limits"); lim != jd.end()) {
      if (!lim->is_array()) detail::field_error(at + ".limits", "expected an array of [lo, hi]");
      for (size_t q = 0; q < lim->size(); ++q) {
        const std::string p = at + ".limits[" + std::to_string(q) + "]";
        const json& pair = (*lim)[q];
        if (!pair.is_array() || pair.size() != 2) detail::field_error(p, "expected [lo, hi]");
        j.limits.push_back({detail::number(pair[0], p), detail::number(pair[1], p)});
      }
    }
    if (auto act = jd.find("actuated"); act != jd.end()) j.actuated = detail::boolean(*act, at + ".actuated");
    if (auto pitch = jd.find("pitch"); pitch != jd.end()) j.pitch = detail::number(*pitch, at + ".pitch");
    m.joints.push_back(j);
  }
  validate_mechanism(m);
  return m;
}

inline nlohmann::json mechanism_to_json(const Mechanism& m) {
  using detail::json;
  json doc;
  doc["name"] = m.name;
  doc["planar"] = m.planar;
  doc["links"] = m.links;
  const Mat4& h = m.base_frame;
  json frame = json::array();
  for (int i = 0; i < 16; ++i) frame.push_back(h(i / 4, i % 4));
  doc["base_frame"] = frame;
  json joints = json::array();
  for (const auto& j : m.joints) {
    json jd;
    jd["kind"] = to_string(j.kind);
    jd["parent"] = j.parent;
    jd["child"] = j.child;
    jd["dh"] = {{"theta", j.dh.theta}, {"d", j.dh.d}, {"a", j.dh.a}, {"alpha", j.dh.alpha}};
    json lim = json::array();
    for (const auto& l : j.limits) lim.push_back({l.lo, l.hi});
    jd["limits"] = lim;
    jd["actuated"] = j.actuated;
    if (j.pitch) jd["pitch"] = *j.pitch;
    joints.push_back(jd);
  }
  doc["joints"] = joints;
  return doc;
}

inline std::string serialize_mechanism(const Mechanism& m) { return mechanism_to_json(m).dump(2) + "\n"; }

}  // namespace kinmap
