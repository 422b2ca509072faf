#pragma once

// Declarative mechanism model: lower-pair joints, link graph, DH parameters
// and Grubler mobility.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "kinmap/charts.hpp"
#include "kinmap/error.hpp"
#include "kinmap/pose.hpp"

namespace kinmap {

enum class JointKind { R, P, H, C, S, E };

inline const char* to_string(JointKind k) {
  switch (k) {
    case JointKind::R: return "R";
    case JointKind::P: return "P";
    case JointKind::H: return "H";
    case JointKind::C: return "C";
    case JointKind::S: return "S";
    case JointKind::E: return "E";
  }
  return "?";
}

inline std::optional<JointKind> joint_kind_from_string(const std::string& s) {
  if (s == "R") return JointKind::R;
  if (s == "P") return JointKind::P;
  if (s == "H") return JointKind::H;
  if (s == "C") return JointKind::C;
  if (s == "S") return JointKind::S;
  if (s == "E") return JointKind::E;
  return std::nullopt;
}

inline int joint_dof(JointKind k) {
  switch (k) {
    case JointKind::R: case JointKind::P: case JointKind::H: return 1;
    case JointKind::C: return 2;
    case JointKind::S: case JointKind::E: return 3;
  }
  return 0;
}

struct DHParams {
  double theta = 0.0;
  double d = 0.0;
  double a = 0.0;
  double alpha = 0.0;

  bool finite() const {
    return std::isfinite(theta) && std::isfinite(d) && std::isfinite(a) && std::isfinite(alpha);
  }
  friend bool operator==(const DHParams&, const DHParams&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct JointSpec {
  JointKind kind = JointKind::R;
  int parent = 0;
  int child = 1;
  DHParams dh;
  std::vector<Interval> limits;
  bool actuated = true;
  std::optional<double> pitch;  // helical joints only; carried, not used kinematically

  int dof() const { return joint_dof(kind); }
  friend bool operator==(const JointSpec&, const JointSpec&) = default;
};

struct Mechanism {
  std::string name;
  bool planar = false;
  int links = 0;  // moving bodies; vertex 0 of the graph is the fixed base
  std::vector<JointSpec> joints;
  Mat4 base_frame = Mat4::Identity();  // homogeneous, kept verbatim for round-trips

  int joint_count() const { return static_cast<int>(joints.size()); }
  RigidPose base_pose() const { return pose_from_homogeneous(base_frame); }
};

enum class MechanismClass { serial, tree, parallel };

inline const char* to_string(MechanismClass c) {
  switch (c) {
    case MechanismClass::serial: return "serial";
    case MechanismClass::tree: return "tree";
    case MechanismClass::parallel: return "parallel";
  }
  return "?";
}

struct MobilityReport {
  int naive_mobility = 0;
  int redundancy_override = 0;
  int effective_mobility = 0;
  bool planar = false;
};

namespace detail {

inline std::vector<std::vector<int>> adjacency(const Mechanism& m) {
  std::vector<std::vector<int>> adj(static_cast<size_t>(m.links + 1));
  for (const auto& j : m.joints) {
    adj[j.parent].push_back(j.child);
    adj[j.child].push_back(j.parent);
  }
  return adj;
}

inline bool connected(const Mechanism& m) {
  const auto adj = adjacency(m);
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  size_t count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[v])
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
  }
  return count == adj.size();
}

}  // namespace detail

/// Checks the type invariants; throws Error(validation) naming the offender.
inline void validate_mechanism(const Mechanism& m) {
  auto fail = [](const std::string& s) { throw Error(ErrorCode::validation, s); };
  if (m.links < 1) fail("mechanism needs at least one moving link");
  if (m.joints.empty()) fail("mechanism needs at least one joint");
  for (size_t i = 0; i < m.joints.size(); ++i) {
    const auto& j = m.joints[i];
    const std::string at = "joints[" + std::to_string(i) + "]";
    if (j.parent < 0 || j.parent > m.links || j.child < 0 || j.child > m.links)
      fail(at + ": link index out of range");
    if (j.parent == j.child) fail(at + ": joint connects a link to itself");
    if (!j.dh.finite()) fail(at + ".dh: non-finite parameter");
    // Interval factors per kind: P,H,C -> 1; S,E -> 2 (the disk chart).
    const int expected_limits = (j.kind == JointKind::S || j.kind == JointKind::E) ? 2 : 1;
    if (j.kind != JointKind::R && static_cast<int>(j.limits.size()) != expected_limits)
      fail(at + ".limits: " + to_string(j.kind) + " joint needs " + std::to_string(expected_limits) +
           " interval(s), got " + std::to_string(j.limits.size()));
    if (j.kind == JointKind::R && !j.limits.empty() && j.limits.size() != 1)
      fail(at + ".limits: R joint takes at most one interval");
    for (const auto& l : j.limits)
      if (!(std::isfinite(l.lo) && std::isfinite(l.hi) && l.lo <= l.hi)) fail(at + ".limits: empty interval");
    if (j.pitch && j.kind != JointKind::H) fail(at + ".pitch: only helical joints carry a pitch");
  }
  if (!detail::connected(m)) fail("link graph is disconnected");
}

/// serial: path starting at the base; tree: acyclic otherwise; parallel: has a cycle.
inline MechanismClass classify_mechanism(const Mechanism& m) {
  const int vertices = m.links + 1;
  if (m.joint_count() > vertices - 1) return MechanismClass::parallel;
  const auto adj = detail::adjacency(m);
  if (adj[0].size() > 1) return MechanismClass::tree;
  for (int v = 1; v < vertices; ++v)
    if (adj[v].size() > 2) return MechanismClass::tree;
  return MechanismClass::serial;
}

/// Joint space charts: R -> circle; P,H -> interval; C -> interval x circle;
/// S,E -> disk (two intervals) x circle.
inline ConfigChart joint_chart(const JointSpec& j) {
  auto lim = [&](size_t i) {
    if (i < j.limits.size()) return ChartFactor::interval(j.limits[i].lo, j.limits[i].hi);
    return ChartFactor::interval(-1.0, 1.0);
  };
  switch (j.kind) {
    case JointKind::R: return {{ChartFactor::circle()}};
    case JointKind::P: case JointKind::H: return {{lim(0)}};
    case JointKind::C: return {{lim(0), ChartFactor::circle()}};
    case JointKind::S: case JointKind::E: return {{lim(0), lim(1), ChartFactor::circle()}};
  }
  return {};
}

/// Grubler-Kutzbach count, 6(n-g)+sum f_i or 3(n-g)+sum f_i when planar.
/// Redundant constraints are not detected; the caller supplies the override.
inline MobilityReport mobility(const Mechanism& m, bool planar, int redundancy_override = 0) {
  require(redundancy_override >= 0, "redundancy override must be >= 0");
  const int body = planar ? 3 : 6;
  int sum = 0;
  for (const auto& j : m.joints) sum += j.dof();
  MobilityReport r;
  r.planar = planar;
  r.naive_mobility = body * (m.links - m.joint_count()) + sum;
  r.redundancy_override = redundancy_override;
  r.effective_mobility = r.naive_mobility - redundancy_override;
  return r;
}

enum class VariableKind { R, P };

/// Denavit-Hartenberg link transform Rz(theta) Tz(d) Tx(a) Rx(alpha), with the
/// joint variable replacing theta (revolute) or d (prismatic).
inline RigidPose dh_transform(const DHParams& p, double joint_variable, VariableKind kind) {
  const double theta = kind == VariableKind::R ? joint_variable : p.theta;
  const double d = kind == VariableKind::P ? joint_variable : p.d;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
  Mat4 h;
  h << ct, -ca * st, sa * st, p.a * ct,
       st, ca * ct, -sa * ct, p.a * st,
       0.0, sa, ca, d,
       0.0, 0.0, 0.0, 1.0;
  return pose_from_homogeneous(h);
}

}  // namespace kinmap
