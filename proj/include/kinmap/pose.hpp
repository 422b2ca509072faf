#pragma once

// Rigid-body orientation and pose: unit-quaternion rotations, homogeneous
// 4x4 views, ZYX angle conversion and screw (Chasles) decomposition.

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "kinmap/error.hpp"

namespace kinmap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = std::numbers::pi;

/// Orientation stored as a unit quaternion with w >= 0. Matrices are views.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}

  static Rotation from_quaternion(const Eigen::Quaterniond& q) {
    Rotation r;
    r.q_ = q.normalized();
    r.canonicalize();
    return r;
  }

  static Rotation from_matrix(const Mat3& m) { return from_quaternion(Eigen::Quaterniond(m)); }

  static Rotation identity() { return Rotation(); }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }

  Vec3 apply(const Vec3& v) const { return q_ * v; }
  Rotation inverse() const { return from_quaternion(q_.conjugate()); }

  friend Rotation operator*(const Rotation& a, const Rotation& b) {
    return from_quaternion(a.q_ * b.q_);
  }

 private:
  void canonicalize() {
    if (q_.w() < 0.0) q_.coeffs() = -q_.coeffs();
  }

  Eigen::Quaterniond q_;
};

struct AngleAxis {
  Vec3 axis;
  double angle;
};

struct EulerZYX {
  double yaw;
  double pitch;
  double roll;
};

struct RigidPose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }
  static RigidPose translate(const Vec3& t) { return {Rotation(), t}; }

  Vec3 apply(const Vec3& p) const { return rotation.apply(p) + translation; }
};

struct ScrewParams {
  Vec3 axis_point;
  Vec3 axis_direction;
  double angle;
  double slide;
};

inline Rotation rot_from_angle_axis(const Vec3& axis, double angle) {
  require(std::abs(axis.norm() - 1.0) <= 1e-9, "rotation axis must be a unit vector");
  return Rotation::from_quaternion(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis)));
}

/// Flips `v` so that its first coordinate with |v_i| > 1e-12 is positive.
inline Vec3 canonical_axis_sign(Vec3 v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

/// Inverse of rot_from_angle_axis on SO(3) minus the identity. Half turns have
/// no preferred axis sign; the output is canonicalized (first nonzero
/// coordinate positive), which is necessarily discontinuous somewhere.
inline AngleAxis rot_to_angle_axis(const Rotation& r) {
  const auto& q = r.quaternion();
  const Vec3 v = q.vec();
  const double s = v.norm();
  const double angle = 2.0 * std::atan2(s, q.w());
  if (angle < 1e-9) throw Error(ErrorCode::axis_undefined, "identity rotation has no axis");
  Vec3 axis = v / s;
  if (kPi - angle <= 1e-12) return {canonical_axis_sign(axis), kPi};
  return {axis, angle};
}

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Rotation euler_to_rotation(const EulerZYX& e) {
  Eigen::Quaterniond q = Eigen::AngleAxisd(e.yaw, Vec3::UnitZ()) *
                         Eigen::AngleAxisd(e.pitch, Vec3::UnitY()) *
                         Eigen::AngleAxisd(e.roll, Vec3::UnitX());
  return Rotation::from_quaternion(q);
}

inline EulerZYX rotation_to_euler(const Rotation& r) {
  const Mat3 m = r.matrix();
  const double cp = std::hypot(m(0, 0), m(1, 0));
  if (cp <= 1e-9) throw Error(ErrorCode::representation_singular, "ZYX angles at |pitch| = pi/2");
  return {std::atan2(m(1, 0), m(0, 0)), std::atan2(-m(2, 0), cp), std::atan2(m(2, 1), m(2, 2))};
}

inline RigidPose pose_compose(const RigidPose& a, const RigidPose& b) {
  return {a.rotation * b.rotation, a.rotation.apply(b.translation) + a.translation};
}

inline RigidPose pose_inverse(const RigidPose& p) {
  const Rotation inv = p.rotation.inverse();
  return {inv, -inv.apply(p.translation)};
}

inline Mat4 pose_to_homogeneous(const RigidPose& p) {
  Mat4 h = Mat4::Identity();
  h.topLeftCorner<3, 3>() = p.rotation.matrix();
  h.topRightCorner<3, 1>() = p.translation;
  return h;
}

inline RigidPose pose_from_homogeneous(const Mat4& h) {
  return {Rotation::from_matrix(h.topLeftCorner<3, 3>()), h.topRightCorner<3, 1>()};
}

/// Screw decomposition. Degenerate cases: a pure translation gets angle 0 and
/// direction t/|t| with slide |t|; the identity gets direction +z, slide 0.
inline ScrewParams screw_decompose(const RigidPose& p) {
  const Vec3& t = p.translation;
  const auto& q = p.rotation.quaternion();
  const double s = q.vec().norm();
  const double angle = 2.0 * std::atan2(s, q.w());
  if (angle < 1e-12) {
    const double len = t.norm();
    if (len == 0.0) return {Vec3::Zero(), Vec3::UnitZ(), 0.0, 0.0};
    return {Vec3::Zero(), t / len, 0.0, len};
  }
  Vec3 u = q.vec() / s;
  if (kPi - angle <= 1e-12) u = canonical_axis_sign(u);
  const double slide = u.dot(t);
  const Vec3 t_perp = t - slide * u;
  const double cot_half = std::cos(angle / 2.0) / std::sin(angle / 2.0);
  const Vec3 point = 0.5 * (t_perp + cot_half * u.cross(t_perp));
  return {point, u, angle, slide};
}

/// Rotation by `angle` about the line (axis_point, axis_direction), then a
/// slide along the direction.
inline RigidPose screw_to_pose(const ScrewParams& s) {
  const Rotation r = rot_from_angle_axis(s.axis_direction, s.angle);
  const Vec3 t = s.axis_point - r.apply(s.axis_point) + s.slide * s.axis_direction;
  return {r, t};
}

}  // namespace kinmap
