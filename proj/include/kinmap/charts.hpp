#pragma once

// Coordinate charts for configuration and working spaces. A chart is an
// ordered product of circle and interval factors; circle coordinates are real
// numbers read modulo 2*pi.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kinmap/error.hpp"
#include "kinmap/pose.hpp"

namespace kinmap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kTwoPi = 2.0 * kPi;

/// Representative of x modulo 2*pi in (-pi, pi].
inline double wrap_pi(double x) {
  double r = std::fmod(x + kPi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - kPi;
}

/// Representative of x modulo 2*pi in [0, 2*pi).
inline double wrap_two_pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

struct ChartFactor {
  enum class Kind { circle, interval };
  Kind kind = Kind::circle;
  double lo = 0.0;
  double hi = 0.0;

  static ChartFactor circle() { return {Kind::circle, 0.0, 0.0}; }
  static ChartFactor interval(double lo, double hi) {
    require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, "interval factor needs lo <= hi");
    return {Kind::interval, lo, hi};
  }

  bool is_circle() const { return kind == Kind::circle; }

  std::string describe() const {
    if (is_circle()) return "circle";
    char buf[96];
    std::snprintf(buf, sizeof buf, "interval[%g,%g]", lo, hi);
    return buf;
  }

  friend bool operator==(const ChartFactor&, const ChartFactor&) = default;
};

/// Product chart. Distances are Euclidean in the per-factor differences, with
/// circle differences taken in (-pi, pi] (the quotient metric).
struct ConfigChart {
  std::vector<ChartFactor> factors;

  int dimension() const { return static_cast<int>(factors.size()); }

  Vec difference(const Vec& from, const Vec& to) const {
    Vec d = to - from;
    for (int i = 0; i < dimension(); ++i)
      if (factors[i].is_circle()) d[i] = wrap_pi(d[i]);
    return d;
  }

  double distance(const Vec& a, const Vec& b) const { return difference(a, b).norm(); }

  /// Circle coordinates mapped into [0, 2*pi); interval coordinates untouched.
  Vec normalized(Vec c) const {
    for (int i = 0; i < dimension(); ++i)
      if (factors[i].is_circle()) c[i] = wrap_two_pi(c[i]);
    return c;
  }

  bool contains(const Vec& c, double tol = 1e-12) const {
    if (c.size() != dimension()) return false;
    for (int i = 0; i < dimension(); ++i) {
      if (!std::isfinite(c[i])) return false;
      if (!factors[i].is_circle() && (c[i] < factors[i].lo - tol || c[i] > factors[i].hi + tol)) return false;
    }
    return true;
  }

  friend bool operator==(const ConfigChart&, const ConfigChart&) = default;
};

inline ConfigChart concat(const ConfigChart& a, const ConfigChart& b) {
  ConfigChart out = a;
  out.factors.insert(out.factors.end(), b.factors.begin(), b.factors.end());
  return out;
}

/// Sample positions along one chart axis for product grids. Circles use n
/// points 2*pi*k/n; intervals use n endpoint-inclusive points.
inline std::vector<double> grid_axis(const ChartFactor& f, int n) {
  require(n >= 1, "grid resolution must be positive");
  std::vector<double> v(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    if (f.is_circle()) {
      v[k] = kTwoPi * k / n;
    } else {
      v[k] = n == 1 ? 0.5 * (f.lo + f.hi) : f.lo + (f.hi - f.lo) * k / (n - 1);
    }
  }
  return v;
}

inline double grid_spacing(const ChartFactor& f, int n) {
  if (f.is_circle()) return kTwoPi / n;
  return n <= 1 ? 0.0 : (f.hi - f.lo) / (n - 1);
}

/// Cell centers for scans: circles start at -pi, intervals span [lo, hi].
inline std::vector<double> cell_centers(const ChartFactor& f, int n) {
  std::vector<double> v(static_cast<size_t>(n));
  const double lo = f.is_circle() ? -kPi : f.lo;
  const double width = f.is_circle() ? kTwoPi : f.hi - f.lo;
  for (int k = 0; k < n; ++k) v[k] = lo + width * (k + 0.5) / n;
  return v;
}

enum class WorkModel { plane, space, sphere, annulus, cylinder, so3, se3, factors };

inline const char* to_string(WorkModel m) {
  switch (m) {
    case WorkModel::plane: return "plane";
    case WorkModel::space: return "space";
    case WorkModel::sphere: return "sphere";
    case WorkModel::annulus: return "annulus";
    case WorkModel::cylinder: return "cylinder";
    case WorkModel::so3: return "so3";
    case WorkModel::se3: return "se3";
    case WorkModel::factors: return "factors";
  }
  return "?";
}

/// Working-space chart. Points live in an ambient encoding (unit 3-vectors
/// for the sphere, Cartesian (x, y[, z]) for annulus and cylinder, 9 rotation
/// entries for SO(3), translation + 9 rotation entries for SE(3)). Gridable
/// models also expose bounded chart coordinates:
///   sphere   (z, longitude)
///   annulus  (longitude, radius)
///   cylinder (longitude, radius, height)
///   factors  the factor coordinates themselves
struct WorkChart {
  WorkModel model = WorkModel::plane;
  double r_min = 0.0, r_max = 0.0;
  double z_min = 0.0, z_max = 0.0;
  ConfigChart product;  // factors model only

  static WorkChart of_model(WorkModel m) {
    WorkChart w;
    w.model = m;
    return w;
  }
  static WorkChart plane() { return of_model(WorkModel::plane); }
  static WorkChart space() { return of_model(WorkModel::space); }
  static WorkChart sphere() { return of_model(WorkModel::sphere); }
  static WorkChart so3() { return of_model(WorkModel::so3); }
  static WorkChart se3() { return of_model(WorkModel::se3); }
  static WorkChart annulus(double r_min, double r_max) {
    require(0.0 <= r_min && r_min < r_max, "annulus needs 0 <= r_min < r_max");
    WorkChart w = of_model(WorkModel::annulus);
    w.r_min = r_min;
    w.r_max = r_max;
    return w;
  }
  static WorkChart cylinder(double r_min, double r_max, double z_min, double z_max) {
    WorkChart w = annulus(r_min, r_max);
    require(z_min <= z_max, "cylinder needs z_min <= z_max");
    w.model = WorkModel::cylinder;
    w.z_min = z_min;
    w.z_max = z_max;
    return w;
  }
  static WorkChart of_factors(ConfigChart c) {
    WorkChart w = of_model(WorkModel::factors);
    w.product = std::move(c);
    return w;
  }

  int point_dim() const {
    switch (model) {
      case WorkModel::plane: case WorkModel::annulus: return 2;
      case WorkModel::space: case WorkModel::sphere: case WorkModel::cylinder: return 3;
      case WorkModel::so3: return 9;
      case WorkModel::se3: return 12;
      case WorkModel::factors: return product.dimension();
    }
    return 0;
  }

  /// Row count of Jacobians and tracking error vectors.
  int error_dim() const {
    switch (model) {
      case WorkModel::so3: return 3;
      case WorkModel::se3: return 6;
      default: return point_dim();
    }
  }

  int intrinsic_dim() const {
    switch (model) {
      case WorkModel::sphere: return 2;
      case WorkModel::so3: return 3;
      case WorkModel::se3: return 6;
      default: return point_dim();
    }
  }

  bool gridable() const {
    return model == WorkModel::sphere || model == WorkModel::annulus || model == WorkModel::cylinder ||
           model == WorkModel::factors;
  }

  ConfigChart chart() const {
    switch (model) {
      case WorkModel::sphere: return {{ChartFactor::interval(-1.0, 1.0), ChartFactor::circle()}};
      case WorkModel::annulus: return {{ChartFactor::circle(), ChartFactor::interval(r_min, r_max)}};
      case WorkModel::cylinder:
        return {{ChartFactor::circle(), ChartFactor::interval(r_min, r_max), ChartFactor::interval(z_min, z_max)}};
      case WorkModel::factors: return product;
      default: throw Error(ErrorCode::precondition, std::string("work model has no bounded chart: ") + to_string(model));
    }
  }

  Vec point_from_chart(const Vec& x) const {
    switch (model) {
      case WorkModel::sphere: {
        const double z = std::clamp(x[0], -1.0, 1.0);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        return Eigen::Vector3d(rho * std::cos(x[1]), rho * std::sin(x[1]), z);
      }
      case WorkModel::annulus: return Eigen::Vector2d(x[1] * std::cos(x[0]), x[1] * std::sin(x[0]));
      case WorkModel::cylinder: return Eigen::Vector3d(x[1] * std::cos(x[0]), x[1] * std::sin(x[0]), x[2]);
      case WorkModel::factors: return x;
      default: throw Error(ErrorCode::precondition, "work model has no bounded chart");
    }
  }

  /// Longitudes are reported in [0, 2*pi); the longitude of a point on the
  /// polar axis is 0.
  Vec chart_from_point(const Vec& p) const {
    auto lon = [](double x, double y) { return (x == 0.0 && y == 0.0) ? 0.0 : wrap_two_pi(std::atan2(y, x)); };
    switch (model) {
      case WorkModel::sphere: return Eigen::Vector2d(std::clamp(p[2], -1.0, 1.0), lon(p[0], p[1]));
      case WorkModel::annulus: return Eigen::Vector2d(lon(p[0], p[1]), std::hypot(p[0], p[1]));
      case WorkModel::cylinder: return Eigen::Vector3d(lon(p[0], p[1]), std::hypot(p[0], p[1]), p[2]);
      case WorkModel::factors: return p;
      default: throw Error(ErrorCode::precondition, "work model has no bounded chart");
    }
  }

  static Mat3 rotation_block(const Vec& p, int offset) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = p[offset + 3 * i + j];
    return r;
  }

  /// Rotation vector w with R_to = exp([w]) R_from.
  static Vec3 rotation_error(const Mat3& from, const Mat3& to) {
    const Rotation rel = Rotation::from_matrix(to * from.transpose());
    const auto& q = rel.quaternion();
    const double s = q.vec().norm();
    if (s < 1e-300) return Vec3::Zero();
    const double angle = 2.0 * std::atan2(s, q.w());
    return q.vec() / s * angle;
  }

  /// Intrinsic distance between two points of the model.
  double distance(const Vec& a, const Vec& b) const {
    switch (model) {
      case WorkModel::sphere: return 2.0 * std::asin(std::min(1.0, 0.5 * (a - b).norm()));
      case WorkModel::so3: return rotation_error(rotation_block(a, 0), rotation_block(b, 0)).norm();
      case WorkModel::se3: {
        const double dt = (a.head<3>() - b.head<3>()).norm();
        const double dr = rotation_error(rotation_block(a, 3), rotation_block(b, 3)).norm();
        return std::hypot(dt, dr);
      }
      case WorkModel::factors: return product.distance(a, b);
      default: return (a - b).norm();
    }
  }

  /// Error vector driving `current` toward `target`, matching Jacobian rows.
  Vec error(const Vec& target, const Vec& current) const {
    switch (model) {
      case WorkModel::so3: return rotation_error(rotation_block(current, 0), rotation_block(target, 0));
      case WorkModel::se3: {
        Vec e(6);
        e.head<3>() = target.head<3>() - current.head<3>();
        e.tail<3>() = rotation_error(rotation_block(current, 3), rotation_block(target, 3));
        return e;
      }
      case WorkModel::factors: return product.difference(current, target);
      default: return target - current;
    }
  }

  /// Point on the geodesic-ish segment from a to b at fraction s (linear in
  /// the ambient encoding, then projected back onto the model).
  Vec interpolate(const Vec& a, const Vec& b, double s) const {
    switch (model) {
      case WorkModel::sphere: {
        Vec p = (1.0 - s) * a + s * b;
        const double n = p.norm();
        return n > 0.0 ? Vec(p / n) : a;
      }
      case WorkModel::so3: case WorkModel::se3: {
        const int off = model == WorkModel::se3 ? 3 : 0;
        const Mat3 ra = rotation_block(a, off);
        const Vec3 w = rotation_error(ra, rotation_block(b, off));
        const double angle = w.norm();
        Mat3 r = ra;
        if (angle > 0.0) r = Eigen::AngleAxisd(s * angle, w / angle).toRotationMatrix() * ra;
        Vec p(point_dim());
        if (off) p.head<3>() = (1.0 - s) * a.head<3>() + s * b.head<3>();
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) p[off + 3 * i + j] = r(i, j);
        return p;
      }
      case WorkModel::factors: return a + s * product.difference(a, b);
      default: return (1.0 - s) * a + s * b;
    }
  }

  bool contains(const Vec& p, double tol) const {
    if (p.size() != point_dim()) return false;
    switch (model) {
      case WorkModel::sphere: return std::abs(p.norm() - 1.0) <= tol;
      case WorkModel::annulus: {
        const double r = std::hypot(p[0], p[1]);
        return r >= r_min - tol && r <= r_max + tol;
      }
      case WorkModel::cylinder: {
        const double r = std::hypot(p[0], p[1]);
        return r >= r_min - tol && r <= r_max + tol && p[2] >= z_min - tol && p[2] <= z_max + tol;
      }
      case WorkModel::factors: return product.contains(p, tol);
      default: return p.allFinite();
    }
  }

  std::string describe() const {
    std::string s = to_string(model);
    char buf[160];
    if (model == WorkModel::annulus) {
      std::snprintf(buf, sizeof buf, "[%g,%g]", r_min, r_max);
      s += buf;
    } else if (model == WorkModel::cylinder) {
      std::snprintf(buf, sizeof buf, "[%g,%g]x[%g,%g]", r_min, r_max, z_min, z_max);
      s += buf;
    } else if (model == WorkModel::factors) {
      s += "(";
      for (size_t i = 0; i < product.factors.size(); ++i) s += (i ? "," : "") + product.factors[i].describe();
      s += ")";
    }
    return s;
  }
};

inline Vec se3_point(const RigidPose& p) {
  Vec v(12);
  v.head<3>() = p.translation;
  const Mat3 r = p.rotation.matrix();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[3 + 3 * i + j] = r(i, j);
  return v;
}

}  // namespace kinmap
