#pragma once

// Forward kinematic maps: closed-form canonical mechanisms and serial DH
// chains, their Jacobians and singularity analysis.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "kinmap/charts.hpp"
#include "kinmap/csv.hpp"
#include "kinmap/error.hpp"
#include "kinmap/mechanism.hpp"
#include "kinmap/pose.hpp"

namespace kinmap {

enum class MapKind { pointing, planar_rr, scara, identity, h_fixture, dh_chain };

struct KinematicMap {
  std::string tag;
  MapKind kind = MapKind::identity;
  std::vector<double> params;
  ConfigChart config_chart;
  WorkChart work_chart;

  // dh_chain only
  std::shared_ptr<const Mechanism> mechanism;
  int end_effector = -1;
  std::vector<int> chain;          // joint indices from base to end effector
  std::vector<int> coord_offset;   // per mechanism joint, first config coordinate

  int config_dim() const { return config_chart.dimension(); }
};

struct FrameChain {
  std::vector<RigidPose> joint_frames;  // world frame in which each joint acts
  std::vector<Vec3> axes;               // z_i, unit
  std::vector<Vec3> points;             // p_i
  std::vector<bool> revolute;
  RigidPose end_effector;
};

namespace detail {

inline void check_config(const KinematicMap& k, const Vec& c) {
  require(c.size() == k.config_dim(), "configuration dimension " + std::to_string(c.size()) + " does not match chart " +
                                          std::to_string(k.config_dim()));
  require(k.config_chart.contains(c, 1e-9), "configuration outside its chart");
}

}  // namespace detail

inline KinematicMap identity_map(const ConfigChart& chart, std::string tag) {
  KinematicMap k;
  k.tag = std::move(tag);
  k.kind = MapKind::identity;
  k.config_chart = chart;
  k.work_chart = WorkChart::of_factors(chart);
  return k;
}

/// Closed-form maps: "pointing", "planar_rr" (R1, R2), "scara" (R1, R2, h_lo,
/// h_hi), "identity_circle", "identity_interval" (optional lo, hi),
/// "identity_torus", "h_fixture".
inline KinematicMap canonical_map(const std::string& name, const std::vector<double>& params = {}) {
  auto need = [&](size_t n) {
    if (params.size() != n)
      throw Error(ErrorCode::precondition, name + " takes " + std::to_string(n) + " parameter(s)");
  };
  KinematicMap k;
  k.tag = name;
  k.params = params;
  if (name == "pointing") {
    need(0);
    k.kind = MapKind::pointing;
    k.config_chart = {{ChartFactor::circle(), ChartFactor::circle()}};
    k.work_chart = WorkChart::sphere();
  } else if (name == "planar_rr") {
    need(2);
    require(params[0] > params[1] && params[1] > 0.0, "planar_rr needs R1 > R2 > 0");
    k.kind = MapKind::planar_rr;
    k.config_chart = {{ChartFactor::circle(), ChartFactor::circle()}};
    k.work_chart = WorkChart::annulus(params[0] - params[1], params[0] + params[1]);
  } else if (name == "scara") {
    need(4);
    require(params[0] > params[1] && params[1] > 0.0, "scara needs R1 > R2 > 0");
    require(params[2] < params[3], "scara needs a nonempty height interval");
    k.kind = MapKind::scara;
    k.config_chart = {{ChartFactor::circle(), ChartFactor::circle(), ChartFactor::interval(params[2], params[3])}};
    k.work_chart = WorkChart::cylinder(params[0] - params[1], params[0] + params[1], params[2], params[3]);
  } else if (name == "identity_circle") {
    need(0);
    return identity_map({{ChartFactor::circle()}}, name);
  } else if (name == "identity_torus") {
    need(0);
    return identity_map({{ChartFactor::circle(), ChartFactor::circle()}}, name);
  } else if (name == "identity_interval") {
    if (params.empty()) return identity_map({{ChartFactor::interval(0.0, 1.0)}}, name);
    need(2);
    auto k2 = identity_map({{ChartFactor::interval(params[0], params[1])}}, name);
    k2.params = params;
    return k2;
  } else if (name == "h_fixture") {
    need(0);
    k.kind = MapKind::h_fixture;
    k.config_chart = {{ChartFactor::interval(0.0, 3.0)}};
    k.work_chart = WorkChart::of_factors({{ChartFactor::interval(0.0, 2.0)}});
  } else {
    throw Error(ErrorCode::unknown_name, "kinematic map '" + name + "'");
  }
  return k;
}

/// Serial or tree mechanism with R/P joints along the base-to-end-effector
/// path. `end_effector` < 0 selects the highest-numbered link.
inline KinematicMap mechanism_map(const Mechanism& m, int end_effector = -1, bool position_only = false) {
  validate_mechanism(m);
  if (classify_mechanism(m) == MechanismClass::parallel)
    throw Error(ErrorCode::loop_closure_unsupported, "mechanism '" + m.name + "' has a closed loop");
  KinematicMap k;
  k.tag = "mechanism:" + m.name;
  k.kind = MapKind::dh_chain;
  k.mechanism = std::make_shared<const Mechanism>(m);
  k.end_effector = end_effector < 0 ? m.links : end_effector;
  require(k.end_effector >= 1 && k.end_effector <= m.links, "end effector link out of range");
  for (const auto& j : m.joints) {
    k.coord_offset.push_back(k.config_chart.dimension());
    k.config_chart = concat(k.config_chart, joint_chart(j));
  }
  // Walk the tree from the base to find the joint path.
  std::vector<int> via(static_cast<size_t>(m.links + 1), -1), prev(static_cast<size_t>(m.links + 1), -1);
  std::vector<int> queue{0};
  std::vector<char> seen(static_cast<size_t>(m.links + 1), 0);
  seen[0] = 1;
  for (size_t h = 0; h < queue.size(); ++h) {
    const int v = queue[h];
    for (int ji = 0; ji < m.joint_count(); ++ji) {
      const auto& j = m.joints[ji];
      const int u = j.parent == v ? j.child : (j.child == v ? j.parent : -1);
      if (u < 0 || seen[u]) continue;
      seen[u] = 1;
      via[u] = ji;
      prev[u] = v;
      queue.push_back(u);
    }
  }
  for (int v = k.end_effector; v != 0; v = prev[v]) k.chain.push_back(via[v]);
  std::reverse(k.chain.begin(), k.chain.end());
  for (int ji : k.chain) {
    const auto kind = m.joints[ji].kind;
    if (kind != JointKind::R && kind != JointKind::P)
      throw Error(ErrorCode::precondition,
                  std::string("forward kinematics supports R and P joints only, got ") + to_string(kind));
  }
  k.work_chart = position_only ? WorkChart::space() : WorkChart::se3();
  return k;
}

/// Frames along a DH chain; the end-effector pose is the ordered fold of
/// dh_transform over the chain applied to the base frame.
inline FrameChain frame_chain(const KinematicMap& k, const Vec& c) {
  require(k.kind == MapKind::dh_chain, "frame chains exist for mechanism maps only");
  detail::check_config(k, c);
  FrameChain fc;
  RigidPose pose = k.mechanism->base_pose();
  for (int ji : k.chain) {
    const auto& j = k.mechanism->joints[ji];
    const double q = c[k.coord_offset[ji]];
    fc.joint_frames.push_back(pose);
    fc.axes.push_back(pose.rotation.apply(Vec3::UnitZ()));
    fc.points.push_back(pose.translation);
    fc.revolute.push_back(j.kind == JointKind::R);
    pose = pose_compose(pose, dh_transform(j.dh, q, j.kind == JointKind::R ? VariableKind::R : VariableKind::P));
  }
  fc.end_effector = pose;
  return fc;
}

inline double h_fixture_value(double t) {
  if (t <= 1.0) return t;
  if (t <= 2.0) return 1.0;
  return t - 1.0;
}

inline Vec forward_kinematics(const KinematicMap& k, const Vec& c) {
  detail::check_config(k, c);
  switch (k.kind) {
    case MapKind::pointing: {
      const double a = c[0], b = c[1];
      return Eigen::Vector3d(std::cos(a) * std::cos(b), std::cos(a) * std::sin(b), std::sin(a));
    }
    case MapKind::planar_rr: case MapKind::scara: {
      const double r1 = k.params[0], r2 = k.params[1];
      const double a = c[0], ab = c[0] + c[1];
      const double x = r1 * std::cos(a) + r2 * std::cos(ab);
      const double y = r1 * std::sin(a) + r2 * std::sin(ab);
      if (k.kind == MapKind::planar_rr) return Eigen::Vector2d(x, y);
      return Eigen::Vector3d(x, y, c[2]);
    }
    case MapKind::identity: return c;
    case MapKind::h_fixture: {
      Vec w(1);
      w[0] = h_fixture_value(c[0]);
      return w;
    }
    case MapKind::dh_chain: {
      const FrameChain fc = frame_chain(k, c);
      if (k.work_chart.model == WorkModel::space) return fc.end_effector.translation;
      return se3_point(fc.end_effector);
    }
  }
  return {};
}

/// Chart Jacobian (error_dim x config_dim). For DH chains: positional columns
/// z_i x (p_end - p_i) (R) or z_i (P); orientation columns z_i (R) or 0 (P).
inline Mat jacobian(const KinematicMap& k, const Vec& c) {
  detail::check_config(k, c);
  const int rows = k.work_chart.error_dim();
  Mat j = Mat::Zero(rows, k.config_dim());
  switch (k.kind) {
    case MapKind::pointing: {
      const double a = c[0], b = c[1];
      j << -std::sin(a) * std::cos(b), -std::cos(a) * std::sin(b),
           -std::sin(a) * std::sin(b), std::cos(a) * std::cos(b),
           std::cos(a), 0.0;
      break;
    }
    case MapKind::planar_rr: case MapKind::scara: {
      const double r1 = k.params[0], r2 = k.params[1];
      const double a = c[0], ab = c[0] + c[1];
      j(0, 0) = -r1 * std::sin(a) - r2 * std::sin(ab);
      j(0, 1) = -r2 * std::sin(ab);
      j(1, 0) = r1 * std::cos(a) + r2 * std::cos(ab);
      j(1, 1) = r2 * std::cos(ab);
      if (k.kind == MapKind::scara) j(2, 2) = 1.0;
      break;
    }
    case MapKind::identity: j.setIdentity(); break;
    case MapKind::h_fixture: j(0, 0) = (c[0] >= 1.0 && c[0] < 2.0) ? 0.0 : 1.0; break;
    case MapKind::dh_chain: {
      const FrameChain fc = frame_chain(k, c);
      const Vec3 p_end = fc.end_effector.translation;
      for (size_t i = 0; i < k.chain.size(); ++i) {
        const int col = k.coord_offset[k.chain[i]];
        const Vec3& z = fc.axes[i];
        if (fc.revolute[i]) {
          j.block<3, 1>(0, col) = z.cross(p_end - fc.points[i]);
          if (rows == 6) j.block<3, 1>(3, col) = z;
        } else {
          j.block<3, 1>(0, col) = z;
        }
      }
      break;
    }
  }
  return j;
}

inline Vec singular_values(const Mat& j) {
  if (j.size() == 0) return Vec();
  return Eigen::JacobiSVD<Mat>(j).singularValues();
}

struct SingularTest {
  bool is_singular = false;
  int rank = 0;
  double smallest_singular_value = 0.0;
};

/// Numerical rank counts singular values above tol * sigma_max; singular iff
/// rank < min(dim C, dim W).
inline SingularTest singular_test(const KinematicMap& k, const Vec& c, double tol = 1e-8) {
  require(tol > 0.0, "tolerance must be positive");
  const Vec sv = singular_values(jacobian(k, c));
  const int full = std::min(k.config_dim(), k.work_chart.intrinsic_dim());
  SingularTest r;
  const double top = sv.size() ? sv[0] : 0.0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * top) ++r.rank;
  r.smallest_singular_value = sv.size() ? sv[std::min<int>(full, sv.size()) - 1] : 0.0;
  r.is_singular = r.rank < full;
  return r;
}

/// True iff the revolute joint axes are parallel to one plane: the 3 x n
/// direction matrix [z_1 ... z_n] has sigma_3 <= tol * sigma_1.
inline bool coplanarity_test(const FrameChain& chain, double tol = 1e-8) {
  std::vector<Vec3> dirs;
  for (size_t i = 0; i < chain.axes.size(); ++i)
    if (chain.revolute[i]) dirs.push_back(chain.axes[i]);
  if (dirs.size() < 3) throw Error(ErrorCode::test_vacuous, "fewer than 3 revolute axes are always coplanar");
  Mat z(3, static_cast<int>(dirs.size()));
  for (size_t i = 0; i < dirs.size(); ++i) z.col(static_cast<int>(i)) = dirs[i];
  const Vec sv = singular_values(z);
  return sv[2] <= tol * sv[0];
}

/// Cross-check of the axis-plane criterion against the rank of the
/// orientation and position blocks of a DH-chain Jacobian.
struct CoplanarityCrossReport {
  bool coplanar = false;
  bool orientation_rank_deficient = false;
  bool position_rank_deficient = false;
};

inline CoplanarityCrossReport coplanarity_cross_report(const KinematicMap& k, const Vec& c, double tol = 1e-8) {
  require(k.kind == MapKind::dh_chain && k.work_chart.model == WorkModel::se3, "needs a full-pose DH chain map");
  const Mat j = jacobian(k, c);
  auto deficient = [&](const Mat& block) {
    const Vec sv = singular_values(block);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > tol * sv[0]) ++rank;
    return rank < 3;
  };
  CoplanarityCrossReport r;
  r.coplanar = coplanarity_test(frame_chain(k, c), tol);
  r.orientation_rank_deficient = deficient(j.bottomRows(3));
  r.position_rank_deficient = deficient(j.topRows(3));
  return r;
}

struct SingularScanReport {
  std::vector<int> shape;
  std::vector<std::vector<double>> centers;  // per axis
  std::vector<double> smallest_sv;           // row-major over the grid
  std::vector<char> singular;
  std::vector<size_t> singular_cells;        // flat indices, ascending
  double singular_fraction = 0.0;
  std::vector<int> component_of;             // -1 for regular cells
  std::vector<size_t> component_sizes;
  std::vector<double> component_dimension;   // box-count estimate

  size_t cell_count() const { return smallest_sv.size(); }

  std::vector<int> unflatten(size_t flat) const {
    std::vector<int> idx(shape.size());
    for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % shape[a]);
      flat /= shape[a];
    }
    return idx;
  }
};

namespace detail {

struct ScanCells {
  std::vector<int> shape;
  std::vector<std::vector<double>> centers;
  std::vector<double> sv;
  std::vector<char> singular;
};

inline ScanCells scan_cells(const KinematicMap& k, int n, double tol) {
  const int d = k.config_dim();
  ScanCells s;
  s.shape.assign(d, n);
  for (const auto& f : k.config_chart.factors) s.centers.push_back(cell_centers(f, n));
  size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<size_t>(n);
  s.sv.resize(total);
  s.singular.resize(total);
  std::vector<int> idx(d, 0);
  Vec c(d);
  for (size_t flat = 0; flat < total; ++flat) {
    for (int a = 0; a < d; ++a) c[a] = s.centers[a][idx[a]];
    const SingularTest t = singular_test(k, c, tol);
    s.sv[flat] = t.smallest_singular_value;
    s.singular[flat] = t.is_singular ? 1 : 0;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  return s;
}

}  // namespace detail

/// Flags grid cells whose centers are singular, labels face-connected
/// singular components (circle axes wrap) and estimates each component's
/// box-count dimension from a second scan at twice the resolution.
inline SingularScanReport singular_scan(const KinematicMap& k, int n, double tol = 1e-2) {
  const int d = k.config_dim();
  if (d > 4) throw Error(ErrorCode::grid_infeasible, "configuration dimension " + std::to_string(d) + " > 4");
  require(n >= 2, "scan resolution must be at least 2");
  auto coarse = detail::scan_cells(k, n, tol);
  SingularScanReport r;
  r.shape = coarse.shape;
  r.centers = coarse.centers;
  r.smallest_sv = std::move(coarse.sv);
  r.singular = std::move(coarse.singular);
  for (size_t i = 0; i < r.singular.size(); ++i)
    if (r.singular[i]) r.singular_cells.push_back(i);
  r.singular_fraction = r.singular.empty() ? 0.0 : double(r.singular_cells.size()) / r.singular.size();

  std::vector<size_t> stride(d, 1);
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * static_cast<size_t>(n);
  r.component_of.assign(r.singular.size(), -1);
  for (size_t seed : r.singular_cells) {
    if (r.component_of[seed] >= 0) continue;
    const int label = static_cast<int>(r.component_sizes.size());
    size_t size = 0;
    std::vector<size_t> stack{seed};
    r.component_of[seed] = label;
    while (!stack.empty()) {
      const size_t v = stack.back();
      stack.pop_back();
      ++size;
      const auto idx = r.unflatten(v);
      for (int a = 0; a < d; ++a) {
        for (int step : {-1, 1}) {
          int j = idx[a] + step;
          if (j < 0 || j >= n) {
            if (!k.config_chart.factors[a].is_circle()) continue;
            j = (j + n) % n;
          }
          const size_t u = v + (static_cast<long>(j) - idx[a]) * static_cast<long>(stride[a]);
          if (r.singular[u] && r.component_of[u] < 0) {
            r.component_of[u] = label;
            stack.push_back(u);
          }
        }
      }
    }
    r.component_sizes.push_back(size);
  }

  const auto fine = detail::scan_cells(k, 2 * n, tol);
  std::vector<size_t> fine_counts(r.component_sizes.size(), 0);
  std::vector<int> idx(d, 0);
  for (size_t flat = 0; flat < fine.singular.size(); ++flat) {
    if (fine.singular[flat]) {
      size_t parent = 0;
      for (int a = 0; a < d; ++a) parent = parent * n + idx[a] / 2;
      const int label = r.component_of[parent];
      if (label >= 0) ++fine_counts[label];
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < 2 * n) break;
      idx[a] = 0;
    }
  }
  for (size_t i = 0; i < fine_counts.size(); ++i) {
    const double ratio = fine_counts[i] > 0 ? double(fine_counts[i]) / r.component_sizes[i] : 0.0;
    r.component_dimension.push_back(ratio > 0.0 ? std::log2(ratio) : 0.0);
  }
  return r;
}

/// One row per cell: grid indices, chart coordinates of the cell center,
/// smallest singular value, singular flag and component label (-1 if regular).
inline std::string scan_csv(const SingularScanReport& r) {
  csv::Table t;
  const int d = static_cast<int>(r.shape.size());
  for (int a = 0; a < d; ++a) t.header.push_back("i" + std::to_string(a));
  for (int a = 0; a < d; ++a) t.header.push_back("q" + std::to_string(a));
  t.header.insert(t.header.end(), {"smallest_sv", "singular", "component"});
  for (size_t f = 0; f < r.cell_count(); ++f) {
    const auto idx = r.unflatten(f);
    std::vector<std::string> row;
    for (int a = 0; a < d; ++a) row.push_back(std::to_string(idx[a]));
    for (int a = 0; a < d; ++a) row.push_back(csv::number(r.centers[a][idx[a]]));
    row.push_back(csv::number(r.smallest_sv[f]));
    row.push_back(r.singular[f] ? "1" : "0");
    row.push_back(std::to_string(r.component_of[f]));
    t.add(std::move(row));
  }
  return t.str();
}

}  // namespace kinmap
