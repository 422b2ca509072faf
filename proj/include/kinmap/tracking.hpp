#pragma once

// Tracking algorithms: lifting working-space paths to configuration space by
// integrating a Jacobian-based velocity law with fixed-step RK4, plus
// cyclicity diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "kinmap/charts.hpp"
#include "kinmap/csv.hpp"
#include "kinmap/error.hpp"
#include "kinmap/kinematics.hpp"

namespace kinmap {

struct WorkPath {
  std::vector<double> t;    // 0 = t_0 < ... < t_m = 1
  std::vector<Vec> points;
  bool closed = false;

  size_t size() const { return points.size(); }
};

inline constexpr double kMaxWorkStep = 0.2;

/// Builds a path from samples (uniform times when `times` is empty) and
/// bisects segments until consecutive samples are within kMaxWorkStep.
inline WorkPath make_work_path(const WorkChart& w, const std::vector<Vec>& points, bool closed,
                               std::vector<double> times = {}) {
  require(points.size() >= 2, "a work path needs at least two samples");
  if (times.empty()) {
    for (size_t i = 0; i < points.size(); ++i) times.push_back(double(i) / double(points.size() - 1));
  }
  require(times.size() == points.size(), "one time per sample");
  require(times.front() == 0.0 && times.back() == 1.0, "sample times must run from 0 to 1");
  for (size_t i = 1; i < times.size(); ++i) require(times[i] > times[i - 1], "sample times must increase");
  for (const auto& p : points) require(p.size() == w.point_dim(), "work point dimension mismatch");
  if (closed)
    require(w.distance(points.front(), points.back()) <= 1e-12, "closed path must end where it starts");

  WorkPath out;
  out.closed = closed;
  std::function<void(double, const Vec&, double, const Vec&, int)> refine = [&](double ta, const Vec& a, double tb,
                                                                                  const Vec& b, int depth) {
    if (w.distance(a, b) <= kMaxWorkStep || depth > 40) {
      out.t.push_back(tb);
      out.points.push_back(b);
      return;
    }
    const Vec mid = w.interpolate(a, b, 0.5);
    const double tm = 0.5 * (ta + tb);
    refine(ta, a, tm, mid, depth + 1);
    refine(tm, mid, tb, b, depth + 1);
  };
  out.t.push_back(0.0);
  out.points.push_back(points.front());
  for (size_t i = 1; i < points.size(); ++i) refine(times[i - 1], points[i - 1], times[i], points[i], 0);
  if (closed) out.points.back() = out.points.front();
  return out;
}

inline WorkPath reversed(const WorkPath& p) {
  WorkPath r = p;
  std::reverse(r.points.begin(), r.points.end());
  for (size_t i = 0; i < r.t.size(); ++i) r.t[i] = 1.0 - p.t[p.t.size() - 1 - i];
  r.t.front() = 0.0;
  r.t.back() = 1.0;
  return r;
}

/// Target point at time s inside segment i (s in [t_i, t_{i+1}]).
inline Vec work_path_at(const WorkChart& w, const WorkPath& p, size_t i, double s) {
  const double ta = p.t[i], tb = p.t[i + 1];
  const double u = std::clamp((s - ta) / (tb - ta), 0.0, 1.0);
  return w.interpolate(p.points[i], p.points[i + 1], u);
}

enum class TrackingMethod { pseudoinverse, damped, extended };

inline const char* to_string(TrackingMethod m) {
  switch (m) {
    case TrackingMethod::pseudoinverse: return "pseudoinverse";
    case TrackingMethod::damped: return "damped";
    case TrackingMethod::extended: return "extended";
  }
  return "?";
}

struct TrackingSpec {
  TrackingMethod method = TrackingMethod::damped;
  double lambda = 1e-3;
  double kappa = 10.0;
  int steps_per_segment = 16;
  double singular_threshold = 1e-2;
  double lost_threshold = 0.5;
  // extended only: g(q) = 0 is held; rows of g must equal the redundancy
  std::function<Vec(const Vec&)> constraint;
  std::function<Mat(const Vec&)> constraint_jacobian;
};

/// Extended-Jacobian constraint holding sum_{i in idx} q_i at `value`.
inline void lock_coordinate_sum(TrackingSpec& spec, std::vector<int> idx, double value) {
  spec.constraint = [idx, value](const Vec& q) {
    Vec g(1);
    g[0] = -value;
    for (int i : idx) g[0] += q[i];
    return g;
  };
  spec.constraint_jacobian = [idx](const Vec& q) {
    Mat g = Mat::Zero(1, q.size());
    for (int i : idx) g(0, i) = 1.0;
    return g;
  };
}

/// Joint velocity for the commanded work velocity v at configuration q.
inline Vec commanded_velocity(const Mat& j, const Vec& v, const TrackingSpec& spec, const Vec& q) {
  switch (spec.method) {
    case TrackingMethod::pseudoinverse: {
      Eigen::JacobiSVD<Mat> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
      svd.setThreshold(1e-10);
      return svd.solve(v);
    }
    case TrackingMethod::damped: {
      const Mat a = j.transpose() * j + spec.lambda * spec.lambda * Mat::Identity(j.cols(), j.cols());
      return a.ldlt().solve(j.transpose() * v);
    }
    case TrackingMethod::extended: {
      const Mat g = spec.constraint_jacobian(q);
      Mat a(j.rows() + g.rows(), j.cols());
      a << j, g;
      Vec b(v.size() + g.rows());
      b << v, -spec.kappa * spec.constraint(q);
      Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
      svd.setThreshold(1e-10);
      return svd.solve(b);
    }
  }
  return Vec();
}

struct TrackingResult {
  std::vector<double> t;
  std::vector<Vec> configs;             // unwrapped along the lift
  std::vector<double> errors;           // work-chart distance to the target
  std::vector<double> smallest_sv;
  std::vector<double> singular_times;   // samples with smallest_sv < threshold
  double max_error = 0.0;
  double drift = 0.0;                   // quotient-metric distance start -> end
};

namespace detail {

inline Vec clamp_to_chart(const ConfigChart& chart, Vec q) {
  for (int i = 0; i < chart.dimension(); ++i)
    if (!chart.factors[i].is_circle()) q[i] = std::clamp(q[i], chart.factors[i].lo, chart.factors[i].hi);
  return q;
}

inline void check_spec(const KinematicMap& k, const TrackingSpec& spec) {
  require(spec.lambda >= 0.0 && spec.kappa >= 0.0, "damping and gain must be nonnegative");
  require(spec.steps_per_segment >= 1, "need at least one integration step per segment");
  if (spec.method == TrackingMethod::damped) require(spec.lambda > 0.0, "damped tracking needs lambda > 0");
  if (spec.method == TrackingMethod::extended) {
    require(spec.constraint && spec.constraint_jacobian, "extended tracking needs a constraint");
    const Vec q0 = Vec::Zero(k.config_dim());
    const int rows = static_cast<int>(spec.constraint(detail::clamp_to_chart(k.config_chart, q0)).size());
    require(rows == k.config_dim() - k.work_chart.intrinsic_dim(), "constraint rows must equal the redundancy");
  }
}

}  // namespace detail

/// Lifts w starting at `start`. Integrates q' = solve(J, w' + kappa * e)
/// with RK4, spec.steps_per_segment fixed steps per input segment.
inline TrackingResult lift_path(const KinematicMap& k, const TrackingSpec& spec, const Vec& start, const WorkPath& w) {
  detail::check_spec(k, spec);
  require(w.size() >= 2 && w.t.size() == w.size(), "malformed work path");
  const WorkChart& wc = k.work_chart;
  require(wc.distance(forward_kinematics(k, start), w.points.front()) <= 1e-6,
          "start configuration does not map to the first path sample");

  auto velocity = [&](size_t seg, double s, const Vec& q) {
    const Vec qc = detail::clamp_to_chart(k.config_chart, q);
    const double ta = w.t[seg], tb = w.t[seg + 1];
    const double dt = 1e-6 * (tb - ta);
    const double lo = std::max(ta, s - dt), hi = std::min(tb, s + dt);
    const Vec wdot = wc.error(work_path_at(wc, w, seg, hi), work_path_at(wc, w, seg, lo)) / (hi - lo);
    const Vec e = wc.error(work_path_at(wc, w, seg, s), forward_kinematics(k, qc));
    return commanded_velocity(jacobian(k, qc), wdot + spec.kappa * e, spec, qc);
  };

  TrackingResult r;
  auto record = [&](double t, const Vec& q, size_t seg) {
    const double err = wc.distance(forward_kinematics(k, q), work_path_at(wc, w, seg, t));
    const double sv = singular_test(k, q, 1e-12).smallest_singular_value;
    r.t.push_back(t);
    r.configs.push_back(q);
    r.errors.push_back(err);
    r.smallest_sv.push_back(sv);
    if (sv < spec.singular_threshold) r.singular_times.push_back(t);
    r.max_error = std::max(r.max_error, err);
    if (err > spec.lost_threshold)
      throw Error(ErrorCode::tracking_lost, "error " + csv::number(err) + " at t=" + csv::number(t));
  };

  Vec q = start;
  record(0.0, q, 0);
  for (size_t seg = 0; seg + 1 < w.size(); ++seg) {
    const double ta = w.t[seg];
    const double h = (w.t[seg + 1] - ta) / spec.steps_per_segment;
    for (int step = 0; step < spec.steps_per_segment; ++step) {
      const double s = ta + step * h;
      const Vec k1 = velocity(seg, s, q);
      const Vec k2 = velocity(seg, s + 0.5 * h, q + 0.5 * h * k1);
      const Vec k3 = velocity(seg, s + 0.5 * h, q + 0.5 * h * k2);
      const Vec k4 = velocity(seg, s + h, q + h * k3);
      q = detail::clamp_to_chart(k.config_chart, q + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
      record(step + 1 == spec.steps_per_segment ? w.t[seg + 1] : s + h, q, seg);
    }
  }
  r.drift = k.config_chart.distance(r.configs.front(), r.configs.back());
  return r;
}

inline double cyclicity_drift(const KinematicMap& k, const TrackingSpec& spec, const WorkPath& loop, const Vec& start) {
  require(loop.closed, "cyclicity needs a closed path");
  return lift_path(k, spec, start, loop).drift;
}

/// Closed loop of the given size through `center`: for surface-like charts a
/// circle of diameter `radius` that passes through the center and starts at
/// the point farthest from it; for one-dimensional charts an out-and-back
/// excursion of length `radius`.
inline WorkPath probe_loop(const WorkChart& w, const Vec& center, double radius, int samples = 64) {
  require(radius > 0.0 && samples >= 8, "probe loop needs a positive radius");
  require(center.size() == w.point_dim(), "probe center has " + std::to_string(center.size()) +
                                              " coordinates, chart needs " + std::to_string(w.point_dim()));
  std::vector<Vec> pts;
  const double h = 0.5 * radius;
  if (w.model == WorkModel::sphere) {
    const Vec3 c = Vec3(center.head<3>()).normalized();
    const Vec3 a = std::abs(c.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = (a - a.dot(c) * c).normalized();
    const Vec3 e2 = c.cross(e1);
    const Vec3 m = std::cos(h) * c + std::sin(h) * e1;
    const Vec3 g1 = -std::sin(h) * c + std::cos(h) * e1;
    for (int i = 0; i <= samples; ++i) {
      const double phi = kTwoPi * i / samples;
      pts.push_back(Vec(std::cos(h) * m + std::sin(h) * (std::cos(phi) * g1 + std::sin(phi) * e2)));
    }
  } else if (w.point_dim() == 1) {
    for (int i = 0; i <= samples; ++i) {
      Vec p = center;
      p[0] += h * (1.0 - std::cos(kTwoPi * i / samples));
      pts.push_back(p);
    }
  } else {
    require(w.point_dim() >= 2, "probe loops need a chart of dimension >= 1");
    for (int i = 0; i <= samples; ++i) {
      const double phi = kTwoPi * i / samples;
      Vec p = center;
      p[0] += h + h * std::cos(phi);
      p[1] += h * std::sin(phi);
      pts.push_back(p);
    }
  }
  pts.back() = pts.front();
  return make_work_path(w, pts, true);
}

struct ProbeRow {
  double radius = 0.0;
  double drift = 0.0;
  double max_error = 0.0;
};

/// One cyclicity row per radius; each start is recomputed from `section`
/// applied to the first loop sample.
inline std::vector<ProbeRow> shrinking_loop_probe(const KinematicMap& k, const TrackingSpec& spec, const Vec& center,
                                                  const std::vector<double>& radii,
                                                  const std::function<Vec(const Vec&)>& section) {
  std::vector<ProbeRow> rows;
  for (size_t i = 0; i < radii.size(); ++i) {
    if (i) require(radii[i] < radii[i - 1], "probe radii must decrease");
    const WorkPath loop = probe_loop(k.work_chart, center, radii[i]);
    const TrackingResult r = lift_path(k, spec, section(loop.points.front()), loop);
    rows.push_back({radii[i], r.drift, r.max_error});
  }
  return rows;
}

/// CSV with columns t, w0, w1, ...; `closed` marks loops.
inline WorkPath parse_work_path_csv(const WorkChart& w, const std::string& text, bool closed) {
  const auto [header, rows] = csv::parse_numeric(text);
  require(static_cast<int>(header.size()) == w.point_dim() + 1,
          "work path CSV needs t plus " + std::to_string(w.point_dim()) + " coordinates");
  std::vector<double> t;
  std::vector<Vec> pts;
  for (const auto& row : rows) {
    t.push_back(row[0]);
    pts.push_back(Eigen::Map<const Vec>(row.data() + 1, w.point_dim()));
  }
  return make_work_path(w, pts, closed, t);
}

inline std::string work_path_csv(const WorkPath& p) {
  csv::Table table;
  table.header.push_back("t");
  for (int i = 0; i < p.points.front().size(); ++i) table.header.push_back("w" + std::to_string(i));
  for (size_t s = 0; s < p.size(); ++s) {
    std::vector<std::string> row{csv::number(p.t[s])};
    for (int i = 0; i < p.points[s].size(); ++i) row.push_back(csv::number(p.points[s][i]));
    table.add(row);
  }
  return table.str();
}

inline std::string tracking_result_csv(const TrackingResult& r) {
  csv::Table table;
  table.header.push_back("t");
  for (int i = 0; i < r.configs.front().size(); ++i) table.header.push_back("q" + std::to_string(i));
  table.header.push_back("tracking_error");
  table.header.push_back("smallest_sv");
  for (size_t s = 0; s < r.t.size(); ++s) {
    std::vector<std::string> row{csv::number(r.t[s])};
    for (int i = 0; i < r.configs[s].size(); ++i) row.push_back(csv::number(r.configs[s][i]));
    row.push_back(csv::number(r.errors[s]));
    row.push_back(csv::number(r.smallest_sv[s]));
    table.add(row);
  }
  return table.str();
}

}  // namespace kinmap
