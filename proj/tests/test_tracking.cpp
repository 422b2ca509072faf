#include <gtest/gtest.h>

#include <random>

#include "kinmap/csv.hpp"
#include "kinmap/mechanism_io.hpp"
#include "kinmap/planning.hpp"
#include "kinmap/tracking.hpp"

using namespace kinmap;

namespace {

std::string data(const std::string& name) { return csv::read_file(std::string(KINMAP_DATA_DIR) + "/" + name); }

WorkPath arc(const WorkChart& w, double radius, double from, double to, int samples, bool closed = false) {
  std::vector<Vec> pts;
  for (int i = 0; i <= samples; ++i) {
    const double phi = from + (to - from) * i / samples;
    pts.push_back(Eigen::Vector2d(radius * std::cos(phi), radius * std::sin(phi)));
  }
  if (closed) pts.back() = pts.front();
  return make_work_path(w, pts, closed);
}

// Elbow-up inverse kinematics of the planar arm, written out independently.
Eigen::Vector2d rr_ik(double r1, double r2, const Vec& w) {
  const double r = w.norm();
  const double beta = std::acos((r * r - r1 * r1 - r2 * r2) / (2 * r1 * r2));
  const double alpha = std::atan2(w[1], w[0]) - std::atan2(r2 * std::sin(beta), r1 + r2 * std::cos(beta));
  return {alpha, beta};
}

Vec pointing_start(const Vec& w) {
  return Eigen::Vector2d(std::asin(std::clamp(w[2], -1.0, 1.0)), std::atan2(w[1], w[0]));
}

}  // namespace

TEST(WorkPath, ResamplingBoundsStep) {
  const WorkChart w = WorkChart::annulus(1, 3);
  const WorkPath p = make_work_path(w, {Eigen::Vector2d(1.2, 0), Eigen::Vector2d(-2.9, 0.1)}, false);
  ASSERT_GT(p.size(), 2u);
  for (size_t i = 1; i < p.size(); ++i) {
    EXPECT_LE(w.distance(p.points[i - 1], p.points[i]), kMaxWorkStep + 1e-12);
    EXPECT_GT(p.t[i], p.t[i - 1]);
  }
  EXPECT_EQ(p.t.front(), 0.0);
  EXPECT_EQ(p.t.back(), 1.0);
  EXPECT_THROW(make_work_path(w, {Eigen::Vector2d(2, 0), Eigen::Vector2d(2, 1)}, true), Error);
}

TEST(TrackingSpec, Preconditions) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  const WorkPath p = arc(rr.work_chart, 2.5, 0, 1, 8);
  const Vec start = rr_ik(2, 1, p.points.front());
  TrackingSpec s;
  s.lambda = 0.0;
  EXPECT_THROW(lift_path(rr, s, start, p), Error);
  s = TrackingSpec{};
  s.method = TrackingMethod::extended;
  EXPECT_THROW(lift_path(rr, s, start, p), Error);
  EXPECT_THROW(lift_path(rr, TrackingSpec{}, Eigen::Vector2d(0, 0), p), Error);
}

TEST(Lift, IdentityCircleIsInput) {
  const KinematicMap k = canonical_map("identity_circle");
  std::vector<Vec> pts;
  for (int i = 0; i <= 40; ++i) pts.push_back(Vec::Constant(1, wrap_two_pi(0.5 + 0.9 * std::sin(kTwoPi * i / 40))));
  pts.back() = pts.front();
  const WorkPath p = make_work_path(k.work_chart, pts, true);
  TrackingSpec exact;
  exact.method = TrackingMethod::pseudoinverse;
  const TrackingResult r = lift_path(k, exact, p.points.front(), p);
  for (size_t i = 0; i < p.size(); ++i) EXPECT_LE(std::abs(wrap_pi(r.configs[i * 16][0] - p.points[i][0])), 1e-9);
  EXPECT_LE(r.drift, 1e-9);
  // Damping shrinks each step by 1 / (1 + lambda^2); the correction term keeps the lag small.
  EXPECT_LE(lift_path(k, TrackingSpec{}, p.points.front(), p).max_error, 1e-6);
  EXPECT_LE(cyclicity_drift(k, TrackingSpec{}, p, p.points.front()), 1e-6);
}

TEST(Lift, PlanarQuarterCircle) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  const WorkPath p = arc(rr.work_chart, 2.5, 0, kPi / 2, 32);
  const TrackingResult r = lift_path(rr, TrackingSpec{}, rr_ik(2, 1, p.points.front()), p);
  EXPECT_LE(r.max_error, 1e-4);
  EXPECT_TRUE(r.singular_times.empty());
  for (size_t i = 0; i < p.size(); ++i) {
    const Vec q = r.configs[i * 16];
    const Vec ik = rr_ik(2, 1, p.points[i]);
    EXPECT_LE(std::abs(wrap_pi(q[0] - ik[0])) + std::abs(wrap_pi(q[1] - ik[1])), 1e-6) << i;
  }
  // Richardson check: doubling the steps moves the endpoint by far less than the tolerance.
  TrackingSpec fine;
  fine.steps_per_segment = 32;
  const Vec end_fine = lift_path(rr, fine, rr_ik(2, 1, p.points.front()), p).configs.back();
  EXPECT_LE((end_fine - r.configs.back()).norm(), 1e-8);
}

TEST(Lift, OuterBoundaryIsSingularEncounter) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  // Radial run onto radius 3, then a dwell there so the correction term settles.
  const WorkPath p = make_work_path(rr.work_chart, {Eigen::Vector2d(2, 0), Eigen::Vector2d(3, 0), Eigen::Vector2d(3, 0)},
                                    false, {0.0, 0.5, 1.0});
  const TrackingResult r = lift_path(rr, TrackingSpec{}, rr_ik(2, 1, p.points.front()), p);
  ASSERT_FALSE(r.singular_times.empty());
  EXPECT_GT(r.singular_times.front(), 0.45);
  EXPECT_LE(std::abs(std::sin(r.configs.back()[1])), 0.05);
}

TEST(Lift, RecordedMaxErrorIsTrueMaximum) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  const WorkPath p = arc(rr.work_chart, 2.2, 0.3, 2.0, 10);
  const TrackingResult r = lift_path(rr, TrackingSpec{}, rr_ik(2, 1, p.points.front()), p);
  EXPECT_EQ(r.max_error, *std::max_element(r.errors.begin(), r.errors.end()));
  EXPECT_EQ(r.errors.size(), r.configs.size());
}

TEST(Lift, ErrorSettlesAfterTransient) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> rad(1.5, 2.5), ang(-kPi, kPi), off(-5e-7, 5e-7);
  for (int t = 0; t < 30; ++t) {
    const double from = ang(rng);
    const WorkPath p = arc(rr.work_chart, rad(rng), from, from + 1.5, 12);
    const Vec start = rr_ik(2, 1, p.points.front()) + Eigen::Vector2d(off(rng), off(rng));
    const TrackingResult r = lift_path(rr, TrackingSpec{}, start, p);
    ASSERT_TRUE(r.singular_times.empty());
    const size_t half = r.errors.size() / 2;
    const double first = *std::max_element(r.errors.begin(), r.errors.begin() + half);
    const double last = *std::max_element(r.errors.begin() + half, r.errors.end());
    EXPECT_LE(last, first) << t;
  }
}

TEST(Lift, ReversalReturnsToStart) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> rad(1.5, 2.5), ang(-kPi, kPi);
  for (int t = 0; t < 20; ++t) {
    const double from = ang(rng);
    const WorkPath p = arc(rr.work_chart, rad(rng), from, from + 2.0, 16);
    const Vec start = rr_ik(2, 1, p.points.front());
    const TrackingResult there = lift_path(rr, TrackingSpec{}, start, p);
    const TrackingResult back = lift_path(rr, TrackingSpec{}, there.configs.back(), reversed(p));
    EXPECT_LE(rr.config_chart.distance(back.configs.back(), start), 1e-3);
  }
}

TEST(Lift, FourthOrderIntegration) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  const WorkPath p = arc(rr.work_chart, 2.0, 0.0, 1.2, 3);
  const Vec start = rr_ik(2, 1, p.points.front());
  auto end = [&](int steps) {
    TrackingSpec s;
    s.steps_per_segment = steps;
    return lift_path(rr, s, start, p).configs.back();
  };
  const Vec e1 = end(2), e2 = end(4), e3 = end(8);
  const double order = std::log2((e1 - e2).norm() / (e2 - e3).norm());
  EXPECT_GE(order, 3.5);
}

TEST(Velocity, PseudoinverseIsMinimumNorm) {
  const KinematicMap k = mechanism_map(parse_mechanism(data("spatial_4r.json")), -1, true);
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TrackingSpec s;
  s.method = TrackingMethod::pseudoinverse;
  int tested = 0;
  while (tested < 200) {
    Vec q(4), v(3);
    for (int i = 0; i < 4; ++i) q[i] = 3 * u(rng);
    for (int i = 0; i < 3; ++i) v[i] = u(rng);
    const Mat j = jacobian(k, q);
    if (singular_values(j)[2] < 1e-2) continue;
    ++tested;
    const Vec oracle = j.transpose() * (j * j.transpose()).inverse() * v;
    EXPECT_LE((commanded_velocity(j, v, s, q) - oracle).norm(), 1e-8);
  }
}

TEST(Velocity, ExtendedHoldsConstraint) {
  const KinematicMap k = mechanism_map(parse_mechanism(data("spatial_4r.json")), -1, true);
  TrackingSpec s;
  s.method = TrackingMethod::extended;
  lock_coordinate_sum(s, {1, 2}, 1.3);
  const Vec start = Eigen::Vector4d(0.2, 0.5, 0.8, 0.4);
  const Vec a = forward_kinematics(k, start);
  const Vec b = a + Eigen::Vector3d(0.05, -0.04, 0.03);
  const WorkPath p = make_work_path(k.work_chart, {a, b}, false);
  const TrackingResult r = lift_path(k, s, start, p);
  EXPECT_LE(r.max_error, 1e-6);
  for (const auto& q : r.configs) EXPECT_NEAR(q[1] + q[2], 1.3, 1e-8);

  TrackingSpec wrong = s;
  lock_coordinate_sum(wrong, {1}, 0.5);
  wrong.constraint = [](const Vec&) { return Vec::Zero(2).eval(); };
  EXPECT_THROW(lift_path(k, wrong, start, p), Error);
}

TEST(Cyclicity, PlanarInteriorCircle) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  const WorkPath loop = arc(rr.work_chart, 2.0, 0.0, kTwoPi, 64, true);
  EXPECT_LE(cyclicity_drift(rr, TrackingSpec{}, loop, rr_ik(2, 1, loop.points.front())), 1e-3);
}

TEST(Cyclicity, PointingLollipopThroughPole) {
  const KinematicMap p = canonical_map("pointing");
  const WorkPath loop = probe_loop(p.work_chart, Eigen::Vector3d(0, 0, 1), 0.2);
  EXPECT_GE(cyclicity_drift(p, TrackingSpec{}, loop, pointing_start(loop.points.front())), 0.5);
  EXPECT_THROW(cyclicity_drift(p, TrackingSpec{}, make_work_path(p.work_chart, {loop.points[0], loop.points[1]}, false),
                               pointing_start(loop.points.front())),
               Error);
}

TEST(Probe, PointingPoleDriftsStayLarge) {
  const KinematicMap p = canonical_map("pointing");
  const auto rows = shrinking_loop_probe(p, TrackingSpec{}, Eigen::Vector3d(0, 0, 1), {0.4, 0.2, 0.1}, pointing_start);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) EXPECT_GE(row.drift, 0.1) << row.radius;
}

TEST(Probe, PlanarInteriorDriftsVanish) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  const auto ik = [](const Vec& w) { return Vec(rr_ik(2, 1, w)); };
  const auto rows = shrinking_loop_probe(rr, TrackingSpec{}, Eigen::Vector2d(2, 0), {0.4, 0.2, 0.1}, ik);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) EXPECT_LE(row.drift, 1e-3);
  EXPECT_THROW(shrinking_loop_probe(rr, TrackingSpec{}, Eigen::Vector2d(2, 0), {0.1, 0.2}, ik), Error);
}

TEST(Probe, IdentityCircleZeroDrift) {
  const KinematicMap k = canonical_map("identity_circle");
  const auto rows = shrinking_loop_probe(k, TrackingSpec{}, Vec::Constant(1, 1.0), {0.4, 0.2, 0.1},
                                         [](const Vec& w) { return w; });
  for (const auto& row : rows) EXPECT_LE(row.drift, 1e-6);
}

TEST(Csv, WorkPathRoundTrip) {
  const KinematicMap p = canonical_map("pointing");
  const WorkPath loop = probe_loop(p.work_chart, Eigen::Vector3d(0, 0, 1), 0.4);
  const std::string text = work_path_csv(loop);
  const WorkPath back = parse_work_path_csv(p.work_chart, text, true);
  EXPECT_EQ(work_path_csv(back), text);
  ASSERT_EQ(back.size(), loop.size());
  for (size_t i = 0; i < loop.size(); ++i) EXPECT_LE((back.points[i] - loop.points[i]).norm(), 1e-15);
  EXPECT_THROW(parse_work_path_csv(p.work_chart, "t,w0\n0,1\n1,2\n", false), Error);
}

TEST(Csv, TrackingResultColumns) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  const WorkPath p = arc(rr.work_chart, 2.5, 0, 0.5, 2);
  const TrackingResult r = lift_path(rr, TrackingSpec{}, rr_ik(2, 1, p.points.front()), p);
  const std::string text = tracking_result_csv(r);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,q0,q1,tracking_error,smallest_sv");
  EXPECT_EQ(static_cast<size_t>(std::count(text.begin(), text.end(), '\n')), r.t.size() + 1);
}
