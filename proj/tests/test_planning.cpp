#include <gtest/gtest.h>

#include <set>

#include "kinmap/planning.hpp"
#include "kinmap/validation.hpp"

using namespace kinmap;

namespace {

bool has_witness(const ValidationReport& r, const std::string& check) {
  for (const auto& w : r.witnesses)
    if (w.check == check) return true;
  return false;
}

int max_order(const ManipulationPlan& p, int n) {
  const PlanGrid g(p.map, n);
  return measure_instability(p, n, 2.0 * *std::max_element(g.spacing.begin(), g.spacing.end())).max_order;
}

}  // namespace

TEST(Section, PlanarElbowUp) {
  const KinematicMap k = canonical_map("planar_rr", {2, 1});
  const SectionPiece s = canonical_section(k, "elbow_up");
  EXPECT_LE(s.section(Eigen::Vector2d(3, 0)).norm(), 1e-12);
  const Vec c = s.section(Eigen::Vector2d(2, 1));
  EXPECT_LE((forward_kinematics(k, c) - Eigen::Vector2d(2, 1)).norm(), 1e-9);
  const Vec d = canonical_section(k, "elbow_down").section(Eigen::Vector2d(2, 1));
  EXPECT_NEAR(d[1], -c[1], 1e-12);
}

TEST(Section, PointingGeoUndefinedAtPole) {
  const KinematicMap k = canonical_map("pointing");
  try {
    canonical_section(k, "geo").section(Eigen::Vector3d(0, 0, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::domain);
  }
  EXPECT_THROW(canonical_section(k, "elbow_up"), Error);
}

TEST(Section, ResidualsVanish) {
  const std::vector<std::pair<KinematicMap, std::vector<std::string>>> cases = {
      {canonical_map("planar_rr", {2, 1}), {"elbow_up", "elbow_down"}},
      {canonical_map("scara", {2, 1, 0, 1}), {"elbow_up", "elbow_down"}},
      {canonical_map("pointing"), {"geo", "geo_flip", "pole"}},
      {canonical_map("identity_torus"), {"identity"}},
      {canonical_map("h_fixture"), {"low", "high"}},
  };
  for (const auto& [k, branches] : cases) {
    for (const auto& b : branches) {
      size_t checked = 0;
      const double res = section_residual(k, canonical_section(k, b), k.work_chart.chart().dimension() > 2 ? 20 : 101, &checked);
      EXPECT_GT(checked, 0u) << k.tag << " " << b;
      EXPECT_LE(res, 1e-9) << k.tag << " " << b;
    }
  }
  for (const auto& s : pointing_csec_cover(canonical_map("pointing")))
    EXPECT_LE(section_residual(canonical_map("pointing"), s, 61), 1e-9) << s.branch;
  for (const auto& s : half_annulus_csec_cover(canonical_map("planar_rr", {2, 1})))
    EXPECT_LE(section_residual(canonical_map("planar_rr", {2, 1}), s, 61), 1e-9) << s.branch;
}

TEST(Builtin, PieceCounts) {
  const std::vector<std::pair<std::string, int>> expected = {
      {"identity_interval", 1}, {"identity_circle", 2}, {"identity_torus", 3}, {"planar_rr", 3},
      {"planar_rr_csec", 4},    {"scara", 3},           {"pointing", 5},       {"h_fixture", 2}};
  ASSERT_EQ(builtin_plan_names().size(), expected.size());
  for (const auto& [name, count] : expected) EXPECT_EQ(builtin_plan(name).piece_count(), count) << name;
  try {
    builtin_plan("delta");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_name);
  }
}

TEST(Builtin, ValidateOnSmallGrids) {
  const std::vector<std::pair<std::string, int>> runs = {
      {"identity_interval", 21}, {"identity_circle", 24}, {"identity_torus", 8}, {"planar_rr", 8},
      {"planar_rr_csec", 6},     {"scara", 4},            {"pointing", 8},       {"h_fixture", 51}};
  for (const auto& [name, n] : runs) {
    const ManipulationPlan p = builtin_plan(name);
    const ValidationReport r = validate_plan(p, n);
    EXPECT_TRUE(r.pass()) << name << " uncovered=" << r.uncovered << " overlapped=" << r.overlapped
                          << " target=" << r.max_target_error << " ratio=" << r.max_ratio;
    EXPECT_EQ(r.samples, static_cast<size_t>(std::pow(n, p.map.config_dim() + p.map.work_chart.chart().dimension())));
    EXPECT_LE(r.max_endpoint_error, 1e-9);
    EXPECT_LE(r.max_target_error, 1e-6);
  }
}

TEST(Product, CountLaw) {
  const std::vector<std::string> names = {"identity_interval", "identity_circle", "identity_torus"};
  for (const auto& a : names) {
    for (const auto& b : names) {
      const ManipulationPlan f = builtin_plan(a), g = builtin_plan(b);
      const KinematicMap prod = identity_map(concat(f.map.config_chart, g.map.config_chart), a + "x" + b);
      const ManipulationPlan p = product_plan(f, g, prod);
      EXPECT_EQ(p.piece_count(), f.piece_count() + g.piece_count() - 1) << a << " x " << b;
      EXPECT_GE(p.piece_count(), std::max(f.piece_count(), g.piece_count()));
    }
  }
}

TEST(Product, CircleTimesCircleIsTorusPlan) {
  const ManipulationPlan p = product_plan(builtin_plan("identity_circle"), builtin_plan("identity_circle"),
                                          canonical_map("identity_torus"));
  EXPECT_EQ(p.piece_count(), 3);
  EXPECT_TRUE(validate_plan(p, 8).pass());
  const ManipulationPlan one = product_plan(builtin_plan("identity_interval"), builtin_plan("identity_interval"),
                                            identity_map({{ChartFactor::interval(0, 1), ChartFactor::interval(0, 1)}}, "square"));
  EXPECT_EQ(one.piece_count(), 1);
  EXPECT_TRUE(validate_plan(one, 6).pass());
}

TEST(Product, ScaraIsPlanarTimesInterval) {
  const ManipulationPlan p = product_plan(builtin_plan("planar_rr"), builtin_plan("identity_interval"),
                                          canonical_map("scara", {2, 1, 0, 1}));
  EXPECT_EQ(p.piece_count(), 3);
  EXPECT_THROW(product_plan(builtin_plan("planar_rr"), builtin_plan("identity_interval"), canonical_map("pointing")), Error);
}

TEST(Pullback, IdentityCircle) {
  const KinematicMap k = canonical_map("identity_circle");
  const ManipulationPlan p = pullback_plan(k, canonical_section(k, "identity"), builtin_plan("identity_circle"));
  EXPECT_EQ(p.piece_count(), 2);
  EXPECT_TRUE(validate_plan(p, 24).pass());
}

TEST(Combine, CountLaw) {
  const KinematicMap rr = canonical_map("planar_rr", {2, 1});
  const auto cat = standard_cat_cover(rr.config_chart);
  const auto sec = half_annulus_csec_cover(rr);
  EXPECT_EQ(cat.size(), 3u);
  EXPECT_EQ(sec.size(), 2u);
  EXPECT_EQ(combine_csec_cat(rr, cat, sec).piece_count(), 4);

  const KinematicMap p = canonical_map("pointing");
  const auto pc = pointing_csec_cover(p);
  EXPECT_EQ(combine_csec_cat(p, standard_cat_cover(p.config_chart), pc).piece_count(),
            static_cast<int>(standard_cat_cover(p.config_chart).size() + pc.size()) - 1);

  // Contractible configuration space: one categorical piece, so m pieces.
  const KinematicMap h = canonical_map("h_fixture");
  const auto hc = h_fixture_csec_cover(h);
  const auto single = standard_cat_cover(h.config_chart);
  EXPECT_EQ(single.size(), 1u);
  const ManipulationPlan hp = combine_csec_cat(h, single, hc);
  EXPECT_EQ(hp.piece_count(), static_cast<int>(hc.size()));
  EXPECT_TRUE(validate_plan(hp, 51).pass());
}

TEST(Validate, DeletedDomainIsCoverageFailure) {
  ManipulationPlan p = builtin_plan("planar_rr");
  p.pieces[1].domain = Predicate::negate(Predicate::always());
  const ValidationReport r = validate_plan(p, 6);
  EXPECT_FALSE(r.pass());
  EXPECT_GT(r.uncovered, 0u);
  EXPECT_TRUE(has_witness(r, "coverage"));
}

TEST(Validate, SwappedSectionsFailAtPathEnd) {
  ManipulationPlan p = builtin_plan("h_fixture");
  std::swap(p.pieces[0].path, p.pieces[1].path);
  std::swap(p.pieces[0].sampler, p.pieces[1].sampler);
  const ValidationReport r = validate_plan(p, 21);
  EXPECT_FALSE(r.pass());
  EXPECT_GT(r.endpoint_failures + r.target_failures, 0u);
  EXPECT_TRUE(has_witness(r, "endpoint") || has_witness(r, "target"));
}

TEST(Validate, WrongMapRejected) {
  EXPECT_THROW(validate_plan(builtin_plan("planar_rr"), canonical_map("pointing"), 4), Error);
  EXPECT_TRUE(validate_plan(builtin_plan("planar_rr"), canonical_map("planar_rr", {2, 1}), 4).pass());
}

TEST(Instability, KnownOrders) {
  EXPECT_EQ(max_order(builtin_plan("identity_interval"), 21), 1);
  EXPECT_EQ(max_order(builtin_plan("identity_circle"), 24), 2);
  EXPECT_EQ(max_order(builtin_plan("identity_torus"), 8), 3);
  EXPECT_EQ(max_order(builtin_plan("planar_rr"), 8), 3);
}

TEST(Instability, SandwichAndCitedBounds) {
  for (const auto& name : builtin_plan_names()) {
    if (name == "scara") continue;  // six-dimensional grid; covered by the acceptance run
    const ManipulationPlan p = builtin_plan(name);
    const int n = p.map.config_dim() + p.map.work_chart.chart().dimension() > 2 ? 8 : 24;
    const int o = max_order(p, n);
    EXPECT_GE(o, 1) << name;
    EXPECT_LE(o, p.piece_count()) << name;
    if (const KnownValue* kv = known_value(name == "planar_rr_csec" ? "planar_rr" : name, "TC")) {
      EXPECT_GE(o, kv->lo) << name;
    }
  }
}

TEST(Instability, WitnessCarriesMaximalOrder) {
  const ManipulationPlan p = builtin_plan("identity_circle");
  const PlanGrid g(p.map, 24);
  const InstabilityReport r = measure_instability(p, 24, 2.0 * g.spacing[0]);
  ASSERT_EQ(r.witness.size(), 2);
  // The witness sits on a place where both pieces accumulate.
  const double d = std::abs(wrap_pi(r.witness[1] - r.witness[0]));
  EXPECT_TRUE(d < 0.6 || d > kPi - 0.6) << d;
  EXPECT_EQ(r.piece_count, 2);
  EXPECT_TRUE(r.separated);
}

TEST(Instability, MonotoneInEps) {
  for (const char* name : {"identity_circle", "h_fixture", "planar_rr"}) {
    const ManipulationPlan p = builtin_plan(name);
    const int n = std::string(name) == "planar_rr" ? 6 : 24;
    const PlanGrid g(p.map, n);
    const double h = *std::max_element(g.spacing.begin(), g.spacing.end());
    int prev = 0;
    for (double m : {2.0, 3.0, 5.0, 8.0}) {
      const int o = measure_instability(p, n, m * h).max_order;
      EXPECT_GE(o, prev) << name << " eps=" << m;
      prev = o;
    }
  }
  EXPECT_THROW(measure_instability(builtin_plan("identity_circle"), 24, 0.01), Error);
}

TEST(Disjointify, DuplicateFullPieceDropped) {
  ManipulationPlan p = builtin_plan("identity_interval");
  p.pieces.push_back(p.pieces.front());
  const ManipulationPlan d = disjointify(p, 21);
  EXPECT_EQ(d.piece_count(), 1);
  EXPECT_TRUE(validate_plan(d, 21).pass());
}

TEST(Disjointify, OverlappingTorusDomains) {
  // Closed circle pieces D >= 0 and D <= 0 overlap where D = 0; the shared
  // straight-line formula agrees there, so each piece keeps its contract.
  ManipulationPlan circle = builtin_plan("identity_circle");
  circle.pieces[1].domain = Predicate::clause(Space::D, 0, Rel::le, 0.0);
  const ManipulationPlan wide = product_plan(circle, circle, canonical_map("identity_torus"));
  ASSERT_EQ(wide.piece_count(), 3);
  EXPECT_GT(validate_plan(wide, 8).overlapped, 0u);
  const ManipulationPlan d = disjointify(wide, 8);
  EXPECT_EQ(d.piece_count(), 3);
  EXPECT_TRUE(validate_plan(d, 8).pass());
}

TEST(Disjointify, GapIsReported) {
  ManipulationPlan p = builtin_plan("identity_circle");
  p.pieces.pop_back();
  try {
    disjointify(p, 12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::coverage_gap);
  }
}

TEST(HFixture, GapOnlyAtOne) {
  EXPECT_EQ(h_fixture_gap(0.5), 0.0);
  EXPECT_EQ(h_fixture_gap(1.0), 1.0);
  EXPECT_EQ(h_fixture_gap(1.5), 0.0);
  int nonzero = 0;
  for (int i = 0; i <= 2000; ++i) {
    const double y = i * 1e-3;
    if (h_fixture_gap(y) != 0.0) {
      ++nonzero;
      EXPECT_EQ(i, 1000);
    }
  }
  EXPECT_EQ(nonzero, 1);
  EXPECT_THROW(h_fixture_gap(2.5), Error);
}

TEST(HFixture, TwoPieceFiltrationValidates) {
  const ManipulationPlan p = builtin_plan("h_fixture");
  for (int n : {100, 101, 150}) EXPECT_TRUE(validate_plan(p, n).pass()) << n;
}

TEST(HFixture, SinglePieceModulusMatchesValidation) {
  const ManipulationPlan p = h_fixture_single_piece_plan();
  EXPECT_EQ(p.piece_count(), 1);
  for (int n : {100, 101, 150, 151, 199, 200}) {
    const ValidationReport r = validate_plan(p, n);
    EXPECT_TRUE(r.coverage_ok());
    EXPECT_NEAR(r.max_ratio, h_fixture_single_piece_modulus(n), 1e-6 * r.max_ratio) << n;
    EXPECT_EQ(r.pass(), h_fixture_single_piece_modulus(n) < 50.0) << n;
  }
}

TEST(KnownValues, CitedAndConsistent) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& v : known_values()) {
    EXPECT_FALSE(v.citation.empty()) << v.fixture;
    EXPECT_LE(v.lo, v.hi);
    EXPECT_TRUE(seen.insert({v.fixture, v.quantity}).second);
  }
  ASSERT_NE(known_value("planar_rr", "TC"), nullptr);
  EXPECT_EQ(known_value("planar_rr", "TC")->lo, 3);
  EXPECT_EQ(known_value("pointing", "TC")->hi, 4);
  EXPECT_TRUE(known_value("identity_torus", "cat")->external);
  EXPECT_EQ(known_value("pointing", "cat"), nullptr);
}
