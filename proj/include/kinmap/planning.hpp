#pragma once

// Manipulation plans: partitions of C x W into domains, each carrying a
// continuous rule that produces a configuration path from c to some
// preimage of w. Constructors cover identity maps, pullbacks along global
// sections, products, and the cat/csec combination; disjointify turns an
// ordered overlapping cover into a partition.

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinmap/charts.hpp"
#include "kinmap/error.hpp"
#include "kinmap/kinematics.hpp"
#include "kinmap/predicate.hpp"

namespace kinmap {

/// A working-space point together with its chart coordinates.
struct WorkSample {
  Vec point;
  Vec chart;
};

inline WorkSample work_sample_from_chart(const WorkChart& w, const Vec& chart) { return {w.point_from_chart(chart), chart}; }
inline WorkSample work_sample_from_point(const WorkChart& w, const Vec& point) { return {point, w.chart_from_point(point)}; }

using PathFn = std::function<Vec(const Vec& c, const WorkSample& w, double t)>;

inline constexpr int kPathIntervals = 192;  // 64 per third

struct PathInC {
  std::vector<double> t;
  std::vector<Vec> samples;
};

inline PathInC sample_path(const PathFn& f, const Vec& c, const WorkSample& w) {
  PathInC p;
  for (int i = 0; i <= kPathIntervals; ++i) {
    const double t = double(i) / kPathIntervals;
    p.t.push_back(t);
    p.samples.push_back(f(c, w, t));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Sections

/// Partial section of f over a W-chart domain. `section` returns real
/// coordinates that vary continuously over the domain; `deformation`, when
/// present, contracts the section image to c1 (K(w,0) = s(w), K(w,1) = c1).
struct SectionPiece {
  std::string map;
  std::string branch;
  Predicate domain;
  std::function<Vec(const Vec& w)> section;
  std::function<Vec(const Vec& w, double t)> deformation;
  Vec c1;

  bool categorical() const { return static_cast<bool>(deformation); }
};

/// Adds the straight-line contraction of the (real-valued) section image to c1.
inline SectionPiece with_contraction(SectionPiece s, const Vec& c1) {
  auto sec = s.section;
  s.c1 = c1;
  s.deformation = [sec, c1](const Vec& w, double t) { return Vec((1.0 - t) * sec(w) + t * c1); };
  return s;
}

namespace detail {

inline double longitude(double x, double y) {
  return (x == 0.0 && y == 0.0) ? 0.0 : wrap_two_pi(std::atan2(y, x));
}

[[noreturn]] inline void outside(const std::string& what) { throw Error(ErrorCode::domain, what); }

inline Vec elbow(double r1, double r2, double sign, const WorkChart& wc, const Vec& w) {
  const double r = std::hypot(w[0], w[1]);
  if (r < wc.r_min - 1e-9 || r > wc.r_max + 1e-9) outside("point outside the annulus");
  const double cb = std::clamp((r * r - r1 * r1 - r2 * r2) / (2.0 * r1 * r2), -1.0, 1.0);
  const double beta = sign * std::acos(cb);
  const double alpha = longitude(w[0], w[1]) - std::atan2(r2 * std::sin(beta), r1 + r2 * std::cos(beta));
  return Eigen::Vector2d(alpha, beta);
}

}  // namespace detail

/// Inverse-kinematic branches:
///   planar_rr, scara: elbow_up, elbow_down (global on the closed annulus)
///   pointing: geo, geo_flip (sphere minus poles), pole (the two poles)
///   identity_*: identity
///   h_fixture: low (y <= 1), high (y > 1)
inline SectionPiece canonical_section(const KinematicMap& k, const std::string& branch) {
  SectionPiece s;
  s.map = k.tag;
  s.branch = branch;
  const WorkChart wc = k.work_chart;
  auto bad = [&] { throw Error(ErrorCode::unknown_name, "section branch '" + branch + "' for map " + k.tag); };
  switch (k.kind) {
    case MapKind::planar_rr: case MapKind::scara: {
      if (branch != "elbow_up" && branch != "elbow_down") bad();
      const double r1 = k.params[0], r2 = k.params[1], sign = branch == "elbow_up" ? 1.0 : -1.0;
      const bool scara = k.kind == MapKind::scara;
      s.section = [r1, r2, sign, wc, scara](const Vec& w) {
        const Vec a = detail::elbow(r1, r2, sign, wc, w);
        if (!scara) return a;
        if (w[2] < wc.z_min - 1e-9 || w[2] > wc.z_max + 1e-9) detail::outside("height outside its interval");
        return Vec(Eigen::Vector3d(a[0], a[1], std::clamp(w[2], wc.z_min, wc.z_max)));
      };
      break;
    }
    case MapKind::pointing: {
      if (branch == "geo" || branch == "geo_flip") {
        const bool flip = branch == "geo_flip";
        s.domain = Predicate::all({Predicate::clause(Space::W, 0, Rel::gt, -1.0), Predicate::clause(Space::W, 0, Rel::lt, 1.0)});
        s.section = [flip](const Vec& w) {
          if (std::abs(w[2]) >= 1.0 || (w[0] == 0.0 && w[1] == 0.0)) detail::outside("longitude undefined at a pole");
          const double a = std::asin(std::clamp(w[2], -1.0, 1.0)), b = detail::longitude(w[0], w[1]);
          return flip ? Vec(Eigen::Vector2d(kPi - a, b + kPi)) : Vec(Eigen::Vector2d(a, b));
        };
      } else if (branch == "pole") {
        s.domain = Predicate::any({Predicate::clause(Space::W, 0, Rel::ge, 1.0), Predicate::clause(Space::W, 0, Rel::le, -1.0)});
        s.section = [](const Vec& w) {
          if (std::abs(std::abs(w[2]) - 1.0) > 1e-12) detail::outside("not a pole");
          return Vec(Eigen::Vector2d(w[2] > 0.0 ? kPi / 2 : -kPi / 2, 0.0));
        };
      } else {
        bad();
      }
      break;
    }
    case MapKind::identity: {
      if (branch != "identity") bad();
      const ConfigChart chart = k.config_chart;
      s.section = [chart](const Vec& w) {
        if (!chart.contains(w, 1e-9)) detail::outside("point outside the chart");
        return w;
      };
      break;
    }
    case MapKind::h_fixture: {
      if (branch == "low") {
        s.domain = Predicate::clause(Space::W, 0, Rel::le, 1.0);
        s.section = [](const Vec& w) {
          if (w[0] < 0.0 || w[0] > 1.0) detail::outside("low branch covers [0,1]");
          return w;
        };
      } else if (branch == "high") {
        s.domain = Predicate::clause(Space::W, 0, Rel::gt, 1.0);
        s.section = [](const Vec& w) {
          if (w[0] <= 1.0 || w[0] > 2.0) detail::outside("high branch covers (1,2]");
          Vec c = w;
          c[0] += 1.0;
          return c;
        };
      } else {
        bad();
      }
      break;
    }
    case MapKind::dh_chain: throw Error(ErrorCode::precondition, "no closed-form sections for DH chains");
  }
  return s;
}

/// Largest work-chart distance between f(s(w)) and w over the in-domain
/// samples of an n^dim grid of the working-space chart.
inline double section_residual(const KinematicMap& k, const SectionPiece& s, int n, size_t* checked = nullptr) {
  const ConfigChart wc = k.work_chart.chart();
  std::vector<std::vector<double>> axes;
  size_t total = 1;
  for (const auto& f : wc.factors) {
    axes.push_back(grid_axis(f, n));
    total *= static_cast<size_t>(n);
  }
  double worst = 0.0;
  size_t count = 0;
  Vec x(wc.dimension());
  for (size_t flat = 0; flat < total; ++flat) {
    size_t rest = flat;
    for (int a = wc.dimension() - 1; a >= 0; --a) {
      x[a] = axes[a][rest % n];
      rest /= n;
    }
    if (!s.domain(PredicateInput{nullptr, &x, nullptr})) continue;
    const WorkSample w = work_sample_from_chart(k.work_chart, x);
    const Vec c = s.section(w.point);
    worst = std::max(worst, k.work_chart.distance(forward_kinematics(k, k.config_chart.normalized(c)), w.point));
    ++count;
  }
  if (checked) *checked = count;
  return worst;
}

// ---------------------------------------------------------------------------
// Plans

/// Whole sampled path at t = i / kPathIntervals, one column per sample.
using PathSampler = std::function<Mat(const Vec& c, const WorkSample& w)>;

inline Vec path_times() { return Vec::LinSpaced(kPathIntervals + 1, 0.0, 1.0); }

struct PlanPiece {
  Predicate domain;
  PathFn path;
  std::string section;  // descriptor
  PathSampler sampler;  // optional batch form of path

  Mat sample(const Vec& c, const WorkSample& w) const {
    if (sampler) return sampler(c, w);
    Mat out(c.size(), kPathIntervals + 1);
    for (int i = 0; i <= kPathIntervals; ++i) out.col(i) = path(c, w, double(i) / kPathIntervals);
    return out;
  }
};

struct ManipulationPlan {
  KinematicMap map;
  std::vector<PlanPiece> pieces;
  std::function<Vec(const Vec& w)> target;  // configuration read by D clauses
  nlohmann::json recipe;
  std::string note;

  int piece_count() const { return static_cast<int>(pieces.size()); }

  /// D coordinates: wrapped difference from c to the target of w.
  Vec difference(const Vec& c, const WorkSample& w) const {
    if (!target) return Vec();
    return map.config_chart.difference(c, target(w.point));
  }

  /// Index of the first piece whose domain contains (c, w), or -1.
  int locate(const Vec& c, const WorkSample& w) const {
    const Vec d = difference(c, w);
    const PredicateInput in{&c, &w.chart, target ? &d : nullptr};
    for (int i = 0; i < piece_count(); ++i)
      if (pieces[i].domain(in)) return i;
    return -1;
  }

  /// Membership bitmask over all pieces (bit i set when piece i contains).
  unsigned membership(const Vec& c, const WorkSample& w) const {
    const Vec d = difference(c, w);
    const PredicateInput in{&c, &w.chart, target ? &d : nullptr};
    unsigned mask = 0;
    for (int i = 0; i < piece_count(); ++i)
      if (pieces[i].domain(in)) mask |= 1u << i;
    return mask;
  }
};

namespace detail {

inline nlohmann::json map_json(const KinematicMap& k) {
  return {{"map", k.tag}, {"params", k.params}};
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace detail

/// Motion plan for an identity map: one piece per interval-only chart, and a
/// product of two-piece circle plans {D >= 0}, {D < 0} otherwise. Every piece
/// moves along c + t * D.
inline ManipulationPlan identity_plan(const KinematicMap& k);

/// Plan for a product map from plans of the factors. Piece k is the union of
/// products of factor pieces i, j with i + j = k.
inline ManipulationPlan product_plan(const ManipulationPlan& f, const ManipulationPlan& g, const KinematicMap& product);

inline ManipulationPlan identity_plan(const KinematicMap& k) {
  require(k.kind == MapKind::identity, "identity plans need an identity map");
  const ConfigChart chart = k.config_chart;
  auto one_factor = [&](int a) {
    ManipulationPlan p;
    const ConfigChart fc{{chart.factors[a]}};
    p.map = identity_map(fc, chart.factors[a].is_circle() ? "identity_circle" : "identity_interval");
    if (!chart.factors[a].is_circle()) p.map.params = {chart.factors[a].lo, chart.factors[a].hi};
    p.target = [](const Vec& w) { return w; };
    PathFn lerp = [fc](const Vec& c, const WorkSample& w, double t) { return Vec(c + t * fc.difference(c, w.point)); };
    PathSampler batch = [fc](const Vec& c, const WorkSample& w) {
      return Mat(c.replicate(1, kPathIntervals + 1) + fc.difference(c, w.point) * path_times().transpose());
    };
    if (fc.factors[0].is_circle()) {
      p.pieces.push_back({Predicate::clause(Space::D, 0, Rel::ge, 0.0), lerp, "lerp", batch});
      p.pieces.push_back({Predicate::clause(Space::D, 0, Rel::lt, 0.0), lerp, "lerp", batch});
    } else {
      p.pieces.push_back({Predicate::always(), lerp, "lerp", batch});
    }
    p.recipe = {{"kind", "identity"}, {"map", p.map.tag}, {"params", p.map.params}};
    return p;
  };
  require(chart.dimension() >= 1, "empty chart");
  ManipulationPlan plan = one_factor(0);
  ConfigChart acc{{chart.factors[0]}};
  for (int a = 1; a < chart.dimension(); ++a) {
    acc = concat(acc, ConfigChart{{chart.factors[a]}});
    plan = product_plan(plan, one_factor(a), identity_map(acc, "identity"));
  }
  plan.map = k;
  plan.recipe = {{"kind", "identity"}, {"map", k.tag}, {"params", k.params}};
  return plan;
}

inline ManipulationPlan product_plan(const ManipulationPlan& f, const ManipulationPlan& g, const KinematicMap& product) {
  const int cf = f.map.config_dim(), cg = g.map.config_dim();
  const int wf = f.map.work_chart.chart().dimension(), wg = g.map.work_chart.chart().dimension();
  const int pf = f.map.work_chart.point_dim(), pg = g.map.work_chart.point_dim();
  require(product.config_dim() == cf + cg, "product map configuration dimension mismatch");
  require(product.work_chart.chart().dimension() == wf + wg, "product map working chart dimension mismatch");
  require(product.work_chart.point_dim() == pf + pg, "product map point dimension mismatch");

  auto fp = std::make_shared<const ManipulationPlan>(f);
  auto gp = std::make_shared<const ManipulationPlan>(g);
  ManipulationPlan out;
  out.map = product;
  if (f.target || g.target) {
    out.target = [fp, gp, pf, pg, cf, cg](const Vec& w) {
      const Vec a = fp->target ? fp->target(w.head(pf)) : Vec(Vec::Zero(cf));
      const Vec b = gp->target ? gp->target(w.tail(pg)) : Vec(Vec::Zero(cg));
      return detail::concat(a, b);
    };
  }
  const int nf = f.piece_count(), ng = g.piece_count();
  for (int k = 0; k <= nf + ng - 2; ++k) {
    std::vector<std::pair<int, int>> summands;
    std::vector<Predicate> parts;
    for (int i = 0; i < nf; ++i) {
      const int j = k - i;
      if (j < 0 || j >= ng) continue;
      summands.push_back({i, j});
      parts.push_back(Predicate::all({f.pieces[i].domain, g.pieces[j].domain.shifted(cf, wf, cf)}));
    }
    Predicate domain = parts.size() == 1 ? parts.front() : Predicate::any(parts);
    // Splits (c, w) into factor samples and finds the summand holding them.
    auto resolve = [fp, gp, summands, cf, wf, pf](const Vec& c, const WorkSample& w) {
      struct Split {
        Vec c1, c2;
        WorkSample w1, w2;
        int i, j;
      } r{c.head(cf), c.tail(c.size() - cf), {w.point.head(pf), w.chart.head(wf)},
          {w.point.tail(w.point.size() - pf), w.chart.tail(w.chart.size() - wf)}, -1, -1};
      const Vec d1 = fp->difference(r.c1, r.w1), d2 = gp->difference(r.c2, r.w2);
      const PredicateInput in1{&r.c1, &r.w1.chart, fp->target ? &d1 : nullptr};
      const PredicateInput in2{&r.c2, &r.w2.chart, gp->target ? &d2 : nullptr};
      for (const auto& [i, j] : summands) {
        if (fp->pieces[i].domain(in1) && gp->pieces[j].domain(in2)) {
          r.i = i;
          r.j = j;
          return r;
        }
      }
      throw Error(ErrorCode::precondition, "sample outside the product piece");
    };
    PathFn path = [fp, gp, resolve](const Vec& c, const WorkSample& w, double t) {
      const auto r = resolve(c, w);
      return detail::concat(fp->pieces[r.i].path(r.c1, r.w1, t), gp->pieces[r.j].path(r.c2, r.w2, t));
    };
    PathSampler batch = [fp, gp, resolve](const Vec& c, const WorkSample& w) {
      const auto r = resolve(c, w);
      Mat out(c.size(), kPathIntervals + 1);
      out << fp->pieces[r.i].sample(r.c1, r.w1), gp->pieces[r.j].sample(r.c2, r.w2);
      return out;
    };
    std::string desc;
    for (const auto& [i, j] : summands)
      desc += (desc.empty() ? "" : " | ") + f.pieces[i].section + " x " + g.pieces[j].section;
    out.pieces.push_back({domain, path, desc, batch});
  }
  out.recipe = detail::map_json(product);
  out.recipe["kind"] = "product";
  out.recipe["left"] = f.recipe;
  out.recipe["right"] = g.recipe;
  return out;
}

/// Pulls a motion plan on C back along a global section s: piece i holds
/// (c, w) when (c, s(w)) lies in base piece i, and moves along the base path
/// from c to s(w).
inline ManipulationPlan pullback_plan(const KinematicMap& k, const SectionPiece& s, const ManipulationPlan& base) {
  require(s.domain.op == Predicate::Op::always, "pullback needs a section defined on all of W");
  require(base.map.kind == MapKind::identity && base.map.config_chart == k.config_chart,
          "base plan must be a motion plan on the configuration space");
  auto bp = std::make_shared<const ManipulationPlan>(base);
  auto sec = s.section;
  ManipulationPlan out;
  out.map = k;
  out.target = sec;
  for (const auto& piece : base.pieces) {
    require(!piece.domain.uses(Space::W), "base plan domains must be written in C and D coordinates");
    PathFn path = [piece, sec](const Vec& c, const WorkSample& w, double t) {
      const Vec q = sec(w.point);
      return piece.path(c, WorkSample{q, q}, t);
    };
    PathSampler batch = [piece, sec](const Vec& c, const WorkSample& w) {
      const Vec q = sec(w.point);
      return piece.sample(c, WorkSample{q, q});
    };
    out.pieces.push_back({piece.domain, path, piece.section + " to " + s.branch, batch});
  }
  out.recipe = detail::map_json(k);
  out.recipe["kind"] = "pullback";
  out.recipe["section"] = s.branch;
  out.recipe["base"] = base.recipe;
  return out;
}

// ---------------------------------------------------------------------------
// cat / csec combination

/// Subset of C with a deformation H(c, t) to the point c0 (H(c,0) = c).
struct CatPiece {
  Predicate domain;
  std::function<Vec(const Vec& c, double t)> deformation;
  Vec c0;
};

/// Cover of a product chart by (circle count + 1) pieces: piece k holds the
/// configurations with exactly k circle coordinates in the open arc (pi, 2*pi).
/// Each piece deforms linearly (in [0, 2*pi) coordinates) to the origin,
/// interval coordinates to their lower end.
inline std::vector<CatPiece> standard_cat_cover(const ConfigChart& chart) {
  std::vector<int> circles;
  Vec c0 = Vec::Zero(chart.dimension());
  for (int a = 0; a < chart.dimension(); ++a) {
    if (chart.factors[a].is_circle()) circles.push_back(a);
    else c0[a] = chart.factors[a].lo;
  }
  auto h = [chart, c0](const Vec& c, double t) { return Vec((1.0 - t) * chart.normalized(c) + t * c0); };
  const int n = static_cast<int>(circles.size());
  std::vector<CatPiece> out;
  for (int k = 0; k <= n; ++k) {
    std::vector<Predicate> choices;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != k) continue;
      std::vector<Predicate> clauses;
      for (int b = 0; b < n; ++b)
        clauses.push_back(Predicate::clause(Space::C, circles[b], (mask >> b) & 1u ? Rel::gt : Rel::le, kPi));
      choices.push_back(clauses.size() == 1 ? clauses.front() : Predicate::all(clauses));
    }
    Predicate domain = n == 0 ? Predicate::always() : (choices.size() == 1 ? choices.front() : Predicate::any(choices));
    out.push_back({domain, h, c0});
  }
  return out;
}

/// Categorical sections of the pointing map: the two poles, the closed lune
/// 0 <= lon <= pi and the open lune pi < lon < 2*pi (poles removed), each
/// contracted linearly to the origin of T^2.
inline std::vector<SectionPiece> pointing_csec_cover(const KinematicMap& k) {
  const Vec origin = Vec::Zero(2);
  SectionPiece poles = with_contraction(canonical_section(k, "pole"), origin);
  SectionPiece west = with_contraction(canonical_section(k, "geo"), origin);
  SectionPiece east = west;
  west.branch = "geo_closed_lune";
  west.domain = Predicate::all({west.domain, Predicate::clause(Space::W, 1, Rel::le, kPi)});
  east.branch = "geo_open_lune";
  east.domain = Predicate::all({east.domain, Predicate::clause(Space::W, 1, Rel::gt, kPi)});
  return {poles, west, east};
}

/// Categorical sections of an elbow branch over the closed half-annulus
/// 0 <= lon <= pi and the open half-annulus pi < lon < 2*pi.
inline std::vector<SectionPiece> half_annulus_csec_cover(const KinematicMap& k, const std::string& branch = "elbow_up") {
  const SectionPiece s = with_contraction(canonical_section(k, branch), Vec::Zero(k.config_dim()));
  SectionPiece a = s, b = s;
  a.branch = branch + "_closed_half";
  a.domain = Predicate::clause(Space::W, 0, Rel::le, kPi);
  b.branch = branch + "_open_half";
  b.domain = Predicate::clause(Space::W, 0, Rel::gt, kPi);
  return {a, b};
}

/// h fixture split {y <= 1} (s = y), {y > 1} (s = y + 1), contracted to 0.
inline std::vector<SectionPiece> h_fixture_csec_cover(const KinematicMap& k) {
  const Vec origin = Vec::Zero(1);
  return {with_contraction(canonical_section(k, "low"), origin), with_contraction(canonical_section(k, "high"), origin)};
}

using Connector = std::function<Vec(const Vec& c0, const Vec& c1, double t)>;

inline Vec straight_connector(const Vec& c0, const Vec& c1, double t) { return (1.0 - t) * c0 + t * c1; }

/// Plan with |cat| + |sec| - 1 pieces; piece k is the union of C_i x A_j over
/// i + j = k. Paths follow H(c, 3t) on [0,1/3], the connector from c0 to c1 on
/// [1/3,2/3] and K(w, 3 - 3t) on [2/3,1].
inline ManipulationPlan combine_csec_cat(const KinematicMap& k, const std::vector<CatPiece>& cats,
                                         const std::vector<SectionPiece>& secs, Connector connector = straight_connector,
                                         nlohmann::json recipe = nullptr) {
  require(!cats.empty() && !secs.empty(), "both covers must be nonempty");
  for (const auto& c : cats) require(static_cast<bool>(c.deformation), "cat piece without deformation");
  for (const auto& s : secs) require(s.categorical(), "section piece '" + s.branch + "' without deformation");
  auto cp = std::make_shared<const std::vector<CatPiece>>(cats);
  auto sp = std::make_shared<const std::vector<SectionPiece>>(secs);
  ManipulationPlan out;
  out.map = k;
  const int nc = static_cast<int>(cats.size()), ns = static_cast<int>(secs.size());
  for (int q = 0; q <= nc + ns - 2; ++q) {
    std::vector<std::pair<int, int>> summands;
    std::vector<Predicate> parts;
    std::string desc;
    for (int i = 0; i < nc; ++i) {
      const int j = q - i;
      if (j < 0 || j >= ns) continue;
      summands.push_back({i, j});
      parts.push_back(Predicate::all({cats[i].domain, secs[j].domain}));
      desc += (desc.empty() ? "" : " | ") + ("cat" + std::to_string(i) + " x " + secs[j].branch);
    }
    auto resolve = [cp, sp, summands](const Vec& c, const WorkSample& w) {
      const PredicateInput in{&c, &w.chart, nullptr};
      for (const auto& [i, j] : summands)
        if ((*cp)[i].domain(in) && (*sp)[j].domain(in)) return std::pair<const CatPiece*, const SectionPiece*>{&(*cp)[i], &(*sp)[j]};
      throw Error(ErrorCode::precondition, "sample outside the combined piece");
    };
    auto at = [connector](const CatPiece& cat, const SectionPiece& sec, const Vec& c, const WorkSample& w, double t) {
      if (t <= 1.0 / 3.0) return cat.deformation(c, std::min(1.0, 3.0 * t));
      if (t <= 2.0 / 3.0) return connector(cat.c0, sec.c1, std::clamp(3.0 * t - 1.0, 0.0, 1.0));
      return sec.deformation(w.point, std::clamp(3.0 - 3.0 * t, 0.0, 1.0));
    };
    PathFn path = [resolve, at](const Vec& c, const WorkSample& w, double t) {
      const auto [cat, sec] = resolve(c, w);
      return at(*cat, *sec, c, w, t);
    };
    PathSampler batch = [resolve, at](const Vec& c, const WorkSample& w) {
      const auto [cat, sec] = resolve(c, w);
      Mat out(c.size(), kPathIntervals + 1);
      for (int i = 0; i <= kPathIntervals; ++i) out.col(i) = at(*cat, *sec, c, w, double(i) / kPathIntervals);
      return out;
    };
    out.pieces.push_back({parts.size() == 1 ? parts.front() : Predicate::any(parts), path, desc, batch});
  }
  if (recipe.is_null()) {
    recipe = detail::map_json(k);
    recipe["kind"] = "combine";
  }
  out.recipe = recipe;
  return out;
}

/// Two-piece plan for the h fixture: {y <= 1} moves to y, {y > 1} to y + 1.
inline ManipulationPlan h_fixture_plan() {
  const KinematicMap k = canonical_map("h_fixture");
  ManipulationPlan p;
  p.map = k;
  const ConfigChart chart = k.config_chart;
  for (const char* branch : {"low", "high"}) {
    const SectionPiece s = canonical_section(k, branch);
    auto sec = s.section;
    PathFn path = [sec](const Vec& c, const WorkSample& w, double t) { return Vec(c + t * (sec(w.point) - c)); };
    p.pieces.push_back({s.domain, path, std::string("lerp to ") + branch, {}});
  }
  p.recipe = {{"kind", "h_fixture"}};
  return p;
}

/// Best single-piece candidate for h: moves to y below 1, to the midpoint 1.5
/// of the fibre [1, 2] at y = 1, and to y + 1 above.
inline ManipulationPlan h_fixture_single_piece_plan() {
  ManipulationPlan p;
  p.map = canonical_map("h_fixture");
  PathFn path = [](const Vec& c, const WorkSample& w, double t) {
    const double y = w.point[0];
    Vec s(1);
    s[0] = y < 1.0 ? y : (y == 1.0 ? 1.5 : y + 1.0);
    return Vec(c + t * (s - c));
  };
  p.pieces.push_back({Predicate::always(), path, "lerp to midpoint section", {}});
  p.recipe = {{"kind", "h_fixture_single"}};
  return p;
}

/// Smallest continuity ratio any single-piece plan for h can reach on an n x n
/// grid. W-neighbours straddling y = 1 at equal c force a jump of 1 + dy; when
/// y = 1 is a grid value the two jumps around it total 1 + 2 dy and are best
/// split evenly. Other neighbour pairs stay at ratio 1.
inline double h_fixture_single_piece_modulus(int n) {
  require(n >= 2, "grid resolution must be at least 2");
  const double dy = 2.0 / (n - 1);
  const bool hits_one = (n - 1) % 2 == 0;
  return std::max(1.0, hits_one ? (1.0 + 2.0 * dy) / (2.0 * dy) : (1.0 + dy) / dy);
}

/// Forced-section jump at y: |lim from the right - lim from the left| of the
/// only sections available near y (h^-1(y) = {y} below 1, [1,2] at 1, {y+1}
/// above 1).
inline double h_fixture_gap(double y) {
  if (!(y >= 0.0 && y <= 2.0)) throw Error(ErrorCode::precondition, "y must lie in [0,2]");
  const double left = y <= 1.0 ? y : y + 1.0;
  const double right = y < 1.0 ? y : y + 1.0;
  return std::abs(right - left);
}

// ---------------------------------------------------------------------------
// Builtins and reference values

struct KnownValue {
  std::string fixture;
  std::string quantity;  // TC, cat, csec
  int lo = 0;
  int hi = 0;            // lo == hi when the value is known exactly
  std::string citation;
  bool external = false; // standard constant rather than a worked example
};

inline const std::vector<KnownValue>& known_values() {
  static const std::vector<KnownValue> table = {
      {"planar_rr", "TC", 3, 3, "worked example: planar two-arm kinematic map, complexity 3", false},
      {"scara", "TC", 3, 3, "worked example: planar two-arm map times the identity on an interval, complexity 3", false},
      {"pointing", "TC", 3, 4, "worked example: universal-joint pointing map, complexity either 3 or 4", false},
      {"identity_interval", "TC", 1, 1, "external reference: contractible spaces have TC 1", true},
      {"identity_circle", "TC", 2, 2, "external reference: TC(S^1) = 2", true},
      {"identity_torus", "TC", 3, 3, "external reference: TC(T^2) = 3", true},
      {"identity_torus", "cat", 3, 3, "external reference: cat(T^2) = 3", true},
  };
  return table;
}

inline const KnownValue* known_value(const std::string& fixture, const std::string& quantity) {
  for (const auto& v : known_values())
    if (v.fixture == fixture && v.quantity == quantity) return &v;
  return nullptr;
}

inline const std::vector<std::string>& builtin_plan_names() {
  static const std::vector<std::string> names = {"identity_interval", "identity_circle", "identity_torus", "planar_rr",
                                                 "planar_rr_csec",    "scara",           "pointing",       "h_fixture"};
  return names;
}

/// Builtin plans. planar_rr uses R1 = 2, R2 = 1; scara adds heights [0, 1].
inline ManipulationPlan builtin_plan(const std::string& name) {
  ManipulationPlan p;
  if (name == "identity_interval" || name == "identity_circle" || name == "identity_torus") {
    p = identity_plan(canonical_map(name));
  } else if (name == "planar_rr") {
    const KinematicMap k = canonical_map("planar_rr", {2.0, 1.0});
    p = pullback_plan(k, canonical_section(k, "elbow_up"), identity_plan(canonical_map("identity_torus")));
  } else if (name == "planar_rr_csec") {
    const KinematicMap k = canonical_map("planar_rr", {2.0, 1.0});
    p = combine_csec_cat(k, standard_cat_cover(k.config_chart), half_annulus_csec_cover(k));
  } else if (name == "scara") {
    p = product_plan(builtin_plan("planar_rr"), builtin_plan("identity_interval"),
                     canonical_map("scara", {2.0, 1.0, 0.0, 1.0}));
  } else if (name == "pointing") {
    const KinematicMap k = canonical_map("pointing");
    p = combine_csec_cat(k, standard_cat_cover(k.config_chart), pointing_csec_cover(k));
  } else if (name == "h_fixture") {
    p = h_fixture_plan();
  } else {
    throw Error(ErrorCode::unknown_name, "builtin plan '" + name + "'");
  }
  p.recipe = {{"kind", "builtin"}, {"name", name}};
  return p;
}

}  // namespace kinmap
