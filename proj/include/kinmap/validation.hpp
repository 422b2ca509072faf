#pragma once

// Grid checks for manipulation plans: coverage, endpoint and continuity
// (Lipschitz modulus) validation, instability-order measurement and
// disjointification of overlapping covers.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kinmap/charts.hpp"
#include "kinmap/csv.hpp"
#include "kinmap/error.hpp"
#include "kinmap/planning.hpp"

namespace kinmap {

/// Product grid over the configuration chart followed by the working chart.
struct PlanGrid {
  std::vector<ChartFactor> factors;
  std::vector<std::vector<double>> axes;
  std::vector<double> spacing;
  int config_dim = 0;
  int n = 0;
  size_t total = 1;

  PlanGrid(const KinematicMap& k, int resolution) : n(resolution) {
    require(resolution >= 2, "grid resolution must be at least 2");
    require(k.work_chart.gridable(), "working chart '" + k.work_chart.describe() + "' cannot be gridded");
    config_dim = k.config_dim();
    factors = concat(k.config_chart, k.work_chart.chart()).factors;
    for (const auto& f : factors) {
      axes.push_back(grid_axis(f, n));
      spacing.push_back(grid_spacing(f, n));
      require(total <= 10'000'000 / static_cast<size_t>(n), "grid exceeds 10^7 samples");
      total *= static_cast<size_t>(n);
    }
  }

  int dim() const { return static_cast<int>(factors.size()); }

  std::vector<int> index(size_t flat) const {
    std::vector<int> idx(dim());
    for (int a = dim() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % n);
      flat /= n;
    }
    return idx;
  }

  size_t flat(const std::vector<int>& idx) const {
    size_t f = 0;
    for (int a = 0; a < dim(); ++a) f = f * n + idx[a];
    return f;
  }

  Vec coords(const std::vector<int>& idx) const {
    Vec x(dim());
    for (int a = 0; a < dim(); ++a) x[a] = axes[a][idx[a]];
    return x;
  }

  /// Neighbor one step along axis a (+1), wrapping on circles; -1 at an end.
  long step(const std::vector<int>& idx, int a, int delta) const {
    int j = idx[a] + delta;
    if (j < 0 || j >= n) {
      if (!factors[a].is_circle()) return -1;
      j = (j + n) % n;
    }
    std::vector<int> other = idx;
    other[a] = j;
    return static_cast<long>(flat(other));
  }
};

struct ValidationTolerances {
  double endpoint = 1e-9;
  double target = 1e-6;
  double modulus = 50.0;  // L
};

struct Witness {
  std::string check;  // coverage, endpoint, target, continuity
  int piece = -1;
  Vec coords;         // C coordinates then W chart coordinates
  Vec other;          // neighbor for continuity witnesses
  double value = 0.0;
};

struct ValidationReport {
  int grid = 0;
  size_t samples = 0;
  size_t uncovered = 0;
  size_t overlapped = 0;
  size_t endpoint_failures = 0;
  size_t target_failures = 0;
  size_t continuity_failures = 0;
  size_t neighbor_pairs = 0;
  double max_endpoint_error = 0.0;
  double max_target_error = 0.0;
  double max_ratio = 0.0;
  std::vector<size_t> piece_samples;
  std::vector<Witness> witnesses;  // first few per check

  bool coverage_ok() const { return uncovered == 0 && overlapped == 0; }
  bool pass() const { return coverage_ok() && endpoint_failures == 0 && target_failures == 0 && continuity_failures == 0; }
};

namespace detail {

struct GridSample {
  Vec c;
  WorkSample w;
};

inline GridSample grid_sample(const ManipulationPlan& plan, const PlanGrid& g, const std::vector<int>& idx) {
  const Vec x = g.coords(idx);
  GridSample s;
  s.c = x.head(g.config_dim);
  s.w = work_sample_from_chart(plan.map.work_chart, x.tail(g.dim() - g.config_dim));
  return s;
}

/// Largest chart distance between matching columns of two sampled paths.
inline double sup_distance(const ConfigChart& cc, const Mat& a, const Mat& b) {
  Mat d = b - a;
  for (int i = 0; i < cc.dimension(); ++i)
    if (cc.factors[i].is_circle()) d.row(i) = d.row(i).unaryExpr([](double x) { return wrap_pi(x); });
  return d.colwise().norm().maxCoeff();
}

inline void add_witness(ValidationReport& r, Witness w) {
  size_t same = 0;
  for (const auto& x : r.witnesses)
    if (x.check == w.check) ++same;
  if (same < 5) r.witnesses.push_back(std::move(w));
}

}  // namespace detail

/// Checks a plan on an n^(dim C + dim W) grid: every sample in exactly one
/// domain; path(0) = c and f(path(1)) = w; for in-domain neighbors one step
/// apart along any axis, sup_t d(path1(t), path2(t)) <= L * input distance.
inline ValidationReport validate_plan(const ManipulationPlan& plan, int n, const ValidationTolerances& tol = {}) {
  const KinematicMap& k = plan.map;
  const PlanGrid g(k, n);
  const ConfigChart& cc = k.config_chart;
  const ConfigChart wc = k.work_chart.chart();
  ValidationReport r;
  r.grid = n;
  r.samples = g.total;
  r.piece_samples.assign(plan.pieces.size(), 0);

  std::vector<int> owner(g.total, -1);
  for (size_t f = 0; f < g.total; ++f) {
    const auto idx = g.index(f);
    const auto s = detail::grid_sample(plan, g, idx);
    const unsigned mask = plan.membership(s.c, s.w);
    const int count = std::popcount(mask);
    if (count == 0) {
      ++r.uncovered;
      detail::add_witness(r, {"coverage", -1, g.coords(idx), {}, 0.0});
      continue;
    }
    if (count > 1) {
      ++r.overlapped;
      detail::add_witness(r, {"coverage", std::countr_zero(mask), g.coords(idx), {}, double(count)});
    }
    const int piece = std::countr_zero(mask);
    owner[f] = piece;
    ++r.piece_samples[piece];
    const PlanPiece& pc = plan.pieces[piece];
    double e0 = 0.0;
    try {
      e0 = cc.distance(pc.path(s.c, s.w, 0.0), s.c);
    } catch (const Error&) {
      e0 = std::numeric_limits<double>::infinity();
    }
    r.max_endpoint_error = std::max(r.max_endpoint_error, e0);
    if (!(e0 <= tol.endpoint)) {
      ++r.endpoint_failures;
      detail::add_witness(r, {"endpoint", piece, g.coords(idx), {}, e0});
    }
    double e1 = 0.0;
    try {
      const Vec end = pc.path(s.c, s.w, 1.0);
      e1 = k.work_chart.distance(forward_kinematics(k, cc.normalized(end)), s.w.point);
    } catch (const Error&) {
      e1 = std::numeric_limits<double>::infinity();
    }
    r.max_target_error = std::max(r.max_target_error, e1);
    if (!(e1 <= tol.target)) {
      ++r.target_failures;
      detail::add_witness(r, {"target", piece, g.coords(idx), {}, e1});
    }
  }

  for (size_t f = 0; f < g.total; ++f) {
    if (owner[f] < 0) continue;
    const auto idx = g.index(f);
    const auto s1 = detail::grid_sample(plan, g, idx);
    const PlanPiece& pc = plan.pieces[owner[f]];
    Mat p1;
    bool ok1 = true;
    try {
      p1 = pc.sample(s1.c, s1.w);
    } catch (const Error&) {
      ok1 = false;
    }
    for (int a = 0; a < g.dim(); ++a) {
      const long nb = g.step(idx, a, +1);
      if (nb < 0 || owner[nb] != owner[f]) continue;
      ++r.neighbor_pairs;
      const auto nidx = g.index(static_cast<size_t>(nb));
      const auto s2 = detail::grid_sample(plan, g, nidx);
      const double dc = cc.distance(s1.c, s2.c);
      const double dw = wc.distance(s1.w.chart, s2.w.chart);
      const double input = std::hypot(dc, dw);
      double sup = std::numeric_limits<double>::infinity();
      if (ok1) {
        try {
          sup = detail::sup_distance(cc, p1, pc.sample(s2.c, s2.w));
        } catch (const Error&) {
        }
      }
      const double ratio = input > 0.0 ? sup / input : (sup > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      r.max_ratio = std::max(r.max_ratio, ratio);
      if (!(sup <= tol.modulus * input)) {
        ++r.continuity_failures;
        detail::add_witness(r, {"continuity", owner[f], g.coords(idx), g.coords(nidx), ratio});
      }
    }
  }
  return r;
}

inline ValidationReport validate_plan(const ManipulationPlan& plan, const KinematicMap& k, int n,
                                      const ValidationTolerances& tol = {}) {
  require(plan.map.tag == k.tag && plan.map.params == k.params, "plan was built for map '" + plan.map.tag + "'");
  return validate_plan(plan, n, tol);
}

struct InstabilityReport {
  int grid = 0;
  double eps = 0.0;
  std::vector<int> shape;
  std::vector<int> radius;            // Chebyshev neighborhood radius per axis, in steps
  std::vector<unsigned> closure;      // bit i: piece i meets the eps-box
  std::vector<unsigned char> order;   // popcount of closure
  int max_order = 0;
  Vec witness;
  std::vector<size_t> filtration;     // filtration[k-1] = |R_k|
  bool separated = true;              // S_I mutual separation at grid scale
  size_t separation_violations = 0;
  int piece_count = 0;
};

/// Per-sample order of instability: the number of plan domains meeting the
/// eps-box around the sample (per-axis radius floor(eps / spacing)).
inline InstabilityReport measure_instability(const ManipulationPlan& plan, int n, double eps) {
  const PlanGrid g(plan.map, n);
  double widest = 0.0;
  for (double s : g.spacing) widest = std::max(widest, s);
  require(eps >= 2.0 * widest * (1.0 - 1e-12), "eps must be at least twice the grid spacing");
  require(plan.piece_count() <= 32, "at most 32 pieces");

  InstabilityReport r;
  r.grid = n;
  r.eps = eps;
  r.piece_count = plan.piece_count();
  r.shape.assign(g.dim(), n);
  for (double s : g.spacing) r.radius.push_back(s > 0.0 ? static_cast<int>(std::floor(eps / s + 1e-9)) : 0);

  std::vector<unsigned> mask(g.total, 0);
  for (size_t f = 0; f < g.total; ++f) {
    const auto s = detail::grid_sample(plan, g, g.index(f));
    const unsigned m = plan.membership(s.c, s.w);
    mask[f] = m ? (1u << std::countr_zero(m)) : 0u;  // disjoint view: first containing piece
  }

  // Separable OR-dilation by the box, axis by axis.
  std::vector<size_t> stride(g.dim(), 1);
  for (int a = g.dim() - 2; a >= 0; --a) stride[a] = stride[a + 1] * static_cast<size_t>(n);
  for (int a = 0; a < g.dim(); ++a) {
    const int rad = std::min(r.radius[a], n);
    if (rad == 0) continue;
    std::vector<unsigned> next(g.total, 0);
    const bool wrap = g.factors[a].is_circle();
    for (size_t f = 0; f < g.total; ++f) {
      const int i = static_cast<int>((f / stride[a]) % n);
      const size_t base = f - static_cast<size_t>(i) * stride[a];
      unsigned acc = 0;
      for (int d = -rad; d <= rad; ++d) {
        int j = i + d;
        if (j < 0 || j >= n) {
          if (!wrap) continue;
          j = ((j % n) + n) % n;
        }
        acc |= mask[base + static_cast<size_t>(j) * stride[a]];
      }
      next[f] = acc;
    }
    mask.swap(next);
  }

  r.closure = mask;
  r.order.resize(g.total);
  r.filtration.assign(static_cast<size_t>(plan.piece_count()), 0);
  size_t witness = 0;
  for (size_t f = 0; f < g.total; ++f) {
    const int o = std::popcount(mask[f]);
    r.order[f] = static_cast<unsigned char>(o);
    for (int kk = 1; kk <= o; ++kk) ++r.filtration[kk - 1];
    if (o > r.max_order) {
      r.max_order = o;
      witness = f;
    }
  }
  r.witness = g.coords(g.index(witness));

  // S_I = samples whose closure set is exactly I; sets of equal size must not
  // touch (face neighbors).
  for (size_t f = 0; f < g.total; ++f) {
    const auto idx = g.index(f);
    for (int a = 0; a < g.dim(); ++a) {
      const long nb = g.step(idx, a, +1);
      if (nb < 0) continue;
      const unsigned p = mask[f], q = mask[nb];
      if (p != q && std::popcount(p) == std::popcount(q)) ++r.separation_violations;
    }
  }
  r.separated = r.separation_violations == 0;
  return r;
}

/// Q'_1 = Q_1, Q'_i = Q_i minus the earlier domains; pieces without grid
/// samples are dropped. Throws coverage_gap when the inputs leave grid
/// samples uncovered.
inline ManipulationPlan disjointify(const ManipulationPlan& overlapping, int n) {
  const PlanGrid g(overlapping.map, n);
  std::vector<size_t> hits(overlapping.pieces.size(), 0);
  std::vector<std::string> gaps;
  size_t gap_count = 0;
  for (size_t f = 0; f < g.total; ++f) {
    const auto idx = g.index(f);
    const auto s = detail::grid_sample(overlapping, g, idx);
    const int piece = overlapping.locate(s.c, s.w);
    if (piece < 0) {
      if (++gap_count <= 5) {
        const Vec x = g.coords(idx);
        std::string w = "(";
        for (int a = 0; a < x.size(); ++a) w += (a ? "," : "") + csv::number(x[a]);
        gaps.push_back(w + ")");
      }
      continue;
    }
    ++hits[piece];
  }
  if (gap_count) {
    std::string msg = std::to_string(gap_count) + " uncovered grid samples, e.g.";
    for (const auto& w : gaps) msg += " " + w;
    throw Error(ErrorCode::coverage_gap, msg);
  }
  ManipulationPlan out = overlapping;
  out.pieces.clear();
  std::vector<Predicate> earlier;
  for (size_t i = 0; i < overlapping.pieces.size(); ++i) {
    PlanPiece p = overlapping.pieces[i];
    if (!earlier.empty()) {
      std::vector<Predicate> parts{p.domain};
      for (const auto& e : earlier) parts.push_back(Predicate::negate(e));
      p.domain = Predicate::all(parts);
    }
    earlier.push_back(overlapping.pieces[i].domain);
    if (hits[i] > 0) out.pieces.push_back(p);
  }
  out.recipe = {{"kind", "disjointify"}, {"grid", n}, {"base", overlapping.recipe}};
  return out;
}

inline std::string validation_csv(const ValidationReport& r) {
  csv::Table t;
  t.header = {"check", "piece", "value", "coords", "neighbor"};
  auto vec = [](const Vec& v) {
    std::string s;
    for (int i = 0; i < v.size(); ++i) s += (i ? " " : "") + csv::number(v[i]);
    return s;
  };
  t.add({"summary", "-1", r.pass() ? "1" : "0", "", ""});
  t.add({"samples", "-1", std::to_string(r.samples), "", ""});
  t.add({"uncovered", "-1", std::to_string(r.uncovered), "", ""});
  t.add({"overlapped", "-1", std::to_string(r.overlapped), "", ""});
  t.add({"max_endpoint_error", "-1", csv::number(r.max_endpoint_error), "", ""});
  t.add({"max_target_error", "-1", csv::number(r.max_target_error), "", ""});
  t.add({"max_ratio", "-1", csv::number(r.max_ratio), "", ""});
  for (size_t i = 0; i < r.piece_samples.size(); ++i)
    t.add({"piece_samples", std::to_string(i), std::to_string(r.piece_samples[i]), "", ""});
  for (const auto& w : r.witnesses) t.add({w.check, std::to_string(w.piece), csv::number(w.value), vec(w.coords), vec(w.other)});
  return t.str();
}

inline std::string instability_csv(const InstabilityReport& r, const PlanGrid& g) {
  csv::Table t;
  for (int a = 0; a < g.dim(); ++a) t.header.push_back("i" + std::to_string(a));
  for (int a = 0; a < g.dim(); ++a) t.header.push_back("x" + std::to_string(a));
  t.header.push_back("order");
  for (size_t f = 0; f < g.total; ++f) {
    const auto idx = g.index(f);
    std::vector<std::string> row;
    for (int a = 0; a < g.dim(); ++a) row.push_back(std::to_string(idx[a]));
    for (int a = 0; a < g.dim(); ++a) row.push_back(csv::number(g.axes[a][idx[a]]));
    row.push_back(std::to_string(int(r.order[f])));
    t.add(std::move(row));
  }
  return t.str();
}

}  // namespace kinmap
