#pragma once

// Standalone SVG plots of workspaces, singular scans and instability slices.
// Output depends only on the inputs; numbers are printed with fixed precision.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "kinmap/error.hpp"
#include "kinmap/kinematics.hpp"
#include "kinmap/validation.hpp"

namespace kinmap::svg {

inline constexpr double kSize = 480.0;
inline constexpr double kMargin = 56.0;

inline std::string fixed(double v, int digits = 3) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

/// Plot frame mapping a data box onto the drawing square (y axis up).
class Frame {
 public:
  Frame(std::string title, std::string xlabel, std::string ylabel, double x0, double x1, double y0, double y1)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    require(x1 > x0 && y1 > y0, "plot range must be nonempty");
  }

  double px(double x) const { return kMargin + (x - x0_) / (x1_ - x0_) * (kSize - 2 * kMargin); }
  double py(double y) const { return kSize - kMargin - (y - y0_) / (y1_ - y0_) * (kSize - 2 * kMargin); }

  void rect(double xa, double xb, double ya, double yb, const std::string& fill) {
    body_ += "<rect x=\"" + fixed(px(xa)) + "\" y=\"" + fixed(py(yb)) + "\" width=\"" + fixed(px(xb) - px(xa)) +
             "\" height=\"" + fixed(py(ya) - py(yb)) + "\" fill=\"" + fill + "\"/>\n";
  }

  void dot(double x, double y, const std::string& fill) {
    body_ += "<circle cx=\"" + fixed(px(x)) + "\" cy=\"" + fixed(py(y)) + "\" r=\"1.2\" fill=\"" + fill + "\"/>\n";
  }

  std::string str() const {
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kSize, 0) + "\" height=\"" + fixed(kSize, 0) +
         "\" viewBox=\"0 0 " + fixed(kSize, 0) + " " + fixed(kSize, 0) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + fixed(kSize, 0) + "\" height=\"" + fixed(kSize, 0) + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + fixed(kSize / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         title_ + "</text>\n";
    s += body_;
    const double l = kMargin, r = kSize - kMargin, t = kMargin, b = kSize - kMargin;
    s += "<rect x=\"" + fixed(l) + "\" y=\"" + fixed(t) + "\" width=\"" + fixed(r - l) + "\" height=\"" + fixed(b - t) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    auto text = [&](double x, double y, const std::string& anchor, const std::string& v, const std::string& extra = "") {
      s += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" text-anchor=\"" + anchor +
           "\" font-family=\"sans-serif\" font-size=\"11\"" + extra + ">" + v + "</text>\n";
    };
    text(l, b + 16, "start", fixed(x0_));
    text(r, b + 16, "end", fixed(x1_));
    text((l + r) / 2, b + 32, "middle", xlabel_);
    text(l - 6, b, "end", fixed(y0_));
    text(l - 6, t + 10, "end", fixed(y1_));
    text(18, (t + b) / 2, "middle", ylabel_, " transform=\"rotate(-90 18 " + fixed((t + b) / 2) + ")\"");
    s += "</svg>\n";
    return s;
  }

 private:
  std::string title_, xlabel_, ylabel_;
  double x0_, x1_, y0_, y1_;
  std::string body_;
};

inline const char* shade(int level, int levels) {
  static const char* ramp[] = {"#ffffff", "#d9d9d9", "#a6a6a6", "#737373", "#404040", "#1a1a1a"};
  const int i = levels <= 1 ? 5 : std::clamp(level * 5 / std::max(1, levels - 1), 0, 5);
  return ramp[i];
}

/// Image of an n^dim configuration grid, plotted in the first two point
/// coordinates of the working space.
inline std::string workspace(const KinematicMap& k, int n) {
  require(n >= 2, "grid resolution must be at least 2");
  require(k.work_chart.point_dim() >= 2, "workspace plot needs at least two point coordinates");
  const ConfigChart& cc = k.config_chart;
  size_t total = 1;
  std::vector<std::vector<double>> axes;
  for (const auto& f : cc.factors) {
    axes.push_back(grid_axis(f, n));
    total *= static_cast<size_t>(n);
    require(total <= 1'000'000, "workspace plot exceeds 10^6 samples");
  }
  std::vector<Vec> pts;
  double lo = 0.0, hi = 0.0;
  Vec c(cc.dimension());
  for (size_t flat = 0; flat < total; ++flat) {
    size_t rest = flat;
    for (int a = cc.dimension() - 1; a >= 0; --a) {
      c[a] = axes[a][rest % n];
      rest /= n;
    }
    const Vec p = forward_kinematics(k, c);
    pts.push_back(p);
    lo = std::min({lo, p[0], p[1]});
    hi = std::max({hi, p[0], p[1]});
  }
  const double pad = 0.05 * std::max(1e-9, hi - lo);
  Frame fr("workspace of " + k.tag, "w0", "w1", lo - pad, hi + pad, lo - pad, hi + pad);
  for (const auto& p : pts) fr.dot(p[0], p[1], "#1f4e79");
  return fr.str();
}

/// Two-dimensional singular scan: singular cells shaded, q1 across, q0 up.
inline std::string singular_scan(const SingularScanReport& r, const std::string& title) {
  if (r.shape.size() != 2) throw Error(ErrorCode::precondition, "singular-scan plot needs a two-dimensional scan");
  const auto& c0 = r.centers[0];
  const auto& c1 = r.centers[1];
  const double h0 = c0.size() > 1 ? c0[1] - c0[0] : 1.0, h1 = c1.size() > 1 ? c1[1] - c1[0] : 1.0;
  Frame fr(title, "q1", "q0", c1.front() - h1 / 2, c1.back() + h1 / 2, c0.front() - h0 / 2, c0.back() + h0 / 2);
  for (size_t f : r.singular_cells) {
    const auto idx = r.unflatten(f);
    const double x = c1[idx[1]], y = c0[idx[0]];
    fr.rect(x - h1 / 2, x + h1 / 2, y - h0 / 2, y + h0 / 2, "#b22222");
  }
  return fr.str();
}

/// Slice of an instability report along axes a (across) and b (up), the other
/// grid indices fixed as given (one entry per grid axis; entries for a and b
/// are ignored). Cells are shaded by order.
inline std::string instability_slice(const InstabilityReport& r, const PlanGrid& g, int a, int b, std::vector<int> fixed_index,
                                     const std::string& title) {
  const int dim = g.dim();
  if (a < 0 || b < 0 || a >= dim || b >= dim || a == b)
    throw Error(ErrorCode::precondition, "slice axes must be two distinct grid axes");
  if (dim > 2 && static_cast<int>(fixed_index.size()) != dim)
    throw Error(ErrorCode::precondition, "slice of a " + std::to_string(dim) + "-dimensional grid needs all other coordinates fixed");
  if (fixed_index.empty()) fixed_index.assign(dim, 0);
  for (int i : fixed_index)
    if (i < 0 || i >= g.n) throw Error(ErrorCode::precondition, "fixed index outside the grid");
  auto label = [&](int axis) { return axis < g.config_dim ? "c" + std::to_string(axis) : "w" + std::to_string(axis - g.config_dim); };
  const double ha = g.spacing[a] > 0 ? g.spacing[a] : 1.0, hb = g.spacing[b] > 0 ? g.spacing[b] : 1.0;
  Frame fr(title, label(a), label(b), g.axes[a].front() - ha / 2, g.axes[a].back() + ha / 2, g.axes[b].front() - hb / 2,
           g.axes[b].back() + hb / 2);
  std::vector<int> idx = fixed_index;
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      idx[a] = i;
      idx[b] = j;
      const int o = r.order[g.flat(idx)];
      if (o <= 1) continue;
      const double x = g.axes[a][i], y = g.axes[b][j];
      fr.rect(x - ha / 2, x + ha / 2, y - hb / 2, y + hb / 2, shade(o - 1, std::max(2, r.piece_count)));
    }
  }
  return fr.str();
}

}  // namespace kinmap::svg
