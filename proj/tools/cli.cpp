#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>

#include "kinmap/kinmap.hpp"

namespace kinmap::cli {
namespace {

struct Options {
  std::string file;
  std::string map;
  std::string params;
  std::string builtin;
  std::string config;
  std::string out;
  std::string path;
  std::string branch;
  std::string method = "damped";
  std::string center;
  std::string radii = "0.4,0.2,0.1";
  std::string axes = "0,1";
  std::string fixed;
  std::string kind;
  int grid = 0;
  int steps = 16;
  int override_redundancy = 0;
  double eps = 0.0;
  double tol = 0.0;
  double modulus = 50.0;
  double lambda = 1e-3;
  double kappa = 10.0;
  bool planar = false;
  bool degrees = false;
};

// Input problems found while preparing an analysis map to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fixed6(const Vec& v) {
  std::string s = "(";
  for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + fixed6(v[i]);
  return s + ")";
}

std::vector<double> numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  if (text.empty()) return out;
  for (const auto& cell : csv::split(text)) {
    try {
      size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError(flag + ": not a number '" + cell + "'");
    }
  }
  return out;
}

std::vector<int> integers(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (double v : numbers(text, flag)) {
    if (v != static_cast<int>(v)) throw UsageError(flag + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void write_report(const Options& o, const std::string& text) {
  if (!o.out.empty()) csv::write_file(o.out, text);
}

KinematicMap load_map(const Options& o) {
  if (!o.map.empty() && !o.file.empty()) throw UsageError("give either a mechanism file or --map, not both");
  if (!o.map.empty()) return canonical_map(o.map, numbers(o.params, "--params"));
  if (!o.file.empty()) return mechanism_map(parse_mechanism(csv::read_file(o.file)));
  throw UsageError("a mechanism file or --map is required");
}

ManipulationPlan load_plan(const Options& o) {
  if (!o.builtin.empty() && !o.file.empty()) throw UsageError("give either a plan file or --builtin, not both");
  if (!o.builtin.empty()) return builtin_plan(o.builtin);
  if (!o.file.empty()) return parse_plan(csv::read_file(o.file));
  throw UsageError("a plan file or --builtin is required");
}

/// Coordinates of revolute joints and circle factors are angular.
std::vector<bool> angular_coordinates(const KinematicMap& k) {
  std::vector<bool> ang;
  if (k.mechanism) {
    for (const auto& j : k.mechanism->joints)
      for (int d = 0; d < joint_dof(j.kind); ++d) ang.push_back(j.kind == JointKind::R);
  }
  if (static_cast<int>(ang.size()) != k.config_dim()) {
    ang.clear();
    for (const auto& f : k.config_chart.factors) ang.push_back(f.is_circle());
  }
  return ang;
}

Vec config_of(const Options& o, const KinematicMap& k) {
  const std::vector<double> v = numbers(o.config, "--config");
  if (static_cast<int>(v.size()) != k.config_dim())
    throw UsageError("--config needs " + std::to_string(k.config_dim()) + " values, got " + std::to_string(v.size()));
  Vec c = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  if (o.degrees) {
    const auto ang = angular_coordinates(k);
    for (int i = 0; i < c.size(); ++i)
      if (ang[i]) c[i] *= kPi / 180.0;
  }
  return c;
}

std::string default_branch(const KinematicMap& k) {
  switch (k.kind) {
    case MapKind::planar_rr: case MapKind::scara: return "elbow_up";
    case MapKind::pointing: return "geo";
    case MapKind::identity: return "identity";
    case MapKind::h_fixture: return "low";
    case MapKind::dh_chain: break;
  }
  throw UsageError("no default section for " + k.tag + "; pass --config");
}

TrackingSpec tracking_spec(const Options& o) {
  TrackingSpec s;
  if (o.method == "damped") s.method = TrackingMethod::damped;
  else if (o.method == "pseudoinverse") s.method = TrackingMethod::pseudoinverse;
  else throw UsageError("--method must be damped or pseudoinverse");
  s.lambda = o.lambda;
  s.kappa = o.kappa;
  s.steps_per_segment = o.steps;
  return s;
}

// ---------------------------------------------------------------------------
// Commands. Each returns the exit code and prints one summary line.

int mech_validate(const Options& o, std::ostream& out) {
  const Mechanism m = parse_mechanism(csv::read_file(o.file));
  try {
    validate_mechanism(m);
  } catch (const Error& e) {
    out << "invalid: " << e.what() << "\n";
    return 1;
  }
  write_report(o, serialize_mechanism(m));
  out << "valid name=" << m.name << " links=" << m.links << " joints=" << m.joints.size() << "\n";
  return 0;
}

int mech_classify(const Options& o, std::ostream& out) {
  const Mechanism m = parse_mechanism(csv::read_file(o.file));
  const char* cls = to_string(classify_mechanism(m));
  write_report(o, "name,class\n" + m.name + "," + cls + "\n");
  out << "class=" << cls << "\n";
  return 0;
}

int mech_mobility(const Options& o, std::ostream& out) {
  const Mechanism m = parse_mechanism(csv::read_file(o.file));
  const bool planar = o.planar || m.planar;
  const MobilityReport r = mobility(m, planar, o.override_redundancy);
  write_report(o, "naive,override,effective,planar\n" + std::to_string(r.naive_mobility) + "," +
                      std::to_string(r.redundancy_override) + "," + std::to_string(r.effective_mobility) + "," +
                      (r.planar ? "1" : "0") + "\n");
  out << "M=" << r.effective_mobility;
  if (r.redundancy_override) out << " naive=" << r.naive_mobility << " override=" << r.redundancy_override;
  out << "\n";
  return 0;
}

int fk(const Options& o, std::ostream& out) {
  const KinematicMap k = load_map(o);
  const Vec c = config_of(o, k);
  const Vec w = forward_kinematics(k, c);
  csv::Table t;
  std::vector<std::string> row;
  for (int i = 0; i < w.size(); ++i) {
    t.header.push_back("w" + std::to_string(i));
    row.push_back(csv::number(w[i]));
  }
  t.add(row);
  write_report(o, t.str());
  out << "w=" << fixed6(w) << "\n";
  return 0;
}

int jac(const Options& o, std::ostream& out) {
  const KinematicMap k = load_map(o);
  const Vec c = config_of(o, k);
  const Mat j = jacobian(k, c);
  csv::Table t;
  for (int i = 0; i < j.cols(); ++i) t.header.push_back("c" + std::to_string(i));
  for (int r = 0; r < j.rows(); ++r) {
    std::vector<std::string> row;
    for (int i = 0; i < j.cols(); ++i) row.push_back(csv::number(j(r, i)));
    t.add(row);
  }
  write_report(o, t.str());
  const SingularTest s = singular_test(k, c, o.tol > 0 ? o.tol : 1e-8);
  out << "rank=" << s.rank << " smallest_sv=" << fixed6(s.smallest_singular_value) << (s.is_singular ? " singular" : " regular")
      << "\n";
  return 0;
}

int singular_scan_cmd(const Options& o, std::ostream& out) {
  const KinematicMap k = load_map(o);
  const int n = o.grid > 0 ? o.grid : 100;
  const SingularScanReport r = singular_scan(k, n, o.tol > 0 ? o.tol : 1e-2);
  write_report(o, scan_csv(r));
  out << "cells=" << r.cell_count() << " singular=" << r.singular_cells.size() << " fraction=" << fixed6(r.singular_fraction)
      << " components=" << r.component_sizes.size() << "\n";
  return 0;
}

int track(const Options& o, bool closed, std::ostream& out) {
  const KinematicMap k = load_map(o);
  if (o.path.empty()) throw UsageError("--path is required");
  const WorkPath w = parse_work_path_csv(k.work_chart, csv::read_file(o.path), closed);
  const Vec start = o.config.empty() ? canonical_section(k, o.branch.empty() ? default_branch(k) : o.branch).section(w.points.front())
                                     : config_of(o, k);
  const TrackingResult r = lift_path(k, tracking_spec(o), start, w);
  write_report(o, tracking_result_csv(r));
  if (closed) out << "drift=" << fixed6(r.drift) << " max_error=" << fixed6(r.max_error) << "\n";
  else
    out << "max_error=" << fixed6(r.max_error) << " singular_encounters=" << r.singular_times.size()
        << " end=" << fixed6(r.configs.back()) << "\n";
  return 0;
}

int track_probe(const Options& o, std::ostream& out) {
  const KinematicMap k = load_map(o);
  const std::vector<double> cv = numbers(o.center, "--center");
  if (cv.empty()) throw UsageError("--center is required");
  const Vec center = Eigen::Map<const Vec>(cv.data(), static_cast<Eigen::Index>(cv.size()));
  const SectionPiece s = canonical_section(k, o.branch.empty() ? default_branch(k) : o.branch);
  const auto rows = shrinking_loop_probe(k, tracking_spec(o), center, numbers(o.radii, "--radii"), s.section);
  csv::Table t;
  t.header = {"radius", "drift", "max_error"};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    t.add({csv::number(r.radius), csv::number(r.drift), csv::number(r.max_error)});
    lo = std::min(lo, r.drift);
    hi = std::max(hi, r.drift);
  }
  write_report(o, t.str());
  out << "radii=" << rows.size() << " min_drift=" << fixed6(lo) << " max_drift=" << fixed6(hi) << "\n";
  return 0;
}

int plan_validate(const Options& o, std::ostream& out) {
  const ManipulationPlan p = load_plan(o);
  ValidationTolerances tol;
  tol.modulus = o.modulus;
  if (o.tol > 0) tol.target = o.tol;
  const ValidationReport r = validate_plan(p, o.grid > 0 ? o.grid : 12, tol);
  write_report(o, validation_csv(r));
  out << (r.pass() ? "pass" : "fail") << " pieces=" << p.piece_count() << " samples=" << r.samples
      << " uncovered=" << r.uncovered << " overlapped=" << r.overlapped << " max_target_error=" << fixed6(r.max_target_error)
      << " max_ratio=" << fixed6(r.max_ratio) << "\n";
  return r.pass() ? 0 : 1;
}

double default_eps(const ManipulationPlan& p, int n) {
  const PlanGrid g(p.map, n);
  return 2.0 * *std::max_element(g.spacing.begin(), g.spacing.end());
}

int plan_instability(const Options& o, std::ostream& out) {
  const ManipulationPlan p = load_plan(o);
  const int n = o.grid > 0 ? o.grid : 12;
  const double eps = o.eps > 0 ? o.eps : default_eps(p, n);
  const InstabilityReport r = measure_instability(p, n, eps);
  write_report(o, instability_csv(r, PlanGrid(p.map, n)));
  out << "max_order=" << r.max_order << " pieces=" << r.piece_count << " eps=" << fixed6(eps)
      << " separated=" << (r.separated ? "yes" : "no") << " witness=" << fixed6(r.witness) << "\n";
  return 0;
}

int plan_builtin(const Options& o, std::ostream& out) {
  const ManipulationPlan p = builtin_plan(o.builtin);
  write_report(o, serialize_plan(p));
  out << "plan=" << o.builtin << " map=" << p.map.tag << " pieces=" << p.piece_count() << "\n";
  return 0;
}

int fixture_h_gap(const Options& o, std::ostream& out) {
  const int n = o.grid > 0 ? o.grid : 2000;
  csv::Table t;
  t.header = {"y", "gap"};
  int nonzero = 0;
  double at_one = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = 2.0 * i / n;
    const double g = h_fixture_gap(y);
    if (g != 0.0) ++nonzero;
    if (y == 1.0) at_one = g;
    t.add({csv::number(y), csv::number(g)});
  }
  write_report(o, t.str());
  out << "samples=" << n + 1 << " nonzero=" << nonzero << " gap_at_1=" << fixed6(at_one) << "\n";
  return 0;
}

int render(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("render needs --out");
  std::string svg_text;
  if (o.kind == "workspace") {
    const KinematicMap k = load_map(o);
    svg_text = svg::workspace(k, o.grid > 0 ? o.grid : 48);
  } else if (o.kind == "singular-scan") {
    const KinematicMap k = load_map(o);
    svg_text = svg::singular_scan(singular_scan(k, o.grid > 0 ? o.grid : 90, o.tol > 0 ? o.tol : 1e-2), "singular cells of " + k.tag);
  } else if (o.kind == "instability-slice") {
    const ManipulationPlan p = load_plan(o);
    const int n = o.grid > 0 ? o.grid : 24;
    const double eps = o.eps > 0 ? o.eps : default_eps(p, n);
    const InstabilityReport r = measure_instability(p, n, eps);
    const auto ax = integers(o.axes, "--axes");
    if (ax.size() != 2) throw UsageError("--axes needs two indices");
    svg_text = svg::instability_slice(r, PlanGrid(p.map, n), ax[0], ax[1], integers(o.fixed, "--fixed"),
                                      "instability order of " + p.map.tag);
  } else {
    throw UsageError("render kind must be workspace, singular-scan or instability-slice");
  }
  csv::write_file(o.out, svg_text);
  out << "wrote " << o.out << " bytes=" << svg_text.size() << "\n";
  return 0;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::parse: case ErrorCode::io: case ErrorCode::unknown_name: case ErrorCode::precondition: return 2;
    default: return 1;
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  std::function<int()> action;
  CLI::App app{"Kinematic maps: mechanisms, singularities, tracking and manipulation plans", "kinmap"};
  app.require_subcommand(1);

  auto add_map_source = [&](CLI::App* c) {
    c->add_option("file", o.file, "mechanism JSON document");
    c->add_option("--map", o.map, "canonical map name");
    c->add_option("--params", o.params, "map parameters, comma separated");
  };
  auto add_plan_source = [&](CLI::App* c) {
    c->add_option("file", o.file, "plan JSON document");
    c->add_option("--builtin", o.builtin, "builtin plan name");
  };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "report path"); };
  auto add_tracking = [&](CLI::App* c) {
    c->add_option("--method", o.method, "damped or pseudoinverse");
    c->add_option("--lambda", o.lambda, "damping");
    c->add_option("--kappa", o.kappa, "error feedback gain");
    c->add_option("--steps", o.steps, "RK4 steps per path segment");
    c->add_option("--branch", o.branch, "section branch for the start configuration");
  };
  auto with = [&](CLI::App* c, std::function<int()> f) { c->callback([&action, f] { action = f; }); };

  CLI::App* mech = app.add_subcommand("mech", "mechanism documents");
  mech->require_subcommand(1);
  for (const char* name : {"validate", "classify", "mobility"}) {
    CLI::App* c = mech->add_subcommand(name);
    c->add_option("file", o.file, "mechanism JSON document")->required();
    add_out(c);
    const std::string n = name;
    if (n == "mobility") {
      c->add_flag("--planar", o.planar, "planar Grubler count");
      c->add_option("--override", o.override_redundancy, "redundant degrees of freedom to subtract");
    }
    with(c, [&o, &out, n] { return n == "validate" ? mech_validate(o, out) : n == "classify" ? mech_classify(o, out) : mech_mobility(o, out); });
  }

  for (const char* name : {"fk", "jac"}) {
    CLI::App* c = app.add_subcommand(name, std::string(name) == "fk" ? "forward kinematics" : "Jacobian");
    add_map_source(c);
    add_out(c);
    c->add_option("--config", o.config, "configuration, comma separated")->required();
    c->add_flag("--degrees", o.degrees, "angles in --config are degrees");
    c->add_option("--tol", o.tol, "rank tolerance");
    const std::string n = name;
    with(c, [&o, &out, n] { return n == "fk" ? fk(o, out) : jac(o, out); });
  }

  CLI::App* singular = app.add_subcommand("singular", "singularity analysis");
  singular->require_subcommand(1);
  {
    CLI::App* c = singular->add_subcommand("scan");
    add_map_source(c);
    add_out(c);
    c->add_option("--grid", o.grid, "cells per axis")->check(CLI::PositiveNumber);
    c->add_option("--tol", o.tol, "smallest singular value threshold");
    with(c, [&o, &out] { return singular_scan_cmd(o, out); });
  }

  CLI::App* trk = app.add_subcommand("track", "path tracking");
  trk->require_subcommand(1);
  for (const char* name : {"lift", "drift", "probe"}) {
    CLI::App* c = trk->add_subcommand(name);
    add_map_source(c);
    add_out(c);
    add_tracking(c);
    const std::string n = name;
    if (n == "probe") {
      c->add_option("--center", o.center, "loop centre, working-space point coordinates")->required();
      c->add_option("--radii", o.radii, "decreasing loop diameters");
      with(c, [&o, &out] { return track_probe(o, out); });
    } else {
      c->add_option("--path", o.path, "working-space path CSV (t, w0, w1, ...)")->required();
      c->add_option("--config", o.config, "start configuration");
      c->add_flag("--degrees", o.degrees, "angles in --config are degrees");
      with(c, [&o, &out, n] { return track(o, n == "drift", out); });
    }
  }

  CLI::App* plan = app.add_subcommand("plan", "manipulation plans");
  plan->require_subcommand(1);
  {
    CLI::App* c = plan->add_subcommand("validate");
    add_plan_source(c);
    add_out(c);
    c->add_option("--grid", o.grid, "samples per axis")->check(CLI::PositiveNumber);
    c->add_option("--tol", o.tol, "target tolerance");
    c->add_option("--modulus", o.modulus, "continuity modulus L");
    with(c, [&o, &out] { return plan_validate(o, out); });
  }
  {
    CLI::App* c = plan->add_subcommand("instability");
    add_plan_source(c);
    add_out(c);
    c->add_option("--grid", o.grid, "samples per axis")->check(CLI::PositiveNumber);
    c->add_option("--eps", o.eps, "neighbourhood size (default twice the widest spacing)");
    with(c, [&o, &out] { return plan_instability(o, out); });
  }
  {
    CLI::App* c = plan->add_subcommand("builtin");
    c->add_option("name", o.builtin, "builtin plan name")->required();
    add_out(c);
    with(c, [&o, &out] { return plan_builtin(o, out); });
  }

  CLI::App* fixture = app.add_subcommand("fixture", "reference fixtures");
  fixture->require_subcommand(1);
  {
    CLI::App* c = fixture->add_subcommand("h-gap");
    add_out(c);
    c->add_option("--grid", o.grid, "intervals on [0,2] (default 2000)")->check(CLI::PositiveNumber);
    with(c, [&o, &out] { return fixture_h_gap(o, out); });
  }

  {
    CLI::App* c = app.add_subcommand("render", "SVG plots");
    c->add_option("kind", o.kind, "workspace, singular-scan or instability-slice")->required();
    c->add_option("source", o.file, "mechanism or plan document");
    c->add_option("--map", o.map, "canonical map name");
    c->add_option("--params", o.params, "map parameters");
    c->add_option("--builtin", o.builtin, "builtin plan name");
    c->add_option("--grid", o.grid, "samples per axis")->check(CLI::PositiveNumber);
    c->add_option("--tol", o.tol, "singular threshold");
    c->add_option("--eps", o.eps, "instability neighbourhood");
    c->add_option("--axes", o.axes, "slice axes a,b");
    c->add_option("--fixed", o.fixed, "grid indices for every axis (slice axes ignored)");
    add_out(c);
    with(c, [&o, &out] { return render(o, out); });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (!action) {
    err << app.help();
    return 2;
  }
  try {
    return action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

}  // namespace kinmap::cli
