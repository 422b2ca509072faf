#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cli.hpp"
#include "kinmap/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome r;
  r.code = kinmap::cli::run_command(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const std::string& name) { return std::string(KINMAP_DATA_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kinmap_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::string slurp(const fs::path& p) { return kinmap::csv::read_file(p.string()); }

}  // namespace

TEST(Cli, MobilityLines) {
  Outcome r = run({"mech", "mobility", data("fourbar.json"), "--planar"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "M=1\n");
  r = run({"mech", "mobility", data("stewart.json"), "--override", "6"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "M=6 naive=12 override=6\n");
}

TEST(Cli, ValidateAndClassify) {
  Outcome r = run({"mech", "validate", data("rr_serial.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("valid ", 0), 0u) << r.out;
  r = run({"mech", "classify", data("fourbar.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "class=parallel\n");
}

TEST(Cli, ExitCodeMatrix) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"mech"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"mech", "validate", "/nonexistent/kinmap.json"}).code, 2);

  const fs::path bad = scratch("malformed.json");
  write(bad, "{\"name\": \"x\", \"links\": ");
  Outcome r = run({"mech", "validate", bad.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());

  const fs::path disconnected = scratch("disconnected.json");
  write(disconnected, R"({"name":"x","planar":false,"links":2,"joints":[{"kind":"R","parent":0,"child":1}]})");
  EXPECT_EQ(run({"mech", "validate", disconnected.string()}).code, 1);

  EXPECT_EQ(run({"plan", "validate", "--builtin", "planar_rr", "--grid", "6"}).code, 0);
  EXPECT_EQ(run({"plan", "validate", "--builtin", "planar_rr", "--grid", "6", "--modulus", "1"}).code, 1);
  EXPECT_EQ(run({"plan", "builtin", "nosuch"}).code, 2);
  EXPECT_EQ(run({"fk", "--map", "nosuch", "--config", "0"}).code, 2);
  EXPECT_EQ(run({"fk", "--map", "planar_rr"}).code, 2);
}

TEST(Cli, MalformedNumbersAreUsageErrors) {
  EXPECT_EQ(run({"fk", "--map", "planar_rr", "--params", "2,1", "--config", "0,x"}).code, 2);
  EXPECT_EQ(run({"singular", "scan", "--map", "pointing", "--grid", "-3"}).code, 2);
}

TEST(Cli, WrongPointSizesAreRejected) {
  EXPECT_EQ(run({"track", "probe", "--map", "pointing", "--center", "0.3,0.2"}).code, 2);
  EXPECT_EQ(run({"fk", "--map", "planar_rr", "--config", "0,0,0"}).code, 2);
}

TEST(Cli, ForwardKinematicsAndJacobian) {
  Outcome r = run({"fk", "--map", "planar_rr", "--params", "2,1", "--config", "0,0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "w=(3.000000,0.000000)\n");
  r = run({"jac", "--map", "pointing", "--config", "90,0", "--degrees"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("rank=1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("singular"), std::string::npos) << r.out;
}

TEST(Cli, HGapFixture) {
  const Outcome r = run({"fixture", "h-gap"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "samples=2001 nonzero=1 gap_at_1=1.000000\n");
}

TEST(Cli, BuiltinPlanRoundTripsThroughValidate) {
  const fs::path doc = scratch("planar_rr_plan.json");
  Outcome r = run({"plan", "builtin", "planar_rr", "--out", doc.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "plan=planar_rr map=planar_rr pieces=3\n");
  r = run({"plan", "validate", doc.string(), "--grid", "6"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("pass pieces=3", 0), 0u) << r.out;
}

TEST(Cli, RenderNeedsOutAndFixedCoordinates) {
  EXPECT_EQ(run({"render", "singular-scan", "--map", "pointing"}).code, 2);
  EXPECT_EQ(run({"render", "nonsense", "--map", "pointing", "--out", scratch("x.svg").string()}).code, 2);
  EXPECT_EQ(run({"render", "instability-slice", "--builtin", "identity_torus", "--grid", "4", "--out",
                 scratch("slice.svg").string()})
                .code,
            2);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const std::vector<std::vector<std::string>> jobs = {
      {"singular", "scan", "--map", "pointing", "--grid", "36", "--tol", "0.1", "--out"},
      {"plan", "validate", "--builtin", "identity_circle", "--grid", "24", "--out"},
      {"plan", "instability", "--builtin", "identity_circle", "--grid", "12", "--out"},
      {"render", "singular-scan", "--map", "planar_rr", "--params", "2,1", "--grid", "36", "--tol", "0.1", "--out"},
      {"render", "workspace", "--map", "planar_rr", "--params", "2,1", "--grid", "24", "--out"},
  };
  int index = 0;
  for (auto args : jobs) {
    const fs::path a = scratch("a" + std::to_string(index) + ".out");
    const fs::path b = scratch("b" + std::to_string(index) + ".out");
    ++index;
    auto first = args, second = args;
    first.push_back(a.string());
    second.push_back(b.string());
    const Outcome ra = run(first), rb = run(second);
    EXPECT_EQ(ra.code, 0) << args[0] << " " << args[1] << ": " << ra.err;
    EXPECT_EQ(rb.code, ra.code);
    std::string echoed = ra.out;
    if (const size_t at = echoed.find(a.string()); at != std::string::npos) echoed.replace(at, a.string().size(), b.string());
    EXPECT_EQ(echoed, rb.out);
    ASSERT_TRUE(fs::exists(a)) << args[0] << " " << args[1];
    const std::string ta = slurp(a);
    EXPECT_FALSE(ta.empty());
    EXPECT_EQ(ta, slurp(b)) << args[0] << " " << args[1];
  }
}

TEST(Cli, BinaryReportsExitStatus) {
  const std::string bin = KINMAP_CLI_PATH;
  const fs::path log = scratch("binary.txt");
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " > " + log.string() + " 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("mech mobility " + data("fourbar.json") + " --planar"), 0);
  EXPECT_EQ(slurp(log), "M=1\n");
  EXPECT_EQ(status("plan validate --builtin planar_rr --grid 6 --modulus 1"), 1);
  EXPECT_EQ(status("mech validate /nonexistent/kinmap.json"), 2);
  EXPECT_EQ(status(""), 2);
}
