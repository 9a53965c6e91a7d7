#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "perwave/experiments.hpp"
#include "perwave/hill_floquet.hpp"
#include "perwave/io.hpp"

using namespace perwave;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("perwave_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::vector<std::string>& header) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  header.clear();
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::istringstream l(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(l, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

Json mathieu_scan_config() {
  return {{"experiment", "hill-scan"},
          {"hill", {{"mathieu_p", 0.2}, {"a_range", {0.5, 1.5}}, {"n", 101}, {"steps", 2000}}},
          {"seed", 1}};
}

Json static_nonlinear_config() {
  const double T = 2.0;
  return {{"experiment", "nonlinear-run"},
          {"potential",
           {{"kind", "separable"},
            {"period", T},
            {"time_profile", {{"type", "constant"}, {"value", 1.0}}},
            {"space_profile", {{"type", "bump"}, {"height", 1.0}, {"radius", 3.0}}}}},
          {"grid", {{"r_max", 20.0}, {"n", 4000}}},
          {"time", {{"dt", 0.00125}, {"horizon", 10 * T}, {"T", T}}},
          {"nonlinearity", {{"r", 2}}},
          {"data", {{"kind", "random"}, {"radius", 15.0}, {"amplitude", 0.3}, {"bumps", 1}}},
          {"seed", 3}};
}

struct Command {
  int exit_code;
  std::string output;
};

Command run_binary(const std::string& args) {
  const std::string cmd = std::string(PERWAVE_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Io, CsvTableShape) {
  CsvTable t({"a", "b"});
  t.add_row({1.0, 0.25});
  t.add_row({2.0, -3.0});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.str(), "a,b\n1,0.25\n2,-3\n");
  EXPECT_THROW(t.add_row({1.0}), std::exception);
}

TEST(Io, AtomicWriteCreatesParents) {
  const fs::path dir = scratch_dir("atomic");
  const fs::path target = dir / "nested" / "file.txt";
  write_file_atomic(target, "first");
  write_file_atomic(target, "second");
  EXPECT_EQ(slurp(target), "second");
  for (const auto& e : fs::directory_iterator(dir / "nested")) EXPECT_EQ(e.path().filename(), "file.txt");
}

TEST(Io, SnapshotRoundTrip) {
  const fs::path dir = scratch_dir("snapshot");
  const RadialGrid g(7.5, 64);
  const State s = random_smooth_state(g, 5.0, 4);
  write_snapshot(dir / "s.bin", s, 1.25);
  EXPECT_EQ(fs::file_size(dir / "s.bin"), 8u * (3 + 2 * 64));
  double t = 0.0;
  const State back = read_snapshot(dir / "s.bin", t);
  EXPECT_EQ(t, 1.25);
  EXPECT_EQ(back.grid.n, 64);
  EXPECT_DOUBLE_EQ(back.grid.dr(), g.dr());
  EXPECT_EQ(back.v, s.v);
  EXPECT_EQ(back.w, s.w);
}

TEST(Validate, WellFormedConfigHasNoDiagnostics) {
  EXPECT_TRUE(validate(reference_config("floquet-eig")).empty());
  EXPECT_TRUE(validate(static_nonlinear_config()).empty());
  // reference configs may warn about wall reflections but never error
  for (const auto& name : experiment_names()) {
    for (const auto& d : validate(reference_config(name))) {
      EXPECT_EQ(d.level, Diagnostic::Level::Warning) << name << ": " << d.message;
    }
  }
}

TEST(Validate, NegativePeriodIsOneDiagnostic) {
  Json c = reference_config("floquet-eig");
  c["potential"]["period"] = -1.0;
  const auto d = validate(c);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].level, Diagnostic::Level::Error);
}

TEST(Validate, SampledDefectIsQuoted) {
  Json c = reference_config("floquet-eig");
  std::vector<double> samples;
  for (int k = 0; k <= 32; ++k) samples.push_back(0.25 + 0.25 * std::cos(2 * kPi * k / 32));
  samples.back() += 1e-3;
  c["potential"]["time_profile"] = {{"type", "sampled"}, {"samples", samples}};
  const auto d = validate(c);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].level, Diagnostic::Level::Warning);
  EXPECT_NE(d[0].message.find("periodicity defect 0.00100"), std::string::npos) << d[0].message;
}

TEST(Validate, CflAndUnknownExperiment) {
  Json c = reference_config("linear-growth");
  c["time"]["dt"] = 1.0;
  const auto d = validate(c);
  ASSERT_FALSE(d.empty());
  EXPECT_NE(d[0].message.find("CFL violated"), std::string::npos);
  Json u = reference_config("linear-growth");
  u["experiment"] = "warp-drive";
  EXPECT_FALSE(validate(u).empty());
}

TEST(Run, HillScanMatchesOracle) {
  const fs::path dir = scratch_dir("hill");
  RunOptions o;
  o.out_dir = dir.string();
  const auto res = run(mathieu_scan_config(), o);
  ASSERT_EQ(res.exit_code, 0) << res.message;
  std::vector<std::string> header;
  const auto rows = parse_csv(slurp(dir / "tongue_scan.csv"), header);
  EXPECT_EQ(header, (std::vector<std::string>{"omega_sq", "trace", "max_multiplier", "unstable"}));
  ASSERT_EQ(rows.size(), 101u);
  for (const auto& row : rows) {
    const double a = row[0] + 0.4;
    const auto m = monodromy(mathieu_problem(a, 0.2), 20000);
    EXPECT_NEAR(row[1], m.trace(), 1e-8);
    EXPECT_EQ(row[3] == 1.0, std::abs(m.trace()) > 2.0 + 1e-12);
  }
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["exit_code"], 0);
  EXPECT_EQ(manifest["derived"]["tongue_intervals"].size(), 1u);
  EXPECT_EQ(manifest["version"], kVersion);
  EXPECT_TRUE(manifest.contains("started"));
  EXPECT_TRUE(manifest.contains("finished"));
}

TEST(Run, CflViolationExitsThreeAndWritesManifest) {
  const fs::path dir = scratch_dir("cfl");
  Json c = reference_config("linear-growth");
  c["time"]["dt"] = 0.5;
  RunOptions o;
  o.out_dir = dir.string();
  const auto res = run(c, o);
  EXPECT_EQ(res.exit_code, 3);
  EXPECT_NE(res.message.find("CFL violated"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Run, UnknownExperimentExitsThree) {
  const fs::path dir = scratch_dir("unknown");
  Json c = reference_config("linear-growth");
  c["experiment"] = "warp-drive";
  RunOptions o;
  o.out_dir = dir.string();
  EXPECT_EQ(run(c, o).exit_code, 3);
}

TEST(Run, StaticNonlinearRunPassesConservation) {
  const fs::path dir = scratch_dir("static");
  RunOptions o;
  o.out_dir = dir.string();
  const auto res = run(static_nonlinear_config(), o);
  ASSERT_EQ(res.exit_code, 0) << res.message;
  bool found = false;
  for (const auto& c : res.manifest["checks"]) {
    if (c["name"] == "static_conservation") {
      found = true;
      EXPECT_TRUE(c["passed"].get<bool>());
    }
  }
  EXPECT_TRUE(found);
  std::vector<std::string> header;
  parse_csv(slurp(dir / "energy.csv"), header);
  EXPECT_EQ(header, (std::vector<std::string>{"t", "kinetic", "gradient", "potential_term", "nonlinear_term",
                                              "X", "rhs_identity", "envelope_value", "violated"}));
}

TEST(Run, InvariantFailureExitsTwoWithManifest) {
  // a static potential with far too coarse a time step fails the conservation check
  const fs::path dir = scratch_dir("fail");
  Json c = static_nonlinear_config();
  c["grid"]["n"] = 200;
  c["time"]["dt"] = 0.1;
  c["data"]["amplitude"] = 3.0;
  RunOptions o;
  o.out_dir = dir.string();
  const auto res = run(c, o);
  EXPECT_EQ(res.exit_code, 2) << res.message;
  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["exit_code"], 2);
}

TEST(Run, SameSeedGivesIdenticalCsv) {
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  Json c = reference_config("linear-growth");
  c["grid"]["n"] = 600;
  c["time"]["dt"] = 0.025;
  c["time"]["horizon"] = 8 * 2 * kPi;
  RunOptions oa, ob;
  oa.out_dir = a.string();
  ob.out_dir = b.string();
  ob.threads = 2;
  ASSERT_EQ(run(c, oa).exit_code, run(c, ob).exit_code);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
  EXPECT_FALSE(slurp(a / "trajectory.csv").empty());
}

TEST(Run, OutputDirectoryPrecedence) {
  RunOptions o;
  o.out_dir = "cli";
  EXPECT_EQ(resolve_output_dir(o, "cfg"), fs::path("cli"));
  o.out_dir.clear();
  EXPECT_EQ(resolve_output_dir(o, "cfg"), fs::path("cfg"));
  setenv("PERWAVE_OUT", "env", 1);
  EXPECT_EQ(resolve_output_dir(o, ""), fs::path("env"));
  unsetenv("PERWAVE_OUT");
  EXPECT_EQ(resolve_output_dir(o, ""), fs::path("perwave_out"));
}

TEST(Binary, CflViolationMessageAndExitCode) {
  const fs::path dir = scratch_dir("bin_cfl");
  Json c = reference_config("linear-growth");
  c["time"]["dt"] = 0.5;
  write_file_atomic(dir / "c.json", c.dump());
  const auto r = run_binary("linear-growth --config " + (dir / "c.json").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("CFL violated"), std::string::npos) << r.output;
}

TEST(Binary, ValidateAndSubcommandMismatch) {
  const fs::path dir = scratch_dir("bin_validate");
  write_file_atomic(dir / "ok.json", reference_config("floquet-eig").dump());
  auto r = run_binary("validate --config " + (dir / "ok.json").string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.output, "ok\n");
  r = run_binary("hill-scan --config " + (dir / "ok.json").string());
  EXPECT_EQ(r.exit_code, 3);
  r = run_binary("--version");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find(kVersion), std::string::npos);
  r = run_binary("no-such-command");
  EXPECT_EQ(r.exit_code, 3);
}

TEST(Binary, ReferenceConfigRoundTripsThroughValidate) {
  const fs::path dir = scratch_dir("bin_reference");
  const auto r = run_binary("reference-config floquet-eig");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(Json::parse(r.output), reference_config("floquet-eig"));
  write_file_atomic(dir / "c.json", r.output);
  EXPECT_EQ(run_binary("validate --config " + (dir / "c.json").string()).exit_code, 0);
}
