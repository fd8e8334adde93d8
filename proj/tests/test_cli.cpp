// Copyright 2026 The ucs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ucs/io.hpp"

namespace ucs {
namespace {

namespace fs = std::filesystem;

const fs::path kCli = UCS_CLI_PATH;
const fs::path kConfigs = UCS_CONFIG_DIR;

// x_hat of configs/solve_example.json, rendered and hashed by hash_vector.
constexpr const char* kGoldenHash = "eda4fff40bef8bfb";

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& args) {
  const std::string cmd = kCli.string() + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (const std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::string tmpl = (fs::temp_directory_path() / "ucs_cli_XXXXXX").string();
    dir_ = mkdtemp(tmpl.data());
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path out(const std::string& name) const { return dir_ / name; }
  fs::path write(const std::string& name, const std::string& text) const {
    write_text_file(dir_ / name, text);
    return dir_ / name;
  }
  std::string config(const std::string& name) const { return (kConfigs / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, SolveReproducesGoldenEstimate) {
  const RunResult r =
      run("solve --config " + config("solve_example.json") + " --out " + out("s").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Json summary = Json::parse(slurp(out("s") / "summary.json"));
  EXPECT_EQ(summary["x_hat_hash"], kGoldenHash);
  EXPECT_EQ(summary["chosen_set"], 11);
  EXPECT_LE(summary["rel_error"].get<double>(), 1e-3);
  EXPECT_EQ(hash_vector(read_vector_csv(out("s") / "x_hat.csv")), kGoldenHash);
  EXPECT_EQ(count_lines(slurp(out("s") / "trace.csv")), 100001);
  const Json cert = Json::parse(slurp(out("s") / "certificates.json"));
  EXPECT_LE(cert["mw_regret"].get<double>(), cert["mw_regret_bound"].get<double>());
}

TEST_F(CliTest, OverridesAreAppliedAndRecorded) {
  const RunResult r = run("solve --config " + config("solve_example.json") + " --out " +
                          out("s").string() +
                          " --set solver.horizon=50 --set solver.certificates=false");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Json summary = Json::parse(slurp(out("s") / "summary.json"));
  EXPECT_EQ(summary["iterations_run"], 50);
  EXPECT_EQ(summary["overrides"].size(), 2u);
  EXPECT_FALSE(fs::exists(out("s") / "certificates.json"));
}

TEST_F(CliTest, MissingInputsExitTwo) {
  const auto cfg = write("c.json", R"({"problem": {"A_file": "absent.csv", "y": [1],
                                        "sets": [{"kind": "full"}]}})");
  RunResult r = run("solve --config " + cfg.string() + " --out " + out("s").string());
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("absent.csv"), std::string::npos);
  r = run("solve --config " + (dir_ / "nope.json").string());
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST_F(CliTest, MalformedConfigsExitThreeWithLine) {
  const auto bad = write("bad.json", "{\n  \"problem\": {\n    \"A\": [[1]],,\n  }\n}\n");
  RunResult r = run("solve --config " + bad.string() + " --out " + out("s").string());
  EXPECT_EQ(r.exit_code, 3) << r.output;
  EXPECT_NE(r.output.find("bad.json:3"), std::string::npos) << r.output;

  const auto typo = write("typo.json",
                          "{\n  \"problem\": {\"A\": [[1]], \"y\": [1], \"sets\": [{\"kind\": "
                          "\"full\"}]},\n  \"solver\": {\n    \"lamda1\": 3\n  }\n}\n");
  r = run("solve --config " + typo.string() + " --out " + out("s").string());
  EXPECT_EQ(r.exit_code, 3) << r.output;
  EXPECT_NE(r.output.find("typo.json:4"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("lamda1"), std::string::npos);
}

TEST_F(CliTest, ExperimentWritesOneRowPerTrialAndArm) {
  const RunResult r = run("experiment --config " + config("experiment_smoke.json") +
                          " --out " + out("e").string() + " --set trials=1");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string trials = slurp(out("e") / "trials.csv");
  EXPECT_EQ(count_lines(trials), 1 + 2 * 2);  // header + 2 M values x 2 arms
  EXPECT_EQ(count_lines(slurp(out("e") / "table.csv")), 3);
  EXPECT_EQ(count_lines(slurp(out("e") / "timing.csv")), 5);
  const Json summary = Json::parse(slurp(out("e") / "summary.json"));
  EXPECT_TRUE(summary["all_assertions_passed"].get<bool>());
  EXPECT_EQ(summary["spec"]["trials"], 1);
  EXPECT_NE(r.output.find("PASS min_success_rate@12"), std::string::npos);
}

TEST_F(CliTest, ExperimentOutputsAreDeterministic) {
  const std::string base = "experiment --config " + config("experiment_smoke.json") + " --out ";
  ASSERT_EQ(run(base + out("a").string()).exit_code, 0);
  ASSERT_EQ(run(base + out("b").string() + " --threads 1").exit_code, 0);
  EXPECT_EQ(slurp(out("a") / "trials.csv"), slurp(out("b") / "trials.csv"));
  EXPECT_EQ(slurp(out("a") / "table.csv"), slurp(out("b") / "table.csv"));
}

TEST_F(CliTest, FailedAssertionExitsOne) {
  const RunResult r = run("experiment --config " + config("experiment_smoke.json") + " --out " +
                          out("e").string() +
                          R"( --set 'assertions.min_success_rate=[{"M":6,"rate":1}]')");
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_NE(r.output.find("FAIL min_success_rate@6"), std::string::npos);
}

TEST_F(CliTest, ConvergenceStudyWritesEverySeries) {
  const RunResult r = run("experiment --config " + config("convergence_example.json") +
                          " --out " + out("c").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(count_lines(slurp(out("c") / "convergence.csv")), 1 + 3 * 6);
  EXPECT_FALSE(fs::exists(out("c") / "trials.csv"));
  const Json summary = Json::parse(slurp(out("c") / "summary.json"));
  EXPECT_EQ(summary["convergence_slopes"].size(), 3u);
}

TEST_F(CliTest, BoundsReportsMeasurementSavingsAndGate) {
  const RunResult r = run("bounds --config " + config("bounds_windows.json") + " --out " +
                          out("b").string() + " --set samples=4000");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("Delta M = M_unconstrained - M_constrained ="), std::string::npos);
  const Json j = Json::parse(slurp(out("b") / "bounds.json"));
  EXPECT_GE(j["min_measurements"]["delta_M"].get<long long>(), 0);
  EXPECT_EQ(j["bound"]["omega_Cij"]["count"], 56 * 57 / 2);  // pairs i <= j over 56 windows
  EXPECT_FALSE(j["three_k_gate"]["holds"].get<bool>());
  EXPECT_EQ(j["three_k_gate"]["min_M_satisfying_gate"], 31);
}

TEST_F(CliTest, WidthListsEverySetAndTheUnion) {
  const RunResult r = run("width --config " + config("width_example.json") + " --out " +
                          out("w").string() + " --set samples=2000");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string csv = slurp(out("w") / "widths.csv");
  EXPECT_EQ(count_lines(csv), 1 + 56 + 1);
  EXPECT_NE(csv.find("\nunion,"), std::string::npos);
  const RunResult bad = run("width --config " + config("width_example.json") + " --out " +
                            out("w").string() + " --set mode=sideways");
  EXPECT_EQ(bad.exit_code, 3) << bad.output;
}

}  // namespace
}  // namespace ucs
