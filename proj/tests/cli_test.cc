/* Copyright 2026 The SGR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.h"
#include "sgr/diagnosis.h"
#include "sgr/exec_neural.h"

namespace sgr {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sgr_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(std::initializer_list<std::string> args) {
    std::vector<std::string> owned = {"sgr"};
    owned.insert(owned.end(), args);
    std::vector<const char*> argv;
    for (const auto& a : owned) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::Run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  std::string Gen(const std::string& name, const std::string& seed, double noise = 0.0) {
    EXPECT_EQ(Run({"gen", "--seed", seed, "--scenes", "15", "--noise-sd", std::to_string(noise),
                   "--out", Path(name)}),
              cli::kExitOk)
        << err_.str();
    return Path(name);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, GenIsDeterministicAndWritesManifest) {
  const std::string a = Gen("a.jsonl", "5");
  const std::string b = Gen("b.jsonl", "5");
  EXPECT_EQ(Slurp(a), Slurp(b));
  EXPECT_FALSE(Slurp(a).empty());
  EXPECT_TRUE(fs::exists(a + ".manifest.json"));
  EXPECT_NE(Slurp(Gen("c.jsonl", "6")), Slurp(a));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Run({"gen", "--out", Path("x.jsonl")}), cli::kExitUsage);
  EXPECT_EQ(Run({"--vocab", Path("missing.json"), "gen", "--seed", "1", "--out", Path("x.jsonl")}),
            cli::kExitUsage);
  EXPECT_EQ(Run({"frobnicate"}), cli::kExitUsage);
  EXPECT_EQ(Run({}), cli::kExitUsage);
  const std::string data = Gen("d.jsonl", "7");
  EXPECT_EQ(Run({"train", "--data", data, "--out", Path("p.json")}), cli::kExitUsage);
  EXPECT_EQ(Run({"train", "--data", data, "--seed", "1", "--lr", "-1", "--out", Path("p.json")}),
            cli::kExitUsage);
  EXPECT_EQ(Run({"exec", "--data", data, "--mode", "oracle"}), cli::kExitUsage);
  EXPECT_EQ(Run({"diagnose", "--data", data, "--perturb", "rand"}), cli::kExitUsage);
  EXPECT_EQ(Run({"--help"}), cli::kExitOk);
}

TEST_F(CliTest, ValidateAcceptsGeneratedAndRejectsTampered) {
  const std::string data = Gen("d.jsonl", "8");
  EXPECT_EQ(Run({"validate", "--data", data}), cli::kExitOk) << err_.str();
  std::string text = Slurp(data);
  const auto pos = text.find("\"answer\":\"");
  ASSERT_NE(pos, std::string::npos);
  text.insert(pos + 10, "zz");
  std::ofstream(Path("bad.jsonl")) << text;
  EXPECT_EQ(Run({"validate", "--data", Path("bad.jsonl")}), cli::kExitFailure);
}

TEST_F(CliTest, ExecSymbolicAndExactAreExact) {
  const std::string data = Gen("d.jsonl", "9", 1.0);
  EXPECT_EQ(Run({"exec", "--data", data, "--mode", "symbolic", "--graphs", "onehot"}),
            cli::kExitOk);
  EXPECT_NE(out_.str().find("accuracy 100.00"), std::string::npos) << out_.str();
  EXPECT_EQ(Run({"exec", "--data", data, "--exact", "--graphs", "onehot", "--out",
                 Path("traces.jsonl")}),
            cli::kExitOk);
  EXPECT_NE(out_.str().find("accuracy 100.00"), std::string::npos) << out_.str();
  EXPECT_FALSE(Slurp(Path("traces.jsonl")).empty());
}

TEST_F(CliTest, ZeroRateTrainingKeepsInitialParams) {
  const std::string data = Gen("d.jsonl", "10", 1.0);
  ExecutorParams init;
  init.alpha = 0.7;
  init.phi[1] = -0.25;
  std::ofstream(Path("init.json")) << ParamsToJson(init);
  ASSERT_EQ(Run({"train", "--data", data, "--params", Path("init.json"), "--seed", "3", "--lr",
                 "0", "--iterations", "4", "--batch", "8", "--out", Path("out.json")}),
            cli::kExitOk)
      << err_.str();
  EXPECT_EQ(ParamsFromJson(Slurp(Path("out.json"))), init);
  const std::string curve = Slurp(Path("out.json") + ".loss.csv");
  EXPECT_EQ(curve.rfind("iteration,loss\n", 0), 0u);
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 5);
}

TEST_F(CliTest, DiagnoseSymbolicOneHot) {
  const std::string data = Gen("d.jsonl", "11");
  ASSERT_EQ(Run({"diagnose", "--data", data, "--mode", "symbolic", "--graphs", "onehot",
                 "--perturb", "bg", "fg", "--format", "json", "markdown", "--out",
                 Path("report.json")}),
            cli::kExitOk)
      << err_.str();
  const DiagnosisReport r = ReportFromJson(Slurp(Path("report.json")));
  ASSERT_FALSE(r.grounding.empty());
  EXPECT_EQ(r.grounding[0].ap, 100.0);
  ASSERT_EQ(r.robustness.size(), 2u);
  EXPECT_EQ(r.robustness[0].perturbation, "bg");
  EXPECT_EQ(r.robustness[0].c2i, 0.0);
  EXPECT_EQ(r.robustness[0].i2c, 0.0);
  const std::string md = Slurp(Path("report.md"));
  EXPECT_NE(md.find("| Perturbation | Val Acc. | Acc. | C→I | I→C |"), std::string::npos) << md;
  EXPECT_NE(md.find("| bg | 100.00 | 100.00 | 0.00 | 0.00 |"), std::string::npos) << md;
}

TEST_F(CliTest, ReportConvertsBetweenFormats) {
  const std::string data = Gen("d.jsonl", "12", 1.0);
  ASSERT_EQ(Run({"diagnose", "--data", data, "--seed", "4", "--out", Path("r.json")}),
            cli::kExitOk);
  ASSERT_EQ(Run({"report", "--in", Path("r.json"), "--format", "csv", "--out", Path("r.csv")}),
            cli::kExitOk);
  ASSERT_EQ(Run({"report", "--in", Path("r.csv"), "--format", "json", "--out", Path("back.json")}),
            cli::kExitOk);
  EXPECT_EQ(Slurp(Path("back.json")), Slurp(Path("r.json")));
  ASSERT_EQ(Run({"report", "--in", Path("r.json"), "--format", "markdown"}), cli::kExitOk);
  EXPECT_NE(out_.str().find("## Robustness"), std::string::npos);
}

}  // namespace
}  // namespace sgr
