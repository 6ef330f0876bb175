// Copyright 2026 The rosskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "common/temp_dir.h"
#include "rosskit/bench.h"
#include "rosskit/error.h"
#include "rosskit/io.h"
#include "runspec.h"

namespace rosskit::cli {
namespace {

namespace fs = std::filesystem;
using ::testing::HasSubstr;
using ::testing::StartsWith;
using rosskit::testing::TempDir;

struct Outcome {
  int status = 0;
  std::string out;
  std::string err;
};

Outcome RunCli(std::vector<std::string> args, const char* env_seed = nullptr) {
  args.insert(args.begin(), "rosskit");
  std::ostringstream out, err;
  Outcome o;
  o.status = Run(args, out, err, env_seed);
  o.out = out.str();
  o.err = err.str();
  return o;
}

int CountLines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

TEST(CliTest, UnknownCommandIsUsageError) {
  const Outcome o = RunCli({"frobnicate"});
  EXPECT_EQ(o.status, 2);
  EXPECT_THAT(o.err, StartsWith("error: usage:"));
  EXPECT_THAT(o.err, HasSubstr("attack-eval"));
}

TEST(CliTest, NoCommandIsUsageError) { EXPECT_EQ(RunCli({}).status, 2); }

TEST(CliTest, HelpExitsZero) {
  const Outcome o = RunCli({"--help"});
  EXPECT_EQ(o.status, 0);
  EXPECT_THAT(o.out, HasSubstr("calibrate"));
}

TEST(CliTest, ValidationFailureIsOneLine) {
  TempDir tmp;
  const Outcome o = RunCli({"eval", "--out", (tmp / "r").string()});
  EXPECT_EQ(o.status, 1);
  EXPECT_EQ(CountLines(o.err), 1);
  EXPECT_THAT(o.err, StartsWith("error: invalid_argument: "));

  const Outcome missing =
      RunCli({"eval", "--id", (tmp / "nope").string(), "--ood",
              (tmp / "nope2").string(), "--out", (tmp / "r").string()});
  EXPECT_EQ(missing.status, 1);
  EXPECT_THAT(missing.err, StartsWith("error: not_found: "));
}

TEST(CliTest, CalibrateFromValues) {
  TempDir tmp;
  std::string values;
  for (int i = 1; i <= 100; ++i) values += std::to_string(i) + "\n";
  WriteTextFile(tmp / "v.txt", values);
  const Outcome o = RunCli(
      {"calibrate", "--values", (tmp / "v.txt").string(), "--out",
       (tmp / "cal").string()});
  ASSERT_EQ(o.status, 0) << o.err;
  const auto doc =
      nlohmann::json::parse(ReadTextFile(tmp / "cal" / "calibration.json"));
  EXPECT_NEAR(doc.at("s95").get<double>(), 5.95, 1e-12);
  EXPECT_EQ(doc.at("source_count"), 100);

  WriteTextFile(tmp / "few.txt", "1 2 3\n");
  const Outcome few =
      RunCli({"calibrate", "--values", (tmp / "few.txt").string()});
  EXPECT_EQ(few.status, 1);
  EXPECT_THAT(few.err, HasSubstr("insufficient_data"));
  EXPECT_THAT(few.err, HasSubstr("insufficient calibration data"));
}

TEST(CliTest, AttackEvalDefaultGridHasSixCells) {
  TempDir tmp;
  const Outcome o = RunCli({"attack-eval", "--preset", "standard", "--grid",
                            "default", "--steps", "5", "--out",
                            (tmp / "r").string()});
  ASSERT_EQ(o.status, 0) << o.err;
  const EvalReport r = ReportFromJson(
      nlohmann::json::parse(ReadTextFile(tmp / "r" / "report.json")));
  std::set<std::string> cells;
  for (const ReportRow& row : r.rows) {
    if (row.attack != "clean") cells.insert(row.attack);
  }
  EXPECT_EQ(cells.size(), 6u);
  EXPECT_TRUE(cells.count("pgd-min eps=0.0313725"));
  EXPECT_TRUE(cells.count("pgd-max eps=0.00784314"));
  EXPECT_EQ(r.symmetry.size(), 3u * 5);
}

TEST(RunSpecTest, SeedPrecedence) {
  TempDir tmp;
  WriteTextFile(tmp / "c.json", R"({"seed": 5, "n": 7})");
  FlagValues flags;
  EXPECT_EQ(ResolveRunSpec("eval", std::nullopt, flags, nullptr).ross.seed, 0u);
  EXPECT_EQ(ResolveRunSpec("eval", std::nullopt, flags, "9").ross.seed, 9u);
  const RunSpec from_config =
      ResolveRunSpec("eval", (tmp / "c.json").string(), flags, "9");
  EXPECT_EQ(from_config.ross.seed, 5u);
  EXPECT_EQ(from_config.ross.n_samples, 7);
  flags.seed = 11;
  EXPECT_EQ(ResolveRunSpec("eval", (tmp / "c.json").string(), flags, "9")
                .ross.seed,
            11u);
  EXPECT_THROW(ResolveRunSpec("eval", std::nullopt, FlagValues{}, "x1"), Error);
}

TEST(RunSpecTest, RejectsUnknownConfigKeys) {
  TempDir tmp;
  WriteTextFile(tmp / "c.json", R"({"sead": 5})");
  EXPECT_THROW(
      ResolveRunSpec("eval", (tmp / "c.json").string(), FlagValues{}, nullptr),
      Error);
  const Outcome o = RunCli({"eval", "--preset", "standard", "--config",
                            (tmp / "c.json").string(), "--out",
                            (tmp / "r").string()});
  EXPECT_EQ(o.status, 1);
  EXPECT_THAT(o.err, HasSubstr("unknown config key sead"));
}

TEST(RunSpecTest, Grids) {
  RunSpec spec = ResolveRunSpec("attack-eval", std::nullopt, {}, nullptr);
  EXPECT_EQ(ResolveGrid(spec).size(), 6u);
  spec.grid = "standard";
  const auto standard = ResolveGrid(spec);
  ASSERT_EQ(standard.size(), 6u);
  EXPECT_DOUBLE_EQ(standard[2].epsilon, 0.1);
  spec.grid = "0.01,0.2";
  spec.direction = Direction::kMax;
  const auto custom = ResolveGrid(spec);
  ASSERT_EQ(custom.size(), 2u);
  EXPECT_EQ(custom[0].direction, Direction::kMax);
  spec.epsilon = 0.3;
  const auto single = ResolveGrid(spec);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0].epsilon, 0.3);
  EXPECT_THROW(ParseNumberList("0.1,,x"), Error);
}

// The full operator path on prepared dataset directories.
class CliPipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    bench_ = tmp_ / "bench";
    ASSERT_EQ(RunCli({"synth", "--preset", "standard", "--seed", "0", "--out",
                      bench_.string()})
                  .status,
              0);
    const Outcome t = RunCli({"train-ref", "--data", (bench_ / "train").string(),
                              "--seed", "0", "--out",
                              (bench_ / "model").string()});
    ASSERT_EQ(t.status, 0) << t.err;
    ASSERT_THAT(t.out, HasSubstr("train_accuracy"));
  }

  TempDir tmp_;
  fs::path bench_;
};

TEST_F(CliPipelineTest, SmokePath) {
  // The CLI-built benchmark equals the in-process one.
  const StandardBenchmark ref = BuildStandardBenchmark(0);
  EXPECT_EQ(DatasetHash(LoadDataset(bench_ / "id_val")),
            DatasetHash(ref.data.id_val));

  const fs::path cal = tmp_ / "cal";
  Outcome o = RunCli({"calibrate", "--scorer", "gen", "--model",
                      (bench_ / "model").string(), "--data",
                      (bench_ / "id_val").string(), "--out", cal.string()});
  ASSERT_EQ(o.status, 0) << o.err;
  const auto cal_doc =
      nlohmann::json::parse(ReadTextFile(cal / "calibration.json"));
  EXPECT_EQ(cal_doc.at("source_count"), 120);
  EXPECT_EQ(cal_doc.at("scorer"), "gen");

  o = RunCli({"score", "--model", (bench_ / "model").string(), "--data",
              (bench_ / "ood_far").string(), "--calibration",
              (cal / "calibration.json").string()});
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_THAT(o.out, StartsWith("# run_spec: "));
  EXPECT_THAT(o.out, HasSubstr("index\tbase\ts_med\tsigma_med\ts_ross\tverdict\n"));
  EXPECT_EQ(CountLines(o.out), 600 + 2);

  const fs::path rep = tmp_ / "report";
  o = RunCli({"eval", "--scorer", "gen", "--config", "default", "--bench",
              bench_.string(), "--out", rep.string()});
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_THAT(o.out, HasSubstr("[clean]  FPR95/AUROC (%)"));
  for (const char* f : {"report.json", "report.txt", "scores.json"}) {
    EXPECT_TRUE(fs::exists(rep / f)) << f;
  }
  EXPECT_THAT(ReadTextFile(rep / "report.txt"), HasSubstr("run_spec: "));

  o = RunCli({"report", "--in", rep.string(), "--check"});
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_THAT(o.out, HasSubstr("check: 10 rows and 5 averages match"));

  o = RunCli({"hist", "--in", rep.string(), "--out", (tmp_ / "hist").string()});
  ASSERT_EQ(o.status, 0) << o.err;
  for (const char* f : {"hist_base.tsv", "hist_S_med.tsv", "hist_neg_sigma_med.tsv",
                        "hist_S_med_over_sigma_med.tsv", "hist_S_ROSS.tsv"}) {
    EXPECT_TRUE(fs::exists(tmp_ / "hist" / f)) << f;
  }

  // The embedded run_spec replays the run exactly.
  const auto report = nlohmann::json::parse(ReadTextFile(rep / "report.json"));
  WriteTextFile(tmp_ / "spec.json",
                report.at("provenance").at("run_spec").dump());
  o = RunCli({"eval", "--config", (tmp_ / "spec.json").string(), "--out",
              (tmp_ / "replay").string()});
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_EQ(ReadTextFile(tmp_ / "replay" / "report.json"),
            ReadTextFile(rep / "report.json"));
}

TEST_F(CliPipelineTest, TamperedReportFailsCheck) {
  const fs::path rep = tmp_ / "report";
  ASSERT_EQ(RunCli({"eval", "--bench", bench_.string(), "--out", rep.string()})
                .status,
            0);
  auto doc = nlohmann::json::parse(ReadTextFile(rep / "report.json"));
  doc["rows"][0]["auroc"] = 0.123;
  WriteTextFile(rep / "report.json", doc.dump());
  const Outcome o = RunCli({"report", "--in", rep.string(), "--check"});
  EXPECT_EQ(o.status, 1);
  EXPECT_THAT(o.err, HasSubstr("disagree with raw scores"));
}

TEST_F(CliPipelineTest, EnvironmentSeedReachesTheRunSpec) {
  const fs::path rep = tmp_ / "report";
  ASSERT_EQ(RunCli({"eval", "--bench", bench_.string(), "--out", rep.string()},
                   "42")
                .status,
            0);
  const auto doc = nlohmann::json::parse(ReadTextFile(rep / "report.json"));
  EXPECT_EQ(doc.at("provenance").at("run_spec").at("seed"), 42);
  EXPECT_EQ(doc.at("provenance").at("ross_config").at("seed"), 42);
}

TEST_F(CliPipelineTest, FdbdSidecarFromCalibrate) {
  const fs::path cal = tmp_ / "cal";
  ASSERT_EQ(RunCli({"calibrate", "--scorer", "fdbd", "--model",
                    (bench_ / "model").string(), "--data",
                    (bench_ / "id_val").string(), "--out", cal.string()})
                .status,
            0);
  EXPECT_TRUE(fs::exists(cal / "fdbd" / "manifest.json"));
  Outcome o = RunCli({"score", "--model", (bench_ / "model").string(), "--data",
                      (bench_ / "id_test").string(), "--calibration",
                      (cal / "calibration.json").string()});
  EXPECT_EQ(o.status, 1);
  EXPECT_THAT(o.err, HasSubstr("--fdbd"));
  o = RunCli({"score", "--model", (bench_ / "model").string(), "--data",
              (bench_ / "id_test").string(), "--calibration",
              (cal / "calibration.json").string(), "--fdbd",
              (cal / "fdbd").string()});
  EXPECT_EQ(o.status, 0) << o.err;
}

Dataset Logits(const std::string& name, DataRole role,
               const std::vector<Vector>& rows) {
  Dataset d;
  d.manifest.name = name;
  d.manifest.kind = DataKind::kLogits;
  d.manifest.role = role;
  d.tensors["data"] = TensorFromRows(rows);
  d.manifest.shape = d.tensors["data"].shape;
  return d;
}

TEST(CliLogitsTest, CleanBaseOnlyPath) {
  TempDir tmp;
  std::vector<Vector> id, ood;
  for (int i = 0; i < 30; ++i) {
    id.push_back({5.0 + 0.1 * i, 0.0, -1.0});
    ood.push_back({0.01 * i, 0.0, 0.1});
  }
  SaveDataset(Logits("id", DataRole::kId, id), tmp / "id");
  SaveDataset(Logits("o", DataRole::kOodFar, ood), tmp / "o");

  Outcome o = RunCli({"score", "--scorer", "ebo", "--data", (tmp / "id").string()});
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_THAT(o.out, HasSubstr("index\tbase\n"));

  o = RunCli({"eval", "--scorer", "msp", "--id", (tmp / "id").string(), "--ood",
              (tmp / "o").string(), "--out", (tmp / "r").string()});
  ASSERT_EQ(o.status, 0) << o.err;
  const EvalReport r = ReportFromJson(
      nlohmann::json::parse(ReadTextFile(tmp / "r" / "report.json")));
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].metrics.auroc, 1.0);

  o = RunCli({"attack-eval", "--id", (tmp / "id").string(), "--ood",
              (tmp / "o").string(), "--out", (tmp / "r2").string()});
  EXPECT_EQ(o.status, 1);
  EXPECT_THAT(o.err, HasSubstr("clean base score only"));
}

}  // namespace
}  // namespace rosskit::cli
