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

#ifndef ROSSKIT_BENCH_H_
#define ROSSKIT_BENCH_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rosskit/attacks.h"
#include "rosskit/basescores.h"
#include "rosskit/io.h"
#include "rosskit/numerics.h"
#include "rosskit/refmodel.h"
#include "rosskit/ross.h"
#include "rosskit/synth.h"

namespace rosskit {

// Detectors compared by the harness. All are oriented higher = ID; the MAD
// detector is negated for that reason.
enum class PostProcessor { kBase, kMedian, kNegMad, kRatio, kRoss };

inline constexpr std::array<PostProcessor, 5> kAllPostProcessors = {
    PostProcessor::kBase, PostProcessor::kMedian, PostProcessor::kNegMad,
    PostProcessor::kRatio, PostProcessor::kRoss};

std::string_view PostProcessorName(PostProcessor pp);

struct BenchmarkSet {
  std::string name;
  DataRole role = DataRole::kId;
  std::vector<Vector> inputs;
  std::string hash;
  // Attacks on images-kind sets are clamped to [0, 1] unless the attack
  // config sets its own box.
  DataKind kind = DataKind::kFeatures;
};

BenchmarkSet ToBenchmarkSet(const Dataset& dataset);

struct BenchmarkInputs {
  BenchmarkSet id_val;
  BenchmarkSet id_test;
  std::vector<BenchmarkSet> ood_sets;
};

struct EvalSettings {
  ScorerKind scorer = ScorerKind::kGen;
  RossConfig ross = DefaultRossConfig();
  std::vector<AttackConfig> grid;
  // Warm-start each larger-radius attack from the previous radius' result so
  // attack strength is nested across the grid.
  bool nested_grid = false;
  int jobs = 0;
  nlohmann::json run_spec = nlohmann::json::object();
  // When set, every attacked set is saved as a dataset under
  // <dir>/<cell slug>/<set name>.
  std::optional<std::filesystem::path> save_adversarial;
};

// fDBD takes mu_train from the calibration inputs; other scores ignore them.
Scorer MakeScorer(ScorerKind kind, const RefModel& model,
                  std::span<const Vector> calibration_inputs);

struct ReportRow {
  std::string variant;  // ablation setting, empty otherwise
  std::string attack;   // "clean" or e.g. "pgd-min eps=0.1"
  std::string post_processor;
  std::string ood_set;  // "average" for group means
  MetricPair metrics;
};

struct SymmetryGap {
  std::string variant;
  std::string post_processor;
  double epsilon = 0.0;
  double auroc_min = 0.0;
  double auroc_max = 0.0;
  double gap = 0.0;
};

// One point of the clean-vs-robust trade-off series produced by ablations.
struct TradeoffPoint {
  std::string param;
  double value = 0.0;
  std::string direction;  // "clean", "min" or "max"
  double epsilon = 0.0;
  std::string post_processor;
  double auroc = 0.0;
  double fpr95 = 0.0;
};

// Raw scores: cell ("variant attack") -> set -> post-processor -> scores.
using RawScores =
    std::map<std::string, std::map<std::string, std::map<std::string, Vector>>>;

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<ReportRow> averages;
  std::vector<SymmetryGap> symmetry;
  std::vector<TradeoffPoint> tradeoff;
  std::map<std::string, Calibration> calibrations;  // by variant
  nlohmann::json provenance = nlohmann::json::object();
  RawScores raw_scores;

  std::optional<MetricPair> Find(std::string_view post_processor,
                                 std::string_view ood_set,
                                 std::string_view attack,
                                 std::string_view variant = "") const;
  std::optional<MetricPair> Average(std::string_view post_processor,
                                    std::string_view attack,
                                    std::string_view variant = "") const;
};

std::string AttackLabel(const AttackConfig& cfg);
// AttackLabel as a directory name, e.g. "pgd-min_eps0.1".
std::string AttackSlug(const AttackConfig& cfg);

// The attacked copy of `source` as a dataset carrying the attack settings
// in its metadata.
Dataset MakeAdversarialDataset(const BenchmarkSet& source,
                               std::span<const Vector> adversarial,
                               const AttackConfig& cfg, ScorerKind scorer);
std::string CellKey(std::string_view variant, std::string_view attack);

// Clean comparison of all post-processors, computed from one shared score
// stack per input. Calibrates S95 on inputs.id_val.
EvalReport EvaluatePostprocessors(const BenchmarkInputs& inputs,
                                  const RefModel& model,
                                  const EvalSettings& settings);

// Clean base-score-only evaluation on logits datasets (no model, so no
// noise stacks). Rows carry post_processor "base".
EvalReport EvaluateLogits(const Dataset& id_set,
                          std::span<const Dataset> ood_sets,
                          const Scorer& scorer);

// Clean rows plus one cell per attack config: PGD-min perturbs the ID test
// set, PGD-max every OOD set, gradients through the base score. Every cell
// is rescored by all post-processors and symmetry gaps are reported.
EvalReport AttackEvaluate(const BenchmarkInputs& inputs, const RefModel& model,
                          const EvalSettings& settings);

enum class AblationParam { kN, kSigmaNoise, kLambda };

AblationParam ParseAblationParam(std::string_view name);
std::string_view AblationParamName(AblationParam p);

// One AttackEvaluate-style run per value with everything else fixed. Attacks
// do not depend on the ROSS settings, so adversarial inputs are computed
// once and rescored for every value.
EvalReport Ablate(AblationParam param, std::span<const double> values,
                  const BenchmarkInputs& inputs, const RefModel& model,
                  const EvalSettings& settings);

std::string VariantLabel(AblationParam param, double value);

// Element-wise mean of reports from repeated training runs that share the
// same row layout. The result carries no raw scores; each run's own report
// does.
EvalReport MeanOverRuns(std::span<const EvalReport> runs);

// Fixed-width histograms over the pooled range of all sets.
struct Histogram {
  std::string post_processor;
  double low = 0.0;
  double high = 0.0;
  std::vector<std::string> set_names;
  std::vector<std::vector<std::size_t>> counts;  // per set, kHistogramBins
};

inline constexpr std::size_t kHistogramBins = 50;

Histogram BuildHistogram(std::string post_processor,
                         const std::map<std::string, Vector>& scores_by_set,
                         std::size_t bins = kHistogramBins);

// One histogram per post-processor for one cell of the raw scores.
std::vector<Histogram> EmitHistograms(const RawScores& raw,
                                      std::string_view cell);

std::string HistogramToTsv(const Histogram& h);
std::string TradeoffToTsv(std::span<const TradeoffPoint> points);

nlohmann::json ReportToJson(const EvalReport& report);
EvalReport ReportFromJson(const nlohmann::json& doc);
nlohmann::json RawScoresToJson(const RawScores& raw);
RawScores RawScoresFromJson(const nlohmann::json& doc);

// Table layout: rows are post-processors, columns OOD sets + Avg,
// cells "FPR95/AUROC" in percent. One block per (variant, attack).
std::string RenderReportTable(const EvalReport& report);

// Recomputes every row and average of `report` from raw scores. Returns a
// description of each mismatch; empty when the report is consistent.
std::vector<std::string> VerifyAgainstRawScores(const EvalReport& report,
                                                const RawScores& raw,
                                                double tolerance = 1e-12);

// Writes report.json, report.txt, scores.json (+ tradeoff.tsv) into dir.
// provenance.run_spec, when present, is embedded in every file.
void WriteReport(const EvalReport& report, const std::filesystem::path& dir);

// The desk-scale benchmark with its trained 2-32-32-3 reference model.
struct StandardBenchmark {
  StandardBenchmarkData data;
  RefModel model;
};

TrainConfig StandardTrainConfig(std::uint64_t seed);
std::vector<std::size_t> StandardLayerDims();
StandardBenchmark BuildStandardBenchmark(std::uint64_t seed);
BenchmarkInputs ToBenchmarkInputs(const StandardBenchmarkData& data);

// {min, max} x eps for each eps, 40 steps, default step size.
std::vector<AttackConfig> MakeAttackGrid(std::span<const double> epsilons,
                                         int steps = 40);

}  // namespace rosskit

#endif  // ROSSKIT_BENCH_H_
