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

#include "rosskit/bench.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rosskit/error.h"
#include "rosskit/parallel.h"

namespace rosskit {
namespace {

constexpr std::string_view kClean = "clean";
constexpr std::string_view kAverage = "average";
constexpr std::string_view kReportSchema = "rosskit.eval_report/1";
constexpr std::string_view kScoresSchema = "rosskit.raw_scores/1";

std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string FormatExact(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::uint64_t SetIndexOffset(std::size_t set_slot) {
  return static_cast<std::uint64_t>(set_slot) << 32;
}

// Slot 0 is id_val, 1 is id_test, 2.. are the OOD sets.
constexpr std::size_t kValSlot = 0;
constexpr std::size_t kTestSlot = 1;
std::size_t OodSlot(std::size_t k) { return k + 2; }

struct SetStacks {
  Vector base;
  std::vector<ScoreStack> stacks;
};

SetStacks ScoreSet(std::span<const Vector> inputs, const RefModel& model,
                   const Scorer& scorer, const RossConfig& cfg, int jobs,
                   std::size_t slot) {
  SetStacks out;
  out.base.resize(inputs.size());
  ParallelFor(inputs.size(), jobs, [&](std::size_t i) {
    out.base[i] = ScoreInput(model, scorer, inputs[i]);
  });
  BaseScoreFn fn = [&model, &scorer](std::span<const double> x) {
    return ScoreInput(model, scorer, x);
  };
  out.stacks = ComputeScoreStacks(inputs, fn, cfg, jobs, SetIndexOffset(slot));
  return out;
}

using ScoresByPp = std::map<std::string, Vector>;

ScoresByPp PostProcess(const SetStacks& s, const Calibration& cal,
                       double lambda) {
  ScoresByPp out;
  const std::size_t n = s.base.size();
  Vector med(n), neg_mad(n), ratio(n), ross(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ScoreStack& st = s.stacks[i];
    med[i] = st.s_med;
    neg_mad[i] = -st.sigma_med;
    ratio[i] = st.s_med / std::max(st.sigma_med, kSigmaFloor);
    ross[i] = RossScore(st, cal, lambda);
  }
  out[std::string(PostProcessorName(PostProcessor::kBase))] = s.base;
  out[std::string(PostProcessorName(PostProcessor::kMedian))] = std::move(med);
  out[std::string(PostProcessorName(PostProcessor::kNegMad))] =
      std::move(neg_mad);
  out[std::string(PostProcessorName(PostProcessor::kRatio))] = std::move(ratio);
  out[std::string(PostProcessorName(PostProcessor::kRoss))] = std::move(ross);
  return out;
}

// Scores of every set in one cell, keyed by set name.
using CellScores = std::map<std::string, ScoresByPp>;

void AppendCellRows(const BenchmarkInputs& inputs, const CellScores& cell,
                    const std::string& variant, const std::string& attack,
                    EvalReport* report) {
  const ScoresByPp& id = cell.at(inputs.id_test.name);
  for (PostProcessor pp : kAllPostProcessors) {
    const std::string pp_name(PostProcessorName(pp));
    auto id_it = id.find(pp_name);
    if (id_it == id.end()) continue;
    MetricPair sum;
    for (const BenchmarkSet& ood : inputs.ood_sets) {
      const MetricPair m =
          ComputeMetrics(id_it->second, cell.at(ood.name).at(pp_name));
      report->rows.push_back({variant, attack, pp_name, ood.name, m});
      sum.fpr95 += m.fpr95;
      sum.auroc += m.auroc;
    }
    const double k = static_cast<double>(inputs.ood_sets.size());
    report->averages.push_back({variant, attack, pp_name,
                                std::string(kAverage),
                                {sum.fpr95 / k, sum.auroc / k}});
  }
  auto& raw = report->raw_scores[CellKey(variant, attack)];
  for (const auto& [set, by_pp] : cell) raw[set] = by_pp;
}

void CheckInputs(const BenchmarkInputs& inputs) {
  if (inputs.id_test.inputs.empty()) {
    throw Error(ErrorCode::kEmptyInput, "empty ID test set");
  }
  if (inputs.ood_sets.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no OOD sets");
  }
  for (const BenchmarkSet& s : inputs.ood_sets) {
    if (s.inputs.empty()) {
      throw Error(ErrorCode::kEmptyInput, "empty OOD set " + s.name);
    }
    if (s.name == inputs.id_test.name) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate set name " + s.name);
    }
  }
}

std::string ModelHash(const RefModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const DenseLayer& l : model.layers()) {
    for (double w : l.weights) mix(w);
    for (double b : l.bias) mix(b);
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

nlohmann::json AttackConfigToJson(const AttackConfig& c) {
  nlohmann::json j = {{"direction", DirectionName(c.direction)},
                      {"epsilon", c.epsilon},
                      {"steps", c.steps},
                      {"step_size", c.step_size},
                      {"seed", c.seed},
                      {"random_start", c.random_start}};
  if (c.domain_box) {
    j["domain_box"] = {c.domain_box->low, c.domain_box->high};
  }
  return j;
}

nlohmann::json Provenance(const BenchmarkInputs& inputs, const RefModel* model,
                          const EvalSettings& settings) {
  nlohmann::json p;
  p["scorer"] = ScorerKindName(settings.scorer);
  p["ross_config"] = RossConfigToJson(settings.ross);
  nlohmann::json sets = nlohmann::json::object();
  auto add = [&sets](const BenchmarkSet& s) {
    sets[s.name] = {{"role", DataRoleName(s.role)},
                    {"hash", s.hash},
                    {"count", s.inputs.size()}};
  };
  add(inputs.id_val);
  add(inputs.id_test);
  for (const BenchmarkSet& s : inputs.ood_sets) add(s);
  p["datasets"] = sets;
  if (model != nullptr) {
    p["model"] = {{"layer_dims", model->layer_dims()},
                  {"hash", ModelHash(*model)}};
  }
  nlohmann::json grid = nlohmann::json::array();
  for (const AttackConfig& c : settings.grid) grid.push_back(AttackConfigToJson(c));
  p["attack_grid"] = grid;
  p["nested_grid"] = settings.nested_grid;
  return p;
}

// Adversarial copies of the attacked side for one grid cell: the ID test
// set for PGD-min, every OOD set for PGD-max.
struct AttackedCell {
  AttackConfig cfg;
  std::string label;
  std::map<std::string, std::vector<Vector>> sets;
};

std::vector<AttackedCell> RunGrid(const BenchmarkInputs& inputs,
                                  const RefModel& model, const Scorer& scorer,
                                  const EvalSettings& settings) {
  std::vector<AttackedCell> cells(settings.grid.size());
  std::vector<std::size_t> order(settings.grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (settings.nested_grid) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return settings.grid[a].epsilon <
                              settings.grid[b].epsilon;
                     });
  }
  std::map<Direction, const AttackedCell*> previous;
  for (std::size_t idx : order) {
    const AttackConfig& cfg = settings.grid[idx];
    cfg.Validate();
    AttackedCell& cell = cells[idx];
    cell.cfg = cfg;
    cell.label = AttackLabel(cfg);
    const AttackedCell* warm =
        settings.nested_grid && previous.count(cfg.direction)
            ? previous[cfg.direction]
            : nullptr;
    auto attack = [&](const BenchmarkSet& set, SampleRole role) {
      std::vector<SampleRole> roles(set.inputs.size(), role);
      std::span<const Vector> start;
      if (warm != nullptr) start = warm->sets.at(set.name);
      AttackConfig set_cfg = cfg;
      if (!set_cfg.domain_box && set.kind == DataKind::kImages) {
        set_cfg.domain_box = DomainBox{0.0, 1.0};
      }
      std::vector<Vector>& adv = cell.sets[set.name];
      adv = AttackDataset(set.inputs, roles, model, scorer, set_cfg,
                          settings.jobs, start)
                .inputs;
      if (settings.save_adversarial) {
        SaveDataset(MakeAdversarialDataset(set, adv, set_cfg, scorer.kind()),
                    *settings.save_adversarial / AttackSlug(cfg) / set.name);
      }
    };
    if (cfg.direction == Direction::kMin) {
      attack(inputs.id_test, SampleRole::kId);
    } else {
      for (const BenchmarkSet& s : inputs.ood_sets) attack(s, SampleRole::kOod);
    }
    previous[cfg.direction] = &cell;
  }
  return cells;
}

void AppendSymmetry(const std::string& variant,
                    std::span<const AttackedCell> cells, EvalReport* report) {
  std::vector<double> eps;
  for (const AttackedCell& c : cells) {
    if (c.cfg.direction == Direction::kMin) eps.push_back(c.cfg.epsilon);
  }
  for (double e : eps) {
    const AttackedCell* min_cell = nullptr;
    const AttackedCell* max_cell = nullptr;
    for (const AttackedCell& c : cells) {
      if (c.cfg.epsilon != e) continue;
      if (c.cfg.direction == Direction::kMin && min_cell == nullptr) {
        min_cell = &c;
      }
      if (c.cfg.direction == Direction::kMax && max_cell == nullptr) {
        max_cell = &c;
      }
    }
    if (min_cell == nullptr || max_cell == nullptr) continue;
    for (PostProcessor pp : kAllPostProcessors) {
      const std::string pp_name(PostProcessorName(pp));
      auto a = report->Average(pp_name, min_cell->label, variant);
      auto b = report->Average(pp_name, max_cell->label, variant);
      if (!a || !b) continue;
      report->symmetry.push_back({variant, pp_name, e, a->auroc, b->auroc,
                                  std::abs(a->auroc - b->auroc)});
    }
  }
}

// One full clean + grid evaluation for one ROSS configuration.
void EvaluateVariant(const BenchmarkInputs& inputs, const RefModel& model,
                     const Scorer& scorer, const RossConfig& cfg, int jobs,
                     std::span<const AttackedCell> cells,
                     const std::string& variant, EvalReport* report) {
  cfg.Validate();
  const SetStacks val =
      ScoreSet(inputs.id_val.inputs, model, scorer, cfg, jobs, kValSlot);
  Vector val_med(val.stacks.size());
  for (std::size_t i = 0; i < val.stacks.size(); ++i) {
    val_med[i] = val.stacks[i].s_med;
  }
  const Calibration cal = CalibrateS95(val_med);
  report->calibrations[variant] = cal;

  CellScores clean;
  clean[inputs.id_test.name] = PostProcess(
      ScoreSet(inputs.id_test.inputs, model, scorer, cfg, jobs, kTestSlot),
      cal, cfg.lambda);
  for (std::size_t k = 0; k < inputs.ood_sets.size(); ++k) {
    const BenchmarkSet& s = inputs.ood_sets[k];
    clean[s.name] = PostProcess(
        ScoreSet(s.inputs, model, scorer, cfg, jobs, OodSlot(k)), cal,
        cfg.lambda);
  }
  AppendCellRows(inputs, clean, variant, std::string(kClean), report);

  for (const AttackedCell& c : cells) {
    CellScores cell = clean;
    for (const auto& [name, adv] : c.sets) {
      std::size_t slot = kTestSlot;
      for (std::size_t k = 0; k < inputs.ood_sets.size(); ++k) {
        if (inputs.ood_sets[k].name == name) slot = OodSlot(k);
      }
      cell[name] = PostProcess(ScoreSet(adv, model, scorer, cfg, jobs, slot),
                               cal, cfg.lambda);
    }
    AppendCellRows(inputs, cell, variant, c.label, report);
  }
  AppendSymmetry(variant, cells, report);
}

Scorer ScorerFor(const BenchmarkInputs& inputs, const RefModel& model,
                 const EvalSettings& settings) {
  return MakeScorer(settings.scorer, model, inputs.id_val.inputs);
}

double ParseVariantValue(const nlohmann::json& j) { return j.get<double>(); }

nlohmann::json RowToJson(const ReportRow& r) {
  return {{"variant", r.variant},
          {"attack", r.attack},
          {"post_processor", r.post_processor},
          {"ood_set", r.ood_set},
          {"fpr95", r.metrics.fpr95},
          {"auroc", r.metrics.auroc}};
}

ReportRow RowFromJson(const nlohmann::json& j) {
  return {j.at("variant").get<std::string>(),
          j.at("attack").get<std::string>(),
          j.at("post_processor").get<std::string>(),
          j.at("ood_set").get<std::string>(),
          {j.at("fpr95").get<double>(), j.at("auroc").get<double>()}};
}

std::optional<MetricPair> FindIn(const std::vector<ReportRow>& rows,
                                 std::string_view pp, std::string_view set,
                                 std::string_view attack,
                                 std::string_view variant) {
  for (const ReportRow& r : rows) {
    if (r.post_processor == pp && r.ood_set == set && r.attack == attack &&
        r.variant == variant) {
      return r.metrics;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view PostProcessorName(PostProcessor pp) {
  switch (pp) {
    case PostProcessor::kBase:
      return "base";
    case PostProcessor::kMedian:
      return "S_med";
    case PostProcessor::kNegMad:
      return "-sigma_med";
    case PostProcessor::kRatio:
      return "S_med/sigma_med";
    case PostProcessor::kRoss:
      return "S_ROSS";
  }
  return "?";
}

BenchmarkSet ToBenchmarkSet(const Dataset& dataset) {
  RequireAttackable(dataset);
  return {dataset.manifest.name, dataset.manifest.role, dataset.Rows(),
          DatasetHash(dataset), dataset.manifest.kind};
}

Dataset MakeAdversarialDataset(const BenchmarkSet& source,
                               std::span<const Vector> adversarial,
                               const AttackConfig& cfg, ScorerKind scorer) {
  if (adversarial.size() != source.inputs.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "adversarial set size differs from its source");
  }
  Dataset d;
  d.manifest.name = source.name;
  d.manifest.kind = source.kind;
  d.manifest.role = source.role;
  d.tensors["data"] = TensorFromRows(adversarial);
  d.manifest.shape = d.tensors["data"].shape;
  d.manifest.provenance = "adversarial " + AttackLabel(cfg);
  d.manifest.metadata["attack"] = AttackConfigToJson(cfg);
  d.manifest.metadata["attack"]["scorer"] = ScorerKindName(scorer);
  d.manifest.metadata["source_hash"] = source.hash;
  return d;
}

Scorer MakeScorer(ScorerKind kind, const RefModel& model,
                  std::span<const Vector> calibration_inputs) {
  switch (kind) {
    case ScorerKind::kMsp:
      return Scorer::MakeMsp();
    case ScorerKind::kEbo:
      return Scorer::MakeEnergy();
    case ScorerKind::kGen:
      return Scorer::MakeGen();
    case ScorerKind::kFdbd: {
      if (calibration_inputs.empty()) {
        throw Error(ErrorCode::kNotCalibrated,
                    "fdbd needs calibration inputs for mu_train");
      }
      Vector mu(model.feature_dim(), 0.0);
      for (const Vector& x : calibration_inputs) {
        const ForwardResult f = model.Forward(x);
        for (std::size_t j = 0; j < mu.size(); ++j) mu[j] += f.features[j];
      }
      for (double& v : mu) v /= static_cast<double>(calibration_inputs.size());
      return Scorer::MakeFdbd(FdbdContext::FromModel(model, std::move(mu)));
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scorer");
}

std::optional<MetricPair> EvalReport::Find(std::string_view post_processor,
                                           std::string_view ood_set,
                                           std::string_view attack,
                                           std::string_view variant) const {
  return FindIn(rows, post_processor, ood_set, attack, variant);
}

std::optional<MetricPair> EvalReport::Average(std::string_view post_processor,
                                              std::string_view attack,
                                              std::string_view variant) const {
  return FindIn(averages, post_processor, kAverage, attack, variant);
}

std::string AttackLabel(const AttackConfig& cfg) {
  return "pgd-" + std::string(DirectionName(cfg.direction)) +
         " eps=" + FormatNumber(cfg.epsilon);
}

std::string AttackSlug(const AttackConfig& cfg) {
  return "pgd-" + std::string(DirectionName(cfg.direction)) + "_eps" +
         FormatNumber(cfg.epsilon);
}

std::string CellKey(std::string_view variant, std::string_view attack) {
  if (variant.empty()) return std::string(attack);
  return std::string(variant) + " " + std::string(attack);
}

EvalReport EvaluatePostprocessors(const BenchmarkInputs& inputs,
                                  const RefModel& model,
                                  const EvalSettings& settings) {
  EvalSettings clean = settings;
  clean.grid.clear();
  return AttackEvaluate(inputs, model, clean);
}

EvalReport AttackEvaluate(const BenchmarkInputs& inputs, const RefModel& model,
                          const EvalSettings& settings) {
  CheckInputs(inputs);
  settings.ross.Validate();
  const Scorer scorer = ScorerFor(inputs, model, settings);
  const std::vector<AttackedCell> cells =
      RunGrid(inputs, model, scorer, settings);
  EvalReport report;
  report.provenance = Provenance(inputs, &model, settings);
  report.provenance["run_spec"] = settings.run_spec;
  EvaluateVariant(inputs, model, scorer, settings.ross, settings.jobs, cells,
                  "", &report);
  return report;
}

EvalReport EvaluateLogits(const Dataset& id_set,
                          std::span<const Dataset> ood_sets,
                          const Scorer& scorer) {
  if (ood_sets.empty()) throw Error(ErrorCode::kEmptyInput, "no OOD sets");
  auto score_all = [&scorer](const Dataset& d) {
    if (d.manifest.kind != DataKind::kLogits) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dataset " + d.manifest.name + " is not a logits dataset");
    }
    if (d.size() == 0) {
      throw Error(ErrorCode::kEmptyInput, "empty dataset " + d.manifest.name);
    }
    const std::vector<Vector> logits = d.Rows();
    std::vector<Vector> features;
    if (scorer.uses_features()) {
      if (!d.tensors.count("features")) {
        throw Error(ErrorCode::kNotFound,
                    "fdbd needs a features tensor in " + d.manifest.name);
      }
      features = d.Rows("features");
    }
    Vector out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
      out[i] = scorer.Score(logits[i], features.empty()
                                           ? std::span<const double>()
                                           : std::span<const double>(
                                                 features[i]));
    }
    return out;
  };
  BenchmarkInputs layout;
  layout.id_test = {id_set.manifest.name, id_set.manifest.role, {},
                    DatasetHash(id_set)};
  CellScores cell;
  const std::string base(PostProcessorName(PostProcessor::kBase));
  cell[id_set.manifest.name][base] = score_all(id_set);
  for (const Dataset& d : ood_sets) {
    layout.ood_sets.push_back(
        {d.manifest.name, d.manifest.role, {}, DatasetHash(d)});
    cell[d.manifest.name][base] = score_all(d);
  }
  EvalReport report;
  nlohmann::json sets = nlohmann::json::object();
  sets[id_set.manifest.name] = {{"role", DataRoleName(id_set.manifest.role)},
                                {"hash", layout.id_test.hash},
                                {"count", id_set.size()}};
  for (const Dataset& d : ood_sets) {
    sets[d.manifest.name] = {{"role", DataRoleName(d.manifest.role)},
                             {"hash", DatasetHash(d)},
                             {"count", d.size()}};
  }
  report.provenance = {{"scorer", ScorerKindName(scorer.kind())},
                       {"datasets", sets},
                       {"input", "logits"}};
  AppendCellRows(layout, cell, "", std::string(kClean), &report);
  return report;
}

AblationParam ParseAblationParam(std::string_view name) {
  if (name == "N" || name == "n") return AblationParam::kN;
  if (name == "sigma_noise" || name == "sigma") return AblationParam::kSigmaNoise;
  if (name == "lambda") return AblationParam::kLambda;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown ablation parameter " + std::string(name));
}

std::string_view AblationParamName(AblationParam p) {
  switch (p) {
    case AblationParam::kN:
      return "N";
    case AblationParam::kSigmaNoise:
      return "sigma_noise";
    case AblationParam::kLambda:
      return "lambda";
  }
  return "?";
}

std::string VariantLabel(AblationParam param, double value) {
  return std::string(AblationParamName(param)) + "=" + FormatNumber(value);
}

EvalReport Ablate(AblationParam param, std::span<const double> values,
                  const BenchmarkInputs& inputs, const RefModel& model,
                  const EvalSettings& settings) {
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyInput, "ablation needs at least one value");
  }
  std::vector<RossConfig> configs;
  for (double v : values) {
    RossConfig cfg = settings.ross;
    switch (param) {
      case AblationParam::kN:
        if (!(v >= 1.0) || v != std::floor(v) || v > 1e6) {
          throw Error(ErrorCode::kInvalidArgument,
                      "N must be a positive integer");
        }
        cfg.n_samples = static_cast<int>(v);
        break;
      case AblationParam::kSigmaNoise:
        cfg.sigma_noise = v;
        break;
      case AblationParam::kLambda:
        cfg.lambda = v;
        break;
    }
    cfg.Validate();
    configs.push_back(cfg);
  }
  CheckInputs(inputs);
  const Scorer scorer = ScorerFor(inputs, model, settings);
  const std::vector<AttackedCell> cells =
      RunGrid(inputs, model, scorer, settings);

  EvalReport report;
  report.provenance = Provenance(inputs, &model, settings);
  report.provenance["run_spec"] = settings.run_spec;
  nlohmann::json ablation = {{"param", AblationParamName(param)},
                             {"values", nlohmann::json::array()}};
  for (double v : values) ablation["values"].push_back(v);
  report.provenance["ablation"] = ablation;

  const std::string pname(AblationParamName(param));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string variant = VariantLabel(param, values[i]);
    EvaluateVariant(inputs, model, scorer, configs[i], settings.jobs, cells,
                    variant, &report);
    for (PostProcessor pp : kAllPostProcessors) {
      const std::string pp_name(PostProcessorName(pp));
      const MetricPair c = *report.Average(pp_name, kClean, variant);
      report.tradeoff.push_back(
          {pname, values[i], "clean", 0.0, pp_name, c.auroc, c.fpr95});
      for (const AttackedCell& cell : cells) {
        const MetricPair m = *report.Average(pp_name, cell.label, variant);
        report.tradeoff.push_back({pname, values[i],
                                   std::string(DirectionName(cell.cfg.direction)),
                                   cell.cfg.epsilon, pp_name, m.auroc,
                                   m.fpr95});
      }
    }
  }
  return report;
}

EvalReport MeanOverRuns(std::span<const EvalReport> runs) {
  if (runs.empty()) throw Error(ErrorCode::kEmptyInput, "no runs");
  EvalReport out;
  out.rows = runs[0].rows;
  out.averages = runs[0].averages;
  out.symmetry = runs[0].symmetry;
  out.tradeoff = runs[0].tradeoff;
  const double k = static_cast<double>(runs.size());
  auto mean_rows = [&](std::vector<ReportRow>& rows,
                       std::vector<ReportRow> EvalReport::*member) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      MetricPair sum;
      for (const EvalReport& r : runs) {
        const std::vector<ReportRow>& other = r.*member;
        if (other.size() != rows.size() ||
            other[i].post_processor != rows[i].post_processor ||
            other[i].ood_set != rows[i].ood_set ||
            other[i].attack != rows[i].attack ||
            other[i].variant != rows[i].variant) {
          throw Error(ErrorCode::kDimensionMismatch,
                      "runs have different report layouts");
        }
        sum.fpr95 += other[i].metrics.fpr95;
        sum.auroc += other[i].metrics.auroc;
      }
      rows[i].metrics = {sum.fpr95 / k, sum.auroc / k};
    }
  };
  mean_rows(out.rows, &EvalReport::rows);
  mean_rows(out.averages, &EvalReport::averages);
  for (std::size_t i = 0; i < out.symmetry.size(); ++i) {
    double a = 0.0, b = 0.0;
    for (const EvalReport& r : runs) {
      if (r.symmetry.size() != out.symmetry.size()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "runs have different report layouts");
      }
      a += r.symmetry[i].auroc_min;
      b += r.symmetry[i].auroc_max;
    }
    out.symmetry[i].auroc_min = a / k;
    out.symmetry[i].auroc_max = b / k;
    out.symmetry[i].gap = std::abs(a / k - b / k);
  }
  for (std::size_t i = 0; i < out.tradeoff.size(); ++i) {
    double a = 0.0, f = 0.0;
    for (const EvalReport& r : runs) {
      if (r.tradeoff.size() != out.tradeoff.size()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "runs have different report layouts");
      }
      a += r.tradeoff[i].auroc;
      f += r.tradeoff[i].fpr95;
    }
    out.tradeoff[i].auroc = a / k;
    out.tradeoff[i].fpr95 = f / k;
  }
  nlohmann::json prov = nlohmann::json::array();
  for (const EvalReport& r : runs) prov.push_back(r.provenance);
  out.provenance = {{"runs", prov}};
  return out;
}

Histogram BuildHistogram(std::string post_processor,
                         const std::map<std::string, Vector>& scores_by_set,
                         std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "bins must be > 0");
  if (scores_by_set.empty()) {
    throw Error(ErrorCode::kEmptyInput, "empty score sets");
  }
  Histogram h;
  h.post_processor = std::move(post_processor);
  h.low = std::numeric_limits<double>::infinity();
  h.high = -std::numeric_limits<double>::infinity();
  for (const auto& [name, scores] : scores_by_set) {
    if (scores.empty()) {
      throw Error(ErrorCode::kEmptyInput, "empty score set " + name);
    }
    for (double v : scores) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteData, "non-finite score in " + name);
      }
      h.low = std::min(h.low, v);
      h.high = std::max(h.high, v);
    }
  }
  const double width = h.high - h.low;
  for (const auto& [name, scores] : scores_by_set) {
    h.set_names.push_back(name);
    std::vector<std::size_t> counts(bins, 0);
    for (double v : scores) {
      std::size_t b = 0;
      if (width > 0.0) {
        const double t = (v - h.low) / width * static_cast<double>(bins);
        b = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, t)));
      }
      ++counts[b];
    }
    h.counts.push_back(std::move(counts));
  }
  return h;
}

std::vector<Histogram> EmitHistograms(const RawScores& raw,
                                      std::string_view cell) {
  auto it = raw.find(std::string(cell));
  if (it == raw.end()) {
    throw Error(ErrorCode::kNotFound,
                "no scores for cell '" + std::string(cell) + "'");
  }
  std::map<std::string, std::map<std::string, Vector>> by_pp;
  for (const auto& [set, scores] : it->second) {
    for (const auto& [pp, values] : scores) by_pp[pp][set] = values;
  }
  std::vector<Histogram> out;
  for (PostProcessor pp : kAllPostProcessors) {
    auto p = by_pp.find(std::string(PostProcessorName(pp)));
    if (p == by_pp.end()) continue;
    out.push_back(BuildHistogram(p->first, p->second));
  }
  return out;
}

std::string HistogramToTsv(const Histogram& h) {
  std::ostringstream out;
  out << "bin\tlow\thigh";
  for (const std::string& s : h.set_names) out << '\t' << s;
  out << '\n';
  const std::size_t bins = h.counts.empty() ? 0 : h.counts[0].size();
  const double width = (h.high - h.low) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = h.low + width * static_cast<double>(b);
    const double hi = b + 1 == bins ? h.high : lo + width;
    out << b << '\t' << FormatExact(lo) << '\t' << FormatExact(hi);
    for (const auto& c : h.counts) out << '\t' << c[b];
    out << '\n';
  }
  return out.str();
}

std::string TradeoffToTsv(std::span<const TradeoffPoint> points) {
  std::ostringstream out;
  out << "param\tvalue\tdirection\tepsilon\tpost_processor\tauroc\tfpr95\n";
  for (const TradeoffPoint& p : points) {
    out << p.param << '\t' << FormatExact(p.value) << '\t' << p.direction
        << '\t' << FormatExact(p.epsilon) << '\t' << p.post_processor << '\t'
        << FormatExact(p.auroc) << '\t' << FormatExact(p.fpr95) << '\n';
  }
  return out.str();
}

nlohmann::json ReportToJson(const EvalReport& report) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["provenance"] = report.provenance;
  nlohmann::json cals = nlohmann::json::object();
  for (const auto& [variant, cal] : report.calibrations) {
    cals[variant] = {{"s95", cal.s95}, {"source_count", cal.source_count}};
  }
  j["calibrations"] = cals;
  j["rows"] = nlohmann::json::array();
  for (const ReportRow& r : report.rows) j["rows"].push_back(RowToJson(r));
  j["averages"] = nlohmann::json::array();
  for (const ReportRow& r : report.averages) {
    j["averages"].push_back(RowToJson(r));
  }
  j["symmetry"] = nlohmann::json::array();
  for (const SymmetryGap& s : report.symmetry) {
    j["symmetry"].push_back({{"variant", s.variant},
                             {"post_processor", s.post_processor},
                             {"epsilon", s.epsilon},
                             {"auroc_min", s.auroc_min},
                             {"auroc_max", s.auroc_max},
                             {"gap", s.gap}});
  }
  j["tradeoff"] = nlohmann::json::array();
  for (const TradeoffPoint& p : report.tradeoff) {
    j["tradeoff"].push_back({{"param", p.param},
                             {"value", p.value},
                             {"direction", p.direction},
                             {"epsilon", p.epsilon},
                             {"post_processor", p.post_processor},
                             {"auroc", p.auroc},
                             {"fpr95", p.fpr95}});
  }
  return j;
}

EvalReport ReportFromJson(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kReportSchema) {
      throw Error(ErrorCode::kInvalidArgument, "not an eval report");
    }
    EvalReport r;
    r.provenance = doc.at("provenance");
    for (const auto& [variant, cal] : doc.at("calibrations").items()) {
      r.calibrations[variant] = {cal.at("s95").get<double>(),
                                 cal.at("source_count").get<std::size_t>()};
    }
    for (const auto& row : doc.at("rows")) r.rows.push_back(RowFromJson(row));
    for (const auto& row : doc.at("averages")) {
      r.averages.push_back(RowFromJson(row));
    }
    for (const auto& s : doc.at("symmetry")) {
      r.symmetry.push_back({s.at("variant").get<std::string>(),
                            s.at("post_processor").get<std::string>(),
                            s.at("epsilon").get<double>(),
                            s.at("auroc_min").get<double>(),
                            s.at("auroc_max").get<double>(),
                            s.at("gap").get<double>()});
    }
    for (const auto& p : doc.at("tradeoff")) {
      r.tradeoff.push_back({p.at("param").get<std::string>(),
                            ParseVariantValue(p.at("value")),
                            p.at("direction").get<std::string>(),
                            p.at("epsilon").get<double>(),
                            p.at("post_processor").get<std::string>(),
                            p.at("auroc").get<double>(),
                            p.at("fpr95").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("malformed report: ") + e.what());
  }
}

nlohmann::json RawScoresToJson(const RawScores& raw) {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [cell, sets] : raw) {
    for (const auto& [set, by_pp] : sets) {
      for (const auto& [pp, values] : by_pp) cells[cell][set][pp] = values;
    }
  }
  return {{"schema", kScoresSchema}, {"cells", cells}};
}

RawScores RawScoresFromJson(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kScoresSchema) {
      throw Error(ErrorCode::kInvalidArgument, "not a raw score file");
    }
    RawScores raw;
    for (const auto& [cell, sets] : doc.at("cells").items()) {
      for (const auto& [set, by_pp] : sets.items()) {
        for (const auto& [pp, values] : by_pp.items()) {
          raw[cell][set][pp] = values.get<Vector>();
        }
      }
    }
    return raw;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("malformed score file: ") + e.what());
  }
}

std::string RenderReportTable(const EvalReport& report) {
  std::vector<std::pair<std::string, std::string>> blocks;
  std::vector<std::string> sets;
  for (const ReportRow& r : report.rows) {
    std::pair<std::string, std::string> key{r.variant, r.attack};
    if (std::find(blocks.begin(), blocks.end(), key) == blocks.end()) {
      blocks.push_back(key);
    }
    if (std::find(sets.begin(), sets.end(), r.ood_set) == sets.end()) {
      sets.push_back(r.ood_set);
    }
  }
  auto cell = [](const std::optional<MetricPair>& m) {
    if (!m) return std::string("-");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f/%.2f", 100.0 * m->fpr95,
                  100.0 * m->auroc);
    return std::string(buf);
  };
  constexpr int kFirst = 17;
  constexpr int kCol = 14;
  std::ostringstream out;
  for (const auto& [variant, attack] : blocks) {
    out << "[" << (variant.empty() ? attack : variant + ", " + attack)
        << "]  FPR95/AUROC (%)\n";
    out << std::left << std::setw(kFirst) << "post-processor";
    for (const std::string& s : sets) out << std::setw(kCol) << s;
    out << "Avg\n";
    for (PostProcessor pp : kAllPostProcessors) {
      const std::string name(PostProcessorName(pp));
      auto avg = report.Average(name, attack, variant);
      if (!avg) continue;
      out << std::setw(kFirst) << name;
      for (const std::string& s : sets) {
        out << std::setw(kCol) << cell(report.Find(name, s, attack, variant));
      }
      out << cell(avg) << '\n';
    }
    out << '\n';
  }
  if (!report.symmetry.empty()) {
    out << "Symmetry gap |AUROC(min) - AUROC(max)| (points)\n";
    out << std::left << std::setw(16) << "variant" << std::setw(kFirst)
        << "post-processor" << std::setw(12) << "epsilon" << std::setw(10)
        << "min" << std::setw(10) << "max" << "gap\n";
    for (const SymmetryGap& s : report.symmetry) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%-12s%-10.2f%-10.2f%.2f",
                    FormatNumber(s.epsilon).c_str(), 100.0 * s.auroc_min,
                    100.0 * s.auroc_max, 100.0 * s.gap);
      out << std::setw(16) << (s.variant.empty() ? "-" : s.variant)
          << std::setw(kFirst) << s.post_processor << buf << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> VerifyAgainstRawScores(const EvalReport& report,
                                                const RawScores& raw,
                                                double tolerance) {
  std::vector<std::string> problems;
  auto describe = [](const ReportRow& r) {
    return "[" + CellKey(r.variant, r.attack) + "] " + r.post_processor +
           " / " + r.ood_set;
  };
  std::map<std::string, std::vector<std::string>> ood_by_cell;
  for (const ReportRow& r : report.rows) {
    auto& sets = ood_by_cell[CellKey(r.variant, r.attack)];
    if (std::find(sets.begin(), sets.end(), r.ood_set) == sets.end()) {
      sets.push_back(r.ood_set);
    }
  }
  for (const ReportRow& r : report.rows) {
    const std::string key = CellKey(r.variant, r.attack);
    auto cell = raw.find(key);
    if (cell == raw.end()) {
      problems.push_back(describe(r) + ": no raw scores");
      continue;
    }
    const auto& oods = ood_by_cell[key];
    std::vector<std::string> id_names;
    for (const auto& [set, scores] : cell->second) {
      if (std::find(oods.begin(), oods.end(), set) == oods.end()) {
        id_names.push_back(set);
      }
    }
    if (id_names.size() != 1) {
      problems.push_back(describe(r) + ": cannot identify the ID set");
      continue;
    }
    auto id = cell->second.at(id_names[0]).find(r.post_processor);
    auto ood_set = cell->second.find(r.ood_set);
    if (id == cell->second.at(id_names[0]).end() ||
        ood_set == cell->second.end() ||
        !ood_set->second.count(r.post_processor)) {
      problems.push_back(describe(r) + ": missing scores");
      continue;
    }
    const MetricPair m =
        ComputeMetrics(id->second, ood_set->second.at(r.post_processor));
    if (std::abs(m.fpr95 - r.metrics.fpr95) > tolerance ||
        std::abs(m.auroc - r.metrics.auroc) > tolerance) {
      problems.push_back(describe(r) + ": metrics differ from raw scores");
    }
  }
  for (const ReportRow& a : report.averages) {
    MetricPair sum;
    std::size_t k = 0;
    for (const ReportRow& r : report.rows) {
      if (r.variant == a.variant && r.attack == a.attack &&
          r.post_processor == a.post_processor) {
        sum.fpr95 += r.metrics.fpr95;
        sum.auroc += r.metrics.auroc;
        ++k;
      }
    }
    if (k == 0 ||
        std::abs(sum.fpr95 / static_cast<double>(k) - a.metrics.fpr95) > 1e-9 ||
        std::abs(sum.auroc / static_cast<double>(k) - a.metrics.auroc) > 1e-9) {
      problems.push_back(describe(a) + ": average differs from its rows");
    }
  }
  return problems;
}

void WriteReport(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot create " + dir.string() + ": " + ec.message());
  }
  const nlohmann::json run_spec =
      report.provenance.contains("run_spec") ? report.provenance["run_spec"]
                                             : nlohmann::json();
  const std::string spec_line =
      run_spec.is_null() ? "" : "run_spec: " + run_spec.dump() + "\n";
  WriteTextFile(dir / "report.json", CanonicalDump(ReportToJson(report)));
  WriteTextFile(dir / "report.txt", RenderReportTable(report) +
                                        (spec_line.empty() ? "" : "\n") +
                                        spec_line);
  if (!report.raw_scores.empty()) {
    nlohmann::json scores = RawScoresToJson(report.raw_scores);
    if (!run_spec.is_null()) scores["run_spec"] = run_spec;
    WriteTextFile(dir / "scores.json", CanonicalDump(scores));
  }
  if (!report.tradeoff.empty()) {
    WriteTextFile(dir / "tradeoff.tsv",
                  (spec_line.empty() ? "" : "# " + spec_line) +
                      TradeoffToTsv(report.tradeoff));
  }
}

TrainConfig StandardTrainConfig(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.l2_penalty = 0.0;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::size_t> StandardLayerDims() { return {2, 32, 32, 3}; }

StandardBenchmark BuildStandardBenchmark(std::uint64_t seed) {
  StandardBenchmarkData data = GenerateStandardBenchmark(seed);
  LabeledData train{data.train.Rows(), data.train.Labels()};
  const std::vector<std::size_t> dims = StandardLayerDims();
  RefModel model =
      Train(train, dims, StandardTrainConfig(seed)).model;
  return {std::move(data), std::move(model)};
}

BenchmarkInputs ToBenchmarkInputs(const StandardBenchmarkData& data) {
  BenchmarkInputs in;
  in.id_val = ToBenchmarkSet(data.id_val);
  in.id_test = ToBenchmarkSet(data.id_test);
  in.ood_sets.push_back(ToBenchmarkSet(data.ood_near));
  in.ood_sets.push_back(ToBenchmarkSet(data.ood_far));
  return in;
}

std::vector<AttackConfig> MakeAttackGrid(std::span<const double> epsilons,
                                         int steps) {
  std::vector<AttackConfig> grid;
  for (Direction d : {Direction::kMin, Direction::kMax}) {
    for (double e : epsilons) grid.push_back(AttackConfig::Make(d, e, steps));
  }
  return grid;
}

}  // namespace rosskit
