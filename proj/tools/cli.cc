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
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rosskit/bench.h"
#include "rosskit/error.h"
#include "rosskit/io.h"
#include "rosskit/ross.h"
#include "rosskit/synth.h"
#include "runspec.h"

namespace rosskit::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  FlagValues flags;
  std::optional<std::string> config;
  std::optional<std::string> out;
  bool nested_grid = false;
  bool random_start = false;
};

struct Context {
  std::ostream& out;
  const char* env_seed;
};

void AddRunFlags(CLI::App* app, Common* c) {
  app->add_option("--scorer", c->flags.scorer, "Base score: msp|ebo|gen|fdbd");
  app->add_option("--n", c->flags.n, "Noise samples per input (25)");
  app->add_option("--sigma-noise", c->flags.sigma_noise,
                  "Std of the Gaussian input noise (0.1)");
  app->add_option("--lambda", c->flags.lambda, "Stability bonus weight (0.05)");
  app->add_option("--seed", c->flags.seed,
                  "Seed; falls back to the config, then ROSSKIT_SEED");
  app->add_option("--jobs", c->flags.jobs, "Worker threads (0 = all cores)");
  app->add_option("--config", c->config, "JSON config file or 'default'");
  app->add_option("--out", c->out, "Output directory");
}

void AddAttackFlags(CLI::App* app, Common* c) {
  app->add_option("--epsilon", c->flags.epsilon,
                  "Single l-inf radius instead of a grid");
  app->add_option("--steps", c->flags.steps, "PGD steps (40)");
  app->add_option("--direction", c->flags.direction,
                  "Restrict to min or max");
  app->add_option("--grid", c->flags.grid,
                  "default | standard | comma-separated radii");
  app->add_flag("--nested-grid", c->nested_grid,
                "Warm-start each radius from the previous one");
  app->add_flag("--random-start", c->random_start,
                "Start PGD from a random point in the ball");
}

RunSpec Resolve(const std::string& command, const Common& c,
                const Context& ctx) {
  FlagValues flags = c.flags;
  if (c.nested_grid) flags.nested_grid = true;
  if (c.random_start) flags.random_start = true;
  return ResolveRunSpec(command, c.config, flags, ctx.env_seed);
}

fs::path RequireOut(const Common& c) {
  if (!c.out || c.out->empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--out is required");
  }
  return fs::path(*c.out);
}

std::string SpecLine(const RunSpec& spec) {
  return "# run_spec: " + spec.ToJson().dump() + "\n";
}

std::string Slug(std::string_view pp) {
  std::string out;
  for (std::size_t i = 0; i < pp.size(); ++i) {
    const char ch = pp[i];
    if (ch == '-' && i == 0) {
      out += "neg_";
    } else if (ch == '/') {
      out += "_over_";
    } else {
      out += ch;
    }
  }
  return out;
}

std::string FormatScore(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// --- synth -----------------------------------------------------------------

struct SynthOpts {
  std::optional<std::string> preset;
  std::optional<std::string> kind;
  std::optional<std::string> name;
  std::optional<std::string> role;
  std::optional<long long> dims;
  std::optional<long long> classes;
  std::optional<long long> count;
  std::optional<double> center;
  std::optional<double> center_radius;
  std::optional<double> cov_scale;
  std::optional<double> mean_shift;
  std::optional<double> angle_offset;
  std::optional<double> box_low;
  std::optional<double> box_high;
  std::optional<double> min_center_distance;
};

void AddSynth(CLI::App* app, Common* c, SynthOpts* o) {
  app->add_option("--preset", o->preset,
                  "'standard' writes the full benchmark (train, id_val, "
                  "id_test, ood_near, ood_far)");
  app->add_option("--kind", o->kind, "blobs | ring | uniform");
  app->add_option("--name", o->name, "Dataset name");
  app->add_option("--role", o->role, "id | ood-near | ood-far");
  app->add_option("--dims", o->dims, "Input dimension");
  app->add_option("--classes", o->classes, "Number of clusters");
  app->add_option("--count", o->count, "Number of samples");
  app->add_option("--center", o->center, "Centre of the layout");
  app->add_option("--center-radius", o->center_radius, "Cluster ring radius");
  app->add_option("--cov-scale", o->cov_scale, "Per-cluster std");
  app->add_option("--mean-shift", o->mean_shift, "Radial shift of clusters");
  app->add_option("--angle-offset", o->angle_offset,
                  "Rotation in units of the class spacing");
  app->add_option("--box-low", o->box_low, "Uniform box lower bound");
  app->add_option("--box-high", o->box_high, "Uniform box upper bound");
  app->add_option("--min-center-distance", o->min_center_distance,
                  "Uniform samples closer than this to a centre are redrawn");
  app->add_option("--seed", c->flags.seed, "Seed");
  app->add_option("--config", c->config, "JSON config file or 'default'");
  app->add_option("--out", c->out, "Output directory");
}

void RunSynth(const Common& c, const SynthOpts& o, const Context& ctx) {
  RunSpec spec = Resolve("synth", c, ctx);
  const fs::path out = RequireOut(c);
  const std::string preset = spec.ArgString("preset", o.preset, "");
  if (!preset.empty()) {
    if (preset != "standard") {
      throw Error(ErrorCode::kInvalidArgument, "unknown preset " + preset);
    }
    StandardBenchmarkData data = GenerateStandardBenchmark(spec.ross.seed);
    for (Dataset* d : {&data.train, &data.id_val, &data.id_test,
                       &data.ood_near, &data.ood_far}) {
      d->manifest.metadata["run_spec"] = spec.ToJson();
      SaveDataset(*d, out / d->manifest.name);
      ctx.out << "wrote " << (out / d->manifest.name).string() << " ("
              << d->size() << " x " << d->dim() << ")\n";
    }
    return;
  }
  SynthSpec s;
  s.kind = ParseSynthKind(spec.ArgString("kind", o.kind, "blobs"));
  s.dims = static_cast<std::size_t>(
      spec.ArgInt("dims", o.dims, static_cast<long long>(s.dims)));
  s.classes = static_cast<std::size_t>(
      spec.ArgInt("classes", o.classes, static_cast<long long>(s.classes)));
  s.count = static_cast<std::size_t>(
      spec.ArgInt("count", o.count, static_cast<long long>(s.count)));
  s.center = spec.ArgDouble("center", o.center, s.center);
  s.center_radius =
      spec.ArgDouble("center_radius", o.center_radius, s.center_radius);
  s.cov_scale = spec.ArgDouble("cov_scale", o.cov_scale, s.cov_scale);
  s.mean_shift = spec.ArgDouble("mean_shift", o.mean_shift, s.mean_shift);
  s.angle_offset =
      spec.ArgDouble("angle_offset", o.angle_offset, s.angle_offset);
  s.box_low = spec.ArgDouble("box_low", o.box_low, s.box_low);
  s.box_high = spec.ArgDouble("box_high", o.box_high, s.box_high);
  s.min_center_distance = spec.ArgDouble(
      "min_center_distance", o.min_center_distance, s.min_center_distance);
  s.seed = spec.ross.seed;
  const std::string name =
      spec.ArgString("name", o.name, std::string(SynthKindName(s.kind)));
  const DataRole role = ParseDataRole(spec.ArgString("role", o.role, "id"));
  Dataset d = SynthGenerate(s, name, role);
  d.manifest.metadata["run_spec"] = spec.ToJson();
  SaveDataset(d, out);
  ctx.out << "wrote " << out.string() << " (" << d.size() << " x " << d.dim()
          << ")\n";
}

// --- train-ref -------------------------------------------------------------

struct TrainOpts {
  std::optional<std::string> data;
  std::optional<std::string> layers;
  std::optional<double> lr;
  std::optional<long long> epochs;
  std::optional<long long> batch_size;
  std::optional<double> l2;
};

void AddTrain(CLI::App* app, Common* c, TrainOpts* o) {
  app->add_option("--data", o->data, "Labelled training dataset");
  app->add_option("--layers", o->layers,
                  "Comma-separated widths (default: dim,32,32,classes)");
  app->add_option("--lr", o->lr, "Learning rate (0.05)");
  app->add_option("--epochs", o->epochs, "Epochs (200)");
  app->add_option("--batch-size", o->batch_size, "Mini-batch size (32)");
  app->add_option("--l2", o->l2, "Weight decay (0)");
  app->add_option("--seed", c->flags.seed, "Seed");
  app->add_option("--config", c->config, "JSON config file or 'default'");
  app->add_option("--out", c->out, "Output model directory");
}

void RunTrain(const Common& c, const TrainOpts& o, const Context& ctx) {
  RunSpec spec = Resolve("train-ref", c, ctx);
  const fs::path out = RequireOut(c);
  const std::string data_path = spec.ArgString("data", o.data, "");
  if (data_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--data is required");
  }
  const Dataset data = LoadDataset(data_path);
  RequireAttackable(data);
  if (!data.has_labels()) {
    throw Error(ErrorCode::kNotFound,
                "training data " + data.manifest.name + " has no labels");
  }
  LabeledData train{data.Rows(), data.Labels()};
  if (train.inputs.empty()) {
    throw Error(ErrorCode::kEmptyInput, "empty training data");
  }
  const int classes = *std::max_element(train.labels.begin(),
                                        train.labels.end()) + 1;
  std::vector<std::size_t> dims;
  const std::string layers = spec.ArgString("layers", o.layers, "");
  if (layers.empty()) {
    dims = {data.dim(), 32, 32, static_cast<std::size_t>(classes)};
  } else {
    for (double v : ParseNumberList(layers)) {
      if (!(v >= 1.0) || v != static_cast<double>(static_cast<long long>(v))) {
        throw Error(ErrorCode::kInvalidArgument,
                    "layer widths must be positive integers");
      }
      dims.push_back(static_cast<std::size_t>(v));
    }
  }
  spec.args["layers"] = dims;
  TrainConfig tc = StandardTrainConfig(spec.ross.seed);
  tc.learning_rate = spec.ArgDouble("lr", o.lr, tc.learning_rate);
  tc.epochs = static_cast<int>(spec.ArgInt("epochs", o.epochs, tc.epochs));
  tc.batch_size = static_cast<int>(
      spec.ArgInt("batch_size", o.batch_size, tc.batch_size));
  tc.l2_penalty = spec.ArgDouble("l2", o.l2, tc.l2_penalty);
  const TrainResult result = Train(train, dims, tc);
  SaveModel(result.model, out, spec.ToJson().dump());
  ctx.out << "final_loss " << FormatScore(result.epoch_loss.back())
          << "\ntrain_accuracy " << FormatScore(Accuracy(result.model, train))
          << "\nwrote " << out.string() << "\n";
}

// --- calibrate / score -----------------------------------------------------

struct ScoreOpts {
  std::optional<std::string> model;
  std::optional<std::string> data;
  std::optional<std::string> values;
  std::optional<std::string> calibration;
  std::optional<std::string> fdbd;
};

std::vector<double> ReadValues(const std::string& path) {
  std::istringstream in(ReadTextFile(path));
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument,
                  "not a number in " + path + ": " + token);
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteData, "non-finite value in " + path);
    }
  }
  return values;
}

Scorer ScorerForModel(ScorerKind kind, const RefModel& model,
                      std::span<const Vector> calibration_inputs,
                      const std::string& fdbd_dir) {
  if (kind == ScorerKind::kFdbd && !fdbd_dir.empty()) {
    return Scorer::MakeFdbd(LoadFdbdContext(fdbd_dir));
  }
  return MakeScorer(kind, model, calibration_inputs);
}

Scorer ScorerForLogits(ScorerKind kind, const std::string& fdbd_dir) {
  switch (kind) {
    case ScorerKind::kMsp:
      return Scorer::MakeMsp();
    case ScorerKind::kEbo:
      return Scorer::MakeEnergy();
    case ScorerKind::kGen:
      return Scorer::MakeGen();
    case ScorerKind::kFdbd:
      if (fdbd_dir.empty()) {
        throw Error(ErrorCode::kNotFound,
                    "fdbd on logits needs --fdbd with the weights sidecar");
      }
      return Scorer::MakeFdbd(LoadFdbdContext(fdbd_dir));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scorer");
}

void AddCalibrate(CLI::App* app, Common* c, ScoreOpts* o) {
  AddRunFlags(app, c);
  app->add_option("--model", o->model, "Model directory");
  app->add_option("--data", o->data, "ID validation dataset");
  app->add_option("--values", o->values,
                  "Text file of precomputed S_med values (instead of "
                  "--model/--data)");
}

void RunCalibrate(const Common& c, const ScoreOpts& o, const Context& ctx) {
  RunSpec spec = Resolve("calibrate", c, ctx);
  const std::string values_path = spec.ArgString("values", o.values, "");
  nlohmann::json doc;
  std::optional<FdbdContext> fdbd;
  if (!values_path.empty()) {
    const Calibration cal = CalibrateS95(ReadValues(values_path));
    doc = {{"s95", cal.s95}, {"source_count", cal.source_count}};
  } else {
    const std::string model_path = spec.ArgString("model", o.model, "");
    const std::string data_path = spec.ArgString("data", o.data, "");
    if (model_path.empty() || data_path.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "calibrate needs --values or both --model and --data");
    }
    const RefModel model = LoadModel(model_path);
    const Dataset data = LoadDataset(data_path);
    RequireAttackable(data);
    const std::vector<Vector> rows = data.Rows();
    Scorer scorer = MakeScorer(spec.scorer, model, rows);
    if (scorer.params().fdbd) fdbd = scorer.params().fdbd;
    RossDetector detector(model, std::move(scorer), spec.ross);
    detector.Calibrate(rows, spec.jobs);
    doc = CalibrationToJson(detector.calibration(), detector.threshold(),
                            spec.scorer, spec.ross);
  }
  doc["run_spec"] = spec.ToJson();
  const std::string text = CanonicalDump(doc);
  if (c.out) {
    const fs::path out(*c.out);
    fs::create_directories(out);
    WriteTextFile(out / "calibration.json", text);
    if (fdbd) SaveFdbdContext(*fdbd, out / "fdbd");
    ctx.out << "s95 " << FormatScore(doc["s95"].get<double>()) << "\nwrote "
            << (out / "calibration.json").string() << "\n";
  } else {
    ctx.out << text;
  }
}

void AddScore(CLI::App* app, Common* c, ScoreOpts* o) {
  AddRunFlags(app, c);
  app->add_option("--model", o->model,
                  "Model directory (omit for logits datasets)");
  app->add_option("--data", o->data, "Dataset to score");
  app->add_option("--calibration", o->calibration,
                  "calibration.json; adds S_ROSS and the verdict");
  app->add_option("--fdbd", o->fdbd, "fDBD weights sidecar directory");
}

void RunScore(const Common& c, const ScoreOpts& o, const Context& ctx) {
  RunSpec spec = Resolve("score", c, ctx);
  const std::string data_path = spec.ArgString("data", o.data, "");
  if (data_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--data is required");
  }
  const std::string model_path = spec.ArgString("model", o.model, "");
  const std::string fdbd_dir = spec.ArgString("fdbd", o.fdbd, "");
  const std::string cal_path =
      spec.ArgString("calibration", o.calibration, "");
  const Dataset data = LoadDataset(data_path);
  std::ostringstream table;

  if (data.manifest.kind == DataKind::kLogits) {
    if (!cal_path.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "logits datasets support the clean base score only");
    }
    const Scorer scorer = ScorerForLogits(spec.scorer, fdbd_dir);
    const std::vector<Vector> logits = data.Rows();
    std::vector<Vector> features;
    if (scorer.uses_features()) {
      if (!data.tensors.count("features")) {
        throw Error(ErrorCode::kNotFound,
                    "fdbd needs a features tensor in " + data.manifest.name);
      }
      features = data.Rows("features");
    }
    table << SpecLine(spec) << "index\tbase\n";
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double s = scorer.Score(
          logits[i], features.empty() ? std::span<const double>()
                                      : std::span<const double>(features[i]));
      table << i << '\t' << FormatScore(s) << '\n';
    }
  } else {
    if (model_path.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "--model is required for non-logits datasets");
    }
    std::optional<Calibration> cal;
    double tau = 0.0;
    if (!cal_path.empty()) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(ReadTextFile(cal_path));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kInvalidArgument,
                    "calibration " + cal_path + " is not valid JSON");
      }
      cal = CalibrationFromJson(doc, &tau);
      if (!doc.contains("config") || !doc.contains("scorer")) {
        throw Error(ErrorCode::kInvalidArgument,
                    "calibration " + cal_path +
                        " has no scorer/config (was it made from --values?)");
      }
      spec.scorer = ParseScorerKind(doc["scorer"].get<std::string>());
      spec.ross = RossConfigFromJson(doc["config"]);
    }
    const RefModel model = LoadModel(model_path);
    RequireAttackable(data);
    const std::vector<Vector> rows = data.Rows();
    if (spec.scorer == ScorerKind::kFdbd && fdbd_dir.empty()) {
      throw Error(ErrorCode::kNotFound,
                  "fdbd needs --fdbd (written by calibrate --out)");
    }
    const Scorer scorer = ScorerForModel(spec.scorer, model, {}, fdbd_dir);
    RossDetector detector(model, scorer, spec.ross);
    if (cal) detector.SetCalibration(*cal, tau);
    const BaseScoreFn base = detector.base_score();
    const std::vector<ScoreStack> stacks =
        ComputeScoreStacks(rows, base, spec.ross, spec.jobs);
    table << SpecLine(spec) << "index\tbase\ts_med\tsigma_med";
    if (cal) table << "\ts_ross\tverdict";
    table << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
      table << i << '\t' << FormatScore(base(rows[i])) << '\t'
            << FormatScore(stacks[i].s_med) << '\t'
            << FormatScore(stacks[i].sigma_med);
      if (cal) {
        const double s = RossScore(stacks[i], *cal, spec.ross.lambda);
        table << '\t' << FormatScore(s) << '\t' << (s >= tau ? "id" : "ood");
      }
      table << '\n';
    }
  }
  if (c.out) {
    const fs::path out(*c.out);
    fs::create_directories(out);
    WriteTextFile(out / "scores.tsv", table.str());
    ctx.out << "wrote " << (out / "scores.tsv").string() << "\n";
  } else {
    ctx.out << table.str();
  }
}

// --- eval / attack-eval / ablate --------------------------------------------

struct EvalOpts {
  std::optional<std::string> preset;
  std::optional<std::string> bench;
  std::optional<std::string> model;
  std::optional<std::string> val;
  std::optional<std::string> id;
  std::vector<std::string> ood;
  std::optional<std::string> fdbd;
  std::optional<std::string> param;
  std::optional<std::string> values;
  std::optional<std::string> save_adv;
};

void AddEvalInputs(CLI::App* app, Common* c, EvalOpts* o) {
  AddRunFlags(app, c);
  app->add_option("--preset", o->preset,
                  "'standard': generate the synthetic benchmark and train "
                  "its reference model in-process");
  app->add_option("--bench", o->bench,
                  "Directory with id_val/, id_test/, ood_*/ and optionally "
                  "model/");
  app->add_option("--model", o->model, "Model directory");
  app->add_option("--val", o->val, "ID validation (calibration) dataset");
  app->add_option("--id", o->id, "ID test dataset");
  app->add_option("--ood", o->ood, "OOD dataset (repeatable)");
  app->add_option("--repeats", c->flags.repeats,
                  "Independent training runs (--preset only)");
}

struct Run1 {
  BenchmarkInputs inputs;
  std::optional<RefModel> model;
  // Set when the ID test set holds logits: clean base-only evaluation.
  std::optional<Dataset> logits_id;
  std::vector<Dataset> logits_ood;
};

std::vector<Run1> LoadRuns(RunSpec& spec, const EvalOpts& o) {
  const std::string preset = spec.ArgString("preset", o.preset, "");
  std::vector<Run1> runs;
  if (!preset.empty()) {
    if (preset != "standard") {
      throw Error(ErrorCode::kInvalidArgument, "unknown preset " + preset);
    }
    for (int r = 0; r < spec.repeats; ++r) {
      StandardBenchmark b =
          BuildStandardBenchmark(spec.ross.seed + static_cast<unsigned>(r));
      Run1 run;
      run.inputs = ToBenchmarkInputs(b.data);
      run.model = std::move(b.model);
      runs.push_back(std::move(run));
    }
    return runs;
  }
  if (spec.repeats != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "--repeats needs --preset standard (it retrains the model)");
  }
  std::string val = spec.ArgString("val", o.val, "");
  std::string id = spec.ArgString("id", o.id, "");
  std::vector<std::string> oods = spec.ArgStrings("ood", o.ood);
  std::string model = spec.ArgString("model", o.model, "");
  const std::string bench = spec.ArgString("bench", o.bench, "");
  if (!bench.empty()) {
    const fs::path dir(bench);
    if (!fs::is_directory(dir)) {
      throw Error(ErrorCode::kNotFound, "no benchmark directory " + bench);
    }
    if (val.empty() && fs::exists(dir / "id_val")) val = (dir / "id_val").string();
    if (id.empty()) id = (dir / "id_test").string();
    if (oods.empty()) {
      for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_directory() && name.rfind("ood", 0) == 0) {
          oods.push_back(entry.path().string());
        }
      }
      std::sort(oods.begin(), oods.end());
    }
    if (model.empty() && fs::exists(dir / "model")) {
      model = (dir / "model").string();
    }
  }
  if (id.empty() || oods.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "need --preset, --bench, or --id with at least one --ood");
  }
  Run1 run;
  Dataset id_set = LoadDataset(id);
  std::vector<Dataset> ood_sets;
  for (const std::string& p : oods) ood_sets.push_back(LoadDataset(p));
  if (id_set.manifest.kind == DataKind::kLogits) {
    run.logits_id = std::move(id_set);
    run.logits_ood = std::move(ood_sets);
    runs.push_back(std::move(run));
    return runs;
  }
  if (model.empty()) throw Error(ErrorCode::kInvalidArgument, "--model is required");
  if (val.empty()) {
    throw Error(ErrorCode::kNotCalibrated,
                "missing calibration split (--val or <bench>/id_val)");
  }
  run.model = LoadModel(model);
  run.inputs.id_val = ToBenchmarkSet(LoadDataset(val));
  run.inputs.id_test = ToBenchmarkSet(id_set);
  for (const Dataset& d : ood_sets) run.inputs.ood_sets.push_back(ToBenchmarkSet(d));
  runs.push_back(std::move(run));
  return runs;
}

EvalSettings SettingsFor(const RunSpec& spec) {
  EvalSettings s;
  s.scorer = spec.scorer;
  s.ross = spec.ross;
  s.jobs = spec.jobs;
  s.nested_grid = spec.nested_grid;
  s.run_spec = spec.ToJson();
  return s;
}

void Emit(const RunSpec& spec, std::vector<EvalReport> reports,
          const fs::path& out, const Context& ctx) {
  if (reports.size() == 1) {
    WriteReport(reports[0], out);
    ctx.out << RenderReportTable(reports[0]) << "wrote " << out.string()
            << "\n";
    return;
  }
  for (std::size_t r = 0; r < reports.size(); ++r) {
    WriteReport(reports[r], out / ("run_" + std::to_string(r)));
  }
  EvalReport mean = MeanOverRuns(reports);
  mean.provenance["run_spec"] = spec.ToJson();
  WriteReport(mean, out);
  ctx.out << RenderReportTable(mean) << "wrote " << out.string() << " (mean of "
          << reports.size() << " runs)\n";
}

enum class EvalMode { kClean, kAttack, kAblate };

void RunEval(EvalMode mode, const Common& c, const EvalOpts& o,
             const Context& ctx) {
  const char* command = mode == EvalMode::kClean    ? "eval"
                        : mode == EvalMode::kAttack ? "attack-eval"
                                                    : "ablate";
  RunSpec spec = Resolve(command, c, ctx);
  const fs::path out = RequireOut(c);
  const std::string fdbd_dir = spec.ArgString("fdbd", o.fdbd, "");
  std::optional<AblationParam> param;
  std::vector<double> values;
  if (mode == EvalMode::kAblate) {
    const std::string p = spec.ArgString("param", o.param, "");
    const std::string v = spec.ArgString("values", o.values, "");
    if (p.empty() || v.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ablate needs --param and --values");
    }
    param = ParseAblationParam(p);
    values = ParseNumberList(v);
  }
  std::vector<AttackConfig> grid;
  if (mode != EvalMode::kClean) grid = ResolveGrid(spec);
  std::optional<fs::path> save_adv;
  if (o.save_adv) save_adv = fs::path(*o.save_adv);
  std::vector<Run1> runs = LoadRuns(spec, o);

  std::vector<EvalReport> reports;
  for (Run1& run : runs) {
    if (run.logits_id) {
      if (mode != EvalMode::kClean) {
        throw Error(ErrorCode::kInvalidArgument,
                    "logits datasets support the clean base score only");
      }
      EvalReport r = EvaluateLogits(*run.logits_id, run.logits_ood,
                                    ScorerForLogits(spec.scorer, fdbd_dir));
      r.provenance["run_spec"] = spec.ToJson();
      reports.push_back(std::move(r));
      continue;
    }
    EvalSettings settings = SettingsFor(spec);
    settings.grid = grid;
    if (save_adv) {
      settings.save_adversarial =
          runs.size() == 1 ? *save_adv
                           : *save_adv / ("run_" + std::to_string(reports.size()));
    }
    switch (mode) {
      case EvalMode::kClean:
        reports.push_back(EvaluatePostprocessors(run.inputs, *run.model, settings));
        break;
      case EvalMode::kAttack:
        reports.push_back(AttackEvaluate(run.inputs, *run.model, settings));
        break;
      case EvalMode::kAblate:
        reports.push_back(
            Ablate(*param, values, run.inputs, *run.model, settings));
        break;
    }
  }
  Emit(spec, std::move(reports), out, ctx);
}

// --- report / hist -----------------------------------------------------------

struct ReportOpts {
  std::optional<std::string> in;
  std::optional<std::string> cell;
  bool check = false;
};

nlohmann::json ReadJson(const fs::path& path) {
  try {
    return nlohmann::json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                path.string() + " is not valid JSON: " + e.what());
  }
}

void RunReport(const Common&, const ReportOpts& o, const Context& ctx) {
  if (!o.in) throw Error(ErrorCode::kInvalidArgument, "--in is required");
  const fs::path dir(*o.in);
  const EvalReport report = ReportFromJson(ReadJson(dir / "report.json"));
  ctx.out << RenderReportTable(report);
  if (o.check) {
    const RawScores raw = RawScoresFromJson(ReadJson(dir / "scores.json"));
    const std::vector<std::string> problems =
        VerifyAgainstRawScores(report, raw);
    if (!problems.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::to_string(problems.size()) +
                      " report entries disagree with raw scores, first: " +
                      problems.front());
    }
    ctx.out << "check: " << report.rows.size() << " rows and "
            << report.averages.size()
            << " averages match the raw scores\n";
  }
}

void RunHist(const Common& c, const ReportOpts& o, const Context& ctx) {
  RunSpec spec = Resolve("hist", c, ctx);
  const fs::path out = RequireOut(c);
  const std::string in = spec.ArgString("in", o.in, "");
  if (in.empty()) throw Error(ErrorCode::kInvalidArgument, "--in is required");
  const std::string cell = spec.ArgString("cell", o.cell, "clean");
  const RawScores raw = RawScoresFromJson(ReadJson(fs::path(in) / "scores.json"));
  fs::create_directories(out);
  for (const Histogram& h : EmitHistograms(raw, cell)) {
    const fs::path file = out / ("hist_" + Slug(h.post_processor) + ".tsv");
    WriteTextFile(file, SpecLine(spec) + HistogramToTsv(h));
    ctx.out << "wrote " << file.string() << "\n";
  }
}

int Fail(std::ostream& err, std::string_view code, std::string_view message) {
  std::string line(message);
  std::replace(line.begin(), line.end(), '\n', ' ');
  err << "error: " << code << ": " << line << "\n";
  return 1;
}

}  // namespace

int Run(const std::vector<std::string>& argv, std::ostream& out,
        std::ostream& err, const char* env_seed) {
  CLI::App app{"rosskit: stability-gated OOD scoring toolkit"};
  app.name(argv.empty() ? "rosskit" : fs::path(argv[0]).filename().string());
  app.require_subcommand(1);
  app.fallthrough(false);

  Common common;
  SynthOpts synth;
  TrainOpts train;
  ScoreOpts score;
  EvalOpts eval;
  ReportOpts report;

  AddSynth(app.add_subcommand("synth", "Generate synthetic datasets"), &common,
           &synth);
  AddTrain(app.add_subcommand("train-ref", "Train the reference MLP"),
           &common, &train);
  AddCalibrate(
      app.add_subcommand("calibrate", "Compute S95 and the FPR95 threshold"),
      &common, &score);
  AddScore(app.add_subcommand("score", "Score one dataset, emit raw scores"),
           &common, &score);
  auto* eval_cmd =
      app.add_subcommand("eval", "Post-processor comparison on clean data");
  AddEvalInputs(eval_cmd, &common, &eval);
  eval_cmd->add_option("--fdbd", eval.fdbd,
                       "fDBD weights sidecar (logits datasets)");
  auto* attack_cmd =
      app.add_subcommand("attack-eval", "PGD-min/max robustness grid");
  AddEvalInputs(attack_cmd, &common, &eval);
  AddAttackFlags(attack_cmd, &common);
  attack_cmd->add_option("--save-adv", eval.save_adv,
                         "Save every attacked set as a dataset under DIR");
  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep N, sigma_noise or lambda");
  AddEvalInputs(ablate_cmd, &common, &eval);
  AddAttackFlags(ablate_cmd, &common);
  ablate_cmd->add_option("--param", eval.param, "N | sigma_noise | lambda");
  ablate_cmd->add_option("--values", eval.values, "Comma-separated values");
  auto* report_cmd =
      app.add_subcommand("report", "Render a report directory as a table");
  report_cmd->add_option("--in", report.in, "Report directory");
  report_cmd->add_flag("--check", report.check,
                       "Recompute every metric from scores.json");
  auto* hist_cmd = app.add_subcommand("hist", "Score histograms as TSV");
  hist_cmd->add_option("--in", report.in, "Report directory with scores.json");
  hist_cmd->add_option("--cell", report.cell,
                       "Cell to histogram (default: clean)");
  hist_cmd->add_option("--config", common.config, "JSON config file or 'default'");
  hist_cmd->add_option("--out", common.out, "Output directory");

  std::vector<const char*> raw;
  for (const std::string& a : argv) raw.push_back(a.c_str());
  if (raw.empty()) raw.push_back("rosskit");
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n" << app.help();
    return 2;
  }

  const Context ctx{out, env_seed};
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "synth") {
      RunSynth(common, synth, ctx);
    } else if (command == "train-ref") {
      RunTrain(common, train, ctx);
    } else if (command == "calibrate") {
      RunCalibrate(common, score, ctx);
    } else if (command == "score") {
      RunScore(common, score, ctx);
    } else if (command == "eval") {
      RunEval(EvalMode::kClean, common, eval, ctx);
    } else if (command == "attack-eval") {
      RunEval(EvalMode::kAttack, common, eval, ctx);
    } else if (command == "ablate") {
      RunEval(EvalMode::kAblate, common, eval, ctx);
    } else if (command == "report") {
      RunReport(common, report, ctx);
    } else if (command == "hist") {
      RunHist(common, report, ctx);
    }
  } catch (const Error& e) {
    return Fail(err, ErrorCodeName(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return Fail(err, ErrorCodeName(ErrorCode::kInvalidArgument), e.what());
  } catch (const fs::filesystem_error& e) {
    return Fail(err, ErrorCodeName(ErrorCode::kIo), e.what());
  } catch (const std::exception& e) {
    return Fail(err, "internal", e.what());
  }
  return 0;
}

}  // namespace rosskit::cli
