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

// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "common/oracles.h"
#include "common/temp_dir.h"
#include "rosskit/attacks.h"
#include "rosskit/basescores.h"
#include "rosskit/bench.h"
#include "rosskit/io.h"
#include "rosskit/numerics.h"
#include "rosskit/refmodel.h"
#include "rosskit/ross.h"

#ifdef ROSSKIT_ACCEPTANCE_CLI
#include "cli.h"
#endif

namespace rosskit {
namespace {

namespace fs = std::filesystem;
namespace oracle = rosskit::testing;

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Result {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void Report(const char* name, const Result& r) {
  std::printf("%s  %s: %s\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str());
  std::fflush(stdout);
  if (!r.pass) ++failures;
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0,
                double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

// --- oracle equivalence ----------------------------------------------------

Result OracleEquivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  std::uniform_real_distribution<double> q(0.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector v = oracle::RandomScores(rng, size(rng));
    const Vector w = oracle::RandomScores(rng, size(rng));
    const double qq = i % 10 == 0 ? 5.0 : q(rng);
    const double diffs[] = {
        Median(v) - oracle::OracleMedian(v),
        Mad(v) - oracle::OracleMad(v),
        Percentile(v, qq) - oracle::OraclePercentile(v, qq),
        Auroc(v, w) - oracle::OracleAuroc(v, w),
        FprAt95Tpr(v, w) - oracle::OracleFpr95(v, w)};
    for (double d : diffs) worst = std::max(worst, std::fabs(d));
  }
  const double t = Seconds(start);
  return {worst <= 1e-12 && t < 10.0,
          Fmt("1000 instances, max |diff| %.3g (<= 1e-12), %.2f s (< 10 s)",
              worst, t)};
}

// --- gated score closed form -----------------------------------------------

Result ClosedForm() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(0.0, 2.0);
  double worst = 0.0;
  int gated = 0, floored = 0;
  for (int i = 0; i < 10000; ++i) {
    double s_med = u(rng), s95 = u(rng), sigma = pos(rng), lambda = pos(rng) * 0.1;
    if (i % 5 == 0) sigma = 0.0;
    if (i % 7 == 0) s95 = s_med;
    const double want = oracle::OracleRoss(s_med, sigma, s95, lambda);
    const double got = RossScore(s_med, sigma, s95, lambda);
    if (s_med <= s95) ++gated;
    if (s_med > s95 && sigma == 0.0) ++floored;
    worst = std::max(worst,
                     std::fabs(got - want) / std::max(1.0, std::fabs(want)));
  }
  return {worst <= 1e-12 && gated > 0 && floored > 0,
          Fmt("10000 tuples (%.0f gated, %.0f at the sigma floor), max rel "
              "diff %.3g (<= 1e-12)",
              gated, floored, worst)};
}

// --- gradients ----------------------------------------------------------------

// Smallest |pre-activation| over all hidden units.
double KinkDistance(const RefModel& model, std::span<const double> x) {
  Vector h(x.begin(), x.end());
  double nearest = 1e300;
  const auto& layers = model.layers();
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    const DenseLayer& l = layers[k];
    Vector next(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      double z = l.bias[r];
      for (std::size_t c = 0; c < l.in; ++c) z += l.w(r, c) * h[c];
      nearest = std::min(nearest, std::fabs(z));
      next[r] = std::max(0.0, z);
    }
    h = std::move(next);
  }
  return nearest;
}

// Gap between the two largest logits.
double TopGap(const RefModel& model, std::span<const double> x) {
  Vector l = model.Forward(x).logits;
  std::sort(l.begin(), l.end(), std::greater<>());
  return l[0] - l[1];
}

Result Gradients() {
  const auto start = Clock::now();
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(2, 5), width(4, 16), classes(3, 6);
  std::normal_distribution<double> n(0.0, 1.0);
  const ScorerKind kinds[] = {ScorerKind::kMsp, ScorerKind::kEbo,
                              ScorerKind::kGen, ScorerKind::kFdbd};
  std::string detail;
  bool pass = true;
  for (ScorerKind kind : kinds) {
    double worst = 0.0;
    int checked = 0;
    std::uint64_t seed = 100;
    while (checked < 100) {
      const std::size_t dims[] = {static_cast<std::size_t>(dim(rng)),
                                  static_cast<std::size_t>(width(rng)),
                                  static_cast<std::size_t>(width(rng)),
                                  static_cast<std::size_t>(classes(rng))};
      const RefModel model = RefModel::RandomInit(dims, seed++);
      Vector x(dims[0]);
      for (double& v : x) v = n(rng);
      if (KinkDistance(model, x) < 1e-3 || TopGap(model, x) < 1e-3) continue;
      std::vector<Vector> calib;
      for (int i = 0; i < 8; ++i) {
        Vector c(dims[0]);
        for (double& v : c) v = n(rng);
        calib.push_back(c);
      }
      const Scorer scorer = MakeScorer(kind, model, calib);
      const InputGradient g = ScoreInputGradient(model, scorer, x);
      const Vector fd = oracle::CentralDifference(
          [&](const Vector& p) { return ScoreInput(model, scorer, p); }, x,
          1e-4);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < fd.size(); ++i) {
        num = std::max(num, std::fabs(g.gradient[i] - fd[i]));
        den = std::max(den, std::fabs(fd[i]));
      }
      worst = std::max(worst, num / std::max(den, 1e-8));
      ++checked;
    }
    pass = pass && worst < 1e-3;
    if (!detail.empty()) detail += ", ";
    detail += std::string(ScorerKindName(kind)) + Fmt(" %.2g", worst);
  }
  const double t = Seconds(start);
  pass = pass && t < 60.0;
  return {pass, "100 models/points per score, max rel error " + detail +
                    Fmt(" (< 1e-3), %.2f s (< 60 s)", t)};
}

// --- attack contracts -----------------------------------------------------

Result AttackContracts() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst_linf_excess = 0.0, worst_linear = 0.0;
  int direction_violations = 0, box_violations = 0;
  const ScorerKind kinds[] = {ScorerKind::kMsp, ScorerKind::kEbo,
                              ScorerKind::kGen, ScorerKind::kFdbd};
  for (int i = 0; i < 500; ++i) {
    const std::size_t dims[] = {3, 8, 3};
    const RefModel model = RefModel::RandomInit(dims, 1000 + i);
    Vector x(3);
    for (double& v : x) v = u(rng);
    const std::vector<Vector> calib = {{0.1, 0.2, 0.3}, {0.9, 0.1, 0.5}};
    const Scorer scorer = MakeScorer(kinds[i % 4], model, calib);
    AttackConfig cfg = AttackConfig::Make(
        i % 2 ? Direction::kMax : Direction::kMin, 0.2 * u(rng), 1 + i % 40);
    cfg.random_start = i % 3 == 0;
    cfg.seed = static_cast<std::uint64_t>(i);
    if (i % 4 == 1) cfg.domain_box = DomainBox{0.0, 1.0};
    const AttackResult r = Pgd(
        x, [&](std::span<const double> p) {
          return ScoreInputGradient(model, scorer, p);
        },
        cfg);
    for (std::size_t j = 0; j < x.size(); ++j) {
      worst_linf_excess = std::max(
          worst_linf_excess, std::fabs(r.x_adv[j] - x[j]) - cfg.epsilon);
      if (cfg.domain_box && (r.x_adv[j] < 0.0 || r.x_adv[j] > 1.0)) {
        ++box_violations;
      }
    }
    if (cfg.direction == Direction::kMin ? r.adv_score > r.clean_score
                                         : r.adv_score < r.clean_score) {
      ++direction_violations;
    }

    // Linear score: the optimum over the ball is clean -/+ eps * ||w||_1.
    Vector w(4);
    for (double& v : w) v = n(rng);
    Vector z(4);
    for (double& v : z) v = n(rng);
    const double eps = 0.1;
    const AttackConfig lin_cfg = AttackConfig::Make(cfg.direction, eps, 40);
    const AttackResult lin = Pgd(
        z, [&](std::span<const double> p) {
          InputGradient g;
          for (std::size_t j = 0; j < w.size(); ++j) g.value += w[j] * p[j];
          g.gradient = w;
          return g;
        },
        lin_cfg);
    double l1 = 0.0;
    for (double v : w) l1 += std::fabs(v);
    const double want = cfg.direction == Direction::kMin
                            ? lin.clean_score - eps * l1
                            : lin.clean_score + eps * l1;
    worst_linear = std::max(worst_linear, std::fabs(lin.adv_score - want));
  }
  const bool pass = worst_linf_excess <= 1e-9 && box_violations == 0 &&
                    direction_violations == 0 && worst_linear <= 1e-6;
  return {pass, Fmt("500 runs, max l-inf excess %.3g, %.0f direction and %.0f "
                    "box violations, linear optimum error %.3g (<= 1e-6)",
                    std::max(0.0, worst_linf_excess), direction_violations,
                    box_violations, worst_linear)};
}

// --- benchmark trends -------------------------------------------------------

double AurocPoints(const EvalReport& r, const char* pp, const std::string& attack,
                   const std::string& variant = "") {
  return 100.0 * r.Average(pp, attack, variant)->auroc;
}

const std::string kMin01 = "pgd-min eps=0.1";
const std::string kMax01 = "pgd-max eps=0.1";

double Gap(const EvalReport& r, const char* pp) {
  return std::fabs(AurocPoints(r, pp, kMin01) - AurocPoints(r, pp, kMax01));
}

int Main() {
  std::printf("rosskit acceptance suite\n");
  Report("Oracle equivalence", OracleEquivalence());
  Report("Gated score closed form", ClosedForm());
  Report("Gradient correctness", Gradients());
  Report("Attack contracts", AttackContracts());

  const auto start = Clock::now();
  const StandardBenchmark bench = BuildStandardBenchmark(0);
  const BenchmarkInputs inputs = ToBenchmarkInputs(bench.data);
  const double eps[] = {0.1};
  EvalSettings gen_settings;
  gen_settings.scorer = ScorerKind::kGen;
  gen_settings.grid = MakeAttackGrid(eps);
  const EvalReport gen = AttackEvaluate(inputs, bench.model, gen_settings);
  const double t_trend = Seconds(start);

  {
    const double d_max =
        AurocPoints(gen, "S_ROSS", kMax01) - AurocPoints(gen, "base", kMax01);
    const double d_min =
        AurocPoints(gen, "S_ROSS", kMin01) - AurocPoints(gen, "base", kMin01);
    Report("Robustness trend",
           {d_max >= 10.0 && d_min >= 5.0 && t_trend < 300.0,
            Fmt("ROSS-GEN minus GEN AUROC: PGD-max eps=0.1 %+.2f pts (>= 10), "
                "PGD-min eps=0.1 %+.2f pts (>= 5), %.1f s (< 300 s)",
                d_max, d_min, t_trend)});
  }

  {
    EvalSettings ebo_settings = gen_settings;
    ebo_settings.scorer = ScorerKind::kEbo;
    const EvalReport ebo = AttackEvaluate(inputs, bench.model, ebo_settings);
    const double g_ross = Gap(gen, "S_ROSS"), g_base = Gap(gen, "base");
    const double e_ross = Gap(ebo, "S_ROSS"), e_base = Gap(ebo, "base");
    Report("Symmetry",
           {g_ross <= g_base && e_ross <= e_base,
            Fmt("eps=0.1 AUROC gap GEN: ROSS %.2f vs base %.2f; EBO: ROSS "
                "%.2f vs base %.2f (ROSS <= base)",
                g_ross, g_base, e_ross, e_base)});
  }

  {
    const double ross = AurocPoints(gen, "S_ROSS", "clean");
    const double med = AurocPoints(gen, "S_med", "clean");
    Report("Clean-cost bound",
           {ross >= med - 2.0,
            Fmt("clean AUROC S_ROSS %.2f vs S_med %.2f (>= S_med - 2)", ross,
                med)});
  }

  {
    const double sigmas[] = {0.025, 0.05, 0.1, 0.25};
    const EvalReport ab = Ablate(AblationParam::kSigmaNoise, sigmas, inputs,
                                 bench.model, gen_settings);
    bool monotone = true;
    std::string clean_series;
    double prev = 1e9;
    for (double s : sigmas) {
      const std::string v = VariantLabel(AblationParam::kSigmaNoise, s);
      const double a = AurocPoints(ab, "S_ROSS", "clean", v);
      monotone = monotone && a <= prev;
      prev = a;
      clean_series += Fmt("%.2f ", a);
    }
    const double at_01 = AurocPoints(
        ab, "S_ROSS", kMax01, VariantLabel(AblationParam::kSigmaNoise, 0.1));
    const double at_0025 = AurocPoints(
        ab, "S_ROSS", kMax01, VariantLabel(AblationParam::kSigmaNoise, 0.025));
    Report("Noise trade-off",
           {monotone && at_01 > at_0025,
            "clean S_ROSS AUROC over sigma {0.025,0.05,0.1,0.25}: " +
                clean_series + (monotone ? "(non-increasing)" : "(increases)") +
                Fmt("; PGD-max eps=0.1 AUROC sigma=0.1 %.2f vs sigma=0.025 "
                    "%.2f (must be higher)",
                    at_01, at_0025)});
  }

  {
    const double ns[] = {5, 10, 25, 50};
    EvalSettings clean_settings = gen_settings;
    clean_settings.grid.clear();
    const EvalReport ab =
        Ablate(AblationParam::kN, ns, inputs, bench.model, clean_settings);
    double lo = 1e9, hi = -1e9;
    std::string series;
    for (double n : ns) {
      const double a = AurocPoints(ab, "S_ROSS", "clean",
                                   VariantLabel(AblationParam::kN, n));
      lo = std::min(lo, a);
      hi = std::max(hi, a);
      series += Fmt("%.2f ", a);
    }
    Report("N-stability",
           {hi - lo < 2.0,
            "clean S_ROSS AUROC over N {5,10,25,50}: " + series +
                Fmt("range %.2f pts (< 2)", hi - lo)});
  }

  {
    oracle::TempDir tmp;
    bool same = true;
    std::size_t files = 0;
#ifdef ROSSKIT_ACCEPTANCE_CLI
    for (const char* run : {"a", "b"}) {
      std::ostringstream out, err;
      const int status = cli::Run(
          {"rosskit", "attack-eval", "--preset", "standard", "--seed", "0",
           "--grid", "standard", "--out", (tmp / run).string()},
          out, err, nullptr);
      if (status != 0) {
        Report("Determinism", {false, "attack-eval failed: " + err.str()});
        return 1;
      }
    }
    const char* how = "two CLI attack-eval runs";
#else
    for (const char* run : {"a", "b"}) {
      const StandardBenchmark b = BuildStandardBenchmark(0);
      EvalSettings s = gen_settings;
      s.run_spec = {{"command", "attack-eval"}, {"seed", 0}};
      WriteReport(AttackEvaluate(ToBenchmarkInputs(b.data), b.model, s),
                  tmp / run);
    }
    const char* how = "two in-process attack-eval runs";
#endif
    for (const auto& entry : fs::directory_iterator(tmp / "a")) {
      const fs::path other = tmp / "b" / entry.path().filename();
      ++files;
      same = same && fs::exists(other) &&
             ReadTextFile(entry.path()) == ReadTextFile(other);
    }
    Report("Determinism",
           {same && files >= 3,
            std::string(how) + Fmt(": %.0f report files ", files) +
                (same ? "byte-identical" : "differ")});
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace rosskit

int main() { return rosskit::Main(); }
