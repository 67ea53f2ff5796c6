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

// Acceptance gates. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli.h"
#include "sgr/datagen.h"
#include "sgr/diagnosis.h"
#include "sgr/exec_neural.h"
#include "sgr/exec_symbolic.h"
#include "sgr/io.h"
#include "sgr/pipeline.h"
#include "sgr/training.h"

namespace sgr {
namespace {

namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string Sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Shared state of criteria 5 and 6.
struct Benchmark {
  bool ready = false;
  double seconds = 0.0;
  DiagnosisReport untrained;
  DiagnosisReport trained;
};

constexpr double kNoiseSd = 2.0;
constexpr double kFlipRate = 0.2;
constexpr int kBenchmarkQuestions = 2000;

double OverallAp(const DiagnosisReport& r) {
  for (const auto& row : r.grounding) {
    if (row.bucket == "overall") return row.ap;
  }
  return 0.0;
}

const RobustnessRow* Row(const DiagnosisReport& r, std::string_view name) {
  for (const auto& row : r.robustness) {
    if (row.perturbation == name) return &row;
  }
  return nullptr;
}

// 1. Exact-mode neural execution on one-hot graphs reproduces every
// symbolic answer and selected set.
Outcome OracleEquivalence(const Vocabulary& vocab) {
  const auto start = Clock::now();
  GenSpec spec;
  spec.seed = 1;
  spec.num_scenes = 400;
  const auto records = GenerateDataset(spec, vocab).records;
  const ExecutorParams exact = ExecutorParams::ExactMode();
  std::set<Operator> ops;
  int answers = 0, steps = 0, step_total = 0;
  for (const auto& r : records) {
    for (const auto& op : r.program.steps) ops.insert(op.op);
    const ExecutionTrace sym = ExecuteSymbolic(r.program, r.graph_gt, vocab);
    const SoftTrace neu = ExecuteNeural(r.program, OneHotEncode(r.graph_gt, vocab), vocab, exact);
    answers += sym.answer == neu.answer;
    for (size_t i = 0; i < sym.steps.size(); ++i) {
      const StepValue& s = sym.steps[i];
      const SoftStep& n = neu.steps[i];
      bool same = false;
      switch (s.kind) {
        case StepValue::Kind::kObjects:
          same = n.ConfidentIndices() == s.objects;
          break;
        case StepValue::Kind::kBoolean:
          same = (n.logit > 0.0) == s.boolean;
          break;
        case StepValue::Kind::kAnswer:
          same = n.distribution.answer() == s.answer;
          break;
      }
      steps += same;
      ++step_total;
    }
  }
  const double secs = Seconds(start);
  const int n = static_cast<int>(records.size());
  Outcome o;
  o.pass = n >= 1000 && answers == n && steps == step_total && ops.size() == 10 && secs < 30.0;
  o.detail = std::to_string(n) + " pairs, " + std::to_string(ops.size()) +
             "/10 operators; answers " + std::to_string(answers) + "/" + std::to_string(n) +
             ", step sets " + std::to_string(steps) + "/" + std::to_string(step_total) +
             " (need 100%); " + Fixed(secs) + " s (< 30 s)";
  return o;
}

// Brute force: every distinct score is a threshold; the detections at or
// above it are matched greedily and give one precision/recall point.
double SweepAp(const std::vector<double>& att, const std::vector<Box>& det,
               const std::vector<Box>& gt, double thr) {
  if (gt.empty()) {
    return std::all_of(att.begin(), att.end(), [](double a) { return a == 0.0; }) ? 100.0 : 0.0;
  }
  std::vector<double> levels(att.begin(), att.end());
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  for (double t : levels) {
    std::vector<int> kept;
    for (int k = 0; k < static_cast<int>(att.size()); ++k) {
      if (att[k] >= t) kept.push_back(k);
    }
    std::stable_sort(kept.begin(), kept.end(), [&](int a, int b) { return att[a] > att[b]; });
    std::vector<bool> used(gt.size(), false);
    int tp = 0;
    for (int k : kept) {
      int best = -1;
      double best_iou = 0.0;
      for (size_t g = 0; g < gt.size(); ++g) {
        const double v = IoU(det[k], gt[g]);
        if (!used[g] && v >= thr && v > best_iou) {
          best = static_cast<int>(g);
          best_iou = v;
        }
      }
      if (best >= 0) {
        used[best] = true;
        ++tp;
      }
    }
    points.emplace_back(static_cast<double>(tp) / gt.size(), static_cast<double>(tp) / kept.size());
  }
  std::vector<double> recalls;
  for (const auto& p : points) recalls.push_back(p.first);
  std::sort(recalls.begin(), recalls.end());
  recalls.erase(std::unique(recalls.begin(), recalls.end()), recalls.end());
  double ap = 0.0, prev = 0.0;
  for (double r : recalls) {
    double best = 0.0;
    for (const auto& p : points) {
      if (p.first >= r) best = std::max(best, p.second);
    }
    ap += (r - prev) * best;
    prev = r;
  }
  return 100.0 * ap;
}

Box RandomBox(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 0.8), side(0.05, 0.2);
  const double x = pos(rng), y = pos(rng);
  return MakeBox(x, y, x + side(rng), y + side(rng));
}

Box Jitter(const Box& b, std::mt19937_64& rng, double amount) {
  std::uniform_real_distribution<double> d(-amount, amount);
  auto c = [](double v) { return std::clamp(v, 0.0, 1.0); };
  Box j{c(b.x1 + d(rng)), c(b.y1 + d(rng)), c(b.x2 + d(rng)), c(b.y2 + d(rng))};
  return IsValidBox(j) ? j : b;
}

// 2. Grounding AP against the threshold sweep.
Outcome GroundingMetric() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> nk(1, 12), ng(0, 5), coin(0, 1), level(0, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 500; ++c) {
    std::vector<Box> gt(ng(rng));
    for (auto& b : gt) b = RandomBox(rng);
    std::vector<Box> det;
    for (const Box& b : gt) {
      if (coin(rng)) det.push_back(Jitter(b, rng, 0.03));
    }
    while (static_cast<int>(det.size()) < nk(rng)) det.push_back(RandomBox(rng));
    std::shuffle(det.begin(), det.end(), rng);
    std::vector<double> att(det.size());
    const bool ties = coin(rng);
    for (double& a : att) a = ties ? level(rng) / 4.0 : u(rng);
    worst = std::max(worst, std::abs(GroundingAp(att, det, gt) - SweepAp(att, det, gt, 0.5)));
  }
  int perfect_ok = 0, zero_ok = 0;
  constexpr int kSpecial = 100;
  for (int c = 0; c < kSpecial; ++c) {
    // Disjoint grid cells so unrelated boxes never overlap.
    std::vector<Box> cells;
    for (int i = 0; i < 16; ++i) {
      const double x = (i % 4) * 0.25, y = (i / 4) * 0.25;
      cells.push_back(MakeBox(x + 0.02, y + 0.02, x + 0.22, y + 0.22));
    }
    std::shuffle(cells.begin(), cells.end(), rng);
    const int g = 1 + c % 4;
    std::vector<Box> gt(cells.begin(), cells.begin() + g);
    std::vector<Box> det = gt;
    det.insert(det.end(), cells.begin() + g, cells.begin() + g + 1 + c % 5);
    std::vector<double> att(det.size(), 0.0);
    for (int i = 0; i < g; ++i) att[i] = 0.5 + u(rng) * 0.5;
    for (size_t i = g; i < det.size(); ++i) att[i] = u(rng) * 0.49;
    perfect_ok += GroundingAp(att, det, gt) == 100.0;
    std::vector<Box> far(det.begin() + g, det.end());
    std::vector<double> far_att(far.size());
    for (double& a : far_att) a = u(rng);
    zero_ok += GroundingAp(far_att, far, gt) == 0.0;
  }
  const double secs = Seconds(start);
  Outcome o;
  o.pass = worst <= 1e-9 && perfect_ok == kSpecial && zero_ok == kSpecial && secs < 10.0;
  o.detail = "500 random cases, max |AP - sweep| = " + Sci(worst) + " (<= 1e-9); perfect " +
             std::to_string(perfect_ok) + "/100 exactly 100; disjoint " + std::to_string(zero_ok) +
             "/100 exactly 0; " + Fixed(secs) + " s (< 10 s)";
  return o;
}

std::vector<DatasetRecord> BenchmarkRecords(const Vocabulary& vocab, uint64_t seed, int scenes,
                                            int limit) {
  GenSpec spec;
  spec.seed = seed;
  spec.num_scenes = scenes;
  spec.noise_sd = kNoiseSd;
  spec.flip_rate = kFlipRate;
  auto records = GenerateDataset(spec, vocab).records;
  if (limit > 0 && static_cast<int>(records.size()) > limit) records.resize(limit);
  return records;
}

// 3. Symbolic executor on ground-truth graphs never flips under background
// removal.
Outcome IdealRobustness(const Vocabulary& vocab) {
  const auto records = BenchmarkRecords(vocab, 12, 520, kBenchmarkQuestions);
  const auto items = BuildEvalItems(records, vocab, GraphSource::kOneHot);
  const std::vector<PerturbationSpec> specs = {{PerturbationKind::kBackgroundRemoval, 0, 10.0}};
  const auto report = RunPerturbationSuite(items, SymbolicExecutor(vocab), specs, vocab);
  const RobustnessRow* bg = Row(report, "bg");
  Outcome o;
  o.pass = bg != nullptr && FormatPercent(bg->c2i) == "0.00" && FormatPercent(bg->i2c) == "0.00" &&
           report.Failures() == 0;
  o.detail = std::to_string(items.size()) + " questions, accuracy " +
             FormatPercent(Accuracy(report)) + "; bg C->I " + FormatPercent(bg ? bg->c2i : -1) +
             ", I->C " + FormatPercent(bg ? bg->i2c : -1) + " (need 0.00 / 0.00)";
  return o;
}

// 4. Forward-mode gradients against central differences.
Outcome GradientCheck(const Vocabulary& vocab) {
  auto records = BenchmarkRecords(vocab, 5, 10, 20);
  const TrainingSet set = BuildTrainingSet(records, vocab);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.3);
  ExecutorParams p;
  auto flat = p.Trainable();
  for (double& x : flat) x += n(rng);
  flat[0] = 0.7;
  p.SetTrainable(flat);
  constexpr double kH = 1e-5;
  double worst = 0.0;
  for (const auto& sample : set.samples) {
    const std::span<const TrainingSample> one(&sample, 1);
    const Gradient g = Grad(p, one, vocab, {}).grad;
    for (int j = 0; j < ExecutorParams::kNumTrainable; ++j) {
      auto up = flat, down = flat;
      up[j] += kH;
      down[j] -= kH;
      ExecutorParams a = p, b = p;
      a.SetTrainable(up);
      b.SetTrainable(down);
      const double fd = (MeanLoss(a, one, vocab, {}) - MeanLoss(b, one, vocab, {})) / (2 * kH);
      const double scale = std::max({std::abs(fd), std::abs(g[j]), 1e-8});
      worst = std::max(worst, std::abs(fd - g[j]) / scale);
    }
  }
  Outcome o;
  o.pass = set.samples.size() == 20 && worst < 1e-4;
  o.detail = std::to_string(set.samples.size()) + " samples x 21 parameters, h = 1e-5, max rel err " +
             Sci(worst) + " (< 1e-4)";
  return o;
}

void RunBenchmark(const Vocabulary& vocab, Benchmark& bench) {
  if (bench.ready) return;
  const auto start = Clock::now();
  const auto train_records = BenchmarkRecords(vocab, 11, 300, 0);
  const auto test_records = BenchmarkRecords(vocab, 12, 520, kBenchmarkQuestions);
  const TrainingSet set = BuildTrainingSet(train_records, vocab);
  TrainConfig config;
  config.learning_rate = 0.05;
  config.iterations = 1000;
  config.batch_size = 256;
  config.seed = 11;
  const TrainResult trained = Train(ExecutorParams{}, set.samples, vocab, config);
  const auto items = BuildEvalItems(test_records, vocab, GraphSource::kPredicted);
  std::vector<PerturbationSpec> specs;
  for (auto kind : {PerturbationKind::kBackgroundRemoval, PerturbationKind::kForegroundRemoval,
                    PerturbationKind::kRandomize}) {
    specs.push_back({kind, 12, kDefaultOneHotMagnitude});
  }
  bench.untrained = RunPerturbationSuite(items, NeuralExecutor(vocab, ExecutorParams{}), specs, vocab);
  bench.trained = RunPerturbationSuite(items, NeuralExecutor(vocab, trained.params), specs, vocab);
  bench.seconds = Seconds(start);
  bench.ready = true;
}

// 5. Teacher-forced parameters against the untrained defaults.
Outcome TeacherForcingBenefit(const Vocabulary& vocab, Benchmark& bench) {
  RunBenchmark(vocab, bench);
  const double acc0 = Accuracy(bench.untrained), acc1 = Accuracy(bench.trained);
  const double ap0 = OverallAp(bench.untrained), ap1 = OverallAp(bench.trained);
  Outcome o;
  o.pass = acc1 - acc0 >= 10.0 && ap1 - ap0 >= 5.0 && bench.seconds < 300.0;
  o.detail = std::to_string(bench.trained.per_question.size()) + " questions; accuracy " +
             FormatPercent(acc0) + " -> " + FormatPercent(acc1) + " (gain " +
             FormatPercent(acc1 - acc0) + ", need >= 10.00); AP " + FormatPercent(ap0) + " -> " +
             FormatPercent(ap1) + " (gain " + FormatPercent(ap1 - ap0) + ", need >= 5.00); " +
             Fixed(bench.seconds) + " s (< 300 s)";
  return o;
}

// 6. Foreground removal and randomization hurt more than background removal.
Outcome PerturbationOrdering(const Vocabulary& vocab, Benchmark& bench) {
  RunBenchmark(vocab, bench);
  const RobustnessRow* bg = Row(bench.trained, "bg");
  const RobustnessRow* fg = Row(bench.trained, "fg");
  const RobustnessRow* rnd = Row(bench.trained, "rand");
  Outcome o;
  if (bg == nullptr || fg == nullptr || rnd == nullptr) {
    o.detail = "missing robustness rows";
    return o;
  }
  o.pass = fg->c2i > bg->c2i && rnd->accuracy < bg->accuracy;
  o.detail = "C->I fg " + FormatPercent(fg->c2i) + " > bg " + FormatPercent(bg->c2i) +
             "; accuracy rand " + FormatPercent(rnd->accuracy) + " < bg " +
             FormatPercent(bg->accuracy);
  return o;
}

// 7. Attention aggregation against a nested-loop recomputation.
Outcome AttentionAggregation() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 20);
  int exact = 0;
  constexpr int kCases = 200;
  for (int c = 0; c < kCases; ++c) {
    AttentionTensor t{5, 12, dim(rng), dim(rng), {}};
    t.values.resize(static_cast<size_t>(5) * 12 * t.tokens * t.objects);
    for (double& v : t.values) v = u(rng);
    std::vector<double> oracle(t.objects);
    for (int k = 0; k < t.objects; ++k) {
      double best = -1.0;
      for (int tok = 0; tok < t.tokens; ++tok) {
        double sum = 0.0;
        for (int l = 0; l < 5; ++l) {
          double m = -1.0;
          for (int h = 0; h < 12; ++h) m = std::max(m, t.at(l, h, tok, k));
          sum += m;
        }
        best = std::max(best, sum / 5);
      }
      oracle[k] = best;
    }
    exact += AggregateAttention(t) == oracle;
  }
  Outcome o;
  o.pass = exact == kCases;
  o.detail = std::to_string(exact) + "/" + std::to_string(kCases) +
             " random 5x12xLxK tensors bit-identical to the nested-loop oracle";
  return o;
}

int Cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"sgr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (rc != 0) std::cerr << err.str();
  return rc;
}

// gen -> train -> diagnose in `dir`; returns the report bytes.
std::string Pipeline(const fs::path& dir, int jobs) {
  fs::create_directories(dir);
  const std::string j = std::to_string(jobs);
  const std::string data = (dir / "data.jsonl").string();
  const std::string params = (dir / "params.json").string();
  const std::string report = (dir / "report.json").string();
  if (Cli({"--jobs", j, "gen", "--seed", "8", "--scenes", "60", "--noise-sd", "2",
           "--flip-rate", "0.2", "--out", data}) != 0 ||
      Cli({"--jobs", j, "train", "--data", data, "--seed", "8", "--iterations", "150",
           "--batch", "64", "--out", params}) != 0 ||
      Cli({"--jobs", j, "diagnose", "--data", data, "--params", params, "--seed", "8",
           "--perturb", "bg", "fg", "rand", "--format", "json", "--out", report}) != 0) {
    return {};
  }
  return ReadTextFile(report);
}

// 8. Byte-identical reports across repeated and multi-threaded runs.
Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() /
                        ("sgr_acceptance_" + std::to_string(std::random_device{}()));
  const std::string a = Pipeline(root / "a", 1);
  const std::string b = Pipeline(root / "b", 1);
  const std::string c = Pipeline(root / "c", 4);
  fs::remove_all(root);
  Outcome o;
  o.pass = !a.empty() && a == b && a == c;
  o.detail = "report JSON " + std::to_string(a.size()) + " bytes; run 2 " +
             (a == b ? "identical" : "differs") + ", --jobs 4 " + (a == c ? "identical" : "differs");
  return o;
}

}  // namespace
}  // namespace sgr

int main(int argc, char** argv) {
  CLI::App app{"Acceptance gates"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const sgr::Vocabulary vocab = sgr::MiniVocabulary();
  sgr::Benchmark bench;
  const std::vector<std::pair<std::string, std::function<sgr::Outcome()>>> criteria = {
      {"oracle equivalence", [&] { return sgr::OracleEquivalence(vocab); }},
      {"grounding metric", [] { return sgr::GroundingMetric(); }},
      {"ideal-model robustness", [&] { return sgr::IdealRobustness(vocab); }},
      {"gradient correctness", [&] { return sgr::GradientCheck(vocab); }},
      {"teacher-forcing benefit", [&] { return sgr::TeacherForcingBenefit(vocab, bench); }},
      {"perturbation ordering", [&] { return sgr::PerturbationOrdering(vocab, bench); }},
      {"attention aggregation", [] { return sgr::AttentionAggregation(); }},
      {"determinism", [] { return sgr::Determinism(); }},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    sgr::Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
