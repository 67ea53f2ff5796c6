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

// Object-centric diagnosis: grounding AP, foreground/background roles,
// perturbation suites, flipping rates and report rendering.

#ifndef SGR_DIAGNOSIS_H_
#define SGR_DIAGNOSIS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgr/box.h"
#include "sgr/exec_neural.h"
#include "sgr/program.h"
#include "sgr/scene_graph.h"
#include "sgr/vocabulary.h"

namespace sgr {

inline constexpr double kGroundingIoU = 0.5;
// Foreground objects overlap a referred box with IoU strictly above this.
inline constexpr double kForegroundIoU = 0.0;

// layers x heads x tokens x objects, row-major.
struct AttentionTensor {
  int layers = 0;
  int heads = 0;
  int tokens = 0;
  int objects = 0;
  std::vector<double> values;

  double at(int l, int h, int t, int k) const {
    return values[((static_cast<size_t>(l) * heads + h) * tokens + t) * objects + k];
  }
};

// Max over heads, mean over layers, then max over tokens. Throws
// Error(kInvalidArgument) on a zero-size axis or a size mismatch.
std::vector<double> AggregateAttention(const AttentionTensor& tensor);

// All-point interpolated average precision in [0, 100] of the ranking given
// by `attention` against `gt_grounded`. Detections are visited in descending
// score; each is a true positive if it reaches `iou_threshold` with a still
// unmatched ground-truth box (the best one is taken). Tied scores enter
// together, so the value equals a sweep over every score threshold. With no
// ground truth the result is 100 when all attention is zero, else 0.
double GroundingAp(std::span<const double> attention,
                   std::span<const Box> detected,
                   std::span<const Box> gt_grounded,
                   double iou_threshold = kGroundingIoU);

struct ObjectRoles {
  std::vector<int> foreground;  // sorted
  std::vector<int> background;  // sorted
};

// Foreground: IoU > `overlap` with any of the referred/grounded boxes.
ObjectRoles ClassifyRoles(std::span<const Box> detected,
                          std::span<const Box> referred,
                          double overlap = kForegroundIoU);

struct FlipStats {
  double acc_before = 0.0;
  double acc_after = 0.0;
  double c2i = 0.0;
  double i2c = 0.0;
  // Set when the denominator was empty and the rate reported as 0.
  bool c2i_undefined = false;
  bool i2c_undefined = false;
};

// Percentages. Throws Error(kInvalidArgument) on length mismatch.
FlipStats FlippingRates(std::span<const std::string> before,
                        std::span<const std::string> after,
                        std::span<const std::string> gt);

// Result of running one program on one graph.
struct ExecOutcome {
  bool ok = false;
  std::string answer;
  // Per-object attention over the graph's objects.
  std::vector<double> attention;
  std::string error;
  // Set for failures other than unanswerable/ambiguous programs.
  bool fatal = false;
};

using Executor =
    std::function<ExecOutcome(const Program&, const ProbabilisticSceneGraph&)>;

// Decodes the graph with DecodeSymbolic and runs ExecuteSymbolic; attention
// is the indicator of the grounded set.
Executor SymbolicExecutor(const Vocabulary& vocab);
Executor NeuralExecutor(const Vocabulary& vocab, const ExecutorParams& params);

// One question prepared for diagnosis.
struct EvalItem {
  std::string id;
  Program program;
  std::string gt_answer;
  ProbabilisticSceneGraph graph;
  // Ground-truth referred boxes of every step plus the grounded boxes.
  std::vector<Box> referred;
  std::vector<Box> grounded;
};

// "open" or "binary" by the terminal operator.
std::string QuestionType(const Program& program);
// "relation" if the program relates objects, else "attribute" if any step
// names an attribute concept, else "object".
std::string SemanticType(const Program& program, const Vocabulary& vocab);

struct QuestionResult {
  std::string id;
  std::string type;
  std::string semantic;
  std::string answer;
  std::string gt_answer;
  bool correct = false;
  double ap = 0.0;
  std::string error;
  // Perturbation name -> answer ("" when execution failed).
  std::map<std::string, std::string> perturbed;

  friend bool operator==(const QuestionResult&, const QuestionResult&) = default;
};

struct GroundingRow {
  std::string bucket;  // "overall" or "<type>/<semantic>"
  int count = 0;
  double ap = 0.0;

  friend bool operator==(const GroundingRow&, const GroundingRow&) = default;
};

struct RobustnessRow {
  std::string perturbation;
  int count = 0;
  double acc_before = 0.0;
  double accuracy = 0.0;
  double c2i = 0.0;
  double i2c = 0.0;
  bool c2i_undefined = false;
  bool i2c_undefined = false;

  friend bool operator==(const RobustnessRow&, const RobustnessRow&) = default;
};

struct DiagnosisReport {
  std::vector<GroundingRow> grounding;
  std::vector<RobustnessRow> robustness;
  std::vector<QuestionResult> per_question;

  // Number of questions whose unperturbed run failed fatally.
  int Failures() const;

  friend bool operator==(const DiagnosisReport&, const DiagnosisReport&) = default;
};

struct SuiteOptions {
  double grounding_iou = kGroundingIoU;
  double foreground_iou = kForegroundIoU;
  int jobs = 1;
};

// Runs every item unperturbed and under each perturbation (object removal
// by role, or score randomization seeded per item), then aggregates.
// Executor failures are recorded per question, never thrown. Percentages
// are rounded to two decimals.
DiagnosisReport RunPerturbationSuite(std::span<const EvalItem> items,
                                     const Executor& executor,
                                     std::span<const PerturbationSpec> specs,
                                     const Vocabulary& vocab,
                                     const SuiteOptions& options = {});

// Recomputes the grounding and robustness tables from per_question.
void Aggregate(DiagnosisReport& report);

enum class ReportFormat { kJson, kCsv, kMarkdown };
ReportFormat ParseReportFormat(std::string_view name);

std::string EmitReport(const DiagnosisReport& report, ReportFormat format);
DiagnosisReport ReportFromJson(std::string_view text);
DiagnosisReport ReportFromCsv(std::string_view text);

// Fixed two-decimal rendering used by every report format.
std::string FormatPercent(double value);

}  // namespace sgr

#endif  // SGR_DIAGNOSIS_H_
