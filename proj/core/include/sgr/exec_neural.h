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

// Probabilistic program executor over ProbabilisticSceneGraph.
//
// Pointing steps (filter, relate) score their candidate objects with
//
//   p = (1 - alpha) * a_in + alpha * (S ∘ sigmoid(psi(box)))
//
// and keep the entries above `pointing_threshold` (at most `topk`, never
// none). Binary steps emit a calibrated logit w * score + b; query, choose
// and common emit a distribution over candidate answers.

#ifndef SGR_EXEC_NEURAL_H_
#define SGR_EXEC_NEURAL_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgr/box.h"
#include "sgr/program.h"
#include "sgr/scene_graph.h"
#include "sgr/vocabulary.h"

namespace sgr {

inline constexpr int kBoxFeatures = 7;
// Logit magnitude assigned to a satisfied (or violated) position predicate.
inline constexpr double kPositionLogit = 10.0;

// (x1, y1, x2, y2, w, h, area).
std::array<double, kBoxFeatures> BoxFeatures(const Box& box);

enum class RelateReduce { kSoftmaxAvg, kMax };

std::string_view RelateReduceName(RelateReduce reduce);
RelateReduce ParseRelateReduce(std::string_view name);

struct Calibration {
  double w = 1.0;
  double b = 0.0;
  friend bool operator==(const Calibration&, const Calibration&) = default;
};

struct ExecutorParams {
  // Number of trainable scalars: alpha, psi, phi, and two calibrations.
  static constexpr int kNumTrainable = 1 + 2 * (kBoxFeatures + 1) + 4;

  double alpha = 0.5;
  // Affine maps on BoxFeatures: 7 weights followed by a bias.
  std::array<double, kBoxFeatures + 1> psi{};
  std::array<double, kBoxFeatures + 1> phi{};
  Calibration exist_calib;
  Calibration verify_calib;

  double pointing_threshold = 5.0;
  int topk = 16;
  RelateReduce relate_reduce = RelateReduce::kSoftmaxAvg;

  // alpha = 1, psi = phi = 0, identity calibration, max reduction,
  // threshold 0 and an unbounded topk: selections follow logit signs.
  static ExecutorParams ExactMode();

  std::array<double, kNumTrainable> Trainable() const;
  void SetTrainable(std::span<const double> values);

  friend bool operator==(const ExecutorParams&, const ExecutorParams&) = default;
};

// Throws Error(kInvalidArgument) if alpha is outside (0, 1], topk < 1 or a
// weight is not finite.
void ValidateParams(const ExecutorParams& params);

std::string ParamsToJson(const ExecutorParams& params);
ExecutorParams ParamsFromJson(std::string_view text);

struct Selection {
  std::vector<int> indices;    // object indices, descending score
  std::vector<double> scores;  // matching p values
  // True when nothing cleared the threshold and the argmax was kept.
  bool fallback = false;
};

// p over `input` for filter(concept, category).
std::vector<double> FilterScores(const ProbabilisticSceneGraph& graph,
                                 std::span<const int> input,
                                 std::span<const double> input_scores,
                                 const Concept& cpt, std::string_view category,
                                 const Vocabulary& vocab,
                                 const ExecutorParams& params);

// Thresholded top-k selection with argmax fallback. `input` must be
// non-empty.
Selection SelectTop(std::span<const int> input, std::span<const double> scores,
                    double threshold, int topk);

Selection FilterOp(const ProbabilisticSceneGraph& graph,
                   std::span<const int> input,
                   std::span<const double> input_scores, const Concept& cpt,
                   std::string_view category, const Vocabulary& vocab,
                   const ExecutorParams& params);

// Keeps subjects (role "subject") or objects (role "object") related by
// `predicate` to the other set.
Selection RelateOp(const ProbabilisticSceneGraph& graph,
                   std::span<const int> subjects,
                   std::span<const double> subject_scores,
                   std::span<const int> objects,
                   std::span<const double> object_scores,
                   std::string_view role, int predicate,
                   const ExecutorParams& params);

double ExistLogit(std::span<const double> input_scores,
                  const ExecutorParams& params);

double VerifyLogit(const ProbabilisticSceneGraph& graph,
                   std::span<const int> input,
                   std::span<const double> input_scores, const Concept& cpt,
                   std::string_view category, const Vocabulary& vocab,
                   const ExecutorParams& params);

struct AnswerDistribution {
  std::vector<std::string> candidates;
  std::vector<double> logits;
  std::vector<double> probs;
  // argmax, lowest index on ties
  int best = 0;

  const std::string& answer() const { return candidates.at(best); }
};

AnswerDistribution QueryOp(const ProbabilisticSceneGraph& graph,
                           std::span<const int> input,
                           std::span<const double> input_scores,
                           const Concept& cpt, const Vocabulary& vocab,
                           const ExecutorParams& params);

// Verify-style logits for both candidates; ties go to the first.
AnswerDistribution ChooseOp(const ProbabilisticSceneGraph& graph,
                            std::span<const int> input,
                            std::span<const double> input_scores,
                            const Concept& cpt, std::string_view first,
                            std::string_view second, const Vocabulary& vocab,
                            const ExecutorParams& params);

// `cpt` may be null, meaning every attribute category.
AnswerDistribution CommonOp(const ProbabilisticSceneGraph& graph,
                            std::span<const int> first,
                            std::span<const double> first_scores,
                            std::span<const int> second,
                            std::span<const double> second_scores,
                            const Concept* cpt, const Vocabulary& vocab,
                            const ExecutorParams& params);

double AndLogit(double a, double b);
double OrLogit(double a, double b);
double NotLogit(double a);

struct SoftStep {
  enum class Kind { kPointing, kBoolean, kAnswer };

  Kind kind = Kind::kPointing;
  // Pointing: the candidate pool and its p values.
  std::vector<int> input;
  std::vector<double> input_scores;
  Selection selection;
  // Boolean: calibrated logit.
  double logit = 0.0;
  // Answer: distribution over candidates.
  AnswerDistribution distribution;

  // Selected indices that cleared the threshold (empty on fallback), sorted.
  std::vector<int> ConfidentIndices() const;
};

struct SoftTrace {
  std::vector<SoftStep> steps;
  // Length K; sigmoid(p) for objects selected by the grounding steps, 0
  // elsewhere.
  std::vector<double> attention;
  std::string answer;
};

// Runs `program` over `graph`. Starting steps see every object with zero
// scores. Throws Error(kUnanswerable) when the graph has no objects and
// Error(kValidation) for an invalid program.
SoftTrace ExecuteNeural(const Program& program,
                        const ProbabilisticSceneGraph& graph,
                        const Vocabulary& vocab, const ExecutorParams& params);

}  // namespace sgr

#endif  // SGR_EXEC_NEURAL_H_
