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

// Teacher-forcing supervision and gradient-descent training of the
// probabilistic executor's parameters.
//
// Every step is trained on the inputs a correct executor would have seen:
// the detected boxes matched (IoU >= 0.5) to the ground-truth output of its
// dependency. Gradients are exact, computed with forward-mode dual numbers.

#ifndef SGR_TRAINING_H_
#define SGR_TRAINING_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgr/box.h"
#include "sgr/exec_neural.h"
#include "sgr/program.h"
#include "sgr/scene_graph.h"
#include "sgr/vocabulary.h"

namespace sgr {

inline constexpr double kSupervisionIoU = 0.5;

struct StepSupervision {
  SoftStep::Kind kind = SoftStep::Kind::kPointing;
  // Pointing: teacher-forced candidate pool and a 0/1 label per entry.
  std::vector<int> input;
  std::vector<int> labels;
  // Pointing: every detected index matched to the step's ground-truth
  // output, sorted. Feeds the steps that consume this one.
  std::vector<int> target;
  // Boolean steps.
  bool boolean = false;
  // Answer step: index of the ground-truth answer among the candidates.
  int answer = -1;

  friend bool operator==(const StepSupervision&, const StepSupervision&) = default;
};

struct Supervision {
  std::vector<StepSupervision> steps;
  std::string answer;

  friend bool operator==(const Supervision&, const Supervision&) = default;
};

// Runs the symbolic executor on `gt` and projects its per-step object sets
// onto `detected` through MatchBoxes(detected, gt boxes, 0.5). Throws
// whatever ExecuteSymbolic throws; such samples carry no supervision.
Supervision GenerateSupervision(const Program& program,
                                const SymbolicSceneGraph& gt,
                                std::span<const Box> detected,
                                const Vocabulary& vocab);

struct LossWeights {
  double pointing = 1.0;
  double binary = 1.0;
  double answer = 1.0;
};

// Executes `program` with every step fed its teacher-forced input. Pointing
// steps report p over StepSupervision::input in input_scores.
SoftTrace TeacherForcedTrace(const Program& program,
                             const ProbabilisticSceneGraph& graph,
                             const Vocabulary& vocab,
                             const ExecutorParams& params,
                             const Supervision& sup);

// Sum over steps of BCE on pointing scores and binary logits and CE on the
// answer distribution. Throws Error(kInvalidArgument) if the trace does not
// line up with the supervision.
double Loss(const SoftTrace& trace, const Supervision& sup,
            const LossWeights& weights);

struct TrainingSample {
  Program program;
  ProbabilisticSceneGraph graph;
  Supervision supervision;
};

using Gradient = std::array<double, ExecutorParams::kNumTrainable>;

struct LossAndGradient {
  double loss = 0.0;
  Gradient grad{};
};

// Mean teacher-forced loss over `batch`.
double MeanLoss(const ExecutorParams& params,
                std::span<const TrainingSample> batch, const Vocabulary& vocab,
                const LossWeights& weights, int jobs = 1);

// Mean loss and its gradient with respect to ExecutorParams::Trainable().
// Per-sample terms are summed in batch order, so the result does not depend
// on `jobs`.
LossAndGradient Grad(const ExecutorParams& params,
                     std::span<const TrainingSample> batch,
                     const Vocabulary& vocab, const LossWeights& weights,
                     int jobs = 1);

struct TrainConfig {
  double learning_rate = 0.05;
  int iterations = 200;
  int batch_size = 64;
  uint64_t seed = 0;
  LossWeights weights;
  int jobs = 1;
};

// Throws Error(kInvalidArgument) unless iterations and batch_size are
// positive, the rate is finite and >= 0 and every loss weight is >= 0.
void ValidateTrainConfig(const TrainConfig& config);

struct TrainResult {
  ExecutorParams params;
  // Mean batch loss before each update.
  std::vector<double> loss_curve;
};

// Mini-batch gradient descent. Batches walk a seeded permutation of the
// dataset, reshuffled each epoch. alpha is clamped to [1e-3, 1] after each
// step. Throws Error(kDiverged) when the loss or a parameter stops being
// finite.
TrainResult Train(const ExecutorParams& init,
                  std::span<const TrainingSample> dataset,
                  const Vocabulary& vocab, const TrainConfig& config);

}  // namespace sgr

#endif  // SGR_TRAINING_H_
