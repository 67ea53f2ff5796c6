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

#include "sgr/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "dual.h"
#include "neural_ops.h"
#include "sgr/error.h"
#include "sgr/exec_symbolic.h"
#include "sgr/parallel.h"

namespace sgr {
namespace {

using internal::Dual;
using GradDual = Dual<ExecutorParams::kNumTrainable>;

const Concept& RequireConcept(const Vocabulary& vocab, std::string_view name) {
  const Concept* c = vocab.FindConcept(name);
  if (c == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "unknown concept '" + std::string(name) + "'");
  }
  return *c;
}

SoftStep::Kind KindOf(Operator op) {
  if (IsPointing(op)) return SoftStep::Kind::kPointing;
  if (IsBoolean(op)) return SoftStep::Kind::kBoolean;
  return SoftStep::Kind::kAnswer;
}

// Pool handed to the consumers of pointing step `s`: its matched target, or
// its whole input when nothing was matched.
const std::vector<int>& FedIndices(const StepSupervision& s) {
  return s.target.empty() ? s.input : s.target;
}

std::vector<std::string> AnswerCandidates(const Operation& op,
                                          const Vocabulary& vocab) {
  std::vector<std::string> names;
  if (op.op == Operator::kQuery) {
    const Concept& c = RequireConcept(vocab, op.concept_name);
    for (int m : internal::SortedMembers(c)) names.emplace_back(vocab.MemberName(c, m));
  } else if (op.op == Operator::kChoose) {
    auto [a, b] = op.ChoiceCategories();
    names = {a, b};
  } else {
    const Concept* c =
        op.concept_name.empty() ? nullptr : &RequireConcept(vocab, op.concept_name);
    for (int a : internal::CommonCandidates(c, vocab)) {
      names.push_back(vocab.attribute_names()[a]);
    }
  }
  return names;
}

template <typename T>
struct ForwardStep {
  std::vector<T> p;       // pointing: over StepSupervision::input
  T logit = 0.0;          // boolean
  std::vector<T> logits;  // answer
};

template <typename T>
std::vector<ForwardStep<T>> TeacherForward(const Program& program,
                                           const ProbabilisticSceneGraph& g,
                                           const Vocabulary& vocab,
                                           const internal::ParamView<T>& pv,
                                           const Supervision& sup) {
  if (sup.steps.size() != program.steps.size()) {
    throw Error(ErrorCode::kInvalidArgument, "supervision does not match program");
  }
  if (g.size() == 0) throw Error(ErrorCode::kUnanswerable, "scene graph has no objects");
  std::vector<ForwardStep<T>> out(program.steps.size());

  // Scores of step d restricted to `indices`, which must lie in its input.
  auto gather = [&](int d, const std::vector<int>& indices) {
    const auto& in = sup.steps[d].input;
    std::vector<T> a;
    a.reserve(indices.size());
    for (int k : indices) {
      auto it = std::find(in.begin(), in.end(), k);
      if (it == in.end()) {
        throw Error(ErrorCode::kInvalidArgument, "teacher input outside dependency pool");
      }
      a.push_back(out[d].p[it - in.begin()]);
    }
    return a;
  };

  for (size_t i = 0; i < program.steps.size(); ++i) {
    const Operation& op = program.steps[i];
    const StepSupervision& ss = sup.steps[i];
    ForwardStep<T>& step = out[i];
    switch (op.op) {
      case Operator::kFilter: {
        std::vector<T> a = op.deps.empty() ? std::vector<T>(ss.input.size(), T(0.0))
                                           : gather(op.deps[0], ss.input);
        const Concept& c = RequireConcept(vocab, op.concept_name);
        step.p = internal::FilterScoresT<T>(g, ss.input, a, c,
                                            internal::ResolveMember(c, op.category, vocab), pv);
        break;
      }
      case Operator::kRelate: {
        const bool keep_subject = op.concept_name == kSubjectRole;
        const int other_dep = keep_subject ? op.deps[1] : op.deps[0];
        const auto& other = FedIndices(sup.steps[other_dep]);
        const auto a_pool = gather(keep_subject ? op.deps[0] : op.deps[1], ss.input);
        const auto a_other = gather(other_dep, other);
        const int predicate = vocab.PredicateId(op.category).value_or(0);
        step.p = internal::RelateScoresT<T>(g, ss.input, a_pool, other, a_other,
                                            keep_subject, predicate, pv);
        break;
      }
      case Operator::kExist:
        step.logit = internal::ExistLogitT<T>(out[op.deps[0]].p, pv);
        break;
      case Operator::kVerify: {
        const auto& in = FedIndices(sup.steps[op.deps[0]]);
        const Concept& c = RequireConcept(vocab, op.concept_name);
        step.logit = internal::VerifyLogitT<T>(
            g, in, gather(op.deps[0], in), c,
            internal::ResolveMember(c, op.category, vocab), pv);
        break;
      }
      case Operator::kQuery: {
        const auto& in = FedIndices(sup.steps[op.deps[0]]);
        const Concept& c = RequireConcept(vocab, op.concept_name);
        step.logits = internal::AttendedColumnsT<T>(
            g, in, gather(op.deps[0], in), c.kind == ConceptKind::kAttribute,
            internal::SortedMembers(c), pv);
        break;
      }
      case Operator::kChoose: {
        const auto& in = FedIndices(sup.steps[op.deps[0]]);
        const auto a = gather(op.deps[0], in);
        const Concept& c = RequireConcept(vocab, op.concept_name);
        auto [first, second] = op.ChoiceCategories();
        for (const auto& cat : {first, second}) {
          step.logits.push_back(internal::VerifyLogitT<T>(
              g, in, a, c, internal::ResolveMember(c, cat, vocab), pv));
        }
        break;
      }
      case Operator::kCommon: {
        const auto& z1 = FedIndices(sup.steps[op.deps[0]]);
        const auto& z2 = FedIndices(sup.steps[op.deps[1]]);
        const Concept* c =
            op.concept_name.empty() ? nullptr : &RequireConcept(vocab, op.concept_name);
        step.logits = internal::CommonLogitsT<T>(g, z1, gather(op.deps[0], z1), z2,
                                                 gather(op.deps[1], z2),
                                                 internal::CommonCandidates(c, vocab), pv);
        break;
      }
      case Operator::kAnd:
        step.logit = internal::Min(out[op.deps[0]].logit, out[op.deps[1]].logit);
        break;
      case Operator::kOr:
        step.logit = internal::Max(out[op.deps[0]].logit, out[op.deps[1]].logit);
        break;
      case Operator::kNot:
        step.logit = -out[op.deps[0]].logit;
        break;
    }
  }
  return out;
}

// softplus(s) - y * s, the BCE of sigmoid(s) against y.
template <typename T>
T Bce(const T& s, int y) {
  return internal::Softplus(s) - static_cast<double>(y) * s;
}

template <typename T>
T StepLoss(const StepSupervision& ss, std::span<const T> p, const T& logit,
           std::span<const T> logits, const LossWeights& w) {
  T total = 0.0;
  switch (ss.kind) {
    case SoftStep::Kind::kPointing:
      if (p.size() != ss.labels.size()) {
        throw Error(ErrorCode::kInvalidArgument, "pointing score/label length mismatch");
      }
      for (size_t i = 0; i < p.size(); ++i) total += w.pointing * Bce(p[i], ss.labels[i]);
      break;
    case SoftStep::Kind::kBoolean:
      total += w.binary * Bce(logit, ss.boolean ? 1 : 0);
      break;
    case SoftStep::Kind::kAnswer:
      if (ss.answer < 0 || ss.answer >= static_cast<int>(logits.size())) {
        throw Error(ErrorCode::kInvalidArgument, "answer target outside candidates");
      }
      total -= w.answer * internal::LogSoftmaxAt<T>(logits, ss.answer);
      break;
  }
  return total;
}

template <typename T>
T SampleLoss(const TrainingSample& s, const Vocabulary& vocab,
             const internal::ParamView<T>& pv, const LossWeights& w) {
  const auto steps = TeacherForward<T>(s.program, s.graph, vocab, pv, s.supervision);
  T total = 0.0;
  for (size_t i = 0; i < steps.size(); ++i) {
    total += StepLoss<T>(s.supervision.steps[i], steps[i].p, steps[i].logit,
                         steps[i].logits, w);
  }
  return total;
}

}  // namespace

Supervision GenerateSupervision(const Program& program,
                                const SymbolicSceneGraph& gt,
                                std::span<const Box> detected,
                                const Vocabulary& vocab) {
  const ExecutionTrace trace = ExecuteSymbolic(program, gt, vocab);
  const auto gt_boxes = gt.Boxes();
  const MatchMap match = MatchBoxes(detected, gt_boxes, kSupervisionIoU);
  const int k = static_cast<int>(detected.size());

  Supervision sup;
  sup.answer = trace.answer;
  sup.steps.resize(program.steps.size());
  for (size_t i = 0; i < program.steps.size(); ++i) {
    const Operation& op = program.steps[i];
    const StepValue& value = trace.steps[i];
    StepSupervision& ss = sup.steps[i];
    ss.kind = KindOf(op.op);
    switch (ss.kind) {
      case SoftStep::Kind::kPointing: {
        if (op.op == Operator::kFilter && op.deps.empty()) {
          ss.input.resize(k);
          std::iota(ss.input.begin(), ss.input.end(), 0);
        } else {
          const int pool_dep = op.op == Operator::kRelate && op.concept_name == kObjectRole
                                   ? op.deps[1]
                                   : op.deps[0];
          ss.input = FedIndices(sup.steps[pool_dep]);
        }
        for (int d = 0; d < k; ++d) {
          const int g = match.GroundTruthFor(d);
          if (g >= 0 && std::binary_search(value.objects.begin(), value.objects.end(), g)) {
            ss.target.push_back(d);
          }
        }
        for (int d : ss.input) {
          ss.labels.push_back(std::binary_search(ss.target.begin(), ss.target.end(), d) ? 1 : 0);
        }
        break;
      }
      case SoftStep::Kind::kBoolean:
        ss.boolean = value.boolean;
        break;
      case SoftStep::Kind::kAnswer: {
        const auto names = AnswerCandidates(op, vocab);
        auto it = std::find(names.begin(), names.end(), value.answer);
        if (it == names.end()) {
          throw Error(ErrorCode::kInvalidArgument,
                      "answer '" + value.answer + "' is not a candidate");
        }
        ss.answer = static_cast<int>(it - names.begin());
        break;
      }
    }
  }
  return sup;
}

SoftTrace TeacherForcedTrace(const Program& program,
                             const ProbabilisticSceneGraph& graph,
                             const Vocabulary& vocab,
                             const ExecutorParams& params,
                             const Supervision& sup) {
  const auto pv = internal::MakeView<double>(params, false);
  const auto steps = TeacherForward<double>(program, graph, vocab, pv, sup);
  SoftTrace trace;
  trace.attention.assign(graph.size(), 0.0);
  for (size_t i = 0; i < steps.size(); ++i) {
    const StepSupervision& ss = sup.steps[i];
    SoftStep s;
    s.kind = ss.kind;
    if (ss.kind == SoftStep::Kind::kPointing) {
      s.input = ss.input;
      s.input_scores = steps[i].p;
      s.selection = SelectTop(s.input, s.input_scores, params.pointing_threshold,
                              params.topk);
    } else if (ss.kind == SoftStep::Kind::kBoolean) {
      s.logit = steps[i].logit;
    } else {
      AnswerDistribution& d = s.distribution;
      d.candidates = AnswerCandidates(program.steps[i], vocab);
      d.logits = steps[i].logits;
      for (size_t c = 0; c < d.logits.size(); ++c) {
        d.probs.push_back(std::exp(internal::LogSoftmaxAt<double>(d.logits, static_cast<int>(c))));
      }
      d.best = static_cast<int>(std::max_element(d.logits.begin(), d.logits.end()) -
                                d.logits.begin());
    }
    trace.steps.push_back(std::move(s));
  }
  const SoftStep& last = trace.steps[program.TerminalStep()];
  trace.answer = last.kind == SoftStep::Kind::kBoolean
                     ? std::string(last.logit > 0.0 ? kYes : kNo)
                     : last.distribution.answer();
  for (int s : GroundingSteps(program)) {
    const Selection& chosen = trace.steps[s].selection;
    for (size_t i = 0; i < chosen.indices.size(); ++i) {
      double& slot = trace.attention[chosen.indices[i]];
      slot = std::max(slot, internal::SigmoidValue(chosen.scores[i]));
    }
  }
  return trace;
}

double Loss(const SoftTrace& trace, const Supervision& sup,
            const LossWeights& weights) {
  if (trace.steps.size() != sup.steps.size()) {
    throw Error(ErrorCode::kInvalidArgument, "trace and supervision lengths differ");
  }
  double total = 0.0;
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    const SoftStep& s = trace.steps[i];
    if (s.kind != sup.steps[i].kind) {
      throw Error(ErrorCode::kInvalidArgument, "trace and supervision kinds differ");
    }
    total += StepLoss<double>(sup.steps[i], s.input_scores, s.logit,
                              s.distribution.logits, weights);
  }
  return total;
}

double MeanLoss(const ExecutorParams& params,
                std::span<const TrainingSample> batch, const Vocabulary& vocab,
                const LossWeights& weights, int jobs) {
  if (batch.empty()) return 0.0;
  const auto pv = internal::MakeView<double>(params, false);
  std::vector<double> losses(batch.size());
  ParallelFor(static_cast<int>(batch.size()), jobs, [&](int i) {
    losses[i] = SampleLoss<double>(batch[i], vocab, pv, weights);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(batch.size());
}

LossAndGradient Grad(const ExecutorParams& params,
                     std::span<const TrainingSample> batch,
                     const Vocabulary& vocab, const LossWeights& weights,
                     int jobs) {
  LossAndGradient result;
  if (batch.empty()) return result;
  const auto pv = internal::MakeView<GradDual>(params, true);
  std::vector<GradDual> losses(batch.size());
  ParallelFor(static_cast<int>(batch.size()), jobs, [&](int i) {
    losses[i] = SampleLoss<GradDual>(batch[i], vocab, pv, weights);
  });
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const GradDual& l : losses) {
    result.loss += l.v;
    for (int j = 0; j < ExecutorParams::kNumTrainable; ++j) result.grad[j] += l.d[j];
  }
  result.loss *= inv;
  for (double& g : result.grad) g *= inv;
  return result;
}

void ValidateTrainConfig(const TrainConfig& config) {
  if (config.iterations < 1 || config.batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "iterations and batch size must be positive");
  }
  if (!std::isfinite(config.learning_rate) || config.learning_rate < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be finite and >= 0");
  }
  const LossWeights& w = config.weights;
  for (double x : {w.pointing, w.binary, w.answer}) {
    if (!std::isfinite(x) || x < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "loss weights must be finite and >= 0");
    }
  }
  if (config.jobs < 1) throw Error(ErrorCode::kInvalidArgument, "jobs must be >= 1");
}

TrainResult Train(const ExecutorParams& init,
                  std::span<const TrainingSample> dataset,
                  const Vocabulary& vocab, const TrainConfig& config) {
  ValidateTrainConfig(config);
  ValidateParams(init);
  if (dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training set");

  TrainResult result;
  result.params = init;
  std::mt19937_64 rng(config.seed);
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  size_t cursor = 0;
  const size_t batch_size = std::min<size_t>(config.batch_size, dataset.size());
  std::vector<TrainingSample> batch;

  for (int it = 0; it < config.iterations; ++it) {
    batch.clear();
    for (size_t b = 0; b < batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }
    const LossAndGradient lg = Grad(result.params, batch, vocab, config.weights, config.jobs);
    if (!std::isfinite(lg.loss)) {
      throw Error(ErrorCode::kDiverged,
                  "loss became non-finite at iteration " + std::to_string(it));
    }
    result.loss_curve.push_back(lg.loss);
    if (config.learning_rate == 0.0) continue;
    auto flat = result.params.Trainable();
    for (int j = 0; j < ExecutorParams::kNumTrainable; ++j) {
      flat[j] -= config.learning_rate * lg.grad[j];
      if (!std::isfinite(flat[j])) {
        throw Error(ErrorCode::kDiverged,
                    "parameter " + std::to_string(j) + " became non-finite at iteration " +
                        std::to_string(it));
      }
    }
    flat[0] = std::clamp(flat[0], 1e-3, 1.0);
    result.params.SetTrainable(flat);
  }
  return result;
}

}  // namespace sgr
