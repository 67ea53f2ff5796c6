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

#include "sgr/exec_neural.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json_util.h"
#include "neural_ops.h"
#include "sgr/error.h"

namespace sgr {
namespace {

using internal::Json;

const internal::ParamView<double> View(const ExecutorParams& params) {
  return internal::MakeView<double>(params, false);
}

const Concept& RequireConcept(const Vocabulary& vocab, std::string_view name) {
  const Concept* c = vocab.FindConcept(name);
  if (c == nullptr) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown concept '" + std::string(name) + "'");
  }
  return *c;
}

AnswerDistribution MakeDistribution(std::vector<std::string> candidates,
                                    std::vector<double> logits) {
  AnswerDistribution d;
  d.candidates = std::move(candidates);
  d.probs.resize(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    d.probs[i] = std::exp(internal::LogSoftmaxAt<double>(logits, static_cast<int>(i)));
  }
  d.best = static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                            logits.begin());
  d.logits = std::move(logits);
  return d;
}

}  // namespace

std::array<double, kBoxFeatures> BoxFeatures(const Box& box) {
  return {box.x1, box.y1, box.x2, box.y2, box.width(), box.height(), box.area()};
}

std::string_view RelateReduceName(RelateReduce reduce) {
  return reduce == RelateReduce::kMax ? "max" : "softmax_avg";
}

RelateReduce ParseRelateReduce(std::string_view name) {
  if (name == "max") return RelateReduce::kMax;
  if (name == "softmax_avg") return RelateReduce::kSoftmaxAvg;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown relate reduction '" + std::string(name) + "'");
}

ExecutorParams ExecutorParams::ExactMode() {
  ExecutorParams p;
  p.alpha = 1.0;
  p.psi.fill(0.0);
  p.phi.fill(0.0);
  p.exist_calib = {1.0, 0.0};
  p.verify_calib = {1.0, 0.0};
  p.pointing_threshold = 0.0;
  p.topk = std::numeric_limits<int>::max();
  p.relate_reduce = RelateReduce::kMax;
  return p;
}

std::array<double, ExecutorParams::kNumTrainable> ExecutorParams::Trainable() const {
  std::array<double, kNumTrainable> out{};
  int i = 0;
  out[i++] = alpha;
  for (double w : psi) out[i++] = w;
  for (double w : phi) out[i++] = w;
  out[i++] = exist_calib.w;
  out[i++] = exist_calib.b;
  out[i++] = verify_calib.w;
  out[i++] = verify_calib.b;
  return out;
}

void ExecutorParams::SetTrainable(std::span<const double> values) {
  if (static_cast<int>(values.size()) != kNumTrainable) {
    throw Error(ErrorCode::kInvalidArgument, "wrong trainable parameter count");
  }
  int i = 0;
  alpha = values[i++];
  for (double& w : psi) w = values[i++];
  for (double& w : phi) w = values[i++];
  exist_calib.w = values[i++];
  exist_calib.b = values[i++];
  verify_calib.w = values[i++];
  verify_calib.b = values[i++];
}

void ValidateParams(const ExecutorParams& params) {
  if (!(params.alpha > 0.0 && params.alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1]");
  }
  if (params.topk < 1) {
    throw Error(ErrorCode::kInvalidArgument, "topk must be >= 1");
  }
  for (double v : params.Trainable()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite executor weight");
    }
  }
  if (!std::isfinite(params.pointing_threshold)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite pointing threshold");
  }
}

std::string ParamsToJson(const ExecutorParams& params) {
  Json j;
  j["alpha"] = params.alpha;
  j["psi"] = params.psi;
  j["phi"] = params.phi;
  j["calib"] = {{"exist", {params.exist_calib.w, params.exist_calib.b}},
                {"verify", {params.verify_calib.w, params.verify_calib.b}}};
  j["pointing_threshold"] = params.pointing_threshold;
  j["topk"] = params.topk;
  j["relate_reduce"] = RelateReduceName(params.relate_reduce);
  return j.dump(2);
}

ExecutorParams ParamsFromJson(std::string_view text) {
  constexpr std::string_view kWhat = "executor params";
  const Json j = internal::ParseJson(text, kWhat);
  ExecutorParams p;
  p.alpha = internal::Get<double>(j, "alpha", kWhat);
  auto psi = internal::Get<std::vector<double>>(j, "psi", kWhat);
  auto phi = internal::Get<std::vector<double>>(j, "phi", kWhat);
  if (psi.size() != p.psi.size() || phi.size() != p.phi.size()) {
    throw Error(ErrorCode::kParse, "psi and phi need 8 entries each");
  }
  std::copy(psi.begin(), psi.end(), p.psi.begin());
  std::copy(phi.begin(), phi.end(), p.phi.begin());
  const Json calib = internal::Get<Json>(j, "calib", kWhat);
  auto pair = [&](std::string_view key) {
    auto v = internal::Get<std::vector<double>>(calib, key, kWhat);
    if (v.size() != 2) throw Error(ErrorCode::kParse, "calibration needs [w, b]");
    return Calibration{v[0], v[1]};
  };
  p.exist_calib = pair("exist");
  p.verify_calib = pair("verify");
  if (j.contains("pointing_threshold")) {
    p.pointing_threshold = internal::Get<double>(j, "pointing_threshold", kWhat);
  }
  if (j.contains("topk")) p.topk = internal::Get<int>(j, "topk", kWhat);
  if (j.contains("relate_reduce")) {
    p.relate_reduce =
        ParseRelateReduce(internal::Get<std::string>(j, "relate_reduce", kWhat));
  }
  ValidateParams(p);
  return p;
}

std::vector<double> FilterScores(const ProbabilisticSceneGraph& graph,
                                 std::span<const int> input,
                                 std::span<const double> input_scores,
                                 const Concept& cpt, std::string_view category,
                                 const Vocabulary& vocab,
                                 const ExecutorParams& params) {
  if (input.size() != input_scores.size()) {
    throw Error(ErrorCode::kInvalidArgument, "index/score length mismatch");
  }
  if (cpt.kind == ConceptKind::kRelation) {
    throw Error(ErrorCode::kInvalidArgument, "filter cannot use a relation concept");
  }
  const int member = internal::ResolveMember(cpt, category, vocab);
  return internal::FilterScoresT<double>(graph, input, input_scores, cpt, member,
                                         View(params));
}

Selection SelectTop(std::span<const int> input, std::span<const double> scores,
                    double threshold, int topk) {
  if (input.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "selection over an empty set");
  }
  std::vector<size_t> order(input.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  Selection sel;
  for (size_t i : order) {
    if (static_cast<int>(sel.indices.size()) >= topk) break;
    if (!(scores[i] > threshold)) break;
    sel.indices.push_back(input[i]);
    sel.scores.push_back(scores[i]);
  }
  if (sel.indices.empty()) {
    sel.indices.push_back(input[order[0]]);
    sel.scores.push_back(scores[order[0]]);
    sel.fallback = true;
  }
  return sel;
}

Selection FilterOp(const ProbabilisticSceneGraph& graph,
                   std::span<const int> input,
                   std::span<const double> input_scores, const Concept& cpt,
                   std::string_view category, const Vocabulary& vocab,
                   const ExecutorParams& params) {
  const auto p = FilterScores(graph, input, input_scores, cpt, category, vocab, params);
  return SelectTop(input, p, params.pointing_threshold, params.topk);
}

Selection RelateOp(const ProbabilisticSceneGraph& graph,
                   std::span<const int> subjects,
                   std::span<const double> subject_scores,
                   std::span<const int> objects,
                   std::span<const double> object_scores,
                   std::string_view role, int predicate,
                   const ExecutorParams& params) {
  if (predicate <= 0 || predicate >= graph.s_p.channels()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown predicate id");
  }
  if (role != kSubjectRole && role != kObjectRole) {
    throw Error(ErrorCode::kInvalidArgument, "relate role must be subject or object");
  }
  const bool keep_subject = role == kSubjectRole;
  const auto pool = keep_subject ? subjects : objects;
  const auto pool_scores = keep_subject ? subject_scores : object_scores;
  const auto other = keep_subject ? objects : subjects;
  const auto other_scores = keep_subject ? object_scores : subject_scores;
  const auto p = internal::RelateScoresT<double>(graph, pool, pool_scores, other,
                                                 other_scores, keep_subject,
                                                 predicate, View(params));
  return SelectTop(pool, p, params.pointing_threshold, params.topk);
}

double ExistLogit(std::span<const double> input_scores,
                  const ExecutorParams& params) {
  return internal::ExistLogitT<double>(input_scores, View(params));
}

double VerifyLogit(const ProbabilisticSceneGraph& graph,
                   std::span<const int> input,
                   std::span<const double> input_scores, const Concept& cpt,
                   std::string_view category, const Vocabulary& vocab,
                   const ExecutorParams& params) {
  const int member = internal::ResolveMember(cpt, category, vocab);
  return internal::VerifyLogitT<double>(graph, input, input_scores, cpt, member,
                                        View(params));
}

AnswerDistribution QueryOp(const ProbabilisticSceneGraph& graph,
                           std::span<const int> input,
                           std::span<const double> input_scores,
                           const Concept& cpt, const Vocabulary& vocab,
                           const ExecutorParams& params) {
  if (cpt.kind != ConceptKind::kObject && cpt.kind != ConceptKind::kAttribute) {
    throw Error(ErrorCode::kInvalidArgument, "query needs an object or attribute concept");
  }
  if (cpt.members.empty()) {
    throw Error(ErrorCode::kUnanswerable, "query over an empty concept");
  }
  const auto columns = internal::SortedMembers(cpt);
  auto logits = internal::AttendedColumnsT<double>(
      graph, input, input_scores, cpt.kind == ConceptKind::kAttribute, columns,
      View(params));
  std::vector<std::string> names;
  for (int m : columns) names.emplace_back(vocab.MemberName(cpt, m));
  return MakeDistribution(std::move(names), std::move(logits));
}

AnswerDistribution ChooseOp(const ProbabilisticSceneGraph& graph,
                            std::span<const int> input,
                            std::span<const double> input_scores,
                            const Concept& cpt, std::string_view first,
                            std::string_view second, const Vocabulary& vocab,
                            const ExecutorParams& params) {
  if (input.empty()) {
    throw Error(ErrorCode::kUnanswerable, "choose on an empty set");
  }
  const double s1 =
      VerifyLogit(graph, input, input_scores, cpt, first, vocab, params);
  const double s2 =
      VerifyLogit(graph, input, input_scores, cpt, second, vocab, params);
  return MakeDistribution({std::string(first), std::string(second)}, {s1, s2});
}

AnswerDistribution CommonOp(const ProbabilisticSceneGraph& graph,
                            std::span<const int> first,
                            std::span<const double> first_scores,
                            std::span<const int> second,
                            std::span<const double> second_scores,
                            const Concept* cpt, const Vocabulary& vocab,
                            const ExecutorParams& params) {
  if (cpt != nullptr && cpt->kind != ConceptKind::kAttribute) {
    throw Error(ErrorCode::kInvalidArgument, "common needs an attribute concept");
  }
  const auto columns = internal::CommonCandidates(cpt, vocab);
  if (columns.empty()) {
    throw Error(ErrorCode::kUnanswerable, "common has no candidate attributes");
  }
  auto logits = internal::CommonLogitsT<double>(graph, first, first_scores, second,
                                                second_scores, columns, View(params));
  std::vector<std::string> names;
  for (int c : columns) names.push_back(vocab.attribute_names()[c]);
  return MakeDistribution(std::move(names), std::move(logits));
}

double AndLogit(double a, double b) { return internal::Min(a, b); }
double OrLogit(double a, double b) { return internal::Max(a, b); }
double NotLogit(double a) { return -a; }

std::vector<int> SoftStep::ConfidentIndices() const {
  if (kind != Kind::kPointing || selection.fallback) return {};
  std::vector<int> out = selection.indices;
  std::sort(out.begin(), out.end());
  return out;
}

SoftTrace ExecuteNeural(const Program& program,
                        const ProbabilisticSceneGraph& graph,
                        const Vocabulary& vocab, const ExecutorParams& params) {
  if (auto v = ValidateProgram(program, vocab); !v.empty()) {
    throw Error(ErrorCode::kValidation, "invalid program: " + v.front().message);
  }
  ValidateParams(params);
  const int k = graph.size();
  if (k == 0) {
    throw Error(ErrorCode::kUnanswerable, "scene graph has no objects");
  }
  SoftTrace trace;
  trace.steps.reserve(program.steps.size());
  auto sel = [&](int dep) -> const Selection& { return trace.steps.at(dep).selection; };
  for (const Operation& op : program.steps) {
    SoftStep step;
    switch (op.op) {
      case Operator::kFilter: {
        step.kind = SoftStep::Kind::kPointing;
        std::vector<double> in_scores;
        if (op.deps.empty()) {
          step.input.resize(k);
          std::iota(step.input.begin(), step.input.end(), 0);
          in_scores.assign(k, 0.0);
        } else {
          step.input = sel(op.deps[0]).indices;
          in_scores = sel(op.deps[0]).scores;
        }
        const Concept& c = RequireConcept(vocab, op.concept_name);
        step.input_scores =
            FilterScores(graph, step.input, in_scores, c, op.category, vocab, params);
        step.selection = SelectTop(step.input, step.input_scores,
                                   params.pointing_threshold, params.topk);
        break;
      }
      case Operator::kRelate: {
        step.kind = SoftStep::Kind::kPointing;
        const Selection& subjects = sel(op.deps[0]);
        const Selection& objects = sel(op.deps[1]);
        const bool keep_subject = op.concept_name == kSubjectRole;
        const Selection& pool = keep_subject ? subjects : objects;
        const Selection& other = keep_subject ? objects : subjects;
        step.input = pool.indices;
        step.input_scores = internal::RelateScoresT<double>(
            graph, pool.indices, pool.scores, other.indices, other.scores,
            keep_subject, vocab.PredicateId(op.category).value_or(0), View(params));
        step.selection = SelectTop(step.input, step.input_scores,
                                   params.pointing_threshold, params.topk);
        break;
      }
      case Operator::kExist:
        step.kind = SoftStep::Kind::kBoolean;
        step.logit = ExistLogit(sel(op.deps[0]).scores, params);
        break;
      case Operator::kVerify: {
        step.kind = SoftStep::Kind::kBoolean;
        const Selection& in = sel(op.deps[0]);
        step.logit = VerifyLogit(graph, in.indices, in.scores,
                                 RequireConcept(vocab, op.concept_name), op.category,
                                 vocab, params);
        break;
      }
      case Operator::kQuery: {
        step.kind = SoftStep::Kind::kAnswer;
        const Selection& in = sel(op.deps[0]);
        step.distribution = QueryOp(graph, in.indices, in.scores,
                                    RequireConcept(vocab, op.concept_name), vocab,
                                    params);
        break;
      }
      case Operator::kChoose: {
        step.kind = SoftStep::Kind::kAnswer;
        const Selection& in = sel(op.deps[0]);
        auto [first, second] = op.ChoiceCategories();
        step.distribution =
            ChooseOp(graph, in.indices, in.scores,
                     RequireConcept(vocab, op.concept_name), first, second, vocab,
                     params);
        break;
      }
      case Operator::kCommon: {
        step.kind = SoftStep::Kind::kAnswer;
        const Selection& a = sel(op.deps[0]);
        const Selection& b = sel(op.deps[1]);
        const Concept* c = op.concept_name.empty()
                               ? nullptr
                               : &RequireConcept(vocab, op.concept_name);
        step.distribution =
            CommonOp(graph, a.indices, a.scores, b.indices, b.scores, c, vocab, params);
        break;
      }
      case Operator::kAnd:
        step.kind = SoftStep::Kind::kBoolean;
        step.logit = AndLogit(trace.steps[op.deps[0]].logit, trace.steps[op.deps[1]].logit);
        break;
      case Operator::kOr:
        step.kind = SoftStep::Kind::kBoolean;
        step.logit = OrLogit(trace.steps[op.deps[0]].logit, trace.steps[op.deps[1]].logit);
        break;
      case Operator::kNot:
        step.kind = SoftStep::Kind::kBoolean;
        step.logit = NotLogit(trace.steps[op.deps[0]].logit);
        break;
    }
    trace.steps.push_back(std::move(step));
  }

  const SoftStep& last = trace.steps[program.TerminalStep()];
  if (last.kind == SoftStep::Kind::kBoolean) {
    trace.answer = std::string(last.logit > 0.0 ? "yes" : "no");
  } else {
    trace.answer = last.distribution.answer();
  }
  trace.attention.assign(k, 0.0);
  for (int s : GroundingSteps(program)) {
    const Selection& chosen = trace.steps[s].selection;
    for (size_t i = 0; i < chosen.indices.size(); ++i) {
      double& slot = trace.attention[chosen.indices[i]];
      slot = std::max(slot, internal::SigmoidValue(chosen.scores[i]));
    }
  }
  return trace;
}

}  // namespace sgr
