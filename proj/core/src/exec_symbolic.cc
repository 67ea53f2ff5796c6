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

#include "sgr/exec_symbolic.h"

#include <algorithm>

#include "sgr/box.h"
#include "sgr/error.h"

namespace sgr {
namespace {

[[noreturn]] void Unanswerable(int step, const std::string& why) {
  throw Error(ErrorCode::kUnanswerable,
              "step " + std::to_string(step) + ": " + why);
}

// Whether `obj` satisfies (concept, category); category "none" accepts any
// member of the concept.
bool Satisfies(const SceneObject& obj, const Concept& cpt,
               std::string_view category, const Vocabulary& vocab) {
  auto holds = [&](int member) {
    switch (cpt.kind) {
      case ConceptKind::kObject:
        return obj.category == member;
      case ConceptKind::kAttribute:
        return obj.HasAttribute(member);
      case ConceptKind::kPosition:
        return PositionPredicate(obj.box, kPositionCategories[member]);
      case ConceptKind::kRelation:
        return false;
    }
    return false;
  };
  if (category == kNoneCategory) {
    return std::any_of(cpt.members.begin(), cpt.members.end(), holds);
  }
  auto id = vocab.MemberId(cpt, category);
  return id && holds(*id);
}

const Concept& ConceptOf(const Operation& op, const Vocabulary& vocab) {
  const Concept* c = vocab.FindConcept(op.concept_name);
  if (c == nullptr) {
    throw Error(ErrorCode::kValidation, "unknown concept '" + op.concept_name + "'");
  }
  return *c;
}

}  // namespace

ExecutionTrace ExecuteSymbolic(const Program& program,
                               const SymbolicSceneGraph& graph,
                               const Vocabulary& vocab) {
  if (auto v = ValidateProgram(program, vocab); !v.empty()) {
    throw Error(ErrorCode::kValidation, "invalid program: " + v.front().message);
  }
  ExecutionTrace trace;
  trace.steps.reserve(program.steps.size());
  auto objects_of = [&](int dep) -> const std::vector<int>& {
    return trace.steps.at(dep).objects;
  };
  auto boolean_of = [&](int dep) { return trace.steps.at(dep).boolean; };
  auto objects_value = [](std::vector<int> objs) {
    StepValue v;
    v.kind = StepValue::Kind::kObjects;
    v.objects = std::move(objs);
    return v;
  };
  auto boolean_value = [](bool b) {
    StepValue v;
    v.kind = StepValue::Kind::kBoolean;
    v.boolean = b;
    return v;
  };
  auto answer_value = [](std::string a) {
    StepValue v;
    v.kind = StepValue::Kind::kAnswer;
    v.answer = std::move(a);
    return v;
  };

  for (int i = 0; i < program.size(); ++i) {
    const Operation& op = program.steps[i];
    switch (op.op) {
      case Operator::kFilter: {
        std::vector<int> input;
        if (op.deps.empty()) {
          for (int k = 0; k < graph.size(); ++k) input.push_back(k);
        } else {
          input = objects_of(op.deps[0]);
        }
        const Concept& c = ConceptOf(op, vocab);
        std::vector<int> out;
        for (int k : input) {
          if (Satisfies(graph.objects[k], c, op.category, vocab)) out.push_back(k);
        }
        trace.steps.push_back(objects_value(std::move(out)));
        break;
      }
      case Operator::kRelate: {
        const auto& subjects = objects_of(op.deps[0]);
        const auto& objects = objects_of(op.deps[1]);
        const int pred = vocab.PredicateId(op.category).value_or(-1);
        const bool keep_subject = op.concept_name == kSubjectRole;
        const auto& pool = keep_subject ? subjects : objects;
        const auto& other = keep_subject ? objects : subjects;
        std::vector<int> out;
        for (int p : pool) {
          const bool related = std::any_of(other.begin(), other.end(), [&](int o) {
            return keep_subject ? graph.HasRelation(p, pred, o)
                                : graph.HasRelation(o, pred, p);
          });
          if (related) out.push_back(p);
        }
        trace.steps.push_back(objects_value(std::move(out)));
        break;
      }
      case Operator::kExist:
        trace.steps.push_back(boolean_value(!objects_of(op.deps[0]).empty()));
        break;
      case Operator::kVerify: {
        const Concept& c = ConceptOf(op, vocab);
        const auto& in = objects_of(op.deps[0]);
        const bool any = std::any_of(in.begin(), in.end(), [&](int k) {
          return Satisfies(graph.objects[k], c, op.category, vocab);
        });
        trace.steps.push_back(boolean_value(any));
        break;
      }
      case Operator::kQuery: {
        const auto& in = objects_of(op.deps[0]);
        if (in.empty()) Unanswerable(i, "query on an empty set");
        const SceneObject& obj = graph.objects[in.front()];
        const Concept& c = ConceptOf(op, vocab);
        if (c.kind == ConceptKind::kObject) {
          if (!c.Contains(obj.category)) {
            Unanswerable(i, "object category outside concept '" + c.name + "'");
          }
          trace.steps.push_back(answer_value(vocab.object_names()[obj.category]));
        } else {
          int best = -1;
          for (int a : obj.attributes) {
            if (c.Contains(a)) {
              best = a;
              break;
            }
          }
          if (best < 0) Unanswerable(i, "object has no '" + c.name + "' attribute");
          trace.steps.push_back(answer_value(vocab.attribute_names()[best]));
        }
        break;
      }
      case Operator::kChoose: {
        const auto& in = objects_of(op.deps[0]);
        if (in.empty()) Unanswerable(i, "choose on an empty set");
        const Concept& c = ConceptOf(op, vocab);
        auto [first, second] = op.ChoiceCategories();
        auto any_of = [&](const std::string& cat) {
          return std::any_of(in.begin(), in.end(), [&](int k) {
            return Satisfies(graph.objects[k], c, cat, vocab);
          });
        };
        const bool a = any_of(first);
        const bool b = any_of(second);
        if (a == b) {
          throw Error(ErrorCode::kAmbiguous,
                      "step " + std::to_string(i) + ": choose matches " +
                          (a ? "both" : "neither") + " candidates");
        }
        trace.steps.push_back(answer_value(a ? first : second));
        break;
      }
      case Operator::kCommon: {
        const auto& z1 = objects_of(op.deps[0]);
        const auto& z2 = objects_of(op.deps[1]);
        if (z1.empty() || z2.empty()) Unanswerable(i, "common on an empty set");
        const SceneObject& o1 = graph.objects[z1.front()];
        const SceneObject& o2 = graph.objects[z2.front()];
        const Concept* c =
            op.concept_name.empty() ? nullptr : &ConceptOf(op, vocab);
        int shared = -1;
        for (int a : o1.attributes) {
          if (c != nullptr && !c->Contains(a)) continue;
          if (o2.HasAttribute(a)) {
            shared = a;
            break;
          }
        }
        if (shared < 0) Unanswerable(i, "no shared attribute");
        trace.steps.push_back(answer_value(vocab.attribute_names()[shared]));
        break;
      }
      case Operator::kAnd:
        trace.steps.push_back(
            boolean_value(boolean_of(op.deps[0]) && boolean_of(op.deps[1])));
        break;
      case Operator::kOr:
        trace.steps.push_back(
            boolean_value(boolean_of(op.deps[0]) || boolean_of(op.deps[1])));
        break;
      case Operator::kNot:
        trace.steps.push_back(boolean_value(!boolean_of(op.deps[0])));
        break;
    }
  }

  const int terminal = program.TerminalStep();
  if (terminal < 0) {
    throw Error(ErrorCode::kValidation, "program has no unique terminal step");
  }
  const StepValue& last = trace.steps[terminal];
  if (last.kind == StepValue::Kind::kBoolean) {
    trace.answer = std::string(last.boolean ? kYes : kNo);
  } else if (last.kind == StepValue::Kind::kAnswer) {
    trace.answer = last.answer;
  } else {
    throw Error(ErrorCode::kValidation, "terminal step is a pointing operation");
  }
  for (int s : GroundingSteps(program)) {
    const auto& objs = trace.steps[s].objects;
    trace.grounded.insert(trace.grounded.end(), objs.begin(), objs.end());
  }
  std::sort(trace.grounded.begin(), trace.grounded.end());
  trace.grounded.erase(std::unique(trace.grounded.begin(), trace.grounded.end()),
                       trace.grounded.end());
  return trace;
}

}  // namespace sgr
