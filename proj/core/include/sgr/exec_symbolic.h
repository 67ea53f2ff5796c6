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

#ifndef SGR_EXEC_SYMBOLIC_H_
#define SGR_EXEC_SYMBOLIC_H_

#include <string>
#include <vector>

#include "sgr/program.h"
#include "sgr/scene_graph.h"
#include "sgr/vocabulary.h"

namespace sgr {

struct StepValue {
  enum class Kind { kObjects, kBoolean, kAnswer };

  Kind kind = Kind::kObjects;
  std::vector<int> objects;  // sorted, kObjects only
  bool boolean = false;      // kBoolean only
  std::string answer;        // kAnswer only

  friend bool operator==(const StepValue&, const StepValue&) = default;
};

struct ExecutionTrace {
  std::vector<StepValue> steps;
  // Union of the object sets of GroundingSteps(program).
  std::vector<int> grounded;
  std::string answer;

  friend bool operator==(const ExecutionTrace&, const ExecutionTrace&) = default;
};

inline constexpr std::string_view kYes = "yes";
inline constexpr std::string_view kNo = "no";

// Runs `program` over a ground-truth graph. Throws Error(kUnanswerable) when
// query, choose or common receive an empty set (or nothing to report) and
// Error(kAmbiguous) when choose matches both or neither candidate.
ExecutionTrace ExecuteSymbolic(const Program& program,
                               const SymbolicSceneGraph& graph,
                               const Vocabulary& vocab);

}  // namespace sgr

#endif  // SGR_EXEC_SYMBOLIC_H_
