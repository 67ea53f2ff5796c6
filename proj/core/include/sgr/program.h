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

// The reasoning-program DSL.
//
// A program is a topologically ordered list of operations. Each operation
// has an operator, an optional concept (super-category), an optional
// category and the indices of the earlier steps it consumes. Text form:
//
//   0: filter(object, streetlight); 1: filter(object, man);
//   2: relate_subject(above)[0,1]; 3: query(color)[2]
//
// relate is written relate_subject / relate_object; the role is stored as
// the operation's concept. choose takes two candidates: choose(color, red|blue).

#ifndef SGR_PROGRAM_H_
#define SGR_PROGRAM_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sgr/vocabulary.h"

namespace sgr {

enum class Operator {
  kFilter,
  kQuery,
  kExist,
  kVerify,
  kCommon,
  kRelate,
  kChoose,
  kAnd,
  kOr,
  kNot,
};

inline constexpr std::array<Operator, 10> kAllOperators = {
    Operator::kFilter, Operator::kQuery,  Operator::kExist, Operator::kVerify,
    Operator::kCommon, Operator::kRelate, Operator::kChoose, Operator::kAnd,
    Operator::kOr,     Operator::kNot};

inline constexpr std::string_view kNoneCategory = "none";
inline constexpr std::string_view kSubjectRole = "subject";
inline constexpr std::string_view kObjectRole = "object";

std::string_view OperatorName(Operator op);
std::optional<Operator> ParseOperatorName(std::string_view name);

// filter and relate: inputs and outputs are object index sets.
bool IsPointing(Operator op);
// exist, verify, and, or, not: outputs a yes/no decision.
bool IsBoolean(Operator op);

struct Operation {
  Operator op = Operator::kFilter;
  // Empty when the operator takes no concept.
  std::string concept_name;
  // Empty when absent, "none" for an unspecified category, "a|b" for choose.
  std::string category;
  std::vector<int> deps;

  // The two candidates of a choose operation.
  std::pair<std::string, std::string> ChoiceCategories() const;

  friend bool operator==(const Operation&, const Operation&) = default;
};

struct Program {
  std::vector<Operation> steps;
  std::optional<std::string> question;
  std::optional<std::string> answer;

  int size() const { return static_cast<int>(steps.size()); }
  // Index of the unique step nothing depends on; -1 if there is none or
  // several.
  int TerminalStep() const;

  friend bool operator==(const Program&, const Program&) = default;
};

struct Violation {
  int step = -1;  // -1 for program-level problems
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Concept/category legality of a single operation, ignoring deps.
std::vector<std::string> CheckOperation(const Operation& op,
                                        const Vocabulary& vocab);

// Every operation and program invariant; empty means valid.
std::vector<Violation> ValidateProgram(const Program& program,
                                       const Vocabulary& vocab);

// Throws Error(kParse) with a character offset on syntax errors and
// Error(kValidation) listing every violation otherwise.
Program ParseProgram(std::string_view text, const Vocabulary& vocab);

// Syntax only: no vocabulary or program-level checks.
Program ParseProgramSyntax(std::string_view text);

// Canonical text form; ParseProgram is its inverse.
std::string SerializeProgram(const Program& program);

std::string OperationToString(const Operation& op);

// JSON object form used in dataset files.
std::string ProgramToJson(const Program& program);
Program ProgramFromJson(std::string_view text, const Vocabulary& vocab);

// Pointing steps whose object sets ground the answer: walks back from the
// terminal step through non-pointing steps. Sorted ascending.
std::vector<int> GroundingSteps(const Program& program);

// Every legal (operator, concept, category) triple for `vocab`, deps left
// empty. choose pairs are listed once, in concept member order.
std::vector<Operation> EnumerateOperationSpace(const Vocabulary& vocab);

}  // namespace sgr

#endif  // SGR_PROGRAM_H_
