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

#include "sgr/program.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "serialization.h"
#include "sgr/error.h"

namespace sgr {
namespace {

using internal::Json;

bool TakesConceptMember(ConceptKind kind) {
  return kind == ConceptKind::kObject || kind == ConceptKind::kAttribute ||
         kind == ConceptKind::kPosition;
}

std::string Trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Hand-written scanner over the step grammar.
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Program Parse() {
    Program program;
    SkipSpaceAndSemicolons();
    if (AtEnd()) Fail("empty program");
    while (!AtEnd()) {
      program.steps.push_back(ParseStep(program.size()));
      SkipSpaceAndSemicolons();
    }
    return program;
  }

 private:
  Operation ParseStep(int expected_index) {
    const size_t index_pos = pos_;
    const int index = ParseInt();
    if (index != expected_index) {
      pos_ = index_pos;
      Fail("step index " + std::to_string(index) + " out of order, expected " +
           std::to_string(expected_index));
    }
    SkipSpace();
    Expect(':');
    SkipSpace();
    const size_t name_pos = pos_;
    std::string name;
    while (!AtEnd() && (std::isalnum(static_cast<unsigned char>(Peek())) ||
                        Peek() == '_')) {
      name.push_back(text_[pos_++]);
    }
    Operation op;
    std::string role;
    if (name == "relate_subject" || name == "relate_object") {
      op.op = Operator::kRelate;
      role = name.substr(7);
    } else if (auto parsed = ParseOperatorName(name);
               parsed && *parsed != Operator::kRelate) {
      op.op = *parsed;
    } else {
      pos_ = name_pos;
      Fail("unknown operator '" + name + "'");
    }
    SkipSpace();
    Expect('(');
    std::vector<std::string> args;
    const size_t args_begin = pos_;
    while (!AtEnd() && Peek() != ')') {
      const char c = Peek();
      if (c == '(' || c == '[' || c == ']' || c == ';') Fail("unexpected character");
      ++pos_;
    }
    if (AtEnd()) Fail("missing ')'");
    std::string_view raw = text_.substr(args_begin, pos_ - args_begin);
    ++pos_;
    if (!Trim(raw).empty()) {
      size_t start = 0;
      while (true) {
        const size_t comma = raw.find(',', start);
        std::string arg = Trim(raw.substr(start, comma == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : comma - start));
        if (arg.empty()) {
          pos_ = args_begin + start;
          Fail("empty argument");
        }
        args.push_back(std::move(arg));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
    }
    if (op.op == Operator::kRelate) {
      if (args.size() != 1) Fail("relate takes exactly one predicate argument");
      op.concept_name = role;
      op.category = args[0];
    } else {
      if (args.size() > 2) Fail("at most two arguments allowed");
      if (!args.empty()) op.concept_name = args[0];
      if (args.size() == 2) op.category = args[1];
      if (op.category.find('|') != std::string::npos) {
        auto [a, b] = op.ChoiceCategories();
        op.category = a + "|" + b;
      }
    }
    SkipSpace();
    if (!AtEnd() && Peek() == '[') {
      ++pos_;
      SkipSpace();
      while (true) {
        op.deps.push_back(ParseInt());
        SkipSpace();
        if (!AtEnd() && Peek() == ',') {
          ++pos_;
          SkipSpace();
          continue;
        }
        Expect(']');
        break;
      }
    }
    SkipSpace();
    if (!AtEnd() && Peek() != ';' && Peek() != '\n') {
      if (!std::isdigit(static_cast<unsigned char>(Peek()))) {
        Fail("expected ';' or end of step");
      }
    }
    return op;
  }

  int ParseInt() {
    const size_t start = pos_;
    long value = 0;
    while (!AtEnd() && std::isdigit(static_cast<unsigned char>(Peek()))) {
      value = value * 10 + (text_[pos_++] - '0');
      if (value > 1'000'000) Fail("index too large");
    }
    if (pos_ == start) Fail("expected an index");
    return static_cast<int>(value);
  }

  void Expect(char c) {
    if (AtEnd() || Peek() != c) Fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void SkipSpace() {
    while (!AtEnd() && (Peek() == ' ' || Peek() == '\t' || Peek() == '\r')) ++pos_;
  }

  void SkipSpaceAndSemicolons() {
    while (!AtEnd() && (std::isspace(static_cast<unsigned char>(Peek())) ||
                        Peek() == ';')) {
      ++pos_;
    }
  }

  [[noreturn]] void Fail(const std::string& msg) const {
    throw Error(ErrorCode::kParse,
                "program syntax error at offset " + std::to_string(pos_) + ": " + msg);
  }

  bool AtEnd() const { return pos_ >= text_.size(); }
  char Peek() const { return text_[pos_]; }

  std::string_view text_;
  size_t pos_ = 0;
};

[[noreturn]] void ThrowViolations(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << "invalid program:";
  for (const Violation& v : violations) {
    os << " [";
    if (v.step >= 0) os << "step " << v.step << ": ";
    os << v.message << "]";
  }
  throw Error(ErrorCode::kValidation, os.str());
}

}  // namespace

std::string_view OperatorName(Operator op) {
  switch (op) {
    case Operator::kFilter:
      return "filter";
    case Operator::kQuery:
      return "query";
    case Operator::kExist:
      return "exist";
    case Operator::kVerify:
      return "verify";
    case Operator::kCommon:
      return "common";
    case Operator::kRelate:
      return "relate";
    case Operator::kChoose:
      return "choose";
    case Operator::kAnd:
      return "and";
    case Operator::kOr:
      return "or";
    case Operator::kNot:
      return "not";
  }
  return "filter";
}

std::optional<Operator> ParseOperatorName(std::string_view name) {
  for (Operator op : kAllOperators) {
    if (OperatorName(op) == name) return op;
  }
  return std::nullopt;
}

bool IsPointing(Operator op) {
  return op == Operator::kFilter || op == Operator::kRelate;
}

bool IsBoolean(Operator op) {
  return op == Operator::kExist || op == Operator::kVerify ||
         op == Operator::kAnd || op == Operator::kOr || op == Operator::kNot;
}

std::pair<std::string, std::string> Operation::ChoiceCategories() const {
  const size_t bar = category.find('|');
  if (bar == std::string::npos) return {category, ""};
  return {Trim(std::string_view(category).substr(0, bar)),
          Trim(std::string_view(category).substr(bar + 1))};
}

int Program::TerminalStep() const {
  std::vector<bool> used(steps.size(), false);
  for (const Operation& op : steps) {
    for (int d : op.deps) {
      if (d >= 0 && d < size()) used[d] = true;
    }
  }
  int terminal = -1;
  for (int i = 0; i < size(); ++i) {
    if (used[i]) continue;
    if (terminal != -1) return -1;
    terminal = i;
  }
  return terminal;
}

std::vector<std::string> CheckOperation(const Operation& op,
                                        const Vocabulary& vocab) {
  std::vector<std::string> problems;
  const std::string name(OperatorName(op.op));
  auto no_concept = [&] {
    if (!op.concept_name.empty()) problems.push_back(name + " takes no concept");
  };
  auto no_category = [&] {
    if (!op.category.empty()) problems.push_back(name + " takes no category");
  };
  // Looks up a concept and checks that its kind is accepted.
  auto concept_of = [&](auto accept) -> const Concept* {
    if (op.concept_name.empty()) {
      problems.push_back(name + " requires a concept");
      return nullptr;
    }
    const Concept* c = vocab.FindConcept(op.concept_name);
    if (c == nullptr) {
      problems.push_back("unknown concept '" + op.concept_name + "'");
      return nullptr;
    }
    if (!accept(c->kind)) {
      problems.push_back("concept '" + op.concept_name + "' of kind " +
                         std::string(ConceptKindName(c->kind)) +
                         " is not valid for " + name);
      return nullptr;
    }
    return c;
  };
  auto member = [&](const Concept& c, const std::string& cat) {
    if (!vocab.MemberId(c, cat)) {
      problems.push_back("category '" + cat + "' is not in concept '" + c.name +
                         "'");
    }
  };

  switch (op.op) {
    case Operator::kFilter:
    case Operator::kVerify: {
      const Concept* c = concept_of(TakesConceptMember);
      if (op.category.empty()) {
        problems.push_back(name + " requires a category");
      } else if (op.category == kNoneCategory) {
        if (op.op == Operator::kVerify) {
          problems.push_back("verify needs a concrete category");
        }
      } else if (c != nullptr) {
        member(*c, op.category);
      }
      break;
    }
    case Operator::kQuery: {
      concept_of([](ConceptKind k) {
        return k == ConceptKind::kObject || k == ConceptKind::kAttribute;
      });
      no_category();
      break;
    }
    case Operator::kChoose: {
      const Concept* c = concept_of(TakesConceptMember);
      auto [a, b] = op.ChoiceCategories();
      if (a.empty() || b.empty()) {
        problems.push_back("choose needs two candidates 'a|b'");
      } else if (a == b) {
        problems.push_back("choose candidates must differ");
      } else if (c != nullptr) {
        member(*c, a);
        member(*c, b);
      }
      break;
    }
    case Operator::kCommon: {
      if (op.concept_name.empty()) {
        if (vocab.num_attributes() <= 1) {
          problems.push_back("common needs attribute categories");
        }
      } else {
        concept_of([](ConceptKind k) { return k == ConceptKind::kAttribute; });
      }
      no_category();
      break;
    }
    case Operator::kRelate: {
      if (op.concept_name != kSubjectRole && op.concept_name != kObjectRole) {
        problems.push_back("relate role must be subject or object");
      }
      auto pid = vocab.PredicateId(op.category);
      if (!pid || *pid == 0) {
        problems.push_back("unknown predicate '" + op.category + "'");
      }
      break;
    }
    case Operator::kExist:
    case Operator::kAnd:
    case Operator::kOr:
    case Operator::kNot:
      no_concept();
      no_category();
      break;
  }
  return problems;
}

std::vector<Violation> ValidateProgram(const Program& program,
                                       const Vocabulary& vocab) {
  std::vector<Violation> out;
  if (program.steps.empty()) {
    out.push_back({-1, "program has no steps"});
    return out;
  }
  for (int i = 0; i < program.size(); ++i) {
    const Operation& op = program.steps[i];
    for (auto& msg : CheckOperation(op, vocab)) out.push_back({i, std::move(msg)});

    const int n = static_cast<int>(op.deps.size());
    bool arity_ok = true;
    switch (op.op) {
      case Operator::kFilter:
        arity_ok = n <= 1;
        break;
      case Operator::kQuery:
      case Operator::kExist:
      case Operator::kVerify:
      case Operator::kNot:
      case Operator::kChoose:
        arity_ok = n == 1;
        break;
      case Operator::kRelate:
      case Operator::kAnd:
      case Operator::kOr:
      case Operator::kCommon:
        arity_ok = n == 2;
        break;
    }
    if (!arity_ok) {
      out.push_back({i, std::string(OperatorName(op.op)) + " has wrong arity " +
                            std::to_string(n)});
    }
    for (int d : op.deps) {
      if (d < 0 || d >= i) {
        out.push_back({i, "dependency " + std::to_string(d) +
                              " does not point to an earlier step"});
        continue;
      }
      const Operator dep_op = program.steps[d].op;
      const bool wants_boolean = op.op == Operator::kAnd ||
                                 op.op == Operator::kOr || op.op == Operator::kNot;
      if (wants_boolean && !IsBoolean(dep_op)) {
        out.push_back({i, "dependency " + std::to_string(d) +
                              " must produce a boolean"});
      } else if (!wants_boolean && !IsPointing(dep_op)) {
        out.push_back({i, "dependency " + std::to_string(d) +
                              " must produce an object set"});
      }
    }
  }
  const int terminal = program.TerminalStep();
  if (terminal < 0) {
    out.push_back({-1, "program must have exactly one terminal step"});
  } else if (IsPointing(program.steps[terminal].op)) {
    out.push_back({terminal, "terminal step cannot be a pointing operation"});
  }
  return out;
}

std::string OperationToString(const Operation& op) {
  std::string s;
  if (op.op == Operator::kRelate) {
    s = "relate_" + op.concept_name + "(" + op.category + ")";
  } else {
    s = std::string(OperatorName(op.op)) + "(" + op.concept_name;
    if (!op.category.empty()) s += ", " + op.category;
    s += ")";
  }
  if (!op.deps.empty()) {
    s += "[";
    for (size_t i = 0; i < op.deps.size(); ++i) {
      if (i > 0) s += ",";
      s += std::to_string(op.deps[i]);
    }
    s += "]";
  }
  return s;
}

std::string SerializeProgram(const Program& program) {
  std::string s;
  for (int i = 0; i < program.size(); ++i) {
    if (i > 0) s += "; ";
    s += std::to_string(i) + ": " + OperationToString(program.steps[i]);
  }
  return s;
}

Program ParseProgramSyntax(std::string_view text) { return Parser(text).Parse(); }

Program ParseProgram(std::string_view text, const Vocabulary& vocab) {
  Program program = Parser(text).Parse();
  if (auto v = ValidateProgram(program, vocab); !v.empty()) ThrowViolations(v);
  return program;
}

namespace internal {

Json ProgramToJsonValue(const Program& program) {
  Json steps = Json::array();
  for (const Operation& op : program.steps) {
    Json s;
    s["op"] = OperatorName(op.op);
    s["concept"] = op.concept_name.empty() ? Json() : Json(op.concept_name);
    s["category"] = op.category.empty() ? Json() : Json(op.category);
    s["deps"] = op.deps;
    steps.push_back(std::move(s));
  }
  Json j;
  j["steps"] = std::move(steps);
  j["question"] = program.question ? Json(*program.question) : Json();
  j["answer"] = program.answer ? Json(*program.answer) : Json();
  return j;
}

Program ProgramFromJsonValue(const Json& j, const Vocabulary& vocab) {
  constexpr std::string_view kWhat = "program";
  Program program;
  for (const Json& s : Get<Json>(j, "steps", kWhat)) {
    Operation op;
    const auto name = Get<std::string>(s, "op", kWhat);
    auto parsed = ParseOperatorName(name);
    if (!parsed) throw Error(ErrorCode::kParse, "unknown operator '" + name + "'");
    op.op = *parsed;
    if (s.contains("concept") && !s.at("concept").is_null()) {
      op.concept_name = Get<std::string>(s, "concept", kWhat);
    }
    if (s.contains("category") && !s.at("category").is_null()) {
      op.category = Get<std::string>(s, "category", kWhat);
    }
    if (s.contains("deps")) op.deps = Get<std::vector<int>>(s, "deps", kWhat);
    program.steps.push_back(std::move(op));
  }
  if (j.contains("question") && !j.at("question").is_null()) {
    program.question = Get<std::string>(j, "question", kWhat);
  }
  if (j.contains("answer") && !j.at("answer").is_null()) {
    program.answer = Get<std::string>(j, "answer", kWhat);
  }
  if (auto v = ValidateProgram(program, vocab); !v.empty()) ThrowViolations(v);
  return program;
}

}  // namespace internal

std::string ProgramToJson(const Program& program) {
  return internal::ProgramToJsonValue(program).dump();
}

Program ProgramFromJson(std::string_view text, const Vocabulary& vocab) {
  return internal::ProgramFromJsonValue(internal::ParseJson(text, "program"),
                                        vocab);
}

std::vector<int> GroundingSteps(const Program& program) {
  const int terminal = program.TerminalStep();
  if (terminal < 0) return {};
  std::vector<bool> seen(program.steps.size(), false);
  std::vector<int> stack = {terminal};
  std::vector<int> out;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    if (seen[i]) continue;
    seen[i] = true;
    if (IsPointing(program.steps[i].op)) {
      out.push_back(i);
      continue;
    }
    for (int d : program.steps[i].deps) stack.push_back(d);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Operation> EnumerateOperationSpace(const Vocabulary& vocab) {
  std::vector<Operation> ops;
  auto add = [&](Operator op, std::string concept_name, std::string category) {
    ops.push_back({op, std::move(concept_name), std::move(category), {}});
  };
  for (Operator op : kAllOperators) {
    switch (op) {
      case Operator::kFilter:
      case Operator::kVerify:
        for (const Concept& c : vocab.concepts()) {
          if (!TakesConceptMember(c.kind)) continue;
          if (op == Operator::kFilter) add(op, c.name, std::string(kNoneCategory));
          for (int id : c.members) add(op, c.name, std::string(vocab.MemberName(c, id)));
        }
        break;
      case Operator::kQuery:
        for (const Concept& c : vocab.concepts()) {
          if (c.kind == ConceptKind::kObject || c.kind == ConceptKind::kAttribute) {
            add(op, c.name, "");
          }
        }
        break;
      case Operator::kChoose:
        for (const Concept& c : vocab.concepts()) {
          if (!TakesConceptMember(c.kind)) continue;
          for (size_t a = 0; a < c.members.size(); ++a) {
            for (size_t b = a + 1; b < c.members.size(); ++b) {
              add(op, c.name,
                  std::string(vocab.MemberName(c, c.members[a])) + "|" +
                      std::string(vocab.MemberName(c, c.members[b])));
            }
          }
        }
        break;
      case Operator::kCommon:
        if (vocab.num_attributes() > 1) add(op, "", "");
        for (const Concept& c : vocab.concepts()) {
          if (c.kind == ConceptKind::kAttribute) add(op, c.name, "");
        }
        break;
      case Operator::kRelate:
        for (std::string_view role : {kSubjectRole, kObjectRole}) {
          for (int p = 1; p < vocab.num_predicates(); ++p) {
            add(op, std::string(role), vocab.predicate_names()[p]);
          }
        }
        break;
      case Operator::kExist:
      case Operator::kAnd:
      case Operator::kOr:
      case Operator::kNot:
        add(op, "", "");
        break;
    }
  }
  return ops;
}

}  // namespace sgr
