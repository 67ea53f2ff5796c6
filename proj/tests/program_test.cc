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

#include <algorithm>
#include <random>
#include <map>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "sgr/datagen.h"
#include "sgr/error.h"
#include "sgr/program.h"
#include "test_util.h"

namespace sgr {
namespace {

using K = ConceptKind;

TEST(ParseProgram, StreetlightProgram) {
  const Vocabulary v = testing::StreetVocabulary();
  const Program p = ParseProgram(testing::kStreetProgram, v);
  ASSERT_EQ(p.size(), 4);
  EXPECT_EQ(p.steps[0], (Operation{Operator::kFilter, "object", "streetlight", {}}));
  EXPECT_EQ(p.steps[2], (Operation{Operator::kRelate, "subject", "above", {0, 1}}));
  EXPECT_EQ(p.steps[3], (Operation{Operator::kQuery, "color", "", {2}}));
  EXPECT_EQ(p.TerminalStep(), 3);
  EXPECT_EQ(SerializeProgram(p), testing::kStreetProgram);
}

TEST(ParseProgram, NoneCategoryAndWhitespace) {
  const Vocabulary v = testing::StreetVocabulary();
  const Program one = ParseProgramSyntax("0: filter(object, none)");
  ASSERT_EQ(one.size(), 1);
  EXPECT_EQ(one.steps[0].category, "none");
  EXPECT_TRUE(CheckOperation(one.steps[0], v).empty());
  EXPECT_EQ(SerializeProgram(one), "0: filter(object, none)");
  // A lone filter leaves a pointing terminal, which a full program forbids.
  ASSERT_EQ(ValidateProgram(one, v).size(), 1u);
  EXPECT_THROW(ParseProgram("0: filter(object, none)", v), Error);
  const Program p = ParseProgram("  0 :filter( object ,man ) ;1: exist()[ 0 ] ;", v);
  EXPECT_EQ(SerializeProgram(p), "0: filter(object, man); 1: exist()[0]");
}

TEST(ParseProgram, ChooseAndCommonForms) {
  const Vocabulary v = testing::StreetVocabulary();
  const Program c = ParseProgram("0: filter(object, car); 1: choose(color, red|blue)[0]", v);
  EXPECT_EQ(c.steps[1].ChoiceCategories(), (std::pair<std::string, std::string>{"red", "blue"}));
  const Program m = ParseProgram(
      "0: filter(object, car); 1: filter(object, dog); 2: common()[0,1]", v);
  EXPECT_EQ(m.steps[2].concept_name, "");
  EXPECT_NO_THROW(ParseProgram(
      "0: filter(object, car); 1: filter(object, dog); 2: common(color)[0,1]", v));
}

TEST(ParseProgram, SyntaxErrorsCarryOffsets) {
  const Vocabulary v = testing::StreetVocabulary();
  for (const char* bad : {"0 filter(object, man)", "0: filter(object, man", "0: filter(object, man)[0",
                          "x: exist()", "", "0: frobnicate(object, man)",
                          "1: filter(object, man); 2: exist()[1]"}) {
    try {
      ParseProgram(bad, v);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::kParse || e.code() == ErrorCode::kValidation) << bad;
    }
  }
  try {
    ParseProgram("0: filter(object, man", v);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
}

TEST(ParseProgram, UnknownNamesAreValidationErrors) {
  const Vocabulary v = testing::StreetVocabulary();
  for (const char* bad : {"0: filter(object, unicorn); 1: exist()[0]",
                          "0: filter(shape, round); 1: exist()[0]",
                          "0: filter(object, man); 1: filter(object, car); "
                          "2: relate_subject(kissing)[0,1]; 3: exist()[2]"}) {
    try {
      ParseProgram(bad, v);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kValidation) << bad;
    }
  }
}

TEST(ValidateProgram, ReportsEveryViolation) {
  const Vocabulary v = testing::StreetVocabulary();
  Program p = ParseProgram("0: filter(object, man); 1: query(color)[0]", v);
  EXPECT_TRUE(ValidateProgram(p, v).empty());

  Program two_deps = p;
  two_deps.steps.insert(two_deps.steps.begin() + 1, {Operator::kFilter, "object", "car", {}});
  two_deps.steps[2] = {Operator::kQuery, "color", "", {0, 1}};
  const auto arity = ValidateProgram(two_deps, v);
  ASSERT_EQ(arity.size(), 1u);
  EXPECT_EQ(arity[0].step, 2);
  EXPECT_NE(arity[0].message.find("arity"), std::string::npos);

  Program wrong_concept = ParseProgram(
      "0: filter(object, man); 1: filter(object, car); 2: relate_subject(above)[0,1]; "
      "3: exist()[2]",
      v);
  wrong_concept.steps[2].concept_name = "color";
  const auto mismatch = ValidateProgram(wrong_concept, v);
  ASSERT_FALSE(mismatch.empty());
  EXPECT_EQ(mismatch[0].step, 2);

  Program several;
  several.steps = {{Operator::kQuery, "height", "x", {}}, {Operator::kExist, "color", "", {5}}};
  EXPECT_GE(ValidateProgram(several, v).size(), 4u);
}

TEST(ValidateProgram, TerminalRules) {
  const Vocabulary v = testing::StreetVocabulary();
  Program p;
  p.steps = {{Operator::kFilter, "object", "man", {}}, {Operator::kFilter, "object", "car", {}}};
  EXPECT_FALSE(ValidateProgram(p, v).empty());  // two terminals, pointing
  p.steps.push_back({Operator::kExist, "", "", {0}});
  EXPECT_FALSE(ValidateProgram(p, v).empty());  // step 1 unused
  p.steps[2] = {Operator::kAnd, "", "", {0, 1}};
  EXPECT_FALSE(ValidateProgram(p, v).empty());  // and over object sets
}

TEST(ValidateProgram, ForwardDependencyRejected) {
  const Vocabulary v = testing::StreetVocabulary();
  const Program p = ParseProgram(testing::kStreetProgram, v);
  Program shuffled = p;
  std::swap(shuffled.steps[1], shuffled.steps[2]);
  EXPECT_FALSE(ValidateProgram(shuffled, v).empty());
  Program self = p;
  self.steps[1].deps = {1};
  EXPECT_FALSE(ValidateProgram(self, v).empty());
}

TEST(SerializeProgram, RandomRoundTrip) {
  const Vocabulary v = MiniVocabulary();
  std::mt19937_64 rng(9);
  testing::RandomProgramBuilder builder(v, rng);
  for (int i = 0; i < 1000; ++i) {
    const Program p = builder.Build();
    ASSERT_TRUE(ValidateProgram(p, v).empty()) << SerializeProgram(p);
    const std::string text = SerializeProgram(p);
    const Program back = ParseProgram(text, v);
    EXPECT_EQ(back, p) << text;
    EXPECT_EQ(SerializeProgram(back), text);
    EXPECT_EQ(ProgramFromJson(ProgramToJson(p), v), p);
  }
}

TEST(ProgramJson, KeepsQuestionAndAnswer) {
  const Vocabulary v = testing::StreetVocabulary();
  Program p = ParseProgram(testing::kStreetProgram, v);
  p.question = "what color is the streetlight above the man?";
  p.answer = "red";
  EXPECT_EQ(ProgramFromJson(ProgramToJson(p), v), p);
}

TEST(GroundingSteps, WalksBackThroughNonPointingSteps) {
  const Vocabulary v = testing::StreetVocabulary();
  EXPECT_EQ(GroundingSteps(ParseProgram(testing::kStreetProgram, v)), (std::vector<int>{2}));
  const Program logic = ParseProgram(
      "0: filter(object, man); 1: exist()[0]; 2: filter(object, car); "
      "3: verify(color, red)[2]; 4: and()[1,3]",
      v);
  EXPECT_EQ(GroundingSteps(logic), (std::vector<int>{0, 2}));
}

// Expands the rule table by asking the validator about every candidate.
int BruteForceOperationCount(const Vocabulary& v) {
  std::set<std::string> concepts = {"", "subject", "object"};
  for (const Concept& c : v.concepts()) concepts.insert(c.name);
  std::set<std::string> names = {"", "none"};
  for (const auto* list : {&v.object_names(), &v.attribute_names(), &v.predicate_names()}) {
    names.insert(list->begin() + 1, list->end());
  }
  for (auto pos : kPositionCategories) names.insert(std::string(pos));
  std::set<std::string> categories = names;
  for (const auto& a : names) {
    for (const auto& b : names) {
      if (!a.empty() && !b.empty()) categories.insert(a + "|" + b);
    }
  }
  int count = 0;
  std::set<std::tuple<Operator, std::string, std::string>> choose_pairs;
  for (Operator op : kAllOperators) {
    for (const auto& c : concepts) {
      for (const auto& cat : categories) {
        if (!CheckOperation({op, c, cat, {}}, v).empty()) continue;
        if (op == Operator::kChoose) {
          // a|b and b|a describe one choice.
          const auto bar = cat.find('|');
          std::string a = cat.substr(0, bar), b = cat.substr(bar + 1);
          if (a > b) std::swap(a, b);
          if (!choose_pairs.insert({op, c, a + "|" + b}).second) continue;
        }
        ++count;
      }
    }
  }
  return count;
}

TEST(EnumerateOperationSpace, TinyVocabularyMatchesBruteForce) {
  const std::string bg(kBackground);
  const Vocabulary v = Vocabulary::Create({bg, "cat", "dog"}, {bg}, {bg},
                                          {{"animal", {K::kObject, {"cat", "dog"}}}});
  const auto ops = EnumerateOperationSpace(v);
  // filter 3, verify 2, query 1, choose 1, exist/and/or/not 4.
  EXPECT_EQ(ops.size(), 11u);
  EXPECT_EQ(static_cast<int>(ops.size()), BruteForceOperationCount(v));
  for (const auto& op : ops) EXPECT_TRUE(CheckOperation(op, v).empty()) << OperationToString(op);
}

TEST(EnumerateOperationSpace, EmptyConceptTableLeavesConceptFreeOperators) {
  const std::string bg(kBackground);
  const Vocabulary v = Vocabulary::Create({bg, "cat"}, {bg}, {bg}, {});
  std::set<Operator> ops;
  for (const auto& op : EnumerateOperationSpace(v)) ops.insert(op.op);
  EXPECT_EQ(ops, (std::set<Operator>{Operator::kExist, Operator::kAnd, Operator::kOr,
                                     Operator::kNot}));
}

TEST(EnumerateOperationSpace, LargerVocabulariesMatchBruteForce) {
  for (const Vocabulary& v : {testing::StreetVocabulary(), MiniVocabulary()}) {
    const auto ops = EnumerateOperationSpace(v);
    EXPECT_EQ(static_cast<int>(ops.size()), BruteForceOperationCount(v));
    std::set<std::string> unique;
    for (const auto& op : ops) unique.insert(OperationToString(op));
    EXPECT_EQ(unique.size(), ops.size());
  }
}

}  // namespace
}  // namespace sgr
