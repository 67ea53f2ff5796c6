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

#include <filesystem>

#include <gtest/gtest.h>

#include "sgr/datagen.h"
#include "sgr/error.h"
#include "sgr/io.h"
#include "sgr/vocabulary.h"
#include "test_util.h"

namespace sgr {
namespace {

using K = ConceptKind;

TEST(Vocabulary, LooksUpIdsAndMembers) {
  const Vocabulary v = testing::StreetVocabulary();
  EXPECT_EQ(v.num_objects(), 7);
  EXPECT_EQ(v.ObjectId("streetlight"), 2);
  EXPECT_EQ(v.AttributeId("red"), 1);
  EXPECT_EQ(v.PredicateId("above"), 1);
  EXPECT_FALSE(v.ObjectId("unicorn"));
  const Concept* color = v.FindConcept("color");
  ASSERT_NE(color, nullptr);
  EXPECT_EQ(color->kind, K::kAttribute);
  EXPECT_EQ(v.MemberId(*color, "blue"), 2);
  EXPECT_FALSE(v.MemberId(*color, "tall"));
  EXPECT_EQ(v.MemberName(*color, 3), "white");
  const Concept* pos = v.FindConcept("vposition");
  ASSERT_NE(pos, nullptr);
  EXPECT_EQ(v.MemberName(*pos, *v.MemberId(*pos, "top")), "top");
  EXPECT_EQ(v.FindConcept("nope"), nullptr);
}

TEST(Vocabulary, RejectsMalformedTables) {
  const std::string bg(kBackground);
  EXPECT_THROW(Vocabulary::Create({"cat"}, {bg}, {bg}, {}), Error);
  EXPECT_THROW(Vocabulary::Create({bg, "cat", "cat"}, {bg}, {bg}, {}), Error);
  EXPECT_THROW(Vocabulary::Create({}, {bg}, {bg}, {}), Error);
  EXPECT_THROW(Vocabulary::Create({bg, "cat"}, {bg}, {bg}, {{"animal", {K::kObject, {"dog"}}}}),
               Error);
  EXPECT_THROW(Vocabulary::Create({bg, "cat"}, {bg}, {bg}, {{"animal", {K::kObject, {bg}}}}),
               Error);
  EXPECT_THROW(
      Vocabulary::Create({bg, "cat"}, {bg}, {bg}, {{"animal", {K::kObject, {"cat", "cat"}}}}),
      Error);
  EXPECT_THROW(Vocabulary::Create({bg, "cat"}, {bg}, {bg}, {{"pos", {K::kPosition, {"north"}}}}),
               Error);
  EXPECT_NO_THROW(Vocabulary::Create({bg}, {bg}, {bg}, {}));
}

TEST(Vocabulary, JsonRoundTrip) {
  for (const Vocabulary& v : {testing::StreetVocabulary(), MiniVocabulary()}) {
    EXPECT_EQ(ParseVocabularyJson(VocabularyToJson(v)), v);
  }
}

TEST(Vocabulary, ParsesFileFormat) {
  const std::string text = R"({
    "objects": ["__background__", "cat", "dog"],
    "attributes": ["__background__", "black"],
    "predicates": ["__background__", "near"],
    "concepts": {"animal": {"kind": "object", "members": ["dog", "cat"]},
                 "hposition": {"kind": "position", "members": ["left", "right"]}}})";
  const Vocabulary v = ParseVocabularyJson(text);
  EXPECT_EQ(v.num_objects(), 3);
  ASSERT_NE(v.FindConcept("animal"), nullptr);
  EXPECT_EQ(v.FindConcept("animal")->members, (std::vector<int>{2, 1}));
  const auto path = std::filesystem::temp_directory_path() / "sgr_vocab_test.json";
  WriteFileAtomic(path, text);
  EXPECT_EQ(LoadVocabulary(path), v);
  std::filesystem::remove(path);
}

TEST(Vocabulary, ParseErrorsAreTyped) {
  try {
    ParseVocabularyJson("{");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
  try {
    ParseVocabularyJson(R"({"objects": ["__background__"], "attributes": ["__background__"],
                            "predicates": ["__background__"],
                            "concepts": {"x": {"kind": "shape", "members": []}}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
  EXPECT_THROW(LoadVocabulary("/nonexistent/vocab.json"), Error);
}

TEST(MiniVocabulary, Shape) {
  const Vocabulary v = MiniVocabulary();
  EXPECT_EQ(v.num_objects(), 21);
  EXPECT_EQ(v.num_predicates(), 9);
  int attribute_concepts = 0;
  for (const Concept& c : v.concepts()) {
    if (c.kind == K::kAttribute) {
      ++attribute_concepts;
      EXPECT_EQ(c.members.size(), 5u);
    }
  }
  EXPECT_EQ(attribute_concepts, 3);
}

}  // namespace
}  // namespace sgr
