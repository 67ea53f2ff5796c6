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

#ifndef SGR_VOCABULARY_H_
#define SGR_VOCABULARY_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sgr {

inline constexpr std::string_view kBackground = "__background__";

enum class ConceptKind { kObject, kAttribute, kPosition, kRelation };

std::string_view ConceptKindName(ConceptKind kind);
std::optional<ConceptKind> ParseConceptKind(std::string_view name);

// A super-category grouping categories of one kind. Member ids index the
// matching vocabulary list (objects, attributes or predicates); for position
// concepts they index kPositionCategories.
struct Concept {
  std::string name;
  ConceptKind kind = ConceptKind::kObject;
  std::vector<int> members;

  bool Contains(int id) const;
};

// Category names for objects, attributes and predicates plus the concept
// table. Index 0 of every list is the background class.
class Vocabulary {
 public:
  struct ConceptSpec {
    ConceptKind kind;
    std::vector<std::string> members;
  };

  Vocabulary() = default;

  // Validates and builds. Throws Error(kValidation) on duplicate names,
  // a missing background entry, or concept members that do not resolve.
  static Vocabulary Create(std::vector<std::string> objects,
                           std::vector<std::string> attributes,
                           std::vector<std::string> predicates,
                           const std::map<std::string, ConceptSpec>& concepts);

  const std::vector<std::string>& object_names() const { return objects_; }
  const std::vector<std::string>& attribute_names() const {
    return attributes_;
  }
  const std::vector<std::string>& predicate_names() const {
    return predicates_;
  }
  // Sorted by name.
  const std::vector<Concept>& concepts() const { return concepts_; }

  int num_objects() const { return static_cast<int>(objects_.size()); }
  int num_attributes() const { return static_cast<int>(attributes_.size()); }
  int num_predicates() const { return static_cast<int>(predicates_.size()); }

  std::optional<int> ObjectId(std::string_view name) const;
  std::optional<int> AttributeId(std::string_view name) const;
  std::optional<int> PredicateId(std::string_view name) const;
  const Concept* FindConcept(std::string_view name) const;

  // Name of a member id of `cpt` in the list that kind refers to.
  std::string_view MemberName(const Concept& cpt, int id) const;
  // Member id for `name` if it belongs to `cpt`.
  std::optional<int> MemberId(const Concept& cpt,
                              std::string_view name) const;

  friend bool operator==(const Vocabulary&, const Vocabulary&);

 private:
  std::vector<std::string> objects_;
  std::vector<std::string> attributes_;
  std::vector<std::string> predicates_;
  std::vector<Concept> concepts_;
};

bool operator==(const Concept& a, const Concept& b);

Vocabulary ParseVocabularyJson(std::string_view text);
std::string VocabularyToJson(const Vocabulary& vocab);
Vocabulary LoadVocabulary(const std::filesystem::path& path);

}  // namespace sgr

#endif  // SGR_VOCABULARY_H_
