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

#include "sgr/vocabulary.h"

#include <algorithm>
#include <set>

#include "json_util.h"
#include "sgr/box.h"
#include "sgr/error.h"
#include "sgr/io.h"

namespace sgr {
namespace {

using internal::Json;

std::optional<int> IndexOf(const std::vector<std::string>& names,
                           std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<int>(it - names.begin());
}

void CheckList(const std::vector<std::string>& names, std::string_view what) {
  if (names.empty() || names.front() != kBackground) {
    throw Error(ErrorCode::kValidation,
                std::string(what) + ": element 0 must be '" +
                    std::string(kBackground) + "'");
  }
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) {
      throw Error(ErrorCode::kValidation,
                  std::string(what) + ": duplicate name '" + n + "'");
    }
  }
}

}  // namespace

std::string_view ConceptKindName(ConceptKind kind) {
  switch (kind) {
    case ConceptKind::kObject:
      return "object";
    case ConceptKind::kAttribute:
      return "attribute";
    case ConceptKind::kPosition:
      return "position";
    case ConceptKind::kRelation:
      return "relation";
  }
  return "object";
}

std::optional<ConceptKind> ParseConceptKind(std::string_view name) {
  if (name == "object") return ConceptKind::kObject;
  if (name == "attribute") return ConceptKind::kAttribute;
  if (name == "position") return ConceptKind::kPosition;
  if (name == "relation") return ConceptKind::kRelation;
  return std::nullopt;
}

bool Concept::Contains(int id) const {
  return std::find(members.begin(), members.end(), id) != members.end();
}

bool operator==(const Concept& a, const Concept& b) {
  return a.name == b.name && a.kind == b.kind && a.members == b.members;
}

bool operator==(const Vocabulary& a, const Vocabulary& b) {
  return a.objects_ == b.objects_ && a.attributes_ == b.attributes_ &&
         a.predicates_ == b.predicates_ && a.concepts_ == b.concepts_;
}

Vocabulary Vocabulary::Create(
    std::vector<std::string> objects, std::vector<std::string> attributes,
    std::vector<std::string> predicates,
    const std::map<std::string, ConceptSpec>& concepts) {
  CheckList(objects, "objects");
  CheckList(attributes, "attributes");
  CheckList(predicates, "predicates");
  Vocabulary v;
  v.objects_ = std::move(objects);
  v.attributes_ = std::move(attributes);
  v.predicates_ = std::move(predicates);
  for (const auto& [name, spec] : concepts) {
    if (name.empty() || name == "none") {
      throw Error(ErrorCode::kValidation, "illegal concept name '" + name + "'");
    }
    Concept c{name, spec.kind, {}};
    std::set<int> seen;
    for (const auto& member : spec.members) {
      std::optional<int> id;
      switch (spec.kind) {
        case ConceptKind::kObject:
          id = IndexOf(v.objects_, member);
          break;
        case ConceptKind::kAttribute:
          id = IndexOf(v.attributes_, member);
          break;
        case ConceptKind::kRelation:
          id = IndexOf(v.predicates_, member);
          break;
        case ConceptKind::kPosition: {
          auto it = std::find(kPositionCategories.begin(),
                              kPositionCategories.end(), member);
          if (it != kPositionCategories.end()) {
            id = static_cast<int>(it - kPositionCategories.begin());
          }
          break;
        }
      }
      if (!id || (spec.kind != ConceptKind::kPosition && *id == 0)) {
        throw Error(ErrorCode::kValidation, "concept '" + name +
                                                "': unknown member '" + member +
                                                "'");
      }
      if (!seen.insert(*id).second) {
        throw Error(ErrorCode::kValidation, "concept '" + name +
                                                "': duplicate member '" +
                                                member + "'");
      }
      c.members.push_back(*id);
    }
    v.concepts_.push_back(std::move(c));
  }
  return v;
}

std::optional<int> Vocabulary::ObjectId(std::string_view name) const {
  return IndexOf(objects_, name);
}
std::optional<int> Vocabulary::AttributeId(std::string_view name) const {
  return IndexOf(attributes_, name);
}
std::optional<int> Vocabulary::PredicateId(std::string_view name) const {
  return IndexOf(predicates_, name);
}

const Concept* Vocabulary::FindConcept(std::string_view name) const {
  auto it = std::lower_bound(
      concepts_.begin(), concepts_.end(), name,
      [](const Concept& c, std::string_view n) { return c.name < n; });
  if (it == concepts_.end() || it->name != name) return nullptr;
  return &*it;
}

std::string_view Vocabulary::MemberName(const Concept& cpt, int id) const {
  switch (cpt.kind) {
    case ConceptKind::kObject:
      return objects_.at(id);
    case ConceptKind::kAttribute:
      return attributes_.at(id);
    case ConceptKind::kRelation:
      return predicates_.at(id);
    case ConceptKind::kPosition:
      return kPositionCategories.at(id);
  }
  return {};
}

std::optional<int> Vocabulary::MemberId(const Concept& cpt,
                                        std::string_view name) const {
  for (int id : cpt.members) {
    if (MemberName(cpt, id) == name) return id;
  }
  return std::nullopt;
}

Vocabulary ParseVocabularyJson(std::string_view text) {
  const Json j = internal::ParseJson(text, "vocabulary");
  constexpr std::string_view kWhat = "vocabulary";
  auto objects = internal::Get<std::vector<std::string>>(j, "objects", kWhat);
  auto attributes =
      internal::Get<std::vector<std::string>>(j, "attributes", kWhat);
  auto predicates =
      internal::Get<std::vector<std::string>>(j, "predicates", kWhat);
  std::map<std::string, Vocabulary::ConceptSpec> concepts;
  if (j.contains("concepts")) {
    const Json& table = j.at("concepts");
    if (!table.is_object()) {
      throw Error(ErrorCode::kParse, "vocabulary: 'concepts' must be an object");
    }
    for (const auto& [name, entry] : table.items()) {
      const auto kind_name = internal::Get<std::string>(entry, "kind", name);
      auto kind = ParseConceptKind(kind_name);
      if (!kind) {
        throw Error(ErrorCode::kParse, "concept '" + name +
                                           "': unknown kind '" + kind_name +
                                           "'");
      }
      concepts[name] = {
          *kind, internal::Get<std::vector<std::string>>(entry, "members", name)};
    }
  }
  return Vocabulary::Create(std::move(objects), std::move(attributes),
                            std::move(predicates), concepts);
}

std::string VocabularyToJson(const Vocabulary& vocab) {
  Json j;
  j["objects"] = vocab.object_names();
  j["attributes"] = vocab.attribute_names();
  j["predicates"] = vocab.predicate_names();
  Json table = Json::object();
  for (const Concept& c : vocab.concepts()) {
    Json members = Json::array();
    for (int id : c.members) members.push_back(vocab.MemberName(c, id));
    table[c.name] = {{"kind", ConceptKindName(c.kind)}, {"members", members}};
  }
  j["concepts"] = table;
  return j.dump(2);
}

Vocabulary LoadVocabulary(const std::filesystem::path& path) {
  return ParseVocabularyJson(ReadTextFile(path));
}

}  // namespace sgr
