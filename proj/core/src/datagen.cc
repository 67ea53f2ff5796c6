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

#include "sgr/datagen.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "json_util.h"
#include "sgr/error.h"
#include "sgr/exec_symbolic.h"
#include "sgr/parallel.h"
#include "sgr/seed.h"

namespace sgr {
namespace {

using internal::Json;
using Rng = std::mt19937_64;

constexpr int kPlacementTries = 500;
constexpr double kMinSide = 0.08;
constexpr double kMaxSide = 0.28;
constexpr double kAttributeRate = 0.8;
constexpr double kSpatialRate = 0.3;
constexpr double kSemanticRate = 0.06;
constexpr double kNearDistance = 0.3;
constexpr int kTemplateTries = 8;
constexpr uint64_t kPredictionSalt = 0x70726564ULL;

double Quantize(double x) { return std::round(x * 1e4) / 1e4; }

int UniformInt(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}
double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
bool Coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

template <typename T>
const T& Pick(Rng& rng, const std::vector<T>& v) {
  return v[UniformInt(rng, 0, static_cast<int>(v.size()) - 1)];
}

bool Overlaps(const Box& a, const Box& b) {
  return std::min(a.x2, b.x2) > std::max(a.x1, b.x1) &&
         std::min(a.y2, b.y2) > std::max(a.y1, b.y1);
}

std::vector<const Concept*> ConceptsOfKind(const Vocabulary& vocab, ConceptKind kind) {
  std::vector<const Concept*> out;
  for (const Concept& c : vocab.concepts()) {
    if (c.kind == kind && !c.members.empty()) out.push_back(&c);
  }
  return out;
}

std::vector<int> ObjectCategories(const Vocabulary& vocab) {
  std::set<int> ids;
  for (const Concept* c : ConceptsOfKind(vocab, ConceptKind::kObject)) {
    ids.insert(c->members.begin(), c->members.end());
  }
  if (ids.empty()) {
    for (int i = 1; i < vocab.num_objects(); ++i) ids.insert(i);
  }
  return {ids.begin(), ids.end()};
}

// Hard-label predicate test used when composing questions.
bool Holds(const SceneObject& obj, const Concept& c, int member) {
  switch (c.kind) {
    case ConceptKind::kObject:
      return obj.category == member;
    case ConceptKind::kAttribute:
      return obj.HasAttribute(member);
    case ConceptKind::kPosition:
      return PositionPredicate(obj.box, kPositionCategories[member]);
    case ConceptKind::kRelation:
      break;
  }
  return false;
}

// The member of `c` object `k` carries, lowest id first; -1 if none.
int MemberOf(const SceneObject& obj, const Concept& c) {
  std::vector<int> sorted = c.members;
  std::sort(sorted.begin(), sorted.end());
  for (int m : sorted) {
    if (Holds(obj, c, m)) return m;
  }
  return -1;
}

struct Draft {
  Program program;
  Operator focus = Operator::kFilter;
  std::string text;

  int Add(Operator op, std::string concept_name, std::string category,
          std::vector<int> deps = {}) {
    program.steps.push_back({op, std::move(concept_name), std::move(category), std::move(deps)});
    return program.size() - 1;
  }
};

struct Reference {
  int step = -1;
  std::string phrase;
};

class Composer {
 public:
  Composer(const Vocabulary& vocab, const SymbolicSceneGraph& scene, Rng& rng)
      : vocab_(vocab),
        scene_(scene),
        rng_(rng),
        object_concepts_(ConceptsOfKind(vocab, ConceptKind::kObject)),
        attribute_concepts_(ConceptsOfKind(vocab, ConceptKind::kAttribute)),
        position_concepts_(ConceptsOfKind(vocab, ConceptKind::kPosition)) {}

  std::optional<Draft> Compose(Operator focus) {
    Draft d;
    d.focus = focus;
    bool ok = false;
    switch (focus) {
      case Operator::kFilter:
        ok = QueryTemplate(d, 2);
        break;
      case Operator::kQuery:
        ok = QueryTemplate(d, 1);
        break;
      case Operator::kRelate:
        ok = RelateTemplate(d);
        break;
      case Operator::kExist: {
        auto r = Exist(d);
        ok = r.has_value();
        if (ok) d.text = "is there " + r->phrase + "?";
        break;
      }
      case Operator::kVerify: {
        auto r = Verify(d);
        ok = r.has_value();
        if (ok) d.text = r->phrase + "?";
        break;
      }
      case Operator::kChoose:
        ok = ChooseTemplate(d);
        break;
      case Operator::kCommon:
        ok = CommonTemplate(d);
        break;
      case Operator::kAnd:
      case Operator::kOr: {
        auto a = BooleanClause(d);
        if (!a) break;
        auto b = BooleanClause(d);
        if (!b) break;
        d.Add(focus, "", "", {a->step, b->step});
        d.text = a->phrase + (focus == Operator::kAnd ? " and " : " or ") + b->phrase + "?";
        ok = true;
        break;
      }
      case Operator::kNot: {
        auto a = BooleanClause(d);
        if (!a) break;
        d.Add(Operator::kNot, "", "", {a->step});
        d.text = "is it false that (" + a->phrase + ")?";
        ok = true;
        break;
      }
    }
    if (!ok) return std::nullopt;
    return d;
  }

 private:
  std::vector<int> All() const {
    std::vector<int> v(scene_.size());
    for (int i = 0; i < scene_.size(); ++i) v[i] = i;
    return v;
  }

  std::vector<int> Keep(const std::vector<int>& in, const Concept& c, int m) const {
    std::vector<int> out;
    for (int k : in) {
      if (Holds(scene_.objects[k], c, m)) out.push_back(k);
    }
    return out;
  }

  std::string CategoryName(int k) const {
    return vocab_.object_names()[scene_.objects[k].category];
  }

  const Concept* ObjectConceptFor(int k) {
    std::vector<const Concept*> options;
    for (const Concept* c : object_concepts_) {
      if (c->Contains(scene_.objects[k].category)) options.push_back(c);
    }
    return options.empty() ? nullptr : Pick(rng_, options);
  }

  // A filter chain selecting exactly {k}.
  std::optional<Reference> Describe(Draft& d, int k, int min_filters, bool by_category = true) {
    std::vector<int> set = All();
    std::vector<std::string> words;
    std::string place;
    int step = -1;
    int count = 0;
    auto add = [&](const Concept& c, int m) {
      step = d.Add(Operator::kFilter, c.name, std::string(vocab_.MemberName(c, m)),
                   step < 0 ? std::vector<int>{} : std::vector<int>{step});
      set = Keep(set, c, m);
      ++count;
    };
    std::string noun = "thing";
    if (by_category) {
      const Concept* c = ObjectConceptFor(k);
      if (c == nullptr) return std::nullopt;
      add(*c, scene_.objects[k].category);
      noun = CategoryName(k);
    }
    auto attrs = attribute_concepts_;
    std::shuffle(attrs.begin(), attrs.end(), rng_);
    for (const Concept* c : attrs) {
      if (set.size() == 1 && count >= min_filters) break;
      const int m = MemberOf(scene_.objects[k], *c);
      if (m < 0) continue;
      if (Keep(set, *c, m).size() == set.size() && count >= min_filters && count > 0) continue;
      add(*c, m);
      words.emplace_back(vocab_.MemberName(*c, m));
    }
    for (const Concept* c : position_concepts_) {
      if (set.size() == 1 && count > 0) break;
      const int m = MemberOf(scene_.objects[k], *c);
      if (m < 0 || Keep(set, *c, m).size() == set.size()) continue;
      add(*c, m);
      place += std::string(" on the ") + std::string(vocab_.MemberName(*c, m));
    }
    if (set.size() != 1 || count < min_filters) return std::nullopt;
    std::string phrase = "the";
    for (const auto& w : words) phrase += " " + w;
    return Reference{step, phrase + " " + noun + place};
  }

  // Concept/member pairs `k` can be asked about.
  std::vector<std::pair<const Concept*, int>> Askable(int k) const {
    std::vector<std::pair<const Concept*, int>> out;
    for (const Concept* c : attribute_concepts_) {
      const int m = MemberOf(scene_.objects[k], *c);
      if (m >= 0) out.emplace_back(c, m);
    }
    for (const Concept* c : object_concepts_) {
      if (c->Contains(scene_.objects[k].category)) out.emplace_back(c, scene_.objects[k].category);
    }
    return out;
  }

  bool QueryTemplate(Draft& d, int min_filters) {
    if (scene_.size() == 0) return false;
    const int k = UniformInt(rng_, 0, scene_.size() - 1);
    const bool by_category = min_filters > 1 || Coin(rng_, 0.6);
    auto ref = Describe(d, k, min_filters, by_category);
    if (!ref) return false;
    auto askable = Askable(k);
    if (by_category) {
      std::erase_if(askable, [](const auto& a) { return a.first->kind == ConceptKind::kObject; });
    }
    if (askable.empty()) return false;
    const auto& [c, m] = Pick(rng_, askable);
    d.Add(Operator::kQuery, c->name, "", {ref->step});
    d.text = "what " + c->name + " is " + ref->phrase + "?";
    return true;
  }

  bool RelateTemplate(Draft& d) {
    if (scene_.relations.empty()) return false;
    const Relation rel = Pick(rng_, scene_.relations);
    const bool keep_subject = Coin(rng_, 0.5);
    const int target = keep_subject ? rel.subject : rel.object;
    const int anchor = keep_subject ? rel.object : rel.subject;
    auto anchor_ref = Describe(d, anchor, 1);
    if (!anchor_ref) return false;
    const Concept* pool_concept = ObjectConceptFor(target);
    if (pool_concept == nullptr) return false;
    int pool = d.Add(Operator::kFilter, pool_concept->name, CategoryName(target));
    // Narrow the pool by attribute when the relation alone is ambiguous.
    auto related = [&](const std::vector<int>& candidates) {
      std::vector<int> out;
      for (int k : candidates) {
        if (keep_subject ? scene_.HasRelation(k, rel.predicate, anchor)
                         : scene_.HasRelation(anchor, rel.predicate, k)) {
          out.push_back(k);
        }
      }
      return out;
    };
    std::vector<int> pool_set = Keep(All(), *pool_concept, scene_.objects[target].category);
    std::string adjectives;
    for (const Concept* c : attribute_concepts_) {
      if (related(pool_set).size() == 1) break;
      const int m = MemberOf(scene_.objects[target], *c);
      if (m < 0) continue;
      pool = d.Add(Operator::kFilter, c->name, std::string(vocab_.MemberName(*c, m)), {pool});
      pool_set = Keep(pool_set, *c, m);
      adjectives += std::string(vocab_.MemberName(*c, m)) + " ";
    }
    if (related(pool_set).size() != 1) return false;
    const std::string pred = vocab_.predicate_names()[rel.predicate];
    const int r = keep_subject
                      ? d.Add(Operator::kRelate, std::string(kSubjectRole), pred, {pool, anchor_ref->step})
                      : d.Add(Operator::kRelate, std::string(kObjectRole), pred, {anchor_ref->step, pool});
    auto askable = Askable(target);
    std::erase_if(askable, [&](const auto& a) {
      return a.first->kind == ConceptKind::kObject && a.first == pool_concept;
    });
    if (askable.empty()) return false;
    const auto& [c, m] = Pick(rng_, askable);
    d.Add(Operator::kQuery, c->name, "", {r});
    const std::string what = adjectives + CategoryName(target);
    d.text = keep_subject
                 ? "what " + c->name + " is the " + what + " that is " + pred + " " + anchor_ref->phrase + "?"
                 : "what " + c->name + " is the " + what + " that " + anchor_ref->phrase + " is " + pred + "?";
    return true;
  }

  std::optional<Reference> Exist(Draft& d) {
    const auto categories = ObjectCategories(vocab_);
    int category = Pick(rng_, categories);
    if (scene_.size() > 0 && Coin(rng_, 0.5)) category = scene_.objects[UniformInt(rng_, 0, scene_.size() - 1)].category;
    const Concept* oc = nullptr;
    for (const Concept* c : object_concepts_) {
      if (c->Contains(category)) {
        oc = c;
        break;
      }
    }
    if (oc == nullptr) return std::nullopt;
    const std::string name = vocab_.object_names()[category];
    int step = d.Add(Operator::kFilter, oc->name, name);
    std::vector<int> set = Keep(All(), *oc, category);
    std::string phrase = "a " + name;
    if (set.empty()) return Reference{d.Add(Operator::kExist, "", "", {step}), phrase};

    if (!scene_.relations.empty() && Coin(rng_, 0.35)) {
      const int anchor = UniformInt(rng_, 0, scene_.size() - 1);
      auto ref = Describe(d, anchor, 1);
      if (!ref) return std::nullopt;
      const int p = UniformInt(rng_, 1, vocab_.num_predicates() - 1);
      const std::string pred = vocab_.predicate_names()[p];
      const int r = d.Add(Operator::kRelate, std::string(kSubjectRole), pred, {step, ref->step});
      return Reference{d.Add(Operator::kExist, "", "", {r}),
                       phrase + " " + pred + " " + ref->phrase};
    }
    if (!attribute_concepts_.empty() && Coin(rng_, 0.5)) {
      const Concept* c = Pick(rng_, attribute_concepts_);
      const int m = Pick(rng_, c->members);
      const std::string value(vocab_.MemberName(*c, m));
      step = d.Add(Operator::kFilter, c->name, value, {step});
      phrase = "a " + value + " " + name;
    }
    return Reference{d.Add(Operator::kExist, "", "", {step}), phrase};
  }

  std::optional<Reference> Verify(Draft& d) {
    if (scene_.size() == 0) return std::nullopt;
    const int k = UniformInt(rng_, 0, scene_.size() - 1);
    auto ref = Describe(d, k, 1);
    if (!ref) return std::nullopt;
    std::vector<const Concept*> concepts = attribute_concepts_;
    concepts.insert(concepts.end(), position_concepts_.begin(), position_concepts_.end());
    if (concepts.empty()) return std::nullopt;
    const Concept* c = Pick(rng_, concepts);
    int m = MemberOf(scene_.objects[k], *c);
    if (m < 0 || Coin(rng_, 0.5)) m = Pick(rng_, c->members);
    const std::string value(vocab_.MemberName(*c, m));
    return Reference{d.Add(Operator::kVerify, c->name, value, {ref->step}),
                     "is " + ref->phrase + " " + value};
  }

  std::optional<Reference> BooleanClause(Draft& d) {
    if (Coin(rng_, 0.5)) {
      auto r = Exist(d);
      if (r) r->phrase = "is there " + r->phrase;
      return r;
    }
    return Verify(d);
  }

  bool ChooseTemplate(Draft& d) {
    if (scene_.size() == 0) return false;
    const int k = UniformInt(rng_, 0, scene_.size() - 1);
    auto ref = Describe(d, k, 1);
    if (!ref) return false;
    std::vector<std::pair<const Concept*, int>> options;
    for (const Concept* c : attribute_concepts_) {
      const int m = MemberOf(scene_.objects[k], *c);
      if (m >= 0 && c->members.size() > 1) options.emplace_back(c, m);
    }
    for (const Concept* c : position_concepts_) {
      const int m = MemberOf(scene_.objects[k], *c);
      if (m >= 0 && c->members.size() > 1) options.emplace_back(c, m);
    }
    if (options.empty()) return false;
    const auto [c, m] = Pick(rng_, options);
    std::vector<int> others;
    for (int x : c->members) {
      if (x != m && !Holds(scene_.objects[k], *c, x)) others.push_back(x);
    }
    if (others.empty()) return false;
    std::string a(vocab_.MemberName(*c, m));
    std::string b(vocab_.MemberName(*c, Pick(rng_, others)));
    if (Coin(rng_, 0.5)) std::swap(a, b);
    d.Add(Operator::kChoose, c->name, a + "|" + b, {ref->step});
    d.text = "is " + ref->phrase + " " + a + " or " + b + "?";
    return true;
  }

  bool CommonTemplate(Draft& d) {
    if (scene_.size() < 2) return false;
    const int k1 = UniformInt(rng_, 0, scene_.size() - 1);
    int k2 = UniformInt(rng_, 0, scene_.size() - 2);
    if (k2 >= k1) ++k2;
    std::vector<int> shared;
    for (int a : scene_.objects[k1].attributes) {
      if (scene_.objects[k2].HasAttribute(a)) shared.push_back(a);
    }
    if (shared.empty()) return false;
    auto r1 = Describe(d, k1, 1);
    if (!r1) return false;
    auto r2 = Describe(d, k2, 1);
    if (!r2) return false;
    std::string concept_name;
    if (Coin(rng_, 0.5)) {
      std::vector<const Concept*> options;
      for (const Concept* c : attribute_concepts_) {
        if (std::any_of(shared.begin(), shared.end(), [&](int a) { return c->Contains(a); })) {
          options.push_back(c);
        }
      }
      if (!options.empty()) concept_name = Pick(rng_, options)->name;
    }
    d.Add(Operator::kCommon, concept_name, "", {r1->step, r2->step});
    d.text = "what " + (concept_name.empty() ? std::string("attribute") : concept_name) +
             " do " + r1->phrase + " and " + r2->phrase + " have in common?";
    return true;
  }

  const Vocabulary& vocab_;
  const SymbolicSceneGraph& scene_;
  Rng& rng_;
  std::vector<const Concept*> object_concepts_;
  std::vector<const Concept*> attribute_concepts_;
  std::vector<const Concept*> position_concepts_;
};

// Empty sets may only feed exist; answer operations need single objects.
std::string CheckShape(const Program& p, const ExecutionTrace& trace) {
  for (int i = 0; i < p.size(); ++i) {
    const Operation& op = p.steps[i];
    for (int dep : op.deps) {
      if (!IsPointing(p.steps[dep].op)) continue;
      const auto& set = trace.steps[dep].objects;
      if (set.empty() && op.op != Operator::kExist) return "empty intermediate set";
      const bool answers = op.op == Operator::kQuery || op.op == Operator::kChoose ||
                           op.op == Operator::kCommon;
      if (answers && set.size() != 1) return "answer input is not a single object";
    }
  }
  return "";
}

}  // namespace

Vocabulary MiniVocabulary() {
  std::vector<std::string> objects = {
      std::string(kBackground), "man",  "woman", "child", "dog",   "cat",   "horse",
      "bird",  "car",  "bus",   "bicycle", "tree", "building", "table", "chair",
      "cup",   "bottle", "ball", "hat",  "shirt", "bag"};
  std::vector<std::string> attributes = {
      std::string(kBackground), "red", "blue", "green", "white", "black",
      "wooden", "metal", "plastic", "glass", "fabric",
      "tiny", "small", "medium", "large", "huge"};
  std::vector<std::string> predicates = {std::string(kBackground), "left_of", "right_of",
                                         "above", "below", "near", "holding",
                                         "wearing", "on"};
  std::map<std::string, Vocabulary::ConceptSpec> concepts;
  concepts["object"] = {ConceptKind::kObject,
                        std::vector<std::string>(objects.begin() + 1, objects.end())};
  concepts["person"] = {ConceptKind::kObject, {"man", "woman", "child"}};
  concepts["animal"] = {ConceptKind::kObject, {"dog", "cat", "horse", "bird"}};
  concepts["vehicle"] = {ConceptKind::kObject, {"car", "bus", "bicycle"}};
  concepts["furniture"] = {ConceptKind::kObject, {"table", "chair"}};
  concepts["clothing"] = {ConceptKind::kObject, {"hat", "shirt", "bag"}};
  concepts["color"] = {ConceptKind::kAttribute, {"red", "blue", "green", "white", "black"}};
  concepts["material"] = {ConceptKind::kAttribute,
                          {"wooden", "metal", "plastic", "glass", "fabric"}};
  concepts["size"] = {ConceptKind::kAttribute, {"tiny", "small", "medium", "large", "huge"}};
  concepts["hposition"] = {ConceptKind::kPosition, {"left", "middle-h", "right"}};
  concepts["vposition"] = {ConceptKind::kPosition, {"top", "middle-v", "bottom"}};
  return Vocabulary::Create(std::move(objects), std::move(attributes), std::move(predicates),
                            concepts);
}

void ValidateGenSpec(const GenSpec& spec) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (spec.num_scenes < 0) fail("num_scenes must be >= 0");
  if (spec.questions_per_scene < 1) fail("questions_per_scene must be >= 1");
  if (spec.min_objects < 1 || spec.max_objects < spec.min_objects) {
    fail("objects_per_scene range is empty");
  }
  if (spec.min_distractors < 0 || spec.max_distractors < spec.min_distractors) {
    fail("distractor range is empty");
  }
  double total = 0.0;
  for (double w : spec.template_weights) {
    if (!std::isfinite(w) || w < 0.0) fail("template weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) fail("template weights are all zero");
  if (!std::isfinite(spec.noise_sd) || spec.noise_sd < 0.0) fail("noise_sd must be >= 0");
  if (!(spec.flip_rate >= 0.0 && spec.flip_rate < 1.0)) fail("flip_rate must lie in [0, 1)");
}

std::string GenSpecToJson(const GenSpec& spec) {
  Json weights = Json::object();
  for (size_t i = 0; i < kAllOperators.size(); ++i) {
    weights[std::string(OperatorName(kAllOperators[i]))] = spec.template_weights[i];
  }
  Json j = {{"seed", spec.seed},
            {"num_scenes", spec.num_scenes},
            {"questions_per_scene", spec.questions_per_scene},
            {"objects_per_scene", {spec.min_objects, spec.max_objects}},
            {"distractors", {spec.min_distractors, spec.max_distractors}},
            {"template_weights", weights},
            {"noise_sd", spec.noise_sd},
            {"flip_rate", spec.flip_rate}};
  return j.dump(2);
}

GenSpec GenSpecFromJson(std::string_view text) {
  constexpr std::string_view kWhat = "generation spec";
  const Json j = internal::ParseJson(text, kWhat);
  GenSpec spec;
  spec.seed = internal::Get<uint64_t>(j, "seed", kWhat);
  spec.num_scenes = internal::Get<int>(j, "num_scenes", kWhat);
  spec.questions_per_scene = internal::Get<int>(j, "questions_per_scene", kWhat);
  const auto objects = internal::Get<std::array<int, 2>>(j, "objects_per_scene", kWhat);
  spec.min_objects = objects[0];
  spec.max_objects = objects[1];
  const auto distractors = internal::Get<std::array<int, 2>>(j, "distractors", kWhat);
  spec.min_distractors = distractors[0];
  spec.max_distractors = distractors[1];
  const Json weights = internal::Get<Json>(j, "template_weights", kWhat);
  for (size_t i = 0; i < kAllOperators.size(); ++i) {
    spec.template_weights[i] =
        internal::Get<double>(weights, OperatorName(kAllOperators[i]), kWhat);
  }
  spec.noise_sd = internal::Get<double>(j, "noise_sd", kWhat);
  spec.flip_rate = internal::Get<double>(j, "flip_rate", kWhat);
  ValidateGenSpec(spec);
  return spec;
}

SymbolicSceneGraph GenScene(const GenSpec& spec, const Vocabulary& vocab, int index) {
  ValidateGenSpec(spec);
  Rng rng(DeriveSeed(spec.seed, static_cast<uint64_t>(index)));
  const int base = UniformInt(rng, spec.min_objects, spec.max_objects);
  const int extra = UniformInt(rng, spec.min_distractors, spec.max_distractors);
  const auto categories = ObjectCategories(vocab);
  const auto attribute_concepts = ConceptsOfKind(vocab, ConceptKind::kAttribute);

  SymbolicSceneGraph g;
  for (int i = 0; i < base + extra; ++i) {
    Box box;
    bool placed = false;
    for (int t = 0; t < kPlacementTries && !placed; ++t) {
      const double w = Quantize(Uniform(rng, kMinSide, kMaxSide));
      const double h = Quantize(Uniform(rng, kMinSide, kMaxSide));
      const double x = Quantize(Uniform(rng, 0.0, 1.0 - w));
      const double y = Quantize(Uniform(rng, 0.0, 1.0 - h));
      box = Box{x, y, std::min(1.0, x + w), std::min(1.0, y + h)};
      placed = std::none_of(g.objects.begin(), g.objects.end(),
                            [&](const SceneObject& o) { return Overlaps(o.box, box); });
    }
    if (!placed) {
      throw Error(ErrorCode::kInfeasible, "scene " + std::to_string(index) +
                                              ": could not place object " + std::to_string(i));
    }
    SceneObject obj;
    obj.box = box;
    obj.category = i < base ? Pick(rng, categories)
                            : g.objects[UniformInt(rng, 0, base - 1)].category;
    for (const Concept* c : attribute_concepts) {
      if (Coin(rng, kAttributeRate)) obj.attributes.push_back(Pick(rng, c->members));
    }
    std::sort(obj.attributes.begin(), obj.attributes.end());
    obj.attributes.erase(std::unique(obj.attributes.begin(), obj.attributes.end()),
                         obj.attributes.end());
    g.objects.push_back(std::move(obj));
  }

  const int k = g.size();
  for (int s = 0; s < k; ++s) {
    for (int o = 0; o < k; ++o) {
      if (s == o) continue;
      const Box& a = g.objects[s].box;
      const Box& b = g.objects[o].box;
      for (int p = 1; p < vocab.num_predicates(); ++p) {
        const std::string& name = vocab.predicate_names()[p];
        bool spatial = true;
        bool holds = false;
        if (name == "left_of") holds = a.center_x() < b.center_x();
        else if (name == "right_of") holds = a.center_x() > b.center_x();
        else if (name == "above") holds = a.center_y() < b.center_y();
        else if (name == "below") holds = a.center_y() > b.center_y();
        else if (name == "near") holds = std::hypot(a.center_x() - b.center_x(),
                                                    a.center_y() - b.center_y()) < kNearDistance;
        else spatial = false;
        const bool emit = spatial ? holds && Coin(rng, kSpatialRate) : Coin(rng, kSemanticRate);
        if (emit) g.relations.push_back({s, p, o});
      }
    }
  }
  return g;
}

QuestionAttempt GenQuestion(const GenSpec& spec, const Vocabulary& vocab,
                            const SymbolicSceneGraph& scene, uint64_t seed) {
  Rng rng(seed);
  std::discrete_distribution<int> pick(spec.template_weights.begin(),
                                       spec.template_weights.end());
  const Operator focus = kAllOperators[pick(rng)];
  Composer composer(vocab, scene, rng);
  QuestionAttempt attempt;
  std::string reason = "no satisfiable " + std::string(OperatorName(focus)) + " template";
  for (int t = 0; t < kTemplateTries; ++t) {
    auto draft = composer.Compose(focus);
    if (!draft) continue;
    if (!ValidateProgram(draft->program, vocab).empty()) {
      reason = "invalid " + std::string(OperatorName(focus)) + " program";
      continue;
    }
    ExecutionTrace trace;
    try {
      trace = ExecuteSymbolic(draft->program, scene, vocab);
    } catch (const Error& e) {
      reason = std::string(ErrorCodeName(e.code())) + " " + std::string(OperatorName(focus));
      continue;
    }
    if (auto shape = CheckShape(draft->program, trace); !shape.empty()) {
      reason = shape;
      continue;
    }
    GeneratedQuestion q;
    q.program = std::move(draft->program);
    q.program.question = draft->text;
    q.program.answer = trace.answer;
    q.focus = focus;
    for (const StepValue& v : trace.steps) {
      std::vector<Box> boxes;
      for (int k : v.objects) boxes.push_back(scene.objects[k].box);
      q.referred.push_back(std::move(boxes));
    }
    for (int k : trace.grounded) q.grounded.push_back(scene.objects[k].box);
    attempt.question = std::move(q);
    return attempt;
  }
  attempt.skip_reason = reason;
  return attempt;
}

GeneratedDataset GenerateDataset(const GenSpec& spec, const Vocabulary& vocab, int jobs) {
  ValidateGenSpec(spec);
  std::vector<std::vector<DatasetRecord>> per_scene(spec.num_scenes);
  std::vector<std::vector<std::string>> reasons(spec.num_scenes);
  ParallelFor(spec.num_scenes, jobs, [&](int s) {
    const SymbolicSceneGraph scene = GenScene(spec, vocab, s);
    const uint64_t scene_seed = DeriveSeed(spec.seed, static_cast<uint64_t>(s));
    const PredictionSpec prediction{spec.noise_sd, spec.flip_rate,
                                    DeriveSeed(spec.seed ^ kPredictionSalt, s)};
    for (int q = 0; q < spec.questions_per_scene; ++q) {
      QuestionAttempt a = GenQuestion(spec, vocab, scene, DeriveSeed(scene_seed, q + 1));
      if (!a.question) {
        reasons[s].push_back(a.skip_reason);
        continue;
      }
      std::ostringstream id;
      id << 's' << std::setw(5) << std::setfill('0') << s << "-q" << std::setw(2) << q;
      DatasetRecord r;
      r.id = id.str();
      r.scene = s;
      r.graph_gt = scene;
      r.prediction = prediction;
      r.program = std::move(a.question->program);
      r.referred = std::move(a.question->referred);
      r.grounded = std::move(a.question->grounded);
      per_scene[s].push_back(std::move(r));
    }
  });
  GeneratedDataset out;
  for (int s = 0; s < spec.num_scenes; ++s) {
    for (auto& r : per_scene[s]) out.records.push_back(std::move(r));
    for (const auto& reason : reasons[s]) ++out.skipped[reason];
  }
  return out;
}

std::string ManifestJson(const GenSpec& spec, const GeneratedDataset& data) {
  Json j = {{"spec", Json::parse(GenSpecToJson(spec))},
            {"records", data.records.size()},
            {"skipped", data.skipped}};
  return j.dump(2) + "\n";
}

}  // namespace sgr
