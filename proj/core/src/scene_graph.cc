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

#include "sgr/scene_graph.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "serialization.h"
#include "sgr/error.h"

namespace sgr {
namespace {

using internal::Json;

[[noreturn]] void Invalid(const std::string& msg) {
  throw Error(ErrorCode::kValidation, msg);
}

void CheckFinite(const std::vector<double>& values, std::string_view what) {
  for (double v : values) {
    if (!std::isfinite(v)) Invalid(std::string(what) + " has a non-finite entry");
  }
}

}  // namespace

bool SceneObject::HasAttribute(int id) const {
  return std::binary_search(attributes.begin(), attributes.end(), id);
}

bool SymbolicSceneGraph::HasRelation(int subject, int predicate,
                                     int object) const {
  for (const Relation& r : relations) {
    if (r.subject == subject && r.predicate == predicate && r.object == object)
      return true;
  }
  return false;
}

std::vector<Box> SymbolicSceneGraph::Boxes() const {
  std::vector<Box> boxes;
  boxes.reserve(objects.size());
  for (const auto& o : objects) boxes.push_back(o.box);
  return boxes;
}

void ValidateSymbolic(const SymbolicSceneGraph& graph,
                      const Vocabulary& vocab) {
  for (size_t i = 0; i < graph.objects.size(); ++i) {
    const SceneObject& o = graph.objects[i];
    if (!IsValidBox(o.box)) Invalid("object " + std::to_string(i) + ": invalid box");
    if (o.category <= 0 || o.category >= vocab.num_objects()) {
      Invalid("object " + std::to_string(i) + ": category id out of range");
    }
    for (size_t a = 0; a < o.attributes.size(); ++a) {
      const int id = o.attributes[a];
      if (id <= 0 || id >= vocab.num_attributes()) {
        Invalid("object " + std::to_string(i) + ": attribute id out of range");
      }
      if (a > 0 && o.attributes[a - 1] >= id) {
        Invalid("object " + std::to_string(i) +
                ": attributes must be sorted and unique");
      }
    }
  }
  std::set<Relation> seen;
  for (const Relation& r : graph.relations) {
    if (r.subject < 0 || r.subject >= graph.size() || r.object < 0 ||
        r.object >= graph.size()) {
      Invalid("relation endpoint out of range");
    }
    if (r.subject == r.object) Invalid("self relation");
    if (r.predicate <= 0 || r.predicate >= vocab.num_predicates()) {
      Invalid("relation predicate id out of range");
    }
    if (!seen.insert(r).second) Invalid("duplicate relation triple");
  }
}

ProbabilisticSceneGraph MakeEmptyProbabilistic(std::vector<Box> boxes,
                                               const Vocabulary& vocab) {
  const int k = static_cast<int>(boxes.size());
  ProbabilisticSceneGraph g;
  g.boxes = std::move(boxes);
  g.s_o = Matrix(k, vocab.num_objects());
  g.s_a = Matrix(k, vocab.num_attributes());
  g.s_p = PairTensor(k, vocab.num_predicates());
  for (int i = 0; i < k; ++i) {
    for (int p = 0; p < vocab.num_predicates(); ++p) {
      g.s_p(i, i, p) = kSelfRelationLogit;
    }
  }
  return g;
}

void ValidateProbabilistic(const ProbabilisticSceneGraph& graph,
                           const Vocabulary& vocab) {
  const int k = graph.size();
  for (const Box& b : graph.boxes) {
    if (!IsValidBox(b)) Invalid("probabilistic graph: invalid box");
  }
  if (graph.s_o.rows() != k || graph.s_o.cols() != vocab.num_objects()) {
    Invalid("s_o shape does not match K x C_o");
  }
  if (graph.s_a.rows() != k || graph.s_a.cols() != vocab.num_attributes()) {
    Invalid("s_a shape does not match K x C_a");
  }
  if (graph.s_p.size() != k || graph.s_p.channels() != vocab.num_predicates()) {
    Invalid("s_p shape does not match K x K x C_p");
  }
  CheckFinite(graph.s_o.data(), "s_o");
  CheckFinite(graph.s_a.data(), "s_a");
  CheckFinite(graph.s_p.data(), "s_p");
  for (int i = 0; i < k; ++i) {
    for (int p = 0; p < graph.s_p.channels(); ++p) {
      if (graph.s_p(i, i, p) != kSelfRelationLogit) {
        Invalid("s_p diagonal must hold the self-relation logit");
      }
    }
  }
}

ProbabilisticSceneGraph OneHotEncode(const SymbolicSceneGraph& graph,
                                     const Vocabulary& vocab,
                                     double magnitude) {
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) {
    throw Error(ErrorCode::kInvalidArgument, "magnitude must be positive");
  }
  ValidateSymbolic(graph, vocab);
  ProbabilisticSceneGraph g = MakeEmptyProbabilistic(graph.Boxes(), vocab);
  std::fill(g.s_o.data().begin(), g.s_o.data().end(), -magnitude);
  std::fill(g.s_a.data().begin(), g.s_a.data().end(), -magnitude);
  const int k = graph.size();
  for (int i = 0; i < k; ++i) {
    g.s_o(i, graph.objects[i].category) = magnitude;
    for (int a : graph.objects[i].attributes) g.s_a(i, a) = magnitude;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      for (int p = 0; p < vocab.num_predicates(); ++p) g.s_p(i, j, p) = -magnitude;
    }
  }
  for (const Relation& r : graph.relations) {
    g.s_p(r.subject, r.object, r.predicate) = magnitude;
  }
  return g;
}

ProbabilisticSceneGraph PerturbEncode(const SymbolicSceneGraph& graph,
                                      const Vocabulary& vocab, double noise_sd,
                                      double flip_rate, uint64_t seed) {
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_sd must be >= 0");
  }
  if (!(flip_rate >= 0.0 && flip_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "flip_rate must lie in [0, 1)");
  }
  ProbabilisticSceneGraph g = OneHotEncode(graph, vocab);
  std::mt19937_64 rng(seed);
  if (noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (double& v : g.s_o.data()) v += noise(rng);
    for (double& v : g.s_a.data()) v += noise(rng);
    const int k = g.size();
    for (int s = 0; s < k; ++s) {
      for (int o = 0; o < k; ++o) {
        if (s == o) continue;
        for (int p = 0; p < g.s_p.channels(); ++p) g.s_p(s, o, p) += noise(rng);
      }
    }
  }
  const int num_wrong = vocab.num_objects() - 2;
  if (flip_rate > 0.0 && num_wrong > 0) {
    std::bernoulli_distribution flip(flip_rate);
    std::uniform_int_distribution<int> pick(0, num_wrong - 1);
    for (int i = 0; i < g.size(); ++i) {
      if (!flip(rng)) continue;
      const int truth = graph.objects[i].category;
      int wrong = 1 + pick(rng);
      if (wrong >= truth) ++wrong;
      std::swap(g.s_o(i, truth), g.s_o(i, wrong));
    }
  }
  return g;
}

RemovalResult RemoveObjects(const ProbabilisticSceneGraph& graph,
                            std::span<const int> indices) {
  const int k = graph.size();
  std::vector<bool> removed(k, false);
  for (int idx : indices) {
    if (idx < 0 || idx >= k) {
      throw Error(ErrorCode::kOutOfRange,
                  "remove index " + std::to_string(idx) + " out of range");
    }
    removed[idx] = true;
  }
  RemovalResult result;
  result.old_to_new.assign(k, -1);
  for (int i = 0; i < k; ++i) {
    if (removed[i]) continue;
    result.old_to_new[i] = static_cast<int>(result.new_to_old.size());
    result.new_to_old.push_back(i);
  }
  const int n = static_cast<int>(result.new_to_old.size());
  ProbabilisticSceneGraph& out = result.graph;
  out.s_o = Matrix(n, graph.s_o.cols());
  out.s_a = Matrix(n, graph.s_a.cols());
  out.s_p = PairTensor(n, graph.s_p.channels());
  for (int i = 0; i < n; ++i) {
    const int src = result.new_to_old[i];
    out.boxes.push_back(graph.boxes[src]);
    for (int c = 0; c < graph.s_o.cols(); ++c) out.s_o(i, c) = graph.s_o(src, c);
    for (int c = 0; c < graph.s_a.cols(); ++c) out.s_a(i, c) = graph.s_a(src, c);
    for (int j = 0; j < n; ++j) {
      const int dst = result.new_to_old[j];
      for (int p = 0; p < graph.s_p.channels(); ++p) {
        out.s_p(i, j, p) = graph.s_p(src, dst, p);
      }
    }
  }
  return result;
}

SymbolicSceneGraph DecodeSymbolic(const ProbabilisticSceneGraph& graph) {
  const int k = graph.size();
  SymbolicSceneGraph out;
  out.objects.resize(k);
  for (int i = 0; i < k; ++i) {
    SceneObject& obj = out.objects[i];
    obj.box = graph.boxes[i];
    obj.category = graph.s_o.cols() > 1 ? 1 : 0;
    for (int c = 2; c < graph.s_o.cols(); ++c) {
      if (graph.s_o(i, c) > graph.s_o(i, obj.category)) obj.category = c;
    }
    for (int a = 1; a < graph.s_a.cols(); ++a) {
      if (graph.s_a(i, a) > 0.0) obj.attributes.push_back(a);
    }
  }
  for (int s = 0; s < k; ++s) {
    for (int o = 0; o < k; ++o) {
      if (s == o) continue;
      for (int p = 1; p < graph.s_p.channels(); ++p) {
        if (graph.s_p(s, o, p) > 0.0) out.relations.push_back({s, p, o});
      }
    }
  }
  std::sort(out.relations.begin(), out.relations.end());
  return out;
}

ProbabilisticSceneGraph RandomizeScores(const ProbabilisticSceneGraph& graph,
                                        uint64_t seed, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument, "randomize scale must be > 0");
  }
  ProbabilisticSceneGraph g = graph;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> draw(0.0, scale);
  for (double& v : g.s_o.data()) v = draw(rng);
  for (double& v : g.s_a.data()) v = draw(rng);
  const int k = g.size();
  for (int s = 0; s < k; ++s) {
    for (int o = 0; o < k; ++o) {
      for (int p = 0; p < g.s_p.channels(); ++p) {
        g.s_p(s, o, p) = s == o ? kSelfRelationLogit : draw(rng);
      }
    }
  }
  return g;
}

std::string_view PerturbationKindName(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kBackgroundRemoval:
      return "bg";
    case PerturbationKind::kForegroundRemoval:
      return "fg";
    case PerturbationKind::kRandomize:
      return "rand";
  }
  return "bg";
}

PerturbationKind ParsePerturbationKind(std::string_view name) {
  if (name == "bg" || name == "background_removal")
    return PerturbationKind::kBackgroundRemoval;
  if (name == "fg" || name == "foreground_removal")
    return PerturbationKind::kForegroundRemoval;
  if (name == "rand" || name == "randomize") return PerturbationKind::kRandomize;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown perturbation '" + std::string(name) + "'");
}

void ValidatePerturbationSpec(const PerturbationSpec& spec) {
  if (spec.kind == PerturbationKind::kRandomize &&
      !(spec.noise_scale > 0.0 && std::isfinite(spec.noise_scale))) {
    throw Error(ErrorCode::kInvalidArgument,
                "randomize perturbation needs noise_scale > 0");
  }
}

namespace internal {

Json SymbolicToJsonValue(const SymbolicSceneGraph& graph,
                         const Vocabulary& vocab) {
  Json objects = Json::array();
  for (const SceneObject& o : graph.objects) {
    Json attrs = Json::array();
    for (int a : o.attributes) attrs.push_back(vocab.attribute_names().at(a));
    objects.push_back({{"box", BoxToJson(o.box)},
                       {"category", vocab.object_names().at(o.category)},
                       {"attributes", attrs}});
  }
  Json relations = Json::array();
  for (const Relation& r : graph.relations) {
    relations.push_back({{"subject", r.subject},
                         {"predicate", vocab.predicate_names().at(r.predicate)},
                         {"object", r.object}});
  }
  return {{"objects", objects}, {"relations", relations}};
}

SymbolicSceneGraph SymbolicFromJsonValue(const Json& j,
                                         const Vocabulary& vocab) {
  constexpr std::string_view kWhat = "symbolic scene graph";
  SymbolicSceneGraph g;
  for (const Json& o : Get<Json>(j, "objects", kWhat)) {
    SceneObject obj;
    obj.box = BoxFromJson(Get<Json>(o, "box", kWhat));
    const auto name = Get<std::string>(o, "category", kWhat);
    auto id = vocab.ObjectId(name);
    if (!id || *id == 0) {
      throw Error(ErrorCode::kValidation, "unknown object category '" + name + "'");
    }
    obj.category = *id;
    if (o.contains("attributes")) {
      for (const auto& a : Get<std::vector<std::string>>(o, "attributes", kWhat)) {
        auto aid = vocab.AttributeId(a);
        if (!aid || *aid == 0) {
          throw Error(ErrorCode::kValidation, "unknown attribute '" + a + "'");
        }
        obj.attributes.push_back(*aid);
      }
      std::sort(obj.attributes.begin(), obj.attributes.end());
      obj.attributes.erase(
          std::unique(obj.attributes.begin(), obj.attributes.end()),
          obj.attributes.end());
    }
    g.objects.push_back(std::move(obj));
  }
  if (j.contains("relations")) {
    for (const Json& r : j.at("relations")) {
      const auto pred = Get<std::string>(r, "predicate", kWhat);
      auto pid = vocab.PredicateId(pred);
      if (!pid || *pid == 0) {
        throw Error(ErrorCode::kValidation, "unknown predicate '" + pred + "'");
      }
      g.relations.push_back({Get<int>(r, "subject", kWhat), *pid,
                             Get<int>(r, "object", kWhat)});
    }
  }
  ValidateSymbolic(g, vocab);
  return g;
}

Json ProbabilisticToJsonValue(const ProbabilisticSceneGraph& graph) {
  const int k = graph.size();
  Json boxes = Json::array();
  for (const Box& b : graph.boxes) boxes.push_back(BoxToJson(b));
  Json s_o = Json::array();
  Json s_a = Json::array();
  Json s_p = Json::array();
  for (int i = 0; i < k; ++i) {
    auto ro = graph.s_o.row(i);
    auto ra = graph.s_a.row(i);
    s_o.push_back(std::vector<double>(ro.begin(), ro.end()));
    s_a.push_back(std::vector<double>(ra.begin(), ra.end()));
    Json plane = Json::array();
    for (int o = 0; o < k; ++o) {
      std::vector<double> cell(graph.s_p.channels());
      for (int p = 0; p < graph.s_p.channels(); ++p) cell[p] = graph.s_p(i, o, p);
      plane.push_back(cell);
    }
    s_p.push_back(plane);
  }
  return {{"boxes", boxes}, {"s_o", s_o}, {"s_a", s_a}, {"s_p", s_p}};
}

ProbabilisticSceneGraph ProbabilisticFromJsonValue(const Json& j,
                                                   const Vocabulary& vocab) {
  constexpr std::string_view kWhat = "probabilistic scene graph";
  std::vector<Box> boxes;
  for (const Json& b : Get<Json>(j, "boxes", kWhat)) boxes.push_back(BoxFromJson(b));
  const int k = static_cast<int>(boxes.size());
  ProbabilisticSceneGraph g;
  g.boxes = std::move(boxes);
  auto read_matrix = [&](std::string_view key, int cols) {
    auto rows = Get<std::vector<std::vector<double>>>(j, key, kWhat);
    if (static_cast<int>(rows.size()) != k) {
      Invalid(std::string(key) + ": expected " + std::to_string(k) + " rows");
    }
    Matrix m(k, cols);
    for (int i = 0; i < k; ++i) {
      if (static_cast<int>(rows[i].size()) != cols) {
        Invalid(std::string(key) + ": expected " + std::to_string(cols) +
                " columns");
      }
      for (int c = 0; c < cols; ++c) m(i, c) = rows[i][c];
    }
    return m;
  };
  g.s_o = read_matrix("s_o", vocab.num_objects());
  g.s_a = read_matrix("s_a", vocab.num_attributes());
  auto planes = Get<std::vector<std::vector<std::vector<double>>>>(j, "s_p", kWhat);
  const int cp = vocab.num_predicates();
  if (static_cast<int>(planes.size()) != k) Invalid("s_p: wrong subject count");
  g.s_p = PairTensor(k, cp);
  for (int s = 0; s < k; ++s) {
    if (static_cast<int>(planes[s].size()) != k) Invalid("s_p: wrong object count");
    for (int o = 0; o < k; ++o) {
      if (static_cast<int>(planes[s][o].size()) != cp) {
        Invalid("s_p: wrong predicate count");
      }
      for (int p = 0; p < cp; ++p) g.s_p(s, o, p) = planes[s][o][p];
    }
  }
  ValidateProbabilistic(g, vocab);
  return g;
}

}  // namespace internal

std::string SymbolicToJson(const SymbolicSceneGraph& graph,
                           const Vocabulary& vocab) {
  return internal::SymbolicToJsonValue(graph, vocab).dump();
}

SymbolicSceneGraph SymbolicFromJson(std::string_view text,
                                    const Vocabulary& vocab) {
  return internal::SymbolicFromJsonValue(
      internal::ParseJson(text, "symbolic scene graph"), vocab);
}

std::string ProbabilisticToJson(const ProbabilisticSceneGraph& graph) {
  return internal::ProbabilisticToJsonValue(graph).dump();
}

ProbabilisticSceneGraph ProbabilisticFromJson(std::string_view text,
                                              const Vocabulary& vocab) {
  return internal::ProbabilisticFromJsonValue(
      internal::ParseJson(text, "probabilistic scene graph"), vocab);
}

SymbolicSceneGraph GqaSceneGraphFromJson(std::string_view text,
                                         const Vocabulary& vocab) {
  using internal::Get;
  constexpr std::string_view kWhat = "GQA scene graph";
  const Json j = internal::ParseJson(text, kWhat);
  const double width = Get<double>(j, "width", kWhat);
  const double height = Get<double>(j, "height", kWhat);
  if (!(width > 0.0) || !(height > 0.0)) {
    throw Error(ErrorCode::kParse, "GQA scene graph: non-positive image size");
  }
  const Json& objects = Get<Json>(j, "objects", kWhat);
  if (!objects.is_object()) {
    throw Error(ErrorCode::kParse, "GQA scene graph: 'objects' must be an object");
  }
  // nlohmann::json keeps object keys sorted, which fixes the object order.
  std::map<std::string, int> index_of;
  for (const auto& [id, _] : objects.items()) {
    const int next = static_cast<int>(index_of.size());
    index_of.emplace(id, next);
  }
  SymbolicSceneGraph g;
  std::set<Relation> seen;
  for (const auto& [id, o] : objects.items()) {
    const double x = Get<double>(o, "x", kWhat);
    const double y = Get<double>(o, "y", kWhat);
    const double w = Get<double>(o, "w", kWhat);
    const double h = Get<double>(o, "h", kWhat);
    Box box{std::clamp(x / width, 0.0, 1.0), std::clamp(y / height, 0.0, 1.0),
            std::clamp((x + w) / width, 0.0, 1.0),
            std::clamp((y + h) / height, 0.0, 1.0)};
    if (!IsValidBox(box)) {
      throw Error(ErrorCode::kValidation, "GQA object " + id + ": degenerate box");
    }
    SceneObject obj;
    obj.box = box;
    const auto name = Get<std::string>(o, "name", kWhat);
    auto cat = vocab.ObjectId(name);
    if (!cat || *cat == 0) {
      throw Error(ErrorCode::kValidation, "unknown object category '" + name + "'");
    }
    obj.category = *cat;
    if (o.contains("attributes")) {
      for (const auto& a : o.at("attributes")) {
        auto aid = vocab.AttributeId(a.get<std::string>());
        if (!aid || *aid == 0) {
          throw Error(ErrorCode::kValidation,
                      "unknown attribute '" + a.get<std::string>() + "'");
        }
        obj.attributes.push_back(*aid);
      }
      std::sort(obj.attributes.begin(), obj.attributes.end());
      obj.attributes.erase(
          std::unique(obj.attributes.begin(), obj.attributes.end()),
          obj.attributes.end());
    }
    g.objects.push_back(std::move(obj));
    if (o.contains("relations")) {
      for (const auto& r : o.at("relations")) {
        const auto pred = Get<std::string>(r, "name", kWhat);
        const auto target = Get<std::string>(r, "object", kWhat);
        auto pid = vocab.PredicateId(pred);
        auto tgt = index_of.find(target);
        if (!pid || *pid == 0) {
          throw Error(ErrorCode::kValidation, "unknown predicate '" + pred + "'");
        }
        if (tgt == index_of.end()) {
          throw Error(ErrorCode::kValidation,
                      "relation to unknown object '" + target + "'");
        }
        Relation rel{index_of.at(id), *pid, tgt->second};
        if (rel.subject != rel.object && seen.insert(rel).second) {
          g.relations.push_back(rel);
        }
      }
    }
  }
  ValidateSymbolic(g, vocab);
  return g;
}

}  // namespace sgr
