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

#ifndef SGR_SCENE_GRAPH_H_
#define SGR_SCENE_GRAPH_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgr/box.h"
#include "sgr/vocabulary.h"

namespace sgr {

// Logit written on the S_p diagonal; an object never relates to itself.
inline constexpr double kSelfRelationLogit = -10.0;
inline constexpr double kDefaultOneHotMagnitude = 10.0;

struct SceneObject {
  Box box;
  int category = 0;
  // Sorted, unique attribute ids.
  std::vector<int> attributes;

  bool HasAttribute(int id) const;
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Relation {
  int subject = 0;
  int predicate = 0;
  int object = 0;
  friend bool operator==(const Relation&, const Relation&) = default;
  friend auto operator<=>(const Relation&, const Relation&) = default;
};

// Ground-truth scene graph with hard labels.
struct SymbolicSceneGraph {
  std::vector<SceneObject> objects;
  std::vector<Relation> relations;

  int size() const { return static_cast<int>(objects.size()); }
  bool HasRelation(int subject, int predicate, int object) const;
  std::vector<Box> Boxes() const;

  friend bool operator==(const SymbolicSceneGraph&,
                         const SymbolicSceneGraph&) = default;
};

// Throws Error(kValidation) when ids fall outside the vocabulary, a
// relation is a self-loop or dangling, or a triple repeats.
void ValidateSymbolic(const SymbolicSceneGraph& graph, const Vocabulary& vocab);

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[Index(r, c)]; }
  double operator()(int r, int c) const { return data_[Index(r, c)]; }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  size_t Index(int r, int c) const {
    return static_cast<size_t>(r) * cols_ + c;
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// K x K x C tensor, indexed (subject, object, predicate).
class PairTensor {
 public:
  PairTensor() = default;
  PairTensor(int k, int c, double fill = 0.0)
      : k_(k), c_(c), data_(static_cast<size_t>(k) * k * c, fill) {}

  int size() const { return k_; }
  int channels() const { return c_; }
  double& operator()(int s, int o, int p) { return data_[Index(s, o, p)]; }
  double operator()(int s, int o, int p) const { return data_[Index(s, o, p)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const PairTensor&, const PairTensor&) = default;

 private:
  size_t Index(int s, int o, int p) const {
    return (static_cast<size_t>(s) * k_ + o) * c_ + p;
  }
  int k_ = 0;
  int c_ = 0;
  std::vector<double> data_;
};

// The model's view of an image: detected boxes with object, attribute and
// predicate logits.
struct ProbabilisticSceneGraph {
  std::vector<Box> boxes;
  Matrix s_o;      // K x C_o
  Matrix s_a;      // K x C_a
  PairTensor s_p;  // K x K x C_p

  int size() const { return static_cast<int>(boxes.size()); }

  friend bool operator==(const ProbabilisticSceneGraph&,
                         const ProbabilisticSceneGraph&) = default;
};

// Creates a graph of K objects with all logits zero and a forbidden
// diagonal.
ProbabilisticSceneGraph MakeEmptyProbabilistic(std::vector<Box> boxes,
                                               const Vocabulary& vocab);

// Throws Error(kValidation) on inconsistent shapes, non-finite entries or a
// diagonal that is not kSelfRelationLogit.
void ValidateProbabilistic(const ProbabilisticSceneGraph& graph,
                           const Vocabulary& vocab);

// True entries become +magnitude, every other entry -magnitude.
ProbabilisticSceneGraph OneHotEncode(const SymbolicSceneGraph& graph,
                                     const Vocabulary& vocab,
                                     double magnitude = kDefaultOneHotMagnitude);

// One-hot encoding with Gaussian logit noise and random object-category
// swaps; a synthetic stand-in for an imperfect scene-graph generator.
ProbabilisticSceneGraph PerturbEncode(const SymbolicSceneGraph& graph,
                                      const Vocabulary& vocab, double noise_sd,
                                      double flip_rate, uint64_t seed);

struct RemovalResult {
  ProbabilisticSceneGraph graph;
  // old index -> new index, -1 for removed objects.
  std::vector<int> old_to_new;
  // new index -> old index.
  std::vector<int> new_to_old;
};

// Deletes the given objects (rows of boxes, s_o, s_a; rows and columns of
// s_p). Survivors keep their relative order.
RemovalResult RemoveObjects(const ProbabilisticSceneGraph& graph,
                            std::span<const int> indices);

// Hard labels from logits: the best non-background category, attributes
// and off-diagonal relations with a positive logit; relations come out sorted. Inverts OneHotEncode up
// to relation order.
SymbolicSceneGraph DecodeSymbolic(const ProbabilisticSceneGraph& graph);

// Replaces all logits with i.i.d. N(0, scale) draws. Boxes and the
// forbidden diagonal are kept.
ProbabilisticSceneGraph RandomizeScores(const ProbabilisticSceneGraph& graph,
                                        uint64_t seed, double scale);

enum class PerturbationKind { kBackgroundRemoval, kForegroundRemoval, kRandomize };

std::string_view PerturbationKindName(PerturbationKind kind);
// Accepts "bg", "fg", "rand" and the long names.
PerturbationKind ParsePerturbationKind(std::string_view name);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kBackgroundRemoval;
  uint64_t seed = 0;
  // Used by kRandomize only; must be > 0 there.
  double noise_scale = kDefaultOneHotMagnitude;
};

void ValidatePerturbationSpec(const PerturbationSpec& spec);

std::string SymbolicToJson(const SymbolicSceneGraph& graph,
                           const Vocabulary& vocab);
SymbolicSceneGraph SymbolicFromJson(std::string_view text,
                                    const Vocabulary& vocab);
std::string ProbabilisticToJson(const ProbabilisticSceneGraph& graph);
ProbabilisticSceneGraph ProbabilisticFromJson(std::string_view text,
                                              const Vocabulary& vocab);

// Converts one GQA scene-graph entry ({"width", "height", "objects": {id:
// {"name", "x", "y", "w", "h", "attributes", "relations"}}}) to a symbolic
// graph. Objects are ordered by id; names must exist in `vocab`.
SymbolicSceneGraph GqaSceneGraphFromJson(std::string_view text,
                                         const Vocabulary& vocab);

}  // namespace sgr

#endif  // SGR_SCENE_GRAPH_H_
