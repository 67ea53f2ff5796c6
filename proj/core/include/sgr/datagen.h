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

// Deterministic synthetic scenes and template questions with known answers
// and referred objects.

#ifndef SGR_DATAGEN_H_
#define SGR_DATAGEN_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgr/dataset.h"
#include "sgr/program.h"
#include "sgr/scene_graph.h"
#include "sgr/vocabulary.h"

namespace sgr {

// 20 object categories, 3 attribute concepts of 5 members, 2 position
// concepts and 8 predicates. Spatial predicates (left_of, right_of, above,
// below, near) are derived from geometry by GenScene.
Vocabulary MiniVocabulary();

struct GenSpec {
  uint64_t seed = 0;
  int num_scenes = 100;
  int questions_per_scene = 4;
  int min_objects = 3;
  int max_objects = 7;
  // Extra objects that repeat an existing category.
  int min_distractors = 0;
  int max_distractors = 2;
  // Relative frequency of each operator's template, indexed like
  // kAllOperators.
  std::array<double, 10> template_weights{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  // Prediction graphs attached to each record.
  double noise_sd = 0.0;
  double flip_rate = 0.0;
};

// Throws Error(kInvalidArgument) on empty ranges, negative or all-zero
// weights, or rates outside their domain.
void ValidateGenSpec(const GenSpec& spec);

std::string GenSpecToJson(const GenSpec& spec);
GenSpec GenSpecFromJson(std::string_view text);

// Scene `index` of `spec`; depends only on (seed, index). Throws
// Error(kInfeasible) if the boxes cannot be placed.
SymbolicSceneGraph GenScene(const GenSpec& spec, const Vocabulary& vocab, int index);

struct GeneratedQuestion {
  Program program;  // question text and answer filled in
  Operator focus = Operator::kFilter;
  std::vector<std::vector<Box>> referred;
  std::vector<Box> grounded;
};

struct QuestionAttempt {
  std::optional<GeneratedQuestion> question;
  std::string skip_reason;
};

// Draws a template by weight and instantiates it on `scene`. Every emitted
// program is valid, answerable and unambiguous; a set that comes out empty
// is only ever consumed by exist.
QuestionAttempt GenQuestion(const GenSpec& spec, const Vocabulary& vocab,
                            const SymbolicSceneGraph& scene, uint64_t seed);

struct GeneratedDataset {
  std::vector<DatasetRecord> records;
  // Skip reason -> count.
  std::map<std::string, int> skipped;
};

// Scenes are generated independently (in parallel with jobs > 1) and
// concatenated in index order.
GeneratedDataset GenerateDataset(const GenSpec& spec, const Vocabulary& vocab,
                                 int jobs = 1);

// JSON manifest: the spec plus record and skip counts.
std::string ManifestJson(const GenSpec& spec, const GeneratedDataset& data);

}  // namespace sgr

#endif  // SGR_DATAGEN_H_
