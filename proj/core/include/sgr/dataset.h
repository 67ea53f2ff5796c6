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

// Question dataset records, stored one JSON object per line:
//
//   {"id", "scene", "question", "answer", "graph_gt", "graph_pred",
//    "program", "referred", "grounded"}
//
// graph_pred is either a full probabilistic graph or
// {"perturb": {"noise_sd", "flip_rate", "seed"}}, derived from graph_gt
// with PerturbEncode (or OneHotEncode when both rates are zero).

#ifndef SGR_DATASET_H_
#define SGR_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgr/box.h"
#include "sgr/program.h"
#include "sgr/scene_graph.h"
#include "sgr/vocabulary.h"

namespace sgr {

struct PredictionSpec {
  double noise_sd = 0.0;
  double flip_rate = 0.0;
  uint64_t seed = 0;

  friend bool operator==(const PredictionSpec&, const PredictionSpec&) = default;
};

struct DatasetRecord {
  std::string id;
  int scene = 0;
  SymbolicSceneGraph graph_gt;
  // Explicit prediction; when absent `prediction` describes how to derive it.
  std::optional<ProbabilisticSceneGraph> graph_pred;
  PredictionSpec prediction;
  // Carries the question text and ground-truth answer.
  Program program;
  // Ground-truth boxes of every step's object set (empty for non-pointing
  // steps) and of the grounded set.
  std::vector<std::vector<Box>> referred;
  std::vector<Box> grounded;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

std::string RecordToJsonLine(const DatasetRecord& record, const Vocabulary& vocab);
DatasetRecord RecordFromJson(std::string_view line, const Vocabulary& vocab);

// Reads a JSON-lines file; blank lines are skipped. Parse errors name the
// line number.
std::vector<DatasetRecord> ReadDataset(const std::filesystem::path& path,
                                       const Vocabulary& vocab);
std::string DatasetToJsonLines(std::span<const DatasetRecord> records,
                               const Vocabulary& vocab);

// The model-side graph of a record.
ProbabilisticSceneGraph MaterializePrediction(const DatasetRecord& record,
                                              const Vocabulary& vocab);

// Re-runs the symbolic executor and checks the program, stored answer and
// referred/grounded boxes against it. Returns problems; empty means valid.
std::vector<std::string> ValidateRecord(const DatasetRecord& record,
                                        const Vocabulary& vocab);

// Every ground-truth referred and grounded box of a record.
std::vector<Box> ReferredUnion(const DatasetRecord& record);

}  // namespace sgr

#endif  // SGR_DATASET_H_
