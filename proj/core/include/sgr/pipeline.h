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

// Glue from dataset records to training samples and diagnosis items.

#ifndef SGR_PIPELINE_H_
#define SGR_PIPELINE_H_

#include <span>
#include <string>
#include <vector>

#include "sgr/dataset.h"
#include "sgr/diagnosis.h"
#include "sgr/training.h"
#include "sgr/vocabulary.h"

namespace sgr {

// Which graph a record is evaluated on.
enum class GraphSource { kPredicted, kOneHot };

GraphSource ParseGraphSource(std::string_view name);

ProbabilisticSceneGraph RecordGraph(const DatasetRecord& record,
                                    const Vocabulary& vocab, GraphSource source);

struct TrainingSet {
  std::vector<TrainingSample> samples;
  // Ids of records whose supervision could not be generated.
  std::vector<std::string> skipped;
};

// Teacher-forcing samples on each record's predicted graph.
TrainingSet BuildTrainingSet(std::span<const DatasetRecord> records,
                             const Vocabulary& vocab, int jobs = 1);

std::vector<EvalItem> BuildEvalItems(std::span<const DatasetRecord> records,
                                     const Vocabulary& vocab, GraphSource source,
                                     int jobs = 1);

// Percentage of per-question results answered correctly.
double Accuracy(const DiagnosisReport& report);

// "iteration,loss" rows.
std::string LossCurveCsv(std::span<const double> curve);

}  // namespace sgr

#endif  // SGR_PIPELINE_H_
