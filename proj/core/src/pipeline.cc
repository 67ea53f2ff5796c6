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

#include "sgr/pipeline.h"

#include <iomanip>
#include <optional>
#include <sstream>

#include "sgr/error.h"
#include "sgr/parallel.h"

namespace sgr {

GraphSource ParseGraphSource(std::string_view name) {
  if (name == "pred") return GraphSource::kPredicted;
  if (name == "onehot") return GraphSource::kOneHot;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown graph source '" + std::string(name) + "'");
}

ProbabilisticSceneGraph RecordGraph(const DatasetRecord& record,
                                    const Vocabulary& vocab, GraphSource source) {
  if (source == GraphSource::kOneHot) return OneHotEncode(record.graph_gt, vocab);
  return MaterializePrediction(record, vocab);
}

TrainingSet BuildTrainingSet(std::span<const DatasetRecord> records,
                             const Vocabulary& vocab, int jobs) {
  std::vector<std::optional<TrainingSample>> slots(records.size());
  ParallelFor(static_cast<int>(records.size()), jobs, [&](int i) {
    const DatasetRecord& r = records[i];
    auto graph = MaterializePrediction(r, vocab);
    try {
      auto sup = GenerateSupervision(r.program, r.graph_gt, graph.boxes, vocab);
      slots[i] = TrainingSample{r.program, std::move(graph), std::move(sup)};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnanswerable && e.code() != ErrorCode::kAmbiguous) throw;
    }
  });
  TrainingSet out;
  for (size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      out.samples.push_back(std::move(*slots[i]));
    } else {
      out.skipped.push_back(records[i].id);
    }
  }
  return out;
}

std::vector<EvalItem> BuildEvalItems(std::span<const DatasetRecord> records,
                                     const Vocabulary& vocab, GraphSource source,
                                     int jobs) {
  std::vector<EvalItem> items(records.size());
  ParallelFor(static_cast<int>(records.size()), jobs, [&](int i) {
    const DatasetRecord& r = records[i];
    EvalItem& item = items[i];
    item.id = r.id;
    item.program = r.program;
    item.gt_answer = r.program.answer.value_or("");
    item.graph = RecordGraph(r, vocab, source);
    item.referred = ReferredUnion(r);
    item.grounded = r.grounded;
  });
  return items;
}

double Accuracy(const DiagnosisReport& report) {
  if (report.per_question.empty()) return 0.0;
  int correct = 0;
  for (const auto& q : report.per_question) correct += q.correct ? 1 : 0;
  return 100.0 * correct / static_cast<double>(report.per_question.size());
}

std::string LossCurveCsv(std::span<const double> curve) {
  std::ostringstream out;
  out << "iteration,loss\n" << std::setprecision(17);
  for (size_t i = 0; i < curve.size(); ++i) out << i << ',' << curve[i] << '\n';
  return out.str();
}

}  // namespace sgr
