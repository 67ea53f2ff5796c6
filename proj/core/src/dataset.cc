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

#include "sgr/dataset.h"

#include <sstream>

#include "serialization.h"
#include "sgr/error.h"
#include "sgr/exec_symbolic.h"
#include "sgr/io.h"

namespace sgr {
namespace {

using internal::Json;

constexpr std::string_view kWhat = "dataset record";

std::vector<Box> BoxesOf(const SymbolicSceneGraph& g, const std::vector<int>& idx) {
  std::vector<Box> out;
  for (int k : idx) out.push_back(g.objects[k].box);
  return out;
}

}  // namespace

std::string RecordToJsonLine(const DatasetRecord& r, const Vocabulary& vocab) {
  Json referred = Json::array();
  for (const auto& step : r.referred) {
    Json boxes = Json::array();
    for (const Box& b : step) boxes.push_back(internal::BoxToJson(b));
    referred.push_back(boxes);
  }
  Json grounded = Json::array();
  for (const Box& b : r.grounded) grounded.push_back(internal::BoxToJson(b));
  Json pred;
  if (r.graph_pred) {
    pred = internal::ProbabilisticToJsonValue(*r.graph_pred);
  } else {
    pred = {{"perturb",
             {{"noise_sd", r.prediction.noise_sd},
              {"flip_rate", r.prediction.flip_rate},
              {"seed", r.prediction.seed}}}};
  }
  Json j = {{"id", r.id},
            {"scene", r.scene},
            {"question", r.program.question.value_or("")},
            {"answer", r.program.answer.value_or("")},
            {"graph_gt", internal::SymbolicToJsonValue(r.graph_gt, vocab)},
            {"graph_pred", pred},
            {"program", internal::ProgramToJsonValue(r.program)},
            {"referred", referred},
            {"grounded", grounded}};
  return j.dump();
}

DatasetRecord RecordFromJson(std::string_view line, const Vocabulary& vocab) {
  const Json j = internal::ParseJson(line, kWhat);
  DatasetRecord r;
  r.id = internal::Get<std::string>(j, "id", kWhat);
  r.scene = internal::Get<int>(j, "scene", kWhat);
  r.graph_gt = internal::SymbolicFromJsonValue(internal::Get<Json>(j, "graph_gt", kWhat), vocab);
  const Json pred = internal::Get<Json>(j, "graph_pred", kWhat);
  if (pred.contains("perturb")) {
    const Json p = pred["perturb"];
    r.prediction.noise_sd = internal::Get<double>(p, "noise_sd", kWhat);
    r.prediction.flip_rate = internal::Get<double>(p, "flip_rate", kWhat);
    r.prediction.seed = internal::Get<uint64_t>(p, "seed", kWhat);
  } else {
    r.graph_pred = internal::ProbabilisticFromJsonValue(pred, vocab);
  }
  r.program = internal::ProgramFromJsonValue(internal::Get<Json>(j, "program", kWhat), vocab);
  const auto question = internal::Get<std::string>(j, "question", kWhat);
  const auto answer = internal::Get<std::string>(j, "answer", kWhat);
  if (!question.empty()) r.program.question = question;
  if (!answer.empty()) r.program.answer = answer;
  for (const Json& step : internal::Get<Json>(j, "referred", kWhat)) {
    std::vector<Box> boxes;
    for (const Json& b : step) boxes.push_back(internal::BoxFromJson(b));
    r.referred.push_back(std::move(boxes));
  }
  for (const Json& b : internal::Get<Json>(j, "grounded", kWhat)) {
    r.grounded.push_back(internal::BoxFromJson(b));
  }
  return r;
}

std::vector<DatasetRecord> ReadDataset(const std::filesystem::path& path,
                                       const Vocabulary& vocab) {
  std::istringstream in(ReadTextFile(path));
  std::vector<DatasetRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(RecordFromJson(line, vocab));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string DatasetToJsonLines(std::span<const DatasetRecord> records,
                               const Vocabulary& vocab) {
  std::string out;
  for (const auto& r : records) {
    out += RecordToJsonLine(r, vocab);
    out += '\n';
  }
  return out;
}

ProbabilisticSceneGraph MaterializePrediction(const DatasetRecord& record,
                                              const Vocabulary& vocab) {
  if (record.graph_pred) return *record.graph_pred;
  const PredictionSpec& p = record.prediction;
  if (p.noise_sd == 0.0 && p.flip_rate == 0.0) return OneHotEncode(record.graph_gt, vocab);
  return PerturbEncode(record.graph_gt, vocab, p.noise_sd, p.flip_rate, p.seed);
}

std::vector<std::string> ValidateRecord(const DatasetRecord& record,
                                        const Vocabulary& vocab) {
  std::vector<std::string> problems;
  try {
    ValidateSymbolic(record.graph_gt, vocab);
    if (record.graph_pred) ValidateProbabilistic(*record.graph_pred, vocab);
  } catch (const Error& e) {
    problems.push_back(e.what());
    return problems;
  }
  for (const Violation& v : ValidateProgram(record.program, vocab)) {
    problems.push_back("step " + std::to_string(v.step) + ": " + v.message);
  }
  if (!problems.empty()) return problems;
  ExecutionTrace trace;
  try {
    trace = ExecuteSymbolic(record.program, record.graph_gt, vocab);
  } catch (const Error& e) {
    problems.push_back(std::string("symbolic execution failed: ") + e.what());
    return problems;
  }
  if (record.program.answer != trace.answer) {
    problems.push_back("stored answer '" + record.program.answer.value_or("") +
                       "' differs from executed answer '" + trace.answer + "'");
  }
  if (record.referred.size() != trace.steps.size()) {
    problems.push_back("referred boxes do not cover every step");
  } else {
    for (size_t i = 0; i < trace.steps.size(); ++i) {
      if (record.referred[i] != BoxesOf(record.graph_gt, trace.steps[i].objects)) {
        problems.push_back("referred boxes of step " + std::to_string(i) + " differ");
      }
    }
  }
  if (record.grounded != BoxesOf(record.graph_gt, trace.grounded)) {
    problems.push_back("grounded boxes differ");
  }
  return problems;
}

std::vector<Box> ReferredUnion(const DatasetRecord& record) {
  std::vector<Box> out;
  for (const auto& step : record.referred) out.insert(out.end(), step.begin(), step.end());
  out.insert(out.end(), record.grounded.begin(), record.grounded.end());
  return out;
}

}  // namespace sgr
