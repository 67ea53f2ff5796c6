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

#include "sgr/diagnosis.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
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

constexpr std::array<std::string_view, 2> kTypes = {"open", "binary"};
constexpr std::array<std::string_view, 3> kSemantics = {"object", "attribute", "relation"};

double Round2(double x) { return std::round(x * 100.0) / 100.0; }

double Percent(int num, int den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

ExecOutcome Failure(const std::exception& e) {
  ExecOutcome out;
  out.error = e.what();
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    out.fatal = err->code() != ErrorCode::kUnanswerable &&
                err->code() != ErrorCode::kAmbiguous;
  } else {
    out.fatal = true;
  }
  return out;
}

std::string CsvField(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw Error(ErrorCode::kParse, "unterminated quote in CSV line");
  return fields;
}

double ParseNumber(const std::string& s) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw Error(ErrorCode::kParse, "bad number '" + s + "' in report");
  }
  return v;
}

bool ParseBool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(ErrorCode::kParse, "bad boolean '" + s + "' in report");
}

}  // namespace

std::vector<double> AggregateAttention(const AttentionTensor& t) {
  if (t.layers <= 0 || t.heads <= 0 || t.tokens <= 0 || t.objects <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "attention tensor has an empty axis");
  }
  if (t.values.size() !=
      static_cast<size_t>(t.layers) * t.heads * t.tokens * t.objects) {
    throw Error(ErrorCode::kInvalidArgument, "attention tensor size mismatch");
  }
  std::vector<double> out(t.objects);
  std::vector<double> layer_mean(t.objects);
  for (int tok = 0; tok < t.tokens; ++tok) {
    std::fill(layer_mean.begin(), layer_mean.end(), 0.0);
    for (int l = 0; l < t.layers; ++l) {
      for (int k = 0; k < t.objects; ++k) {
        double head_max = t.at(l, 0, tok, k);
        for (int h = 1; h < t.heads; ++h) head_max = std::max(head_max, t.at(l, h, tok, k));
        layer_mean[k] += head_max;
      }
    }
    for (int k = 0; k < t.objects; ++k) {
      const double mean = layer_mean[k] / t.layers;
      out[k] = tok == 0 ? mean : std::max(out[k], mean);
    }
  }
  return out;
}

double GroundingAp(std::span<const double> attention,
                   std::span<const Box> detected,
                   std::span<const Box> gt_grounded, double iou_threshold) {
  if (attention.size() != detected.size()) {
    throw Error(ErrorCode::kInvalidArgument, "attention and detections differ in length");
  }
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "IoU threshold must lie in (0, 1]");
  }
  if (gt_grounded.empty()) {
    const bool any = std::any_of(attention.begin(), attention.end(),
                                 [](double a) { return a != 0.0; });
    return any ? 0.0 : 100.0;
  }
  std::vector<size_t> order(attention.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return attention[a] > attention[b]; });

  std::vector<bool> used(gt_grounded.size(), false);
  std::vector<double> recall, precision;
  int tp = 0;
  for (size_t r = 0; r < order.size(); ++r) {
    const Box& d = detected[order[r]];
    int best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gt_grounded.size(); ++g) {
      if (used[g]) continue;
      const double v = IoU(d, gt_grounded[g]);
      if (v >= iou_threshold && v > best_iou) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      used[best] = true;
      ++tp;
    }
    const bool group_end =
        r + 1 == order.size() || attention[order[r + 1]] != attention[order[r]];
    if (group_end) {
      recall.push_back(static_cast<double>(tp) / gt_grounded.size());
      precision.push_back(static_cast<double>(tp) / (r + 1));
    }
  }
  for (size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev = 0.0;
  for (size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev) * precision[i];
    prev = recall[i];
  }
  return 100.0 * ap;
}

ObjectRoles ClassifyRoles(std::span<const Box> detected,
                          std::span<const Box> referred, double overlap) {
  ObjectRoles roles;
  for (size_t i = 0; i < detected.size(); ++i) {
    const bool fg = std::any_of(referred.begin(), referred.end(),
                                [&](const Box& r) { return IoU(detected[i], r) > overlap; });
    (fg ? roles.foreground : roles.background).push_back(static_cast<int>(i));
  }
  return roles;
}

FlipStats FlippingRates(std::span<const std::string> before,
                        std::span<const std::string> after,
                        std::span<const std::string> gt) {
  if (before.size() != after.size() || before.size() != gt.size()) {
    throw Error(ErrorCode::kInvalidArgument, "flipping-rate inputs differ in length");
  }
  int correct_before = 0, correct_after = 0, c2i = 0, i2c = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const bool b = before[i] == gt[i];
    const bool a = after[i] == gt[i];
    correct_before += b;
    correct_after += a;
    c2i += b && !a;
    i2c += !b && a;
  }
  const int n = static_cast<int>(gt.size());
  FlipStats s;
  s.acc_before = Percent(correct_before, n);
  s.acc_after = Percent(correct_after, n);
  s.c2i = Percent(c2i, correct_before);
  s.i2c = Percent(i2c, n - correct_before);
  s.c2i_undefined = correct_before == 0;
  s.i2c_undefined = n - correct_before == 0;
  return s;
}

Executor SymbolicExecutor(const Vocabulary& vocab) {
  return [&vocab](const Program& program, const ProbabilisticSceneGraph& graph) {
    try {
      const ExecutionTrace trace = ExecuteSymbolic(program, DecodeSymbolic(graph), vocab);
      ExecOutcome out;
      out.ok = true;
      out.answer = trace.answer;
      out.attention.assign(graph.size(), 0.0);
      for (int k : trace.grounded) out.attention[k] = 1.0;
      return out;
    } catch (const std::exception& e) {
      return Failure(e);
    }
  };
}

Executor NeuralExecutor(const Vocabulary& vocab, const ExecutorParams& params) {
  return [&vocab, params](const Program& program, const ProbabilisticSceneGraph& graph) {
    try {
      SoftTrace trace = ExecuteNeural(program, graph, vocab, params);
      ExecOutcome out;
      out.ok = true;
      out.answer = std::move(trace.answer);
      out.attention = std::move(trace.attention);
      return out;
    } catch (const std::exception& e) {
      return Failure(e);
    }
  };
}

std::string QuestionType(const Program& program) {
  const int t = program.TerminalStep();
  if (t >= 0 && IsBoolean(program.steps[t].op)) return "binary";
  return "open";
}

std::string SemanticType(const Program& program, const Vocabulary& vocab) {
  bool attribute = false;
  for (const Operation& op : program.steps) {
    if (op.op == Operator::kRelate) return "relation";
    if (op.op == Operator::kCommon) attribute = true;
    if (const Concept* c = vocab.FindConcept(op.concept_name);
        c != nullptr && c->kind == ConceptKind::kAttribute) {
      attribute = true;
    }
  }
  return attribute ? "attribute" : "object";
}

int DiagnosisReport::Failures() const {
  int n = 0;
  for (const auto& q : per_question) {
    n += !q.error.empty() && q.error.rfind("fatal: ", 0) == 0;
  }
  return n;
}

void Aggregate(DiagnosisReport& report) {
  report.grounding.clear();
  report.robustness.clear();
  const auto& qs = report.per_question;
  auto bucket = [&](const std::string& name, auto pred) {
    GroundingRow row{name, 0, 0.0};
    for (const auto& q : qs) {
      if (!pred(q)) continue;
      ++row.count;
      row.ap += q.ap;
    }
    if (row.count == 0) return;
    row.ap = Round2(row.ap / row.count);
    report.grounding.push_back(row);
  };
  bucket("overall", [](const QuestionResult&) { return true; });
  for (auto type : kTypes) {
    for (auto sem : kSemantics) {
      bucket(std::string(type) + "/" + std::string(sem),
             [&](const QuestionResult& q) { return q.type == type && q.semantic == sem; });
    }
  }

  std::set<std::string> names;
  for (const auto& q : qs) {
    for (const auto& [name, answer] : q.perturbed) names.insert(name);
  }
  for (const auto& name : names) {
    std::vector<std::string> before, after, gt;
    for (const auto& q : qs) {
      auto it = q.perturbed.find(name);
      if (it == q.perturbed.end()) continue;
      before.push_back(q.correct ? q.gt_answer : q.answer);
      after.push_back(it->second);
      gt.push_back(q.gt_answer);
    }
    const FlipStats s = FlippingRates(before, after, gt);
    report.robustness.push_back({name, static_cast<int>(gt.size()), Round2(s.acc_before),
                                 Round2(s.acc_after), Round2(s.c2i), Round2(s.i2c),
                                 s.c2i_undefined, s.i2c_undefined});
  }
}

DiagnosisReport RunPerturbationSuite(std::span<const EvalItem> items,
                                     const Executor& executor,
                                     std::span<const PerturbationSpec> specs,
                                     const Vocabulary& vocab,
                                     const SuiteOptions& options) {
  for (const auto& spec : specs) ValidatePerturbationSpec(spec);
  DiagnosisReport report;
  report.per_question.resize(items.size());
  ParallelFor(static_cast<int>(items.size()), options.jobs, [&](int i) {
    const EvalItem& item = items[i];
    QuestionResult& q = report.per_question[i];
    q.id = item.id;
    q.type = QuestionType(item.program);
    q.semantic = SemanticType(item.program, vocab);
    q.gt_answer = item.gt_answer;
    const ExecOutcome base = executor(item.program, item.graph);
    if (base.ok) {
      q.answer = base.answer;
      q.correct = base.answer == item.gt_answer;
      q.ap = Round2(GroundingAp(base.attention, item.graph.boxes, item.grounded,
                                options.grounding_iou));
    } else {
      q.error = (base.fatal ? "fatal: " : "") + base.error;
    }
    const ObjectRoles roles =
        ClassifyRoles(item.graph.boxes, item.referred, options.foreground_iou);
    for (const auto& spec : specs) {
      ProbabilisticSceneGraph perturbed;
      switch (spec.kind) {
        case PerturbationKind::kBackgroundRemoval:
          perturbed = RemoveObjects(item.graph, roles.background).graph;
          break;
        case PerturbationKind::kForegroundRemoval:
          perturbed = RemoveObjects(item.graph, roles.foreground).graph;
          break;
        case PerturbationKind::kRandomize:
          perturbed = RandomizeScores(item.graph, DeriveSeed(spec.seed, i), spec.noise_scale);
          break;
      }
      const ExecOutcome out = executor(item.program, perturbed);
      q.perturbed[std::string(PerturbationKindName(spec.kind))] = out.ok ? out.answer : "";
    }
  });
  Aggregate(report);
  return report;
}

ReportFormat ParseReportFormat(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + std::string(name) + "'");
}

std::string FormatPercent(double value) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << value;
  return os.str();
}

namespace {

Json ReportToJsonValue(const DiagnosisReport& r) {
  Json grounding = Json::array();
  for (const auto& g : r.grounding) {
    grounding.push_back({{"bucket", g.bucket}, {"count", g.count}, {"ap", g.ap}});
  }
  Json robustness = Json::array();
  for (const auto& row : r.robustness) {
    robustness.push_back({{"perturbation", row.perturbation},
                          {"count", row.count},
                          {"acc_before", row.acc_before},
                          {"accuracy", row.accuracy},
                          {"c2i", row.c2i},
                          {"i2c", row.i2c},
                          {"c2i_undefined", row.c2i_undefined},
                          {"i2c_undefined", row.i2c_undefined}});
  }
  Json per_question = Json::array();
  for (const auto& q : r.per_question) {
    per_question.push_back({{"id", q.id},
                            {"type", q.type},
                            {"semantic", q.semantic},
                            {"answer", q.answer},
                            {"gt_answer", q.gt_answer},
                            {"correct", q.correct},
                            {"ap", q.ap},
                            {"error", q.error},
                            {"perturbed", q.perturbed}});
  }
  return {{"grounding", grounding}, {"robustness", robustness}, {"per_question", per_question}};
}

std::string EmitCsv(const DiagnosisReport& r) {
  std::ostringstream os;
  os << "section,key,field,value\n";
  auto row = [&](std::string_view section, std::string_view key, std::string_view field,
                 std::string_view value) {
    os << section << ',' << CsvField(key) << ',' << CsvField(field) << ',' << CsvField(value)
       << '\n';
  };
  auto b = [](bool v) { return v ? "true" : "false"; };
  for (const auto& g : r.grounding) {
    row("grounding", g.bucket, "count", std::to_string(g.count));
    row("grounding", g.bucket, "ap", FormatPercent(g.ap));
  }
  for (const auto& x : r.robustness) {
    row("robustness", x.perturbation, "count", std::to_string(x.count));
    row("robustness", x.perturbation, "acc_before", FormatPercent(x.acc_before));
    row("robustness", x.perturbation, "accuracy", FormatPercent(x.accuracy));
    row("robustness", x.perturbation, "c2i", FormatPercent(x.c2i));
    row("robustness", x.perturbation, "i2c", FormatPercent(x.i2c));
    row("robustness", x.perturbation, "c2i_undefined", b(x.c2i_undefined));
    row("robustness", x.perturbation, "i2c_undefined", b(x.i2c_undefined));
  }
  for (const auto& q : r.per_question) {
    row("per_question", q.id, "type", q.type);
    row("per_question", q.id, "semantic", q.semantic);
    row("per_question", q.id, "answer", q.answer);
    row("per_question", q.id, "gt_answer", q.gt_answer);
    row("per_question", q.id, "correct", b(q.correct));
    row("per_question", q.id, "ap", FormatPercent(q.ap));
    row("per_question", q.id, "error", q.error);
    for (const auto& [name, answer] : q.perturbed) {
      row("per_question", q.id, "perturbed." + name, answer);
    }
  }
  return os.str();
}

std::string EmitMarkdown(const DiagnosisReport& r) {
  std::ostringstream os;
  os << "## Grounding\n\n| Overall |";
  for (auto type : kTypes) {
    for (auto sem : kSemantics) {
      os << ' ' << (type == "open" ? "Open" : "Binary") << ' '
         << (sem == "object" ? "Object" : sem == "attribute" ? "Attribute" : "Relation")
         << " |";
    }
  }
  os << "\n|---|---|---|---|---|---|---|\n";
  if (!r.grounding.empty()) {
    auto cell = [&](const std::string& bucket) {
      for (const auto& g : r.grounding) {
        if (g.bucket == bucket) return FormatPercent(g.ap);
      }
      return std::string("-");
    };
    os << "| " << cell("overall") << " |";
    for (auto type : kTypes) {
      for (auto sem : kSemantics) {
        os << ' ' << cell(std::string(type) + "/" + std::string(sem)) << " |";
      }
    }
    os << '\n';
  }
  os << "\n## Robustness\n\n| Perturbation | Val Acc. | Acc. | C→I | I→C |\n"
     << "|---|---|---|---|---|\n";
  for (const auto& x : r.robustness) {
    os << "| " << x.perturbation << " | " << FormatPercent(x.acc_before) << " | "
       << FormatPercent(x.accuracy) << " | " << FormatPercent(x.c2i) << " | "
       << FormatPercent(x.i2c) << " |\n";
  }
  return os.str();
}

}  // namespace

std::string EmitReport(const DiagnosisReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson:
      return ReportToJsonValue(report).dump(2) + "\n";
    case ReportFormat::kCsv:
      return EmitCsv(report);
    case ReportFormat::kMarkdown:
      return EmitMarkdown(report);
  }
  return {};
}

DiagnosisReport ReportFromJson(std::string_view text) {
  constexpr std::string_view kWhat = "report";
  const Json j = internal::ParseJson(text, kWhat);
  DiagnosisReport r;
  for (const auto& g : internal::Get<Json>(j, "grounding", kWhat)) {
    r.grounding.push_back({internal::Get<std::string>(g, "bucket", kWhat),
                           internal::Get<int>(g, "count", kWhat),
                           internal::Get<double>(g, "ap", kWhat)});
  }
  for (const auto& x : internal::Get<Json>(j, "robustness", kWhat)) {
    r.robustness.push_back({internal::Get<std::string>(x, "perturbation", kWhat),
                            internal::Get<int>(x, "count", kWhat),
                            internal::Get<double>(x, "acc_before", kWhat),
                            internal::Get<double>(x, "accuracy", kWhat),
                            internal::Get<double>(x, "c2i", kWhat),
                            internal::Get<double>(x, "i2c", kWhat),
                            internal::Get<bool>(x, "c2i_undefined", kWhat),
                            internal::Get<bool>(x, "i2c_undefined", kWhat)});
  }
  for (const auto& q : internal::Get<Json>(j, "per_question", kWhat)) {
    QuestionResult res;
    res.id = internal::Get<std::string>(q, "id", kWhat);
    res.type = internal::Get<std::string>(q, "type", kWhat);
    res.semantic = internal::Get<std::string>(q, "semantic", kWhat);
    res.answer = internal::Get<std::string>(q, "answer", kWhat);
    res.gt_answer = internal::Get<std::string>(q, "gt_answer", kWhat);
    res.correct = internal::Get<bool>(q, "correct", kWhat);
    res.ap = internal::Get<double>(q, "ap", kWhat);
    res.error = internal::Get<std::string>(q, "error", kWhat);
    res.perturbed =
        internal::Get<std::map<std::string, std::string>>(q, "perturbed", kWhat);
    r.per_question.push_back(std::move(res));
  }
  return r;
}

DiagnosisReport ReportFromCsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "section,key,field,value") {
    throw Error(ErrorCode::kParse, "report CSV header missing");
  }
  DiagnosisReport r;
  auto grounding = [&](const std::string& key) -> GroundingRow& {
    if (r.grounding.empty() || r.grounding.back().bucket != key) r.grounding.push_back({key});
    return r.grounding.back();
  };
  auto robustness = [&](const std::string& key) -> RobustnessRow& {
    if (r.robustness.empty() || r.robustness.back().perturbation != key) {
      r.robustness.push_back({key});
    }
    return r.robustness.back();
  };
  auto question = [&](const std::string& key) -> QuestionResult& {
    if (r.per_question.empty() || r.per_question.back().id != key) {
      r.per_question.emplace_back();
      r.per_question.back().id = key;
    }
    return r.per_question.back();
  };
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    if (f.size() != 4) {
      throw Error(ErrorCode::kParse, "report CSV line " + std::to_string(line_no) +
                                         " does not have 4 fields");
    }
    const std::string& section = f[0];
    const std::string& key = f[1];
    const std::string& field = f[2];
    const std::string& value = f[3];
    if (section == "grounding") {
      GroundingRow& g = grounding(key);
      if (field == "count") g.count = static_cast<int>(ParseNumber(value));
      else if (field == "ap") g.ap = ParseNumber(value);
      else throw Error(ErrorCode::kParse, "unknown grounding field '" + field + "'");
    } else if (section == "robustness") {
      RobustnessRow& x = robustness(key);
      if (field == "count") x.count = static_cast<int>(ParseNumber(value));
      else if (field == "acc_before") x.acc_before = ParseNumber(value);
      else if (field == "accuracy") x.accuracy = ParseNumber(value);
      else if (field == "c2i") x.c2i = ParseNumber(value);
      else if (field == "i2c") x.i2c = ParseNumber(value);
      else if (field == "c2i_undefined") x.c2i_undefined = ParseBool(value);
      else if (field == "i2c_undefined") x.i2c_undefined = ParseBool(value);
      else throw Error(ErrorCode::kParse, "unknown robustness field '" + field + "'");
    } else if (section == "per_question") {
      QuestionResult& q = question(key);
      if (field == "type") q.type = value;
      else if (field == "semantic") q.semantic = value;
      else if (field == "answer") q.answer = value;
      else if (field == "gt_answer") q.gt_answer = value;
      else if (field == "correct") q.correct = ParseBool(value);
      else if (field == "ap") q.ap = ParseNumber(value);
      else if (field == "error") q.error = value;
      else if (field.rfind("perturbed.", 0) == 0) q.perturbed[field.substr(10)] = value;
      else throw Error(ErrorCode::kParse, "unknown question field '" + field + "'");
    } else {
      throw Error(ErrorCode::kParse, "unknown report section '" + section + "'");
    }
  }
  return r;
}

}  // namespace sgr
