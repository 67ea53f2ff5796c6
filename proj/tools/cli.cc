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

#include "cli.h"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgr/datagen.h"
#include "sgr/dataset.h"
#include "sgr/diagnosis.h"
#include "sgr/error.h"
#include "sgr/exec_neural.h"
#include "sgr/exec_symbolic.h"
#include "sgr/io.h"
#include "sgr/parallel.h"
#include "sgr/pipeline.h"
#include "sgr/training.h"

namespace sgr::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// Raised for flag combinations that are wrong before any work starts.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string vocab;
  int jobs = 1;
};

struct ExecFlags {
  std::string data;
  std::string mode = "neural";
  std::string params;
  bool exact = false;
  std::optional<std::string> relate_reduce;
  std::optional<double> threshold;
  std::string graphs = "pred";
};

struct GenFlags {
  std::optional<uint64_t> seed;
  GenSpec spec;
  std::vector<double> weights;
  std::string out;
  std::string manifest;
};

struct TrainFlags {
  std::string data;
  std::string params;
  std::optional<uint64_t> seed;
  TrainConfig config;
  std::string out;
  std::string loss_out;
};

struct DiagnoseFlags {
  ExecFlags exec;
  std::vector<std::string> perturb = {"bg", "fg", "rand"};
  std::optional<uint64_t> seed;
  double iou = kGroundingIoU;
  double fg_iou = kForegroundIoU;
  std::vector<std::string> formats = {"json"};
  std::string out;
};

struct ReportFlags {
  std::string in;
  std::vector<std::string> formats = {"markdown"};
  std::string out;
};

template <typename F>
auto AsUsage(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

Vocabulary LoadVocab(const Common& common) {
  if (common.vocab.empty()) return MiniVocabulary();
  return LoadVocabulary(common.vocab);
}

void RequireSeed(const std::optional<uint64_t>& seed, std::string_view cmd) {
  if (!seed) throw UsageError(std::string(cmd) + ": --seed is required");
}

void CheckJobs(int jobs) {
  if (jobs < 1) throw UsageError("--jobs must be at least 1");
}

ExecutorParams ResolveParams(const ExecFlags& f) {
  return AsUsage([&] {
    ExecutorParams p;
    if (f.exact) {
      if (!f.params.empty()) throw Error(ErrorCode::kInvalidArgument, "--exact conflicts with --params");
      p = ExecutorParams::ExactMode();
    } else if (!f.params.empty()) {
      p = ParamsFromJson(ReadTextFile(f.params));
    }
    if (f.relate_reduce) p.relate_reduce = ParseRelateReduce(*f.relate_reduce);
    if (f.threshold) p.pointing_threshold = *f.threshold;
    ValidateParams(p);
    return p;
  });
}

void CheckExecFlags(const ExecFlags& f) {
  AsUsage([&] {
    ParseGraphSource(f.graphs);
    if (f.relate_reduce) ParseRelateReduce(*f.relate_reduce);
    return 0;
  });
  if (f.mode == "symbolic" && (f.exact || !f.params.empty() || f.relate_reduce || f.threshold)) {
    throw UsageError("executor flags require --mode neural");
  }
}

std::vector<std::string> SplitOutputs(const std::string& out,
                                      const std::vector<std::string>& formats) {
  std::vector<std::string> paths;
  for (const auto& name : formats) {
    if (out.empty() || formats.size() == 1) {
      paths.push_back(out);
      continue;
    }
    const ReportFormat f = ParseReportFormat(name);
    const char* ext = f == ReportFormat::kJson ? ".json" : f == ReportFormat::kCsv ? ".csv" : ".md";
    paths.push_back(fs::path(out).replace_extension(ext).string());
  }
  return paths;
}

void WriteReports(const DiagnosisReport& report, const std::vector<std::string>& formats,
                  const std::string& out, std::ostream& os) {
  const auto paths = SplitOutputs(out, formats);
  for (size_t i = 0; i < formats.size(); ++i) {
    const std::string text = EmitReport(report, ParseReportFormat(formats[i]));
    if (paths[i].empty()) {
      os << text;
    } else {
      WriteFileAtomic(paths[i], text);
      os << "wrote " << paths[i] << "\n";
    }
  }
}

int CmdGen(const Common& common, GenFlags f, std::ostream& os) {
  RequireSeed(f.seed, "gen");
  CheckJobs(common.jobs);
  f.spec.seed = *f.seed;
  if (!f.weights.empty()) {
    if (f.weights.size() != f.spec.template_weights.size()) {
      throw UsageError("--weights takes exactly 10 values");
    }
    std::copy(f.weights.begin(), f.weights.end(), f.spec.template_weights.begin());
  }
  AsUsage([&] {
    ValidateGenSpec(f.spec);
    return 0;
  });
  const Vocabulary vocab = LoadVocab(common);
  const GeneratedDataset data = GenerateDataset(f.spec, vocab, common.jobs);
  const std::string manifest = f.manifest.empty() ? f.out + ".manifest.json" : f.manifest;
  WriteFileAtomic(f.out, DatasetToJsonLines(data.records, vocab));
  WriteFileAtomic(manifest, ManifestJson(f.spec, data));
  int skipped = 0;
  for (const auto& [reason, n] : data.skipped) skipped += n;
  os << "wrote " << data.records.size() << " records to " << f.out << " (" << skipped
     << " questions skipped)\n";
  return kExitOk;
}

int CmdValidate(const Common& common, const std::string& data, std::ostream& os) {
  CheckJobs(common.jobs);
  const Vocabulary vocab = LoadVocab(common);
  const auto records = ReadDataset(data, vocab);
  std::vector<std::vector<std::string>> problems(records.size());
  ParallelFor(static_cast<int>(records.size()), common.jobs,
              [&](int i) { problems[i] = ValidateRecord(records[i], vocab); });
  std::set<std::string> seen;
  int bad = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!seen.insert(records[i].id).second) problems[i].push_back("duplicate id");
    if (problems[i].empty()) continue;
    ++bad;
    for (const auto& p : problems[i]) os << records[i].id << ": " << p << "\n";
  }
  os << records.size() - bad << "/" << records.size() << " records valid\n";
  return bad == 0 ? kExitOk : kExitFailure;
}

Json StepToJson(const SoftStep& s) {
  switch (s.kind) {
    case SoftStep::Kind::kPointing:
      return {{"selected", s.selection.indices},
              {"scores", s.selection.scores},
              {"fallback", s.selection.fallback}};
    case SoftStep::Kind::kBoolean:
      return {{"logit", s.logit}};
    case SoftStep::Kind::kAnswer:
      return {{"answer", s.distribution.answer()},
              {"candidates", s.distribution.candidates},
              {"probs", s.distribution.probs}};
  }
  return {};
}

Json StepToJson(const StepValue& s) {
  switch (s.kind) {
    case StepValue::Kind::kObjects:
      return {{"selected", s.objects}};
    case StepValue::Kind::kBoolean:
      return {{"boolean", s.boolean}};
    case StepValue::Kind::kAnswer:
      return {{"answer", s.answer}};
  }
  return {};
}

int CmdExec(const Common& common, const ExecFlags& f, const std::string& out,
            std::ostream& os) {
  CheckJobs(common.jobs);
  CheckExecFlags(f);
  const ExecutorParams params = ResolveParams(f);
  const GraphSource source = ParseGraphSource(f.graphs);
  const Vocabulary vocab = LoadVocab(common);
  const auto records = ReadDataset(f.data, vocab);
  std::vector<std::string> lines(records.size());
  std::vector<int> status(records.size());  // 1 correct, 0 wrong, -1 failed
  ParallelFor(static_cast<int>(records.size()), common.jobs, [&](int i) {
    const DatasetRecord& r = records[i];
    Json j = {{"id", r.id}, {"gt_answer", r.program.answer.value_or("")}};
    try {
      const ProbabilisticSceneGraph graph = RecordGraph(r, vocab, source);
      Json steps = Json::array();
      std::string answer;
      if (f.mode == "symbolic") {
        const ExecutionTrace t = ExecuteSymbolic(r.program, DecodeSymbolic(graph), vocab);
        for (const auto& s : t.steps) steps.push_back(StepToJson(s));
        answer = t.answer;
      } else {
        const SoftTrace t = ExecuteNeural(r.program, graph, vocab, params);
        for (const auto& s : t.steps) steps.push_back(StepToJson(s));
        j["attention"] = t.attention;
        answer = t.answer;
      }
      const bool correct = answer == r.program.answer.value_or("");
      j["answer"] = answer;
      j["correct"] = correct;
      j["steps"] = steps;
      status[i] = correct ? 1 : 0;
    } catch (const Error& e) {
      j["error"] = std::string(ErrorCodeName(e.code())) + ": " + e.what();
      status[i] = -1;
    }
    lines[i] = j.dump() + "\n";
  });
  int correct = 0, failed = 0;
  for (int s : status) {
    correct += s == 1;
    failed += s == -1;
  }
  if (!out.empty()) {
    std::string text;
    for (const auto& l : lines) text += l;
    WriteFileAtomic(out, text);
  }
  const double acc = records.empty() ? 0.0 : 100.0 * correct / static_cast<double>(records.size());
  os << "accuracy " << FormatPercent(acc) << " (" << correct << "/" << records.size()
     << "), failures " << failed << "\n";
  const bool all_failed = !records.empty() && failed == static_cast<int>(records.size());
  return all_failed ? kExitFailure : kExitOk;
}

int CmdTrain(const Common& common, TrainFlags f, std::ostream& os) {
  RequireSeed(f.seed, "train");
  CheckJobs(common.jobs);
  f.config.seed = *f.seed;
  f.config.jobs = common.jobs;
  AsUsage([&] {
    ValidateTrainConfig(f.config);
    return 0;
  });
  ExecutorParams init;
  if (!f.params.empty()) {
    init = AsUsage([&] { return ParamsFromJson(ReadTextFile(f.params)); });
  }
  const Vocabulary vocab = LoadVocab(common);
  const auto records = ReadDataset(f.data, vocab);
  const TrainingSet set = BuildTrainingSet(records, vocab, common.jobs);
  if (set.samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no trainable records");
  const TrainResult result = Train(init, set.samples, vocab, f.config);
  const std::string loss_out = f.loss_out.empty() ? f.out + ".loss.csv" : f.loss_out;
  WriteFileAtomic(f.out, ParamsToJson(result.params));
  WriteFileAtomic(loss_out, LossCurveCsv(result.loss_curve));
  os << "trained on " << set.samples.size() << " samples (" << set.skipped.size()
     << " skipped); final loss " << result.loss_curve.back() << "\n";
  return kExitOk;
}

int CmdDiagnose(const Common& common, const DiagnoseFlags& f, std::ostream& os) {
  CheckJobs(common.jobs);
  CheckExecFlags(f.exec);
  const ExecutorParams params = ResolveParams(f.exec);
  std::vector<PerturbationSpec> specs;
  AsUsage([&] {
    for (const auto& name : f.perturb) {
      PerturbationSpec s;
      s.kind = ParsePerturbationKind(name);
      s.seed = f.seed.value_or(0);
      specs.push_back(s);
    }
    for (const auto& name : f.formats) ParseReportFormat(name);
    return 0;
  });
  const bool stochastic = std::any_of(specs.begin(), specs.end(), [](const auto& s) {
    return s.kind == PerturbationKind::kRandomize;
  });
  if (stochastic) RequireSeed(f.seed, "diagnose with rand");
  if (!(f.iou > 0.0 && f.iou <= 1.0)) throw UsageError("--iou must lie in (0, 1]");
  if (!(f.fg_iou >= 0.0 && f.fg_iou < 1.0)) throw UsageError("--fg-iou must lie in [0, 1)");
  const Vocabulary vocab = LoadVocab(common);
  const auto records = ReadDataset(f.exec.data, vocab);
  const auto items = BuildEvalItems(records, vocab, ParseGraphSource(f.exec.graphs), common.jobs);
  const Executor executor =
      f.exec.mode == "symbolic" ? SymbolicExecutor(vocab) : NeuralExecutor(vocab, params);
  SuiteOptions options;
  options.grounding_iou = f.iou;
  options.foreground_iou = f.fg_iou;
  options.jobs = common.jobs;
  const DiagnosisReport report = RunPerturbationSuite(items, executor, specs, vocab, options);
  WriteReports(report, f.formats, f.out, os);
  const int failures = report.Failures();
  if (failures > 0) {
    os << failures << " questions failed to evaluate\n";
    return kExitFailure;
  }
  return kExitOk;
}

int CmdReport(const ReportFlags& f, std::ostream& os) {
  AsUsage([&] {
    for (const auto& name : f.formats) ParseReportFormat(name);
    return 0;
  });
  const std::string text = ReadTextFile(f.in);
  const size_t first = text.find_first_not_of(" \t\r\n");
  const bool json = first != std::string::npos && text[first] == '{';
  const DiagnosisReport report = json ? ReportFromJson(text) : ReportFromCsv(text);
  WriteReports(report, f.formats, f.out, os);
  return kExitOk;
}

void AddExecFlags(CLI::App* cmd, ExecFlags& f) {
  cmd->add_option("--data", f.data, "Dataset JSON-lines file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--mode", f.mode, "Executor")
      ->check(CLI::IsMember({"symbolic", "neural"}))
      ->capture_default_str();
  cmd->add_option("--params", f.params, "Executor parameters JSON")->check(CLI::ExistingFile);
  cmd->add_flag("--exact", f.exact, "Exact-mode parameters");
  cmd->add_option("--relate-reduce", f.relate_reduce, "softmax_avg or max")
      ->check(CLI::IsMember({"softmax_avg", "max"}));
  cmd->add_option("--threshold", f.threshold, "Pointing threshold (default 5.0)");
  cmd->add_option("--graphs", f.graphs, "Evaluate on predicted or one-hot ground-truth graphs")
      ->check(CLI::IsMember({"pred", "onehot"}))
      ->capture_default_str();
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scene-graph reasoning: program execution, training and diagnosis", "sgr"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--vocab", common.vocab, "Vocabulary JSON (default: built-in miniature)")
      ->check(CLI::ExistingFile);
  app.add_option("--jobs", common.jobs, "Worker threads")->capture_default_str();

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--scenes", gen.spec.num_scenes, "Number of scenes")->capture_default_str();
  gen_cmd->add_option("--questions", gen.spec.questions_per_scene, "Questions per scene")
      ->capture_default_str();
  gen_cmd->add_option("--min-objects", gen.spec.min_objects)->capture_default_str();
  gen_cmd->add_option("--max-objects", gen.spec.max_objects)->capture_default_str();
  gen_cmd->add_option("--min-distractors", gen.spec.min_distractors)->capture_default_str();
  gen_cmd->add_option("--max-distractors", gen.spec.max_distractors)->capture_default_str();
  gen_cmd->add_option("--weights", gen.weights, "Template weights in operator order");
  gen_cmd->add_option("--noise-sd", gen.spec.noise_sd, "Prediction logit noise")->capture_default_str();
  gen_cmd->add_option("--flip-rate", gen.spec.flip_rate, "Prediction category flip rate")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dataset output path")->required();
  gen_cmd->add_option("--manifest", gen.manifest, "Manifest path (default <out>.manifest.json)");

  std::string validate_data;
  auto* validate_cmd = app.add_subcommand("validate", "Check a dataset against fresh symbolic runs");
  validate_cmd->add_option("--data", validate_data, "Dataset JSON-lines file")
      ->required()
      ->check(CLI::ExistingFile);

  ExecFlags exec;
  std::string exec_out;
  auto* exec_cmd = app.add_subcommand("exec", "Execute every program of a dataset");
  AddExecFlags(exec_cmd, exec);
  exec_cmd->add_option("--out", exec_out, "Per-question traces (JSON lines)");

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Teacher-forcing training");
  train_cmd->add_option("--data", train.data, "Dataset JSON-lines file")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--params", train.params, "Initial parameters (default: untrained)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", train.seed, "Batch order seed");
  train_cmd->add_option("--lr", train.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--iterations", train.config.iterations)->capture_default_str();
  train_cmd->add_option("--batch", train.config.batch_size)->capture_default_str();
  train_cmd->add_option("--w-pointing", train.config.weights.pointing)->capture_default_str();
  train_cmd->add_option("--w-binary", train.config.weights.binary)->capture_default_str();
  train_cmd->add_option("--w-answer", train.config.weights.answer)->capture_default_str();
  train_cmd->add_option("--out", train.out, "Trained parameters output")->required();
  train_cmd->add_option("--loss-out", train.loss_out, "Loss curve CSV (default <out>.loss.csv)");

  DiagnoseFlags diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Grounding AP and perturbation robustness");
  AddExecFlags(diag_cmd, diag.exec);
  diag_cmd->add_option("--perturb", diag.perturb, "Perturbations: bg, fg, rand")->capture_default_str();
  diag_cmd->add_option("--seed", diag.seed, "Randomization seed");
  diag_cmd->add_option("--iou", diag.iou, "Grounding IoU threshold")->capture_default_str();
  diag_cmd->add_option("--fg-iou", diag.fg_iou, "Foreground overlap threshold")->capture_default_str();
  diag_cmd->add_option("--format", diag.formats, "json, csv, markdown")->capture_default_str();
  diag_cmd->add_option("--out", diag.out, "Report path (stdout if omitted)");

  ReportFlags report;
  auto* report_cmd = app.add_subcommand("report", "Convert a report between formats");
  report_cmd->add_option("--in", report.in, "Report JSON or CSV")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--format", report.formats, "json, csv, markdown")->capture_default_str();
  report_cmd->add_option("--out", report.out, "Output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return CmdGen(common, gen, out);
    if (*validate_cmd) return CmdValidate(common, validate_data, out);
    if (*exec_cmd) return CmdExec(common, exec, exec_out, out);
    if (*train_cmd) return CmdTrain(common, train, out);
    if (*diag_cmd) return CmdDiagnose(common, diag, out);
    if (*report_cmd) return CmdReport(report, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace sgr::cli
