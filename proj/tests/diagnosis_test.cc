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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "sgr/datagen.h"
#include "sgr/diagnosis.h"
#include "sgr/error.h"
#include "sgr/pipeline.h"
#include "test_util.h"

namespace sgr {
namespace {

// Disjoint unit cells along a 4 x 4 grid.
std::vector<Box> Grid(int n) {
  std::vector<Box> out;
  for (int i = 0; i < n; ++i) {
    const double x = (i % 4) * 0.25, y = (i / 4) * 0.25;
    out.push_back(MakeBox(x + 0.01, y + 0.01, x + 0.24, y + 0.24));
  }
  return out;
}

// Threshold sweep over every distinct score for disjoint detections whose
// positives coincide with ground-truth boxes.
double SweepAp(const std::vector<double>& att, const std::vector<bool>& positive, int num_gt) {
  std::set<double, std::greater<>> thresholds(att.begin(), att.end());
  std::vector<std::pair<double, double>> pr;  // (recall, precision)
  for (double t : thresholds) {
    int kept = 0, tp = 0;
    for (size_t i = 0; i < att.size(); ++i) {
      if (att[i] >= t) ++kept, tp += positive[i];
    }
    pr.push_back({static_cast<double>(tp) / num_gt, static_cast<double>(tp) / kept});
  }
  double ap = 0.0, prev = 0.0;
  for (size_t i = 0; i < pr.size(); ++i) {
    double best = 0.0;
    for (size_t j = i; j < pr.size(); ++j) best = std::max(best, pr[j].second);
    ap += (pr[i].first - prev) * best;
    prev = pr[i].first;
  }
  return 100.0 * ap;
}

TEST(AggregateAttention, MatchesLoops) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AttentionTensor t{2, 3, 4, 5, {}};
  for (int i = 0; i < 2 * 3 * 4 * 5; ++i) t.values.push_back(u(rng));
  const auto got = AggregateAttention(t);
  ASSERT_EQ(got.size(), 5u);
  for (int k = 0; k < 5; ++k) {
    double best = -1.0;
    for (int tok = 0; tok < 4; ++tok) {
      double sum = 0.0;
      for (int l = 0; l < 2; ++l) {
        double m = -1.0;
        for (int h = 0; h < 3; ++h) m = std::max(m, t.at(l, h, tok, k));
        sum += m;
      }
      best = std::max(best, sum / 2);
    }
    EXPECT_NEAR(got[k], best, 1e-15);
  }
}

TEST(AggregateAttention, ConstantAndSingleton) {
  AttentionTensor c{3, 2, 4, 6, std::vector<double>(3 * 2 * 4 * 6, 0.25)};
  for (double x : AggregateAttention(c)) EXPECT_DOUBLE_EQ(x, 0.25);
  AttentionTensor s{1, 1, 1, 3, {0.1, 0.7, 0.2}};
  EXPECT_EQ(AggregateAttention(s), (std::vector<double>{0.1, 0.7, 0.2}));
  AttentionTensor bad{1, 1, 1, 3, {0.1, 0.7}};
  EXPECT_THROW(AggregateAttention(bad), Error);
  AttentionTensor empty{0, 1, 1, 3, {}};
  EXPECT_THROW(AggregateAttention(empty), Error);
}

TEST(GroundingAp, Examples) {
  const auto d = Grid(3);
  const std::vector<double> att = {0.9, 0.8, 0.1};
  EXPECT_DOUBLE_EQ(GroundingAp(att, d, std::vector<Box>{d[0]}), 100.0);
  EXPECT_DOUBLE_EQ(GroundingAp(att, d, std::vector<Box>{d[1]}), 50.0);
  EXPECT_NEAR(GroundingAp(att, d, std::vector<Box>{d[2]}), 100.0 / 3, 1e-12);
  EXPECT_NEAR(GroundingAp(std::vector<double>{0.5, 0.5, 0.5}, d, std::vector<Box>{d[0]}),
              100.0 / 3, 1e-12);
  // A miss caps recall.
  const Box elsewhere = MakeBox(0.6, 0.6, 0.9, 0.9);
  EXPECT_DOUBLE_EQ(GroundingAp(att, d, std::vector<Box>{d[0], elsewhere}), 50.0);
}

TEST(GroundingAp, EmptyGroundTruth) {
  const auto d = Grid(3);
  EXPECT_EQ(GroundingAp(std::vector<double>{0, 0, 0}, d, {}), 100.0);
  EXPECT_EQ(GroundingAp(std::vector<double>{0, 0.2, 0}, d, {}), 0.0);
}

TEST(GroundingAp, Errors) {
  const auto d = Grid(3);
  EXPECT_THROW(GroundingAp(std::vector<double>{0.1, 0.2}, d, std::vector<Box>{d[0]}), Error);
  EXPECT_THROW(GroundingAp(std::vector<double>{0.1, 0.2, 0.3}, d, std::vector<Box>{d[0]}, 0.0),
               Error);
}

TEST(GroundingAp, MatchesThresholdSweepAndIsRankInvariant) {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 15;
    const auto d = Grid(n);
    std::vector<double> att(n);
    for (double& a : att) a = 0.25 * level(rng);
    std::vector<bool> pos(n);
    std::vector<Box> gt;
    for (int i = 0; i < n; ++i) {
      pos[i] = rng() % 3 == 0;
      if (pos[i]) gt.push_back(d[i]);
    }
    if (gt.empty()) continue;
    const double ap = GroundingAp(att, d, gt);
    EXPECT_NEAR(ap, SweepAp(att, pos, static_cast<int>(gt.size())), 1e-9);
    std::vector<double> warped;
    for (double a : att) warped.push_back(std::exp(3 * a) - 7);
    EXPECT_NEAR(GroundingAp(warped, d, gt), ap, 1e-9);
  }
}

TEST(ClassifyRoles, OverlapSplitsObjects) {
  const std::vector<Box> det = {MakeBox(0.0, 0.0, 0.2, 0.2), MakeBox(0.15, 0.15, 0.4, 0.4),
                                MakeBox(0.5, 0.5, 0.6, 0.6), MakeBox(0.2, 0.0, 0.3, 0.1)};
  const std::vector<Box> ref = {MakeBox(0.0, 0.0, 0.2, 0.2)};
  const ObjectRoles r = ClassifyRoles(det, ref);
  EXPECT_EQ(r.foreground, (std::vector<int>{0, 1}));
  // Touching edges have zero overlap.
  EXPECT_EQ(r.background, (std::vector<int>{2, 3}));
  const ObjectRoles strict = ClassifyRoles(det, ref, 0.5);
  EXPECT_EQ(strict.foreground, (std::vector<int>{0}));
  EXPECT_TRUE(ClassifyRoles(det, {}).foreground.empty());
}

TEST(ClassifyRoles, PermutationStable) {
  std::mt19937_64 rng(53);
  const Vocabulary v = MiniVocabulary();
  for (int t = 0; t < 50; ++t) {
    const auto g = testing::RandomGraph(v, rng, 10);
    std::vector<Box> det, ref;
    for (const auto& o : g.objects) det.push_back(o.box);
    ref = {det[0], det[3]};
    std::vector<int> perm(det.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Box> shuffled;
    for (int p : perm) shuffled.push_back(det[p]);
    const ObjectRoles a = ClassifyRoles(det, ref);
    const ObjectRoles b = ClassifyRoles(shuffled, ref);
    std::vector<int> mapped;
    for (int k : b.foreground) mapped.push_back(perm[k]);
    std::sort(mapped.begin(), mapped.end());
    EXPECT_EQ(mapped, a.foreground);
    EXPECT_EQ(a.foreground.size() + a.background.size(), det.size());
  }
}

TEST(FlippingRates, Examples) {
  const std::vector<std::string> gt = {"a", "b", "c", "d"};
  const std::vector<std::string> before = {"a", "b", "x", "x"};
  const std::vector<std::string> after = {"a", "x", "c", "x"};
  const FlipStats s = FlippingRates(before, after, gt);
  EXPECT_DOUBLE_EQ(s.acc_before, 50.0);
  EXPECT_DOUBLE_EQ(s.acc_after, 50.0);
  EXPECT_DOUBLE_EQ(s.c2i, 50.0);
  EXPECT_DOUBLE_EQ(s.i2c, 50.0);
  EXPECT_FALSE(s.c2i_undefined || s.i2c_undefined);

  const FlipStats all = FlippingRates(gt, gt, gt);
  EXPECT_EQ(all.c2i, 0.0);
  EXPECT_EQ(all.i2c, 0.0);
  EXPECT_TRUE(all.i2c_undefined);
  EXPECT_FALSE(all.c2i_undefined);
  EXPECT_THROW(FlippingRates(before, std::vector<std::string>{"a"}, gt), Error);
}

TEST(Report, PercentFormatting) {
  EXPECT_EQ(FormatPercent(56.3), "56.30");
  EXPECT_EQ(FormatPercent(5.92), "5.92");
  EXPECT_EQ(FormatPercent(100.0), "100.00");
  EXPECT_EQ(FormatPercent(0.0), "0.00");
}

TEST(Report, MarkdownRendersRobustnessRows) {
  DiagnosisReport r;
  r.robustness = {{"bg", 100, 53.73, 56.30, 5.92, 12.71, false, false},
                  {"fg", 100, 53.73, 46.99, 42.10, 7.65, false, false}};
  const std::string md = EmitReport(r, ReportFormat::kMarkdown);
  EXPECT_NE(md.find("| Perturbation | Val Acc. | Acc. | C→I | I→C |"), std::string::npos);
  EXPECT_NE(md.find("| bg | 53.73 | 56.30 | 5.92 | 12.71 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| fg | 53.73 | 46.99 | 42.10 | 7.65 |"), std::string::npos) << md;
}

TEST(Report, EmptyReportHasOnlyHeaders) {
  const DiagnosisReport r;
  EXPECT_EQ(EmitReport(r, ReportFormat::kCsv), "section,key,field,value\n");
  const std::string md = EmitReport(r, ReportFormat::kMarkdown);
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 9);
  EXPECT_EQ(ReportFromJson(EmitReport(r, ReportFormat::kJson)), r);
}

TEST(Report, FormatNames) {
  EXPECT_EQ(ParseReportFormat("json"), ReportFormat::kJson);
  EXPECT_EQ(ParseReportFormat("csv"), ReportFormat::kCsv);
  EXPECT_EQ(ParseReportFormat("markdown"), ReportFormat::kMarkdown);
  EXPECT_THROW(ParseReportFormat("xml"), Error);
}

TEST(ProgramTypes, QuestionAndSemanticBuckets) {
  const Vocabulary v = testing::StreetVocabulary();
  auto sem = [&](const char* p) { return SemanticType(ParseProgram(p, v), v); };
  EXPECT_EQ(sem(testing::kStreetProgram), "relation");
  EXPECT_EQ(sem("0: filter(object, car); 1: query(color)[0]"), "attribute");
  EXPECT_EQ(sem("0: filter(object, car); 1: exist()[0]"), "object");
  EXPECT_EQ(QuestionType(ParseProgram("0: filter(object, car); 1: exist()[0]", v)), "binary");
  EXPECT_EQ(QuestionType(ParseProgram(testing::kStreetProgram, v)), "open");
}

class SuiteTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    vocab_ = new Vocabulary(MiniVocabulary());
    GenSpec spec;
    spec.seed = 54;
    spec.num_scenes = 50;
    spec.noise_sd = 1.5;
    spec.flip_rate = 0.1;
    records_ = new std::vector<DatasetRecord>(GenerateDataset(spec, *vocab_).records);
  }
  static void TearDownTestSuite() {
    delete records_;
    delete vocab_;
  }
  static std::vector<PerturbationSpec> Specs() {
    return {{PerturbationKind::kBackgroundRemoval, 0},
            {PerturbationKind::kForegroundRemoval, 0},
            {PerturbationKind::kRandomize, 55}};
  }
  static Vocabulary* vocab_;
  static std::vector<DatasetRecord>* records_;
};
Vocabulary* SuiteTest::vocab_ = nullptr;
std::vector<DatasetRecord>* SuiteTest::records_ = nullptr;

TEST_F(SuiteTest, TablesMatchRecount) {
  const auto items = BuildEvalItems(*records_, *vocab_, GraphSource::kPredicted);
  const auto specs = Specs();
  const DiagnosisReport r =
      RunPerturbationSuite(items, NeuralExecutor(*vocab_, ExecutorParams()), specs, *vocab_);
  ASSERT_EQ(r.per_question.size(), items.size());
  EXPECT_EQ(r.Failures(), 0);
  double ap = 0.0;
  for (const auto& q : r.per_question) ap += q.ap;
  ASSERT_FALSE(r.grounding.empty());
  EXPECT_EQ(r.grounding[0].bucket, "overall");
  EXPECT_NEAR(r.grounding[0].ap, ap / items.size(), 0.005 + 1e-9);
  ASSERT_EQ(r.robustness.size(), 3u);
  for (const RobustnessRow& row : r.robustness) {
    int cb = 0, ca = 0, c2i = 0, i2c = 0;
    for (const auto& q : r.per_question) {
      const bool a = q.perturbed.at(row.perturbation) == q.gt_answer;
      cb += q.correct;
      ca += a;
      c2i += q.correct && !a;
      i2c += !q.correct && a;
    }
    const double n = static_cast<double>(items.size());
    EXPECT_EQ(row.count, static_cast<int>(items.size()));
    EXPECT_NEAR(row.acc_before, 100.0 * cb / n, 0.005 + 1e-9);
    EXPECT_NEAR(row.accuracy, 100.0 * ca / n, 0.005 + 1e-9);
    EXPECT_NEAR(row.c2i, 100.0 * c2i / cb, 0.005 + 1e-9);
    EXPECT_NEAR(row.i2c, 100.0 * i2c / (n - cb), 0.005 + 1e-9);
  }
  EXPECT_NEAR(Accuracy(r), r.robustness[0].acc_before, 0.005 + 1e-9);
}

TEST_F(SuiteTest, SymbolicOneHotIsExactAndBackgroundSound) {
  const auto items = BuildEvalItems(*records_, *vocab_, GraphSource::kOneHot);
  const auto specs = Specs();
  const DiagnosisReport r =
      RunPerturbationSuite(items, SymbolicExecutor(*vocab_), specs, *vocab_);
  EXPECT_EQ(Accuracy(r), 100.0);
  EXPECT_EQ(r.grounding[0].ap, 100.0);
  const RobustnessRow& bg = r.robustness[0];
  ASSERT_EQ(bg.perturbation, "bg");
  EXPECT_EQ(bg.accuracy, 100.0);
  EXPECT_EQ(bg.c2i, 0.0);
  EXPECT_TRUE(bg.i2c_undefined);
  const RobustnessRow& fg = r.robustness[1];
  ASSERT_EQ(fg.perturbation, "fg");
  EXPECT_GT(fg.c2i, 20.0);
  // Failed runs record an empty answer, which never counts as correct.
  int empty = 0;
  for (const auto& q : r.per_question) empty += q.perturbed.at("fg").empty();
  EXPECT_GT(empty, 0);
}

TEST_F(SuiteTest, ReportFormatsRoundTrip) {
  const auto items = BuildEvalItems(*records_, *vocab_, GraphSource::kPredicted);
  const auto specs = Specs();
  const DiagnosisReport r =
      RunPerturbationSuite(items, NeuralExecutor(*vocab_, ExecutorParams()), specs, *vocab_);
  const DiagnosisReport from_json = ReportFromJson(EmitReport(r, ReportFormat::kJson));
  EXPECT_EQ(from_json, r);
  const DiagnosisReport from_csv = ReportFromCsv(EmitReport(from_json, ReportFormat::kCsv));
  EXPECT_EQ(from_csv, r);
  EXPECT_EQ(EmitReport(from_csv, ReportFormat::kJson), EmitReport(r, ReportFormat::kJson));
  DiagnosisReport recomputed = r;
  recomputed.grounding.clear();
  recomputed.robustness.clear();
  Aggregate(recomputed);
  EXPECT_EQ(recomputed, r);
}

TEST_F(SuiteTest, IndependentOfJobs) {
  const auto items = BuildEvalItems(*records_, *vocab_, GraphSource::kPredicted, 3);
  const auto specs = Specs();
  SuiteOptions one, four;
  four.jobs = 4;
  const Executor ex = NeuralExecutor(*vocab_, ExecutorParams());
  EXPECT_EQ(RunPerturbationSuite(items, ex, specs, *vocab_, one),
            RunPerturbationSuite(items, ex, specs, *vocab_, four));
}

TEST(Suite, FatalErrorsAreRecorded) {
  const Vocabulary v = testing::StreetVocabulary();
  EvalItem item;
  item.id = "q0";
  item.program = ParseProgram(testing::kStreetProgram, v);
  item.gt_answer = "red";
  item.graph = OneHotEncode(testing::StreetScene(v), v);
  const Executor broken = [](const Program&, const ProbabilisticSceneGraph&) {
    ExecOutcome o;
    o.error = "boom";
    o.fatal = true;
    return o;
  };
  const DiagnosisReport r = RunPerturbationSuite(std::span(&item, 1), broken, {}, v);
  EXPECT_EQ(r.Failures(), 1);
  EXPECT_EQ(r.per_question[0].error, "fatal: boom");
  EXPECT_FALSE(r.per_question[0].correct);
}

}  // namespace
}  // namespace sgr
