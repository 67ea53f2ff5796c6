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

// Scoring formulas of the probabilistic executor, templated on the scalar
// type so inference (double) and training (Dual) share one definition.
// Not installed.

#ifndef SGR_SRC_NEURAL_OPS_H_
#define SGR_SRC_NEURAL_OPS_H_

#include <algorithm>
#include <array>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <string_view>
#include <vector>

#include "dual.h"
#include "sgr/error.h"
#include "sgr/exec_neural.h"

namespace sgr::internal {

template <typename T>
struct ParamView {
  T alpha;
  std::array<T, kBoxFeatures + 1> psi;
  std::array<T, kBoxFeatures + 1> phi;
  T exist_w, exist_b;
  T verify_w, verify_b;
  RelateReduce relate_reduce = RelateReduce::kSoftmaxAvg;
};

// Trainable layout: alpha, psi[8], phi[8], exist (w, b), verify (w, b).
template <typename T>
ParamView<T> MakeView(const ExecutorParams& params, bool seed) {
  const auto flat = params.Trainable();
  auto at = [&](int i) -> T {
    if constexpr (std::is_same_v<T, double>) {
      (void)seed;
      return flat[i];
    } else {
      return seed ? T::Seed(flat[i], i) : T(flat[i]);
    }
  };
  ParamView<T> v;
  int i = 0;
  v.alpha = at(i++);
  for (auto& w : v.psi) w = at(i++);
  for (auto& w : v.phi) w = at(i++);
  v.exist_w = at(i++);
  v.exist_b = at(i++);
  v.verify_w = at(i++);
  v.verify_b = at(i++);
  v.relate_reduce = params.relate_reduce;
  return v;
}

template <typename T>
T Affine(const std::array<T, kBoxFeatures + 1>& w, const Box& box) {
  const auto f = BoxFeatures(box);
  T acc = w[kBoxFeatures];
  for (int i = 0; i < kBoxFeatures; ++i) acc += w[i] * f[i];
  return acc;
}

// Raw score of object k for (concept, member); member < 0 means "none",
// the row-wise max over the concept's members.
inline double UnaryScore(const ProbabilisticSceneGraph& g, int k,
                         const Concept& cpt, int member) {
  auto one = [&](int m) {
    switch (cpt.kind) {
      case ConceptKind::kObject:
        return g.s_o(k, m);
      case ConceptKind::kAttribute:
        return g.s_a(k, m);
      case ConceptKind::kPosition:
        return PositionPredicate(g.boxes[k], kPositionCategories[m])
                   ? kPositionLogit
                   : -kPositionLogit;
      case ConceptKind::kRelation:
        break;
    }
    throw Error(ErrorCode::kInvalidArgument,
                "relation concepts have no unary score");
  };
  if (member >= 0) return one(member);
  double best = -std::numeric_limits<double>::infinity();
  for (int m : cpt.members) best = std::max(best, one(m));
  return cpt.members.empty() ? -kPositionLogit : best;
}

// Member id for a category of `cpt`, -1 for "none".
inline int ResolveMember(const Concept& cpt, std::string_view category,
                         const Vocabulary& vocab) {
  if (category == kNoneCategory) return -1;
  auto id = vocab.MemberId(cpt, category);
  if (!id) {
    throw Error(ErrorCode::kInvalidArgument, "category '" +
                                                 std::string(category) +
                                                 "' not in concept '" +
                                                 cpt.name + "'");
  }
  return *id;
}

template <typename T>
std::vector<T> SoftmaxWeights(std::span<const T> a) {
  double top = -std::numeric_limits<double>::infinity();
  for (const T& x : a) top = std::max(top, Value(x));
  std::vector<T> w;
  w.reserve(a.size());
  T total = 0.0;
  for (const T& x : a) {
    w.push_back(Exp(x - top));
    total += w.back();
  }
  const T inv = Exp(-Log(total));
  for (T& x : w) x *= inv;
  return w;
}

// Per-object blended scores (1 - alpha) a + alpha * S * sigmoid(psi(box)).
template <typename T>
std::vector<T> FilterScoresT(const ProbabilisticSceneGraph& g,
                             std::span<const int> input, std::span<const T> a,
                             const Concept& cpt, int member,
                             const ParamView<T>& pv) {
  std::vector<T> p;
  p.reserve(input.size());
  for (size_t i = 0; i < input.size(); ++i) {
    const int k = input[i];
    const T mod = Sigmoid(Affine(pv.psi, g.boxes[k]));
    p.push_back((1.0 - pv.alpha) * a[i] + pv.alpha * (UnaryScore(g, k, cpt, member) * mod));
  }
  return p;
}

// Scores over the pool; the non-pool axis is reduced by softmax(a_other)
// weighted averaging or by max.
template <typename T>
std::vector<T> RelateScoresT(const ProbabilisticSceneGraph& g,
                             std::span<const int> pool, std::span<const T> a_pool,
                             std::span<const int> other,
                             std::span<const T> a_other, bool pool_is_subject,
                             int predicate, const ParamView<T>& pv) {
  if (pool.empty() || other.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "relate needs two non-empty sets");
  }
  std::vector<T> psi_pool, phi_pool, psi_other, phi_other;
  for (int k : pool) {
    psi_pool.push_back(Affine(pv.psi, g.boxes[k]));
    phi_pool.push_back(Affine(pv.phi, g.boxes[k]));
  }
  for (int k : other) {
    psi_other.push_back(Affine(pv.psi, g.boxes[k]));
    phi_other.push_back(Affine(pv.phi, g.boxes[k]));
  }
  std::vector<T> weights;
  if (pv.relate_reduce == RelateReduce::kSoftmaxAvg) weights = SoftmaxWeights(a_other);
  std::vector<T> p;
  p.reserve(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) {
    T reduced = 0.0;
    for (size_t j = 0; j < other.size(); ++j) {
      const int s = pool_is_subject ? pool[i] : other[j];
      const int o = pool_is_subject ? other[j] : pool[i];
      const T& ps = pool_is_subject ? psi_pool[i] : psi_other[j];
      const T& po = pool_is_subject ? phi_other[j] : phi_pool[i];
      const T term = g.s_p(s, o, predicate) * Sigmoid(ps * po);
      if (pv.relate_reduce == RelateReduce::kSoftmaxAvg) {
        reduced += weights[j] * term;
      } else {
        reduced = j == 0 ? term : Max(reduced, term);
      }
    }
    p.push_back((1.0 - pv.alpha) * a_pool[i] + pv.alpha * reduced);
  }
  return p;
}

template <typename T>
T MaxOf(std::span<const T> a) {
  if (a.empty()) throw Error(ErrorCode::kInvalidArgument, "max over an empty set");
  T best = a[0];
  for (size_t i = 1; i < a.size(); ++i) best = Max(best, a[i]);
  return best;
}

template <typename T>
T ExistLogitT(std::span<const T> a, const ParamView<T>& pv) {
  return pv.exist_w * MaxOf(a) + pv.exist_b;
}

template <typename T>
T VerifyLogitT(const ProbabilisticSceneGraph& g, std::span<const int> input,
               std::span<const T> a, const Concept& cpt, int member,
               const ParamView<T>& pv) {
  const auto blended = FilterScoresT(g, input, a, cpt, member, pv);
  return pv.verify_w * MaxOf<T>(blended) + pv.verify_b;
}

// softmax(a)^T (S ∘ sigmoid(psi)) restricted to `columns` of S_o or S_a.
template <typename T>
std::vector<T> AttendedColumnsT(const ProbabilisticSceneGraph& g,
                                std::span<const int> input, std::span<const T> a,
                                bool attribute_scores, std::span<const int> columns,
                                const ParamView<T>& pv) {
  if (input.empty()) {
    throw Error(ErrorCode::kUnanswerable, "answer operation on an empty set");
  }
  const auto w = SoftmaxWeights(a);
  std::vector<T> mod;
  mod.reserve(input.size());
  for (size_t i = 0; i < input.size(); ++i) {
    mod.push_back(w[i] * Sigmoid(Affine(pv.psi, g.boxes[input[i]])));
  }
  std::vector<T> out;
  out.reserve(columns.size());
  for (int c : columns) {
    T acc = 0.0;
    for (size_t i = 0; i < input.size(); ++i) {
      const int k = input[i];
      acc += mod[i] * (attribute_scores ? g.s_a(k, c) : g.s_o(k, c));
    }
    out.push_back(acc);
  }
  return out;
}

template <typename T>
std::vector<T> CommonLogitsT(const ProbabilisticSceneGraph& g,
                             std::span<const int> z1, std::span<const T> a1,
                             std::span<const int> z2, std::span<const T> a2,
                             std::span<const int> columns, const ParamView<T>& pv) {
  const auto s1 = AttendedColumnsT(g, z1, a1, true, columns, pv);
  const auto s2 = AttendedColumnsT(g, z2, a2, true, columns, pv);
  std::vector<T> out;
  for (size_t c = 0; c < columns.size(); ++c) out.push_back(Min(s1[c], s2[c]));
  return out;
}

// log softmax(logits)[target].
template <typename T>
T LogSoftmaxAt(std::span<const T> logits, int target) {
  double top = -std::numeric_limits<double>::infinity();
  for (const T& x : logits) top = std::max(top, Value(x));
  T total = 0.0;
  for (const T& x : logits) total += Exp(x - top);
  return logits[target] - top - Log(total);
}

// Members in ascending id order, so argmax ties resolve to the lowest id.
inline std::vector<int> SortedMembers(const Concept& cpt) {
  std::vector<int> out = cpt.members;
  std::sort(out.begin(), out.end());
  return out;
}

// Candidate category ids of an answer-producing concept.
inline std::vector<int> CommonCandidates(const Concept* cpt, const Vocabulary& vocab) {
  if (cpt != nullptr) return SortedMembers(*cpt);
  std::vector<int> all;
  for (int a = 1; a < vocab.num_attributes(); ++a) all.push_back(a);
  return all;
}

}  // namespace sgr::internal

#endif  // SGR_SRC_NEURAL_OPS_H_
