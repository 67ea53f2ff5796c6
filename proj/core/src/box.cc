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

#include "sgr/box.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "sgr/error.h"

namespace sgr {

bool IsValidBox(const Box& box) {
  for (double v : {box.x1, box.y1, box.x2, box.y2}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  }
  return box.x1 < box.x2 && box.y1 < box.y2;
}

void CheckBox(const Box& box) {
  if (!IsValidBox(box)) {
    std::ostringstream os;
    os << "invalid box (" << box.x1 << ", " << box.y1 << ", " << box.x2
       << ", " << box.y2 << ")";
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
}

Box MakeBox(double x1, double y1, double x2, double y2) {
  Box box{x1, y1, x2, y2};
  CheckBox(box);
  return box;
}

double IoU(const Box& a, const Box& b) {
  CheckBox(a);
  CheckBox(b);
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

int MatchMap::GroundTruthFor(int detected) const {
  for (const auto& [d, g] : pairs) {
    if (d == detected) return g;
  }
  return -1;
}

int MatchMap::DetectedFor(int ground_truth) const {
  for (const auto& [d, g] : pairs) {
    if (g == ground_truth) return d;
  }
  return -1;
}

MatchMap MatchBoxes(std::span<const Box> detected,
                    std::span<const Box> ground_truth, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "match threshold must lie in (0, 1]");
  }
  struct Candidate {
    double iou;
    int det;
    int gt;
  };
  std::vector<Candidate> candidates;
  for (int d = 0; d < static_cast<int>(detected.size()); ++d) {
    for (int g = 0; g < static_cast<int>(ground_truth.size()); ++g) {
      const double iou = IoU(detected[d], ground_truth[g]);
      if (iou >= threshold) candidates.push_back({iou, d, g});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.iou != b.iou) return a.iou > b.iou;
              return std::tie(a.det, a.gt) < std::tie(b.det, b.gt);
            });
  std::vector<bool> det_used(detected.size(), false);
  std::vector<bool> gt_used(ground_truth.size(), false);
  MatchMap map;
  map.threshold = threshold;
  for (const Candidate& c : candidates) {
    if (det_used[c.det] || gt_used[c.gt]) continue;
    det_used[c.det] = true;
    gt_used[c.gt] = true;
    map.pairs.emplace_back(c.det, c.gt);
  }
  std::sort(map.pairs.begin(), map.pairs.end());
  return map;
}

bool IsPositionCategory(std::string_view category) {
  return std::find(kPositionCategories.begin(), kPositionCategories.end(),
                   category) != kPositionCategories.end();
}

bool PositionPredicate(const Box& box, std::string_view category) {
  constexpr double kLow = 1.0 / 3.0;
  constexpr double kHigh = 2.0 / 3.0;
  const double cx = box.center_x();
  const double cy = box.center_y();
  if (category == "left") return cx < kLow;
  if (category == "right") return cx > kHigh;
  if (category == "middle-h") return cx >= kLow && cx <= kHigh;
  if (category == "top") return cy < kLow;
  if (category == "bottom") return cy > kHigh;
  if (category == "middle-v") return cy >= kLow && cy <= kHigh;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown position category '" + std::string(category) + "'");
}

}  // namespace sgr
