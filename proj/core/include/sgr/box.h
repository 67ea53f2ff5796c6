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

#ifndef SGR_BOX_H_
#define SGR_BOX_H_

#include <array>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace sgr {

// Axis-aligned box in normalized image coordinates.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  friend bool operator==(const Box&, const Box&) = default;
};

bool IsValidBox(const Box& box);

// Throws Error(kInvalidArgument) unless x1 < x2, y1 < y2 and every
// coordinate is finite and inside [0, 1].
void CheckBox(const Box& box);

// Validating constructor.
Box MakeBox(double x1, double y1, double x2, double y2);

// Intersection over union. Both boxes must be valid.
double IoU(const Box& a, const Box& b);

// One-to-one assignment of detected boxes to ground-truth boxes.
struct MatchMap {
  // (detected index, ground-truth index), ordered by detected index.
  std::vector<std::pair<int, int>> pairs;
  double threshold = 0.5;

  // Ground-truth index matched to `detected`, or -1.
  int GroundTruthFor(int detected) const;
  // Detected index matched to `ground_truth`, or -1.
  int DetectedFor(int ground_truth) const;
};

// Greedy matching in descending IoU order; ties go to the lower detected
// index, then the lower ground-truth index. Only pairs with
// IoU >= threshold are kept. threshold must lie in (0, 1].
MatchMap MatchBoxes(std::span<const Box> detected,
                    std::span<const Box> ground_truth, double threshold);

// Geometric position categories evaluated on the box center with
// boundaries at 1/3 and 2/3.
inline constexpr std::array<std::string_view, 6> kPositionCategories = {
    "left", "right", "middle-h", "top", "bottom", "middle-v"};

bool IsPositionCategory(std::string_view category);

// Throws Error(kInvalidArgument) for an unknown category.
bool PositionPredicate(const Box& box, std::string_view category);

}  // namespace sgr

#endif  // SGR_BOX_H_
