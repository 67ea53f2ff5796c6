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

// JSON helpers shared by the library's serializers. Not installed.

#ifndef SGR_SRC_JSON_UTIL_H_
#define SGR_SRC_JSON_UTIL_H_

#include <string>
#include <string_view>

#include "json.hpp"
#include "sgr/box.h"
#include "sgr/error.h"

namespace sgr::internal {

using Json = nlohmann::json;

inline Json ParseJson(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse,
                std::string(what) + ": malformed JSON: " + e.what());
  }
}

// Typed field access that reports schema problems as Error(kParse).
template <typename T>
T Get(const Json& j, std::string_view key, std::string_view what) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::kParse, std::string(what) + ": missing key '" +
                                       std::string(key) + "'");
  }
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": bad value for '" +
                                       std::string(key) + "': " + e.what());
  }
}

inline Json BoxToJson(const Box& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

inline Box BoxFromJson(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorCode::kParse, "box must be an array of 4 numbers");
  }
  Box b;
  try {
    b = Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
            j[3].get<double>()};
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("box: ") + e.what());
  }
  CheckBox(b);
  return b;
}

}  // namespace sgr::internal

#endif  // SGR_SRC_JSON_UTIL_H_
