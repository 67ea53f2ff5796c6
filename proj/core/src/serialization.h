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

// Json-valued (de)serializers used when graphs and programs are nested in
// dataset records. Not installed.

#ifndef SGR_SRC_SERIALIZATION_H_
#define SGR_SRC_SERIALIZATION_H_

#include "json_util.h"
#include "sgr/program.h"
#include "sgr/scene_graph.h"
#include "sgr/vocabulary.h"

namespace sgr::internal {

Json SymbolicToJsonValue(const SymbolicSceneGraph& graph,
                         const Vocabulary& vocab);
SymbolicSceneGraph SymbolicFromJsonValue(const Json& j,
                                         const Vocabulary& vocab);
Json ProbabilisticToJsonValue(const ProbabilisticSceneGraph& graph);
ProbabilisticSceneGraph ProbabilisticFromJsonValue(const Json& j,
                                                   const Vocabulary& vocab);
Json ProgramToJsonValue(const Program& program);
Program ProgramFromJsonValue(const Json& j, const Vocabulary& vocab);

}  // namespace sgr::internal

#endif  // SGR_SRC_SERIALIZATION_H_
