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

#ifndef SGR_PARALLEL_H_
#define SGR_PARALLEL_H_

#include <functional>

namespace sgr {

// Calls fn(i) for i in [0, n) on up to `jobs` threads. Work is handed out
// by an atomic counter; callers write results into per-index slots so the
// outcome does not depend on scheduling. The exception thrown for the lowest
// index is rethrown after all threads finish.
void ParallelFor(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace sgr

#endif  // SGR_PARALLEL_H_
