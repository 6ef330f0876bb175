// Copyright 2026 The rosskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ROSSKIT_PARALLEL_H_
#define ROSSKIT_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace rosskit {

// Runs fn(i) for i in [0, count) on at most `jobs` worker threads. jobs <= 0
// means hardware concurrency. Work items must be independent; results are
// identical for every job count as long as fn(i) depends only on i.
// The first exception thrown by any item is rethrown after all workers join.
void ParallelFor(std::size_t count, int jobs,
                 const std::function<void(std::size_t)>& fn);

int ResolveJobs(int jobs);

}  // namespace rosskit

#endif  // ROSSKIT_PARALLEL_H_
