#pragma once

#include <cstdint>
#include <functional>

namespace recast {

// Worker count: RECAST_THREADS env var if set, else hardware concurrency.
int thread_count();

// Runs fn over [0, n) split into one contiguous chunk per worker.
// Partitioning depends only on n and the worker count, so results of
// disjoint-output loops are deterministic. Nested calls run inline.
void parallel_for(int64_t n, const std::function<void(int64_t begin, int64_t end)>& fn);

}  // namespace recast
