#pragma once

#include <cstddef>
#include <functional>

namespace asht {

// Worker count for data-parallel loops. Defaults to ASHT_THREADS, then the hardware count.
int thread_count();
void set_thread_count(int n);

// Runs fn(lo, hi) over disjoint chunks of [0, n). Chunk boundaries depend only on n and
// the thread count, and every index is written by exactly one chunk, so results do not
// depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace asht
