#pragma once

#include <cstddef>
#include <functional>

namespace sharpnerf {

// Number of worker threads (SHARPNERF_THREADS env var, else hardware count).
std::size_t thread_count();

// Runs fn(begin, end) over a static partition of [0, n). Each index is handled
// by exactly one invocation with a fixed inner order, so results are
// bit-identical regardless of thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace sharpnerf
