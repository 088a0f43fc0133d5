#pragma once

#include <cstddef>
#include <functional>

namespace msk {

/// Worker cap from MSK_THREADS (default: hardware concurrency, at least 1).
std::size_t thread_count();

/// Runs task(i) for i in [0, n). Tasks write to their own slot, so results
/// do not depend on scheduling. The first exception thrown is rethrown after
/// all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task,
                  std::size_t max_threads = 0);

}  // namespace msk
