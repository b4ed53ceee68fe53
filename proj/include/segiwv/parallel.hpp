#pragma once

#include <cstddef>
#include <functional>

namespace segiwv {

/// Worker count: SEGIWV_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Calls body(i) for i in [0, n) on up to `threads` workers (0 = thread_count()).
/// Indices are handed out in increasing order. The first exception thrown
/// by any call is rethrown after all workers have stopped.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

}  // namespace segiwv
