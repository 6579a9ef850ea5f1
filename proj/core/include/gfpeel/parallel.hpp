#pragma once

#include <cstddef>
#include <functional>

namespace gfpeel {

// Worker count: GFPEEL_THREADS if set (>= 1), else hardware concurrency.
unsigned worker_count();

// Calls body(i) for i in [0, n) on up to worker_count() threads. Work is handed
// out by index, so any per-index output is independent of the thread count.
// The first exception thrown by a body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gfpeel
