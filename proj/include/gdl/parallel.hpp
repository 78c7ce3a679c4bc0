#pragma once

#include <cstddef>
#include <functional>

namespace gdl {

// Worker cap: GDL_THREADS if set to a positive integer, else the hardware
// concurrency (at least 1).
std::size_t worker_count();

// Calls fn(i) for every i in [0, n) across up to worker_count() threads in
// contiguous chunks. fn must only write to per-index state. The first
// exception thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn);

} // namespace gdl
