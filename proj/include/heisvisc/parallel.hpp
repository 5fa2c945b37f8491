#pragma once

#include <cstddef>
#include <functional>

namespace heisvisc {

/// Worker count: hardware concurrency, capped by the HEISVISC_THREADS
/// environment variable when it holds a positive integer.
unsigned worker_count();

/// Calls body(begin, end) on disjoint contiguous chunks covering [0, count).
/// Chunks are independent; callers write only to slots inside their chunk, so
/// results never depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace heisvisc
