#pragma once

#include <cstddef>
#include <functional>

namespace eigdist {

/// Worker count from EIGDIST_THREADS (default 1, clamped to >= 1).
std::size_t thread_count();

/// Calls fn(i) for i in [0, n), split into contiguous chunks over
/// thread_count() threads. Callers write results by index, so output does
/// not depend on the thread count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace eigdist
