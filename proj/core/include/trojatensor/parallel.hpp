#pragma once

#include <cstddef>
#include <functional>

namespace trojatensor {

/// Worker cap: hardware concurrency, clamped by the TROJATENSOR_THREADS
/// environment variable when it is set to a positive integer.
unsigned worker_count();

/// Runs fn(i) for i in [0, n). Work is split in contiguous blocks across
/// workers; the call blocks until all indices are done. The first exception
/// thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace trojatensor
