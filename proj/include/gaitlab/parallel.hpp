#pragma once

#include <cstddef>
#include <functional>

namespace gaitlab {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Callers write results into pre-sized slots indexed by i so
/// output order never depends on scheduling. The first exception thrown by
/// any job is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace gaitlab
