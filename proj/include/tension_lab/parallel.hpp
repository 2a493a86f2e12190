#pragma once

#include <cstddef>
#include <functional>

namespace tension_lab {

/// Worker count: TENSION_LAB_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = thread_count()).
/// Each index is executed exactly once; results written to slot i are therefore
/// independent of scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace tension_lab
