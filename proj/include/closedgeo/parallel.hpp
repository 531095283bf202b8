#pragma once

#include <functional>

namespace closedgeo {

/// Worker count from CLOSEDGEO_THREADS, or 1 when unset or invalid.
int default_threads();

/// Runs fn(0..n-1) on up to `threads` workers. Each index is visited exactly once, so
/// results written to per-index slots are independent of the thread count. The first
/// exception thrown by any worker is rethrown after all workers finish.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace closedgeo
