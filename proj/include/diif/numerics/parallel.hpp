#pragma once

#include <cstddef>
#include <functional>

namespace diif {

/// Worker cap: DIIF_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int thread_limit();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = thread_limit()).
/// Work items are claimed dynamically; callers that need reproducible results
/// must write to per-item outputs and reduce them in index order afterwards.
/// The first exception thrown by any item is rethrown on the calling thread.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace diif
