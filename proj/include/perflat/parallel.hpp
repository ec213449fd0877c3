#pragma once

#include <cstddef>
#include <functional>

namespace perflat {

/// Worker count: hardware concurrency capped by PERFLAT_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on a small thread pool. Callers write results
/// into slot i so the outcome does not depend on scheduling. The first
/// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace perflat
