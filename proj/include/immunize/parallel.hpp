#pragma once

#include <cstddef>
#include <functional>

namespace immunize {

/// Worker count: min(hardware_concurrency, IMMUNIZE_THREADS if set).
unsigned worker_count();

/// Run fn(i) for i in [0, n). Work items are distributed over a fixed
/// block layout, so any result written to slot i is identical at every
/// parallelism level. fn must not throw across threads uncaught.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace immunize
