#pragma once

#include <cstddef>
#include <functional>

namespace acdc {

/// Worker count: ACDC_THREADS if set and positive, else hardware concurrency.
[[nodiscard]] std::size_t thread_count();

/// Runs body(i) for i in [0, n). Each index is executed exactly once; callers
/// write results into per-index slots so output never depends on scheduling.
/// Nested calls run serially on the calling thread. The first exception thrown
/// by any body (lowest index wins) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

} // namespace acdc
