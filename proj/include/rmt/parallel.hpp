#pragma once

#include <cstddef>
#include <functional>

namespace rmt
{

// Worker count: explicit value if positive, else RMT_LAB_JOBS, else hardware concurrency.
std::size_t resolve_jobs(int requested = 0);

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is processed exactly
// once; callers write results into per-index slots, so output never depends on scheduling.
// The first exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)> &body);

}  // namespace rmt
