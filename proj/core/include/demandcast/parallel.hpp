#pragma once

#include <cstddef>
#include <functional>

namespace demandcast {

// Runs fn(0..n-1) across up to `jobs` threads (0 = hardware concurrency).
// Work is indexed, so outputs land in caller-owned slots and results never
// depend on scheduling. The first exception is rethrown after all workers
// join.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

} // namespace demandcast
