#pragma once

#include <cstddef>
#include <functional>

namespace rirforge {

// RIRFORGE_NUM_WORKERS if set to a positive integer, else the hardware
// concurrency (at least 1).
std::size_t worker_count();

// Calls fn(i) for every i in [0, count) on up to `workers` threads. Results
// must be written to per-index slots for the outcome to be order-independent.
// If any call throws, the exception from the lowest failing index is rethrown
// after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = worker_count());

}  // namespace rirforge
