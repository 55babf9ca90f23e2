#pragma once

#include <cstddef>
#include <functional>

namespace simflow {

/// Caps the number of worker threads used by parallel_for. 0 restores the default
/// (available hardware parallelism).
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Tasks must write only to slots keyed by i. If any task
/// throws, the exception from the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace simflow
