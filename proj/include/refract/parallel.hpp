#pragma once

#include <cstddef>
#include <functional>

namespace refract {

/// Number of worker threads used by the compute modules (default: hardware concurrency).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Each index is processed exactly once; callers
/// write results into per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace refract
