#pragma once

#include <cstddef>
#include <functional>

namespace vocalfit {

// Number of workers to use when the caller passes 0.
unsigned default_jobs() noexcept;

// Calls body(i) for every i in [0, n) on up to `jobs` threads. Indices are
// handed out dynamically, so body must not depend on execution order. The
// first exception thrown by any invocation is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace vocalfit
