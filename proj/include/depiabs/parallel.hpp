#pragma once

#include <cstddef>
#include <functional>

namespace depiabs {

// Worker count from DEPIABS_THREADS, defaulting to the hardware concurrency.
std::size_t thread_count();

// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index
// runs exactly once; results must not depend on which thread runs it.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace depiabs
