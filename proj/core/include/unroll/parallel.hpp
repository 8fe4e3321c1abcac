#pragma once

#include <cstddef>
#include <functional>

namespace unroll {

// Worker cap used by every parallel loop in the library. 0 selects hardware concurrency.
void set_thread_count(int threads);
int thread_count();

// Runs body(i) for i in [0, count). Iterations must write disjoint outputs; any
// reduction is done by the caller in index order afterwards.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace unroll
