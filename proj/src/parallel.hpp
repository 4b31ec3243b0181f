#pragma once

#include <cstddef>
#include <functional>

namespace lcov {

// Worker count used by parallel_for. 0 or 1 means run inline.
void set_thread_count(int n);
int thread_count();

// Runs body(i) for i in [0, n). Every index is processed exactly once; callers
// write into disjoint slots and reduce serially so results do not depend on
// the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

} // namespace lcov
