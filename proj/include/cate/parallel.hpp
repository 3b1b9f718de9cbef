#pragma once

#include <cstddef>
#include <functional>

namespace cate {

/// Worker count: CATE_NUM_THREADS if set, otherwise hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Each index is executed exactly once; callers
/// write results to disjoint slots so the outcome is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cate
