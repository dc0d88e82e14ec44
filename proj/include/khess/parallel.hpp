// Bounded worker pool for embarrassingly parallel loops.
//
// Work items write to disjoint output slots, and every reduction is done
// afterwards in a fixed order, so results do not depend on the worker count.
#pragma once

#include <cstddef>
#include <functional>

namespace khess {

/// Worker count: KHESS_WORKERS if set, else std::thread::hardware_concurrency.
int worker_count();
void set_worker_count(int workers);

/// Calls fn(i) for i in [0, count). Exceptions thrown by any item are
/// rethrown on the calling thread (the one with the smallest index wins).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace khess
