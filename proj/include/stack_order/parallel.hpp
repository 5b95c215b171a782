#pragma once

#include <cstddef>
#include <functional>

namespace stack_order {

/// Worker count from STACK_ORDER_THREADS (default: hardware concurrency).
/// Results never depend on it: work items write to their own slots and
/// reductions happen afterwards in index order.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any item is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace stack_order
