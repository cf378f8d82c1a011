#pragma once

#include <cstddef>
#include <functional>

namespace ucortest {

/// Worker count used when a caller passes 0: the UCORTEST_THREADS environment
/// variable if set to a positive integer, else std::thread::hardware_concurrency().
unsigned default_worker_count();

/// Resolves 0 to default_worker_count(); otherwise returns `requested`.
unsigned resolve_workers(unsigned requested);

/// Calls body(k) for k in [0, count), spread over `workers` threads.
///
/// Tasks are claimed dynamically, so the body must only write to
/// index-addressed storage. The first exception thrown by any task is
/// rethrown after all workers have joined.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace ucortest
