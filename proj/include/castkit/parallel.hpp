#pragma once

#include <cstddef>
#include <functional>
#include <thread>

namespace castkit {

// Number of workers used when a caller passes 0.
std::size_t default_workers();

// Runs body(i) for i in [0, count) on up to `workers` threads. Work items are
// claimed dynamically, so callers must write results by index. If any item
// throws, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace castkit
