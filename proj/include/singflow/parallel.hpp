#pragma once

#include <cstddef>
#include <functional>

namespace singflow {

/// Run body(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; results must be written to per-index slots.
/// threads == 0 picks the hardware concurrency.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)> &body);

} // namespace singflow
