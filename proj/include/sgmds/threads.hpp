#pragma once

#include <cstddef>
#include <functional>

namespace sgmds {

/// Runs fn(i) for i in [0, count). With threads > 1 the index range is split
/// into fixed contiguous blocks, one per worker. Each index must only write
/// to its own output slot; under that contract results are identical for any
/// thread count.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

/// Resolves a user-facing thread-count flag: 0 means "auto" (hardware
/// concurrency), anything else is clamped to [1, 256].
int resolve_threads(int requested);

}  // namespace sgmds
