#pragma once

#include <functional>

namespace mt3d {

/// Worker count used by the parallel loops (>= 1).
int thread_count();
void set_thread_count(int n);

/// Runs body(chunk) for every chunk in [0, chunks). Chunks are the unit of
/// determinism: callers give each chunk its own accumulation buffer and reduce
/// the buffers in chunk order, so results do not depend on the worker count.
void parallel_for_chunks(int chunks, const std::function<void(int)>& body);

}  // namespace mt3d
