#pragma once

#include "cfgan/linalg.hpp"

#include <functional>

namespace cfgan {

/// Worker count for internal loops; read from CFG_LAB_THREADS (default 1).
int thread_budget();

/// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries do
/// not depend on the thread count, so any per-chunk result combined in chunk
/// order is bit-identical regardless of parallelism.
void for_each_chunk(Index n, Index chunk, const std::function<void(Index, Index)>& fn);

}  // namespace cfgan
