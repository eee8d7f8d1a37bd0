#pragma once

#include <cstddef>
#include <functional>

namespace g2d {

/// Worker-thread cap: G2D_THREADS when set (minimum 1), else the hardware
/// concurrency.
std::size_t thread_cap();

/// Run fn(begin, end, chunk_index) over [0, count) split into fixed chunks of
/// the given size. Chunk boundaries depend only on (count, chunk), never on
/// the thread count, so per-chunk results are reproducible under any G2D_THREADS.
void parallel_chunks(std::size_t count, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace g2d
