#pragma once

#include <cstddef>
#include <functional>

namespace ergokit {

/// Worker count used by parallel loops; 0 restores the hardware default.
void set_thread_count(int threads);
int thread_count();

/// Calls body(begin, end) on contiguous chunks of [0, n). Chunk boundaries depend only on n and
/// the chunk size, never on the thread count, so per-chunk results can be merged in a fixed order.
void parallel_for(std::size_t n, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ergokit
