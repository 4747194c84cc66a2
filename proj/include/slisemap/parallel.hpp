#pragma once

#include <cstddef>
#include <functional>

namespace slisemap {

// Worker count: SLISEMAP_THREADS if set and positive, otherwise hardware concurrency.
std::size_t thread_count();

// Runs fn(i) for every i in [begin, end), split into contiguous chunks across
// up to thread_count() threads. Each index is processed exactly once by one
// thread, so results written per index are independent of the thread count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn,
                  std::size_t min_chunk = 64);

}  // namespace slisemap
