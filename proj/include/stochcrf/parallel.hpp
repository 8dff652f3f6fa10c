#pragma once

#include <cstddef>
#include <functional>

namespace stochcrf {

// Worker count used by every parallel loop in the library. 0 selects
// std::thread::hardware_concurrency().
void set_num_threads(unsigned n);
unsigned num_threads();

// Splits [0, count) into fixed blocks of `block` items and runs fn(block_index,
// begin, end) for each. The decomposition depends only on count and block,
// never on the worker count, so per-block partial results reduced in block
// order are identical for any thread setting.
void parallel_blocks(std::size_t count, std::size_t block,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t block_count(std::size_t count, std::size_t block) {
    return block == 0 ? 0 : (count + block - 1) / block;
}

} // namespace stochcrf
