#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace selgan {

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{0};
    return cap;
}
} // namespace detail

/// Caps fan-out of parallel_for. 0 means hardware concurrency.
inline void set_max_threads(unsigned n) { detail::thread_cap().store(n); }

inline unsigned max_threads() {
    const unsigned cap = detail::thread_cap().load();
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return cap == 0 ? hw : cap;
}

/// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks are disjoint,
/// so callers writing to per-index slots need no synchronization.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_chunk = 64) {
    const std::size_t workers =
        std::min<std::size_t>(max_threads(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
    if (workers <= 1) {
        if (n) fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t step = (n + workers - 1) / workers;
    for (std::size_t b = step; b < n; b += step) {
        pool.emplace_back([&fn, b, e = std::min(n, b + step)] { fn(b, e); });
    }
    fn(std::size_t{0}, std::min(n, step));
}

} // namespace selgan
