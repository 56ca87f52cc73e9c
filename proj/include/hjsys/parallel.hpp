#pragma once

// Minimal worker-parallelism helper. A global thread cap (set once by the CLI
// via --threads) bounds every parallel_for in the library; loops below the
// grain threshold run inline so small grids never pay thread overhead.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace hjsys {

inline std::atomic<int>& max_threads_slot() {
    static std::atomic<int> value{1};
    return value;
}

inline void set_max_threads(int k) { max_threads_slot().store(k < 1 ? 1 : k); }
inline int max_threads() { return max_threads_slot().load(); }

template <typename Body>
void parallel_for(std::size_t count, const Body& body, std::size_t grain = 16384) {
    const int workers = std::min<int>(max_threads(), static_cast<int>(count / grain) + 1);
    if (workers <= 1 || count < 2 * grain) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace hjsys
