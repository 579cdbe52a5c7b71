#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace susp {

// Static-partition parallel loop. Workers write results only through their own
// index, so output ordering (and any later reduction order) is deterministic
// regardless of the worker count.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const std::size_t nw = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += nw) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace susp
