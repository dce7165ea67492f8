#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace ddspin {

/// Run fn(i) for i in [0, n) on up to n_threads workers. Results must be
/// written to disjoint slots by index; fn must not throw.
template <typename Fn>
void parallel_for(int n, int n_threads, Fn&& fn) {
    n_threads = std::max(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace ddspin
