#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace hartree {

// Runs fn(i) for i in [0, count) on a bounded pool of threads.
template <typename Fn>
void parallel_for(int count, Fn&& fn, unsigned max_threads = 0)
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (max_threads == 0) max_threads = hw;
    unsigned nt = std::min<unsigned>(max_threads, std::max(1, count));
    if (nt <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) fn(i);
        });
}

} // namespace hartree
