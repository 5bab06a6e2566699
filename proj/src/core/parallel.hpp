#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace tg {

/// Runs fn(i) for every i in [0, count) with at most `cap` calls in flight.
/// fn must be safe to call concurrently for distinct indices and must not throw.
inline void bounded_parallel_for(std::size_t count, std::size_t cap, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t workers = std::clamp<std::size_t>(cap, 1, count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}

}  // namespace tg
