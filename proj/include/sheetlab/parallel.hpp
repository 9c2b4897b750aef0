#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sheetlab {

// Runs fn(k) for k in [0, n) on up to `workers` threads. Results must be
// written into per-index slots by fn; nothing is reduced here. If several
// indices throw, the exception of the smallest index is rethrown so the
// failure reported does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || n < 2) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::size_t failed_index = n;
    std::exception_ptr failure;

    auto body = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
            if (k >= n) return;
            try {
                fn(k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (k < failed_index) {
                    failed_index = k;
                    failure = std::current_exception();
                }
            }
        }
    };
    const unsigned spawned = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::jthread> pool;
    pool.reserve(spawned);
    for (unsigned w = 0; w < spawned; ++w) pool.emplace_back(body);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace sheetlab
