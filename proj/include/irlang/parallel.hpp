#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace irlang {

inline int default_thread_count() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs body(i) for i in [0, n) on up to n_threads workers. Work items are
// claimed through a shared counter; results must be written to per-index
// slots so the outcome is independent of the schedule. The first exception
// thrown by any worker is rethrown on the calling thread.
template <class F>
void parallel_for_index(std::size_t n, int n_threads, F&& body) {
    if (n == 0) return;
    if (n_threads < 1) n_threads = 1;
    const auto workers = static_cast<std::size_t>(n_threads) < n
                             ? static_cast<std::size_t>(n_threads)
                             : n;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace irlang
