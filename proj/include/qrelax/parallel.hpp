#ifndef QRELAX_PARALLEL_HPP
#define QRELAX_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qrelax {

/// Number of worker threads used by parallel_for. QRELAX_THREADS overrides the
/// hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n) on worker_count() threads. Each index is visited once;
/// results must be written to per-index slots so output does not depend on scheduling.
/// The first exception thrown by any body is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace qrelax

#endif  // QRELAX_PARALLEL_HPP
