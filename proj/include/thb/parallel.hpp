#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace thb {

/// Run fn(i) for every i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Each index runs exactly once; callers must write results
/// to disjoint slots so the outcome is independent of the schedule. The
/// first exception thrown by any worker is rethrown here.
inline void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
    if (n <= 0) return;
    long t = threads <= 0 ? long(std::thread::hardware_concurrency()) : threads;
    t = std::min(std::max(t, 1L), n);
    if (t == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        long i;
        while ((i = next.fetch_add(1)) < n && !failed.load(std::memory_order_relaxed)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(t));
    for (long k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace thb
