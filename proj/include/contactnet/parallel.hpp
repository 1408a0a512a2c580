#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace contactnet {

/// Runs body(i) for every i in [0, count), fanning across up to `workers`
/// threads. Each index is claimed exactly once; bodies own their state and
/// random streams, so results cannot depend on the schedule. The first
/// exception is rethrown on the caller after all threads join.
template <class Body>
void parallel_replicates(int count, int workers, Body&& body) {
    if (count <= 0) return;
    if (workers <= 1 || count == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;

    auto drain = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const int i = cursor.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };

    const int pool_size = std::min(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(pool_size));
    for (int w = 0; w < pool_size; ++w) pool.emplace_back(drain);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace contactnet
