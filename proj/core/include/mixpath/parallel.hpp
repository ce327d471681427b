#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace mixpath {

// Runs jobs 0..count-1 across up to `workers` threads. Every job must be a
// pure function of its index plus read-only captures; results land in index
// order, so the output is identical for any worker count. The first thrown
// exception is rethrown on the caller's thread once all workers stopped.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& job) {
    if (workers < 1) throw std::invalid_argument("parallel_for: workers must be >= 1");
    if (count == 0) return;
    const std::size_t lanes =
        std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    if (lanes == 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure) return; // stop picking up work after a failure
            }
            try {
                job(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(lanes);
    for (std::size_t t = 0; t < lanes; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

template <typename T>
std::vector<T> parallel_map(std::size_t count, int workers,
                            const std::function<T(std::size_t)>& job) {
    std::vector<T> out(count);
    parallel_for(count, workers, [&](std::size_t i) { out[i] = job(i); });
    return out;
}

} // namespace mixpath
