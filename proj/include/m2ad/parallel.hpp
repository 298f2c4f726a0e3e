#pragma once

#include <cstddef>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace m2ad {

// Worker cap: M2AD_THREADS env var, else hardware concurrency.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("M2AD_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<std::size_t>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs body(i) for i in [0, count) on up to worker_count() threads.
// Results must be written to disjoint slots so the split is invisible.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < workers; ++t) {
        threads.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < count; i += workers) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace m2ad
