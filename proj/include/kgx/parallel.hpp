#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kgx {

// Runs fn(begin, end) over contiguous chunks of [0, n). The first exception
// thrown by any chunk is rethrown on the calling thread.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::exception_ptr failure;
    std::mutex mu;
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t start = 0; start < n; start += chunk) {
            const std::size_t end = std::min(start + chunk, n);
            pool.emplace_back([&, start, end] {
                try {
                    fn(start, end);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace kgx
