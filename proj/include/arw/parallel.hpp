#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace arw {

/// Run body(i) for i in [0, count) on up to `workers` threads. Work items
/// must write only to their own slots; aggregation stays with the caller,
/// so results are identical for any worker count.
template <typename Body>
inline void parallel_for_index(std::uint64_t count, unsigned workers, Body&& body) {
    if (workers <= 1 || count <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        while (true) {
            std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    unsigned n = std::min<std::uint64_t>(workers, count);
    pool.reserve(n);
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace arw
