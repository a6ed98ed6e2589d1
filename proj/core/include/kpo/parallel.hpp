#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace kpo {

inline int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Deterministic parallel map over [0, count): each index does independent
// work and writes only to its own slot, so the result does not depend on the
// number of threads. Exceptions are rethrown on the calling thread.
inline void parallel_for_index(int count, int threads, const std::function<void(int)>& body) {
    threads = std::min(resolve_thread_count(threads), std::max(count, 1));
    if (count <= 0) return;
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }

    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
    pool.reserve(static_cast<size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (int i = w; i < count; i += threads) body(i);
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace kpo
