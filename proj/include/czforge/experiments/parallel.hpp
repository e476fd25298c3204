#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace czforge::experiments {

/// Requested width capped by CZFORGE_THREADS (when set to a positive integer).
inline int parallel_width(int requested) {
    int width = std::max(1, requested);
    if (const char* env = std::getenv("CZFORGE_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0) {
                width = std::min(width, cap);
            }
        } catch (const std::exception&) {
        }
    }
    return width;
}

/// out[i] = f(i) for i in [0, n); results are ordered by index regardless of
/// completion order. The first exception thrown by any task is rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, int width, F&& f) {
    std::vector<R> out(n);
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, width))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = f(i);
        }
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                out[i] = f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return out;
}

}  // namespace czforge::experiments
