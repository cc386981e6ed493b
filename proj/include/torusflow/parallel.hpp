// Deterministic fork-join over an index range. The range splits into
// contiguous chunks, one per worker; workers fill disjoint slots of a
// pre-sized output vector, so the merged result is identical for any worker
// count. No other threading primitive appears in the library.
#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace torusflow {

/// Applies fn(i) for i in [0, count) and returns the results in index order.
/// fn must be pure with respect to shared state.
template <typename R>
std::vector<R> parallel_map(std::uint64_t count, int workers,
                            const std::function<R(std::uint64_t)>& fn) {
    std::vector<R> out(count);
    if (count == 0) return out;
    if (workers < 1) workers = 1;
    std::uint64_t nw = std::min<std::uint64_t>(workers, count);
    if (nw == 1) {
        for (std::uint64_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    std::uint64_t base = count / nw, extra = count % nw, start = 0;
    for (std::uint64_t w = 0; w < nw; ++w) {
        std::uint64_t len = base + (w < extra ? 1 : 0);
        std::uint64_t lo = start, hi = start + len;
        start = hi;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::uint64_t i = lo; i < hi; ++i) out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace torusflow
