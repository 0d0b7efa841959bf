#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace igmc {

inline int default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

/// Runs fn(begin, end, chunk_index) over n_items split into a fixed number of
/// chunks and returns the per-chunk results in chunk order.  The chunk layout
/// does not depend on the thread count, so any reduction performed over the
/// returned vector in order is bit-reproducible regardless of --threads.
template <class Result, class Fn>
std::vector<Result> parallel_chunks(std::size_t n_items, Fn fn, int threads = 0,
                                    std::size_t n_chunks = 512) {
    if (threads <= 0) threads = default_threads();
    if (n_chunks > n_items) n_chunks = n_items == 0 ? 1 : n_items;
    std::vector<Result> results(n_chunks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};

    auto worker = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks || failed.load()) return;
            const std::size_t begin = c * n_items / n_chunks;
            const std::size_t end = (c + 1) * n_items / n_chunks;
            try {
                results[c] = fn(begin, end, c);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) std::rethrow_exception(error);
    return results;
}

}  // namespace igmc
