#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace wfcast {

/// Resolve a thread-count request: <=0 means hardware concurrency.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, n). Work items must be independent and must write
/// only to their own slots; callers that need a deterministic result reduce
/// the per-index outputs afterwards in index order.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    int t = resolve_threads(threads);
    if (t <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) break;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) first_error = std::current_exception();
                break;
            }
        }
    };
    std::vector<std::thread> pool;
    std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(t), n);
    pool.reserve(nthreads);
    for (std::size_t k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace wfcast
