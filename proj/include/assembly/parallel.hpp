#ifndef ASSEMBLY_PARALLEL_HPP
#define ASSEMBLY_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace assembly {

/// Runs fn(k) for k in [0, count) on up to `threads` workers using a static
/// contiguous partition. Callers write per-index results into their own slots
/// and reduce them afterwards in ascending index order, which keeps results
/// identical for every thread count. The exception thrown for the lowest
/// failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
        for (std::size_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = count * w / workers;
        const std::size_t end = count * (w + 1) / workers;
        pool.emplace_back([&, w, begin, end] {
            try {
                for (std::size_t k = begin; k < end; ++k) fn(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace assembly

#endif
