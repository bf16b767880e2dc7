#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace absplace::detail {

/// Runs fn(i) for i in [0, count) on up to `threads` workers with a fixed
/// round-robin split. Rethrows the first captured exception by worker order.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
    if (threads <= 1 || count < 2) {
        for (std::size_t r = 0; r < count; ++r)
            fn(r);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t r = t; r < count; r += threads)
                        fn(r);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace absplace::detail
