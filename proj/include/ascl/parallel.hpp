#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace ascl {

enum class Exec { Serial, Parallel };

int max_threads() noexcept;

/// Runs body(i) for i in [0, n). Each index must write only to its own
/// slot; results are then independent of the thread count. The first
/// exception raised by any index is rethrown on the calling thread.
template <class Body>
void parallel_for(Exec exec, std::size_t n, Body&& body) {
    if (exec == Exec::Serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::exception_ptr first;
    std::mutex guard;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(guard);
            if (!first) {
                first = std::current_exception();
            }
        }
    }
    if (first) {
        std::rethrow_exception(first);
    }
}

}  // namespace ascl
