#include "kstep/kernels.hpp"

#include <atomic>
#include <exception>
#include <limits>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kstep::kernels {

std::size_t find_first_serial(std::size_t n, const std::function<bool(std::size_t)>& pred)
{
    for (std::size_t i = 0; i < n; ++i) {
        if (pred(i)) {
            return i;
        }
    }
    return n;
}

std::size_t find_first_parallel(std::size_t n, const std::function<bool(std::size_t)>& pred)
{
    std::atomic<std::size_t> best{n};
    std::exception_ptr error;
    std::size_t error_index = std::numeric_limits<std::size_t>::max();
    std::mutex error_mutex;
    const auto count = static_cast<long long>(n);

#pragma omp parallel for schedule(dynamic, 16)
    for (long long ii = 0; ii < count; ++ii) {
        auto i = static_cast<std::size_t>(ii);
        if (i >= best.load(std::memory_order_relaxed)) {
            continue;
        }
        try {
            if (pred(i)) {
                std::size_t cur = best.load();
                while (i < cur && !best.compare_exchange_weak(cur, i)) {
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < error_index) {
                error_index = i;
                error = std::current_exception();
            }
        }
    }
    if (error && error_index < best.load()) {
        std::rethrow_exception(error);
    }
    return best.load();
}

void for_each_serial(std::size_t n, const std::function<void(std::size_t)>& body)
{
    for (std::size_t i = 0; i < n; ++i) {
        body(i);
    }
}

void for_each_parallel(std::size_t n, const std::function<void(std::size_t)>& body)
{
    std::exception_ptr error;
    std::size_t error_index = std::numeric_limits<std::size_t>::max();
    std::mutex error_mutex;
    const auto count = static_cast<long long>(n);

#pragma omp parallel for schedule(dynamic, 1)
    for (long long ii = 0; ii < count; ++ii) {
        auto i = static_cast<std::size_t>(ii);
        try {
            body(i);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < error_index) {
                error_index = i;
                error = std::current_exception();
            }
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace kstep::kernels
