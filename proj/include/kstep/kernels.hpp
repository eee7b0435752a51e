#pragma once

// Data-parallel loops used by the verifier's exhaustive path and by the
// explanation search's candidate batches. Every parallel kernel has a serial
// twin with identical results; tests and the benchmark compare the two.

#include <cstddef>
#include <functional>

namespace kstep::kernels {

enum class Exec { Serial, Parallel };

/// Smallest i in [0, n) with pred(i), or n when there is none.
std::size_t find_first_serial(std::size_t n, const std::function<bool(std::size_t)>& pred);
std::size_t find_first_parallel(std::size_t n, const std::function<bool(std::size_t)>& pred);

inline std::size_t find_first(Exec exec, std::size_t n,
                              const std::function<bool(std::size_t)>& pred)
{
    return exec == Exec::Parallel ? find_first_parallel(n, pred) : find_first_serial(n, pred);
}

/// Calls body(i) for every i in [0, n). Exceptions thrown by body are
/// rethrown on the calling thread (the one from the lowest index wins).
void for_each_serial(std::size_t n, const std::function<void(std::size_t)>& body);
void for_each_parallel(std::size_t n, const std::function<void(std::size_t)>& body);

inline void for_each(Exec exec, std::size_t n, const std::function<void(std::size_t)>& body)
{
    exec == Exec::Parallel ? for_each_parallel(n, body) : for_each_serial(n, body);
}

int max_threads();

}  // namespace kstep::kernels
