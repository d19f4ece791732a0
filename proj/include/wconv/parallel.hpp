#pragma once

#include <cstddef>
#include <functional>

namespace wconv {

/// Worker count from the WCONV_THREADS environment variable (default 1).
std::size_t thread_count();

/// Runs fn(i) for i in [0, n), split into contiguous blocks across
/// thread_count() workers. Callers keep results deterministic by writing
/// only to slot i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace wconv
