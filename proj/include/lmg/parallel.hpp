#ifndef LMG_PARALLEL_HPP
#define LMG_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace lmg {

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Calls made from inside a worker run inline. Each index runs
/// exactly once; the first exception thrown by any body is rethrown after all
/// workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

} // namespace lmg

#endif // LMG_PARALLEL_HPP
