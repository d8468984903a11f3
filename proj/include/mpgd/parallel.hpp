#pragma once
#include <cstddef>
#include <functional>

namespace mpgd {

// Runs fn(i) for every i in [0, n).  Workers own contiguous index blocks, so
// writes keyed by i never race and the work assignment (hence any output
// written per index) is identical for every thread count.  n_threads <= 0
// means use the hardware count; 1 runs inline.
void parallel_for(std::size_t n, int n_threads, const std::function<void(std::size_t)>& fn);

}  // namespace mpgd
