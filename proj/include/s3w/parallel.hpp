#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace s3w {

// Process-wide worker count used by the data-parallel loops below.
// 0 requests hardware concurrency. Results never depend on this value:
// workers only fill disjoint slots and reductions run on a fixed tree.
void set_worker_count(unsigned n);
unsigned worker_count();

// Deterministic summation on a fixed binary tree; independent of chunking.
double pairwise_sum(const double* x, std::size_t n);
double pairwise_sum(const std::vector<double>& x);

// Runs fn(i) for i in [0, n) across the configured workers. fn must write
// only to slots owned by index i. Blocks until all indices finish; the
// first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace s3w
