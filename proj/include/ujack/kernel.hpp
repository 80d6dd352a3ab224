#pragma once

// Kernel abstraction for U-statistics.
//
// A kernel of order s maps s observations (given as row positions into a
// Dataset) to a real.  Randomized kernels additionally consume an auxiliary
// stream `omega`; the framework derives that stream from the master
// randomization seed and the sorted original ids of the rows, so the draw
// attached to a set of observations does not depend on evaluation order,
// storage order, or thread count.

#include <functional>

#include "ujack/dataset.hpp"
#include "ujack/rng.hpp"

namespace ujack {

struct KernelSpec {
  long long order = 1;
  bool randomized = false;
  std::function<double(const Dataset&, const long long* rows, RngStream& omega)>
      evaluate;
};

// h(x_1..x_s) = mean of the s scalars.
KernelSpec mean_kernel(long long s);

// h(x_1, x_2) = (x_1 - x_2)^2 / 2, the unbiased variance kernel.
KernelSpec variance_kernel();

// Order-s generalization: the sample variance of the s scalars (divisor
// s - 1); s = 2 coincides with variance_kernel.
KernelSpec sample_variance_kernel(long long s);

// h(x_1, x_2) = x_1 * x_2.
KernelSpec product_kernel();

// Randomized: a fair sign drawn from omega times the mean of the s scalars.
KernelSpec sign_flip_mean_kernel(long long s);

}  // namespace ujack
