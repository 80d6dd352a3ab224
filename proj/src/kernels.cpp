#include "ujack/kernel.hpp"

#include <stdexcept>

namespace ujack {

KernelSpec mean_kernel(long long s) {
  KernelSpec k;
  k.order = s;
  k.evaluate = [s](const Dataset& d, const long long* rows, RngStream&) {
    double acc = 0.0;
    for (long long i = 0; i < s; ++i) acc += d.scalar(rows[i]);
    return acc / static_cast<double>(s);
  };
  return k;
}

KernelSpec variance_kernel() {
  KernelSpec k;
  k.order = 2;
  k.evaluate = [](const Dataset& d, const long long* rows, RngStream&) {
    const double diff = d.scalar(rows[0]) - d.scalar(rows[1]);
    return 0.5 * diff * diff;
  };
  return k;
}

KernelSpec sample_variance_kernel(long long s) {
  if (s < 2) throw std::invalid_argument("invalid-order");
  KernelSpec k;
  k.order = s;
  k.evaluate = [s](const Dataset& d, const long long* rows, RngStream&) {
    double mean = 0.0;
    for (long long i = 0; i < s; ++i) mean += d.scalar(rows[i]);
    mean /= static_cast<double>(s);
    double acc = 0.0;
    for (long long i = 0; i < s; ++i) {
      const double diff = d.scalar(rows[i]) - mean;
      acc += diff * diff;
    }
    return acc / static_cast<double>(s - 1);
  };
  return k;
}

KernelSpec product_kernel() {
  KernelSpec k;
  k.order = 2;
  k.evaluate = [](const Dataset& d, const long long* rows, RngStream&) {
    return d.scalar(rows[0]) * d.scalar(rows[1]);
  };
  return k;
}

KernelSpec sign_flip_mean_kernel(long long s) {
  KernelSpec k;
  k.order = s;
  k.randomized = true;
  k.evaluate = [s](const Dataset& d, const long long* rows, RngStream& omega) {
    double acc = 0.0;
    for (long long i = 0; i < s; ++i) acc += d.scalar(rows[i]);
    const double sign = omega.next_double() < 0.5 ? -1.0 : 1.0;
    return sign * acc / static_cast<double>(s);
  };
  return k;
}

}  // namespace ujack
