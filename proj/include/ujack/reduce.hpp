#pragma once

// Deterministic parallel reduction.
//
// Sums are accumulated in fixed-size blocks (4096 terms, Neumaier
// compensation inside a block), each block owned by exactly one worker, and
// the per-block results are folded by a serial pairwise tree.  The block
// boundaries depend only on the index range, so the result is bit-identical
// for any thread count, including 1.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ujack {

inline constexpr long long kReduceBlock = 4096;

namespace detail {

inline double pairwise_fold(const double* p, long long n) {
  if (n <= 8) {
    double s = 0.0, comp = 0.0;
    for (long long i = 0; i < n; ++i) {
      const double v = p[i];
      const double t = s + v;
      if ((s >= 0 ? s : -s) >= (v >= 0 ? v : -v))
        comp += (s - t) + v;
      else
        comp += (v - t) + s;
      s = t;
    }
    return s + comp;
  }
  const long long mid = n / 2;
  return pairwise_fold(p, mid) + pairwise_fold(p + mid, n - mid);
}

}  // namespace detail

// Sum of fn(i) for i in [0, count), deterministic under parallelism.
template <class F>
double deterministic_sum(long long count, F&& fn) {
  if (count <= 0) return 0.0;
  const long long nblocks = (count + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> block(static_cast<std::size_t>(nblocks), 0.0);
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < nblocks; ++b) {
    const long long lo = b * kReduceBlock;
    const long long hi = lo + kReduceBlock < count ? lo + kReduceBlock : count;
    double s = 0.0, comp = 0.0;
    for (long long i = lo; i < hi; ++i) {
      const double v = fn(i);
      const double t = s + v;
      if ((s >= 0 ? s : -s) >= (v >= 0 ? v : -v))
        comp += (s - t) + v;
      else
        comp += (v - t) + s;
      s = t;
    }
    block[static_cast<std::size_t>(b)] = s + comp;
  }
  return detail::pairwise_fold(block.data(), nblocks);
}

// out[i] = fn(i) for i in [0, count), computed in parallel.  Each slot is a
// pure function of i, so the fill is trivially deterministic.
template <class F>
void parallel_fill(long long count, std::vector<double>& out, F&& fn) {
  out.resize(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = fn(i);
}

}  // namespace ujack
