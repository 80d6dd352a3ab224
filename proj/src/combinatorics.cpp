#include "ujack/combinatorics.hpp"

#include <algorithm>
#include <limits>

#include "ujack/rng.hpp"

namespace ujack {

BigInt binom(long long n, long long k) {
  if (n < 0 || k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt r = 1;
  // r * (n-k+i) is divisible by i at every step: r holds C(n-k+i-1, i-1)
  // and C(n-k+i, i) = C(n-k+i-1, i-1) * (n-k+i) / i.
  for (long long i = 1; i <= k; ++i) {
    r *= (n - k + i);
    r /= i;
  }
  return r;
}

double binom_double(long long n, long long k) {
  return binom(n, k).convert_to<double>();
}

SubsetStream::SubsetStream(long long n, long long s) : n_(n), s_(s) {
  if (n < 0 || s < 0 || s > n) throw std::invalid_argument("invalid-order");
  reset();
}

void SubsetStream::reset() {
  cur_.resize(static_cast<std::size_t>(s_));
  for (long long i = 0; i < s_; ++i) cur_[static_cast<std::size_t>(i)] = i;
  valid_ = true;
}

void SubsetStream::advance() {
  if (!valid_) return;
  // Rightmost member that can still move up, then pack the tail behind it.
  long long i = s_ - 1;
  while (i >= 0 && cur_[static_cast<std::size_t>(i)] == n_ - s_ + i) --i;
  if (i < 0) {
    valid_ = false;
    return;
  }
  ++cur_[static_cast<std::size_t>(i)];
  for (long long j = i + 1; j < s_; ++j)
    cur_[static_cast<std::size_t>(j)] = cur_[static_cast<std::size_t>(j - 1)] + 1;
}

bool chu_vandermonde_check(long long m, long long n, long long r) {
  BigInt lhs = binom(m + n, r);
  BigInt rhs = 0;
  for (long long k = 0; k <= r; ++k) rhs += binom(m, k) * binom(n, r - k);
  return lhs == rhs;
}

std::vector<long long> random_subset(long long n, long long s, RngStream& rng) {
  std::vector<long long> out;
  out.reserve(static_cast<std::size_t>(s));
  for (long long j = n - s; j < n; ++j) {
    const long long t = static_cast<long long>(
        rng.next_below(static_cast<std::uint64_t>(j + 1)));
    if (std::find(out.begin(), out.end(), t) == out.end())
      out.push_back(t);
    else
      out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

BigInt factorial(int n) {
  BigInt r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace

BigRat kernel_product_probability(int s, int c, KernelProductVariant variant) {
  if (s < 1 || c < 1 || c > s) throw std::invalid_argument("invalid-order");
  const int m = 2 * s - c;
  if (m > 12) throw std::invalid_argument("enumeration-too-large");

  const int a = s - c;  // items only in the left window
  const int b = s - c;  // items only in the right window

  // Rank positions carry labels: 0 = shared, 1 = left-only, 2 = right-only.
  // Walk every distinct label pattern; within a pattern the items of one
  // class are interchangeable, so the number of full orderings realizing a
  // designated-item event is a product of factorials.
  std::vector<int> labels;
  labels.insert(labels.end(), static_cast<std::size_t>(c), 0);
  labels.insert(labels.end(), static_cast<std::size_t>(a), 1);
  labels.insert(labels.end(), static_cast<std::size_t>(b), 2);

  const BigInt mult_ss = factorial(c - 1) * factorial(a) * factorial(b);
  const BigInt mult_sn = factorial(c - 1) * factorial(a) * factorial(b - 1);
  const BigInt mult_nn = factorial(c) * factorial(a - 1) * factorial(b - 1);

  BigInt hits = 0;
  do {
    // Nearest item each window accepts: first position labeled shared or
    // own-side-only.
    int left = -1, right = -1;
    for (int i = 0; i < m && (left < 0 || right < 0); ++i) {
      if (left < 0 && (labels[static_cast<std::size_t>(i)] == 0 ||
                       labels[static_cast<std::size_t>(i)] == 1))
        left = i;
      if (right < 0 && (labels[static_cast<std::size_t>(i)] == 0 ||
                        labels[static_cast<std::size_t>(i)] == 2))
        right = i;
    }
    const bool left_shared = labels[static_cast<std::size_t>(left)] == 0;
    const bool right_shared = labels[static_cast<std::size_t>(right)] == 0;
    switch (variant) {
      case KernelProductVariant::SharedShared:
        // Both firsts labeled shared forces the same position, the overall
        // first shared slot; the designated item must sit there.
        if (left_shared && right_shared) hits += mult_ss;
        break;
      case KernelProductVariant::SharedNew:
        if (b >= 1 && left_shared && !right_shared) hits += mult_sn;
        break;
      case KernelProductVariant::NewNew:
        if (a >= 1 && b >= 1 && !left_shared && !right_shared) hits += mult_nn;
        break;
    }
  } while (std::next_permutation(labels.begin(), labels.end()));

  return BigRat(hits, factorial(m));
}

}  // namespace ujack
