#pragma once

// Exact combinatorics: big-integer binomials, lexicographic subset streams,
// and the exact kernel-overlap probabilities used by the variance theory for
// pairs of nearest-rank selection events.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ujack {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// C(n, k), exact for any size.  k > n or k < 0 gives 0 (the usual convention,
// so identities like Vandermonde sums hold without edge-case guards).
BigInt binom(long long n, long long k);

// C(n, k) as a double; +inf if it overflows.  Convenience for ratio code.
double binom_double(long long n, long long k);

// Streaming enumerator over the C(n, s) size-s subsets of {0, ..., n-1} in
// lexicographic order.  O(s) memory; restartable via reset().
//
//   SubsetStream st(4, 2);
//   while (st.valid()) { use(st.current()); st.advance(); }
class SubsetStream {
 public:
  // Throws std::invalid_argument("invalid-order") if s > n or s < 0.
  SubsetStream(long long n, long long s);

  bool valid() const { return valid_; }
  const std::vector<long long>& current() const { return cur_; }
  void advance();
  void reset();

  long long n() const { return n_; }
  long long s() const { return s_; }

 private:
  long long n_;
  long long s_;
  bool valid_;
  std::vector<long long> cur_;
};

// Verifies the Vandermonde convolution C(m+n, r) = sum_k C(m, k) C(n, r-k)
// in exact arithmetic.  Returns true iff the identity holds.
bool chu_vandermonde_check(long long m, long long n, long long r);

class RngStream;

// Uniform random size-s subset of {0, ..., n-1}, sorted ascending
// (Floyd's algorithm: s draws regardless of n).
std::vector<long long> random_subset(long long n, long long s, RngStream& rng);

// Which pair of rank-selection events to score for two overlapping
// selection windows: both windows pick the same shared item, one picks a
// shared item and the other a fresh one, or both pick fresh items.
enum class KernelProductVariant { SharedShared, SharedNew, NewNew };

// Exact probability that two nearest-rank selections over windows of size s
// sharing c common items land in the given configuration, under a uniform
// random ordering of the 2s - c distinct items.
//
// Computed by exhaustive counting over the multiset of item labels
// (c shared, s-c left-only, s-c right-only): each of the (2s-c)! orderings
// contributes through its label pattern, with exact multiplicities for the
// indistinguishable items within a label class.
//
// Requires 1 <= c <= s and 2s - c <= 12; otherwise throws
// std::invalid_argument("enumeration-too-large") (or "invalid-order" for a
// bad (s, c) pair).
BigRat kernel_product_probability(int s, int c, KernelProductVariant variant);

}  // namespace ujack
