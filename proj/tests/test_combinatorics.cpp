#include <doctest.h>

#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "ujack/combinatorics.hpp"
#include "ujack/rng.hpp"

using namespace ujack;

TEST_CASE("binomial coefficients are exact and total") {
  CHECK(binom(0, 0) == 1);
  CHECK(binom(5, 0) == 1);
  CHECK(binom(5, 5) == 1);
  CHECK(binom(10, 3) == 120);
  CHECK(binom(52, 5) == 2598960);
  // out-of-range arguments give zero instead of throwing
  CHECK(binom(5, 9) == 0);
  CHECK(binom(5, -1) == 0);
  CHECK(binom(-2, 1) == 0);
  // Pascal recurrence on a band of values
  for (long long n = 1; n <= 40; ++n)
    for (long long k = 1; k <= n; ++k)
      CHECK(binom(n, k) == binom(n - 1, k - 1) + binom(n - 1, k));
  // no overflow: 60 choose 30 has 18 digits
  CHECK(binom(60, 30) == BigInt("118264581564861424"));
}

TEST_CASE("Chu-Vandermonde identity check") {
  for (long long m = 0; m <= 8; ++m)
    for (long long n = 0; n <= 8; ++n)
      for (long long r = 0; r <= m + n; ++r) CHECK(chu_vandermonde_check(m, n, r));
}

TEST_CASE("subset stream enumerates lexicographically without repeats") {
  SubsetStream st(6, 3);
  std::set<std::vector<long long>> seen;
  std::vector<long long> prev;
  while (st.valid()) {
    const std::vector<long long>& cur = st.current();
    REQUIRE(cur.size() == 3);
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) CHECK(cur[i] < cur[i + 1]);
    if (!prev.empty()) CHECK(prev < cur);  // strictly increasing rank order
    CHECK(seen.insert(cur).second);
    prev = cur;
    st.advance();
  }
  CHECK(static_cast<long long>(seen.size()) == 20);

  SubsetStream one(4, 4);
  CHECK(one.valid());
  one.advance();
  CHECK(!one.valid());
  one.reset();
  CHECK(one.valid());

  CHECK_THROWS_WITH(SubsetStream(3, 5), "invalid-order");
  CHECK_THROWS_WITH(SubsetStream(3, -1), "invalid-order");

  // s = 0 is the single empty subset
  SubsetStream empty(3, 0);
  CHECK(empty.valid());
  CHECK(empty.current().empty());
  empty.advance();
  CHECK(!empty.valid());
}

TEST_CASE("random subsets are sorted, distinct, in range, and uniform-ish") {
  RngStream rng(derive_key(99, {tag::misc}));
  std::map<std::vector<long long>, int> freq;
  const int draws = 20000;
  for (int r = 0; r < draws; ++r) {
    std::vector<long long> s = random_subset(5, 2, rng);
    REQUIRE(s.size() == 2);
    CHECK(s[0] < s[1]);
    CHECK(s[0] >= 0);
    CHECK(s[1] < 5);
    ++freq[s];
  }
  REQUIRE(static_cast<long long>(freq.size()) == 10);
  // each of the 10 pairs should appear with frequency 1/10 up to 5 sigma
  for (const auto& [subset, count] : freq) {
    const double p = static_cast<double>(count) / draws;
    CHECK(std::abs(p - 0.1) < 5.0 * std::sqrt(0.1 * 0.9 / draws));
  }
}

TEST_CASE("kernel product probabilities: closed forms at small orders") {
  using KV = KernelProductVariant;
  // shared-shared: first position among all 2s-c slots is uniform
  for (int s = 1; s <= 4; ++s)
    for (int c = 1; c <= s; ++c) {
      if (2 * s - c > 12) continue;
      CHECK(kernel_product_probability(s, c, KV::SharedShared) ==
            BigRat(1, 2 * s - c));
    }
  CHECK(kernel_product_probability(2, 1, KV::SharedNew) == BigRat(1, 6));
  CHECK(kernel_product_probability(2, 1, KV::NewNew) == BigRat(1, 3));
  // s = c collapses both tuples to the shared block: no "new" items at all
  CHECK(kernel_product_probability(2, 2, KV::SharedShared) == BigRat(1, 2));

  CHECK_THROWS_WITH(kernel_product_probability(0, 0, KV::SharedShared),
                    "invalid-order");
  CHECK_THROWS_WITH(kernel_product_probability(3, 5, KV::SharedShared),
                    "invalid-order");
  CHECK_THROWS_WITH(kernel_product_probability(8, 2, KV::SharedShared),
                    "enumeration-too-large");
}

TEST_CASE("kernel product probabilities sum correctly over variants") {
  // Within one joint ordering exactly one of the three events happens for
  // the designated pair, so the probabilities of the mutually exclusive
  // cases weighted by pair counts total 1 for each (s, c).
  using KV = KernelProductVariant;
  for (int s = 1; s <= 4; ++s)
    for (int c = 1; c <= s; ++c) {
      if (2 * s - c > 12) continue;
      const long long a = s - c;  // new items on each side
      BigRat total = BigRat(c) * kernel_product_probability(s, c, KV::SharedShared);
      if (a > 0)
        total += BigRat(2 * c * a) *
                 kernel_product_probability(s, c, KV::SharedNew);
      if (a > 0)
        total += BigRat(a * a) * kernel_product_probability(s, c, KV::NewNew);
      // every (first-left, first-right) pair is some (type,type) combination
      CHECK(total == BigRat(1));
    }
}
