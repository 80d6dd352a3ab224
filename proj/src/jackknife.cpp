#include "ujack/jackknife.hpp"

#include <set>
#include <stdexcept>
#include <vector>

#include "ujack/combinatorics.hpp"
#include "ujack/reduce.hpp"
#include "ujack/rng.hpp"

namespace ujack {

namespace {

// Pascal table C(m, t) for m <= n, t <= d; every exercised value fits a
// long long because callers bound C(n, d) by the exact-mode budget.
std::vector<long long> pascal_table(long long n, long long d) {
  std::vector<long long> tab(static_cast<std::size_t>((n + 1) * (d + 1)), 0);
  for (long long m = 0; m <= n; ++m) {
    tab[static_cast<std::size_t>(m * (d + 1))] = 1;
    for (long long t = 1; t <= d && t <= m; ++t) {
      const long long up = tab[static_cast<std::size_t>((m - 1) * (d + 1) + t)];
      const long long left =
          tab[static_cast<std::size_t>((m - 1) * (d + 1) + t - 1)];
      tab[static_cast<std::size_t>(m * (d + 1) + t)] = up + left;
    }
  }
  return tab;
}

// rank-th size-d subset of [0, n) in lexicographic order.
void unrank_subset(const std::vector<long long>& pascal, long long n,
                   long long d, long long rank, std::vector<long long>& out) {
  out.clear();
  long long v = 0;
  for (long long j = 0; j < d; ++j) {
    for (;; ++v) {
      const long long cnt =
          pascal[static_cast<std::size_t>((n - 1 - v) * (d + 1) + (d - 1 - j))];
      if (rank < cnt) break;
      rank -= cnt;
    }
    out.push_back(v);
    ++v;
  }
}

}  // namespace

JackknifeReport jkd_variance(const EstimatorFn& est, const Dataset& data,
                             long long d, const JackknifeOptions& opt) {
  const long long n = data.n();
  if (d < 1 || d >= n) throw std::invalid_argument("invalid-order");
  if (n - d < est.min_n) throw std::invalid_argument("n-too-small");

  const double u_full = est.apply(data);
  JackknifeReport rep;
  rep.d = d;
  rep.full_value = u_full;

  const BigInt c_big = binom(n, d);
  double mean_sq = 0.0;

  if (opt.subsample > 0) {
    rep.mode = JackknifeMode::Subsampled;
    rep.seed = opt.seed;
    long long b = opt.subsample;
    if (c_big <= b) b = c_big.convert_to<long long>();
    // Distinct deletion sets, drawn uniformly.
    RngStream rng(derive_key(opt.seed, {tag::subsample}));
    std::set<std::vector<long long>> seen;
    std::vector<std::vector<long long>> sets;
    sets.reserve(static_cast<std::size_t>(b));
    while (static_cast<long long>(sets.size()) < b) {
      std::vector<long long> drop = random_subset(n, d, rng);
      if (seen.insert(drop).second) sets.push_back(std::move(drop));
    }
    const double sum = deterministic_sum(b, [&](long long i) {
      const double diff =
          est.apply(data.without_rows(sets[static_cast<std::size_t>(i)])) -
          u_full;
      return diff * diff;
    });
    rep.replicates = b;
    mean_sq = sum / static_cast<double>(b);
  } else {
    rep.mode = JackknifeMode::Exact;
    if (c_big > opt.exact_budget) throw std::invalid_argument("budget-exceeded");
    const long long total = c_big.convert_to<long long>();
    const std::vector<long long> pascal = pascal_table(n, d);
    const double sum = deterministic_sum(total, [&](long long rank) {
      std::vector<long long> drop;
      unrank_subset(pascal, n, d, rank, drop);
      const double diff = est.apply(data.without_rows(drop)) - u_full;
      return diff * diff;
    });
    rep.replicates = total;
    mean_sq = sum / static_cast<double>(total);
  }

  rep.variance = static_cast<double>(n - d) / static_cast<double>(d) * mean_sq;
  return rep;
}

JackknifeReport jk_variance(const EstimatorFn& est, const Dataset& data) {
  return jkd_variance(est, data, 1, JackknifeOptions{});
}

}  // namespace ujack
