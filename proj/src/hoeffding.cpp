#include "ujack/hoeffding.hpp"

#include <cmath>
#include <stdexcept>

#include "ujack/combinatorics.hpp"
#include "ujack/ustat.hpp"

namespace ujack {

DiscreteDistribution::DiscreteDistribution(std::vector<double> pts,
                                           std::vector<double> ps)
    : support(std::move(pts)), probs(std::move(ps)) {
  if (support.empty() || support.size() != probs.size())
    throw std::invalid_argument("invalid-distribution");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("invalid-distribution");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw std::invalid_argument("invalid-distribution");
  for (std::size_t i = 0; i < support.size(); ++i)
    for (std::size_t j = i + 1; j < support.size(); ++j)
      if (support[i] == support[j])
        throw std::invalid_argument("invalid-distribution");
}

namespace {

// psi for one fixed auxiliary draw: kernel averaged over the trailing
// s - c arguments, exhaustively over support^(s-c).
double psi_one_draw(const KernelSpec& fixed_kernel,
                    const DiscreteDistribution& dist,
                    const std::vector<double>& fixed) {
  const long long s = fixed_kernel.order;
  const long long c = static_cast<long long>(fixed.size());
  const long long m = s - c;
  const long long w = static_cast<long long>(dist.support.size());

  std::vector<double> rowvals = fixed;
  rowvals.insert(rowvals.end(), dist.support.begin(), dist.support.end());
  const Dataset ds = Dataset::from_scalars(rowvals);

  std::vector<long long> rows(static_cast<std::size_t>(s));
  for (long long i = 0; i < c; ++i) rows[static_cast<std::size_t>(i)] = i;

  std::vector<long long> idx(static_cast<std::size_t>(m), 0);
  RngStream unused(0);
  double acc = 0.0;
  for (;;) {
    double weight = 1.0;
    for (long long i = 0; i < m; ++i) {
      rows[static_cast<std::size_t>(c + i)] = c + idx[static_cast<std::size_t>(i)];
      weight *= dist.probs[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    acc += weight * fixed_kernel.evaluate(ds, rows.data(), unused);
    long long pos = m - 1;
    while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == w) {
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return acc;
}

double psi_impl(const KernelSpec& kernel, const DiscreteDistribution& dist,
                const std::vector<double>& fixed,
                const HoeffdingOptions& opt) {
  if (static_cast<long long>(fixed.size()) > kernel.order)
    throw std::invalid_argument("invalid-order");
  const long long r_draws = kernel.randomized ? opt.randomized_draws : 1;
  if (r_draws < 1) throw std::invalid_argument("invalid-order");
  double acc = 0.0;
  for (long long r = 0; r < r_draws; ++r)
    acc += psi_one_draw(fix_omega(kernel, opt.omega_seed, r), dist, fixed);
  return acc / static_cast<double>(r_draws);
}

}  // namespace

double psi(const KernelSpec& kernel, const DiscreteDistribution& dist,
           const std::vector<double>& fixed, const HoeffdingOptions& opt) {
  return psi_impl(kernel, dist, fixed, opt);
}

double hoeffding_component(const KernelSpec& kernel,
                           const DiscreteDistribution& dist,
                           const std::vector<double>& fixed,
                           const HoeffdingOptions& opt) {
  const long long c = static_cast<long long>(fixed.size());
  if (c < 1 || c > kernel.order) throw std::invalid_argument("invalid-order");
  const double theta = psi_impl(kernel, dist, {}, opt);

  // comp[mask] for every nonempty sub-tuple of the fixed block, filled in
  // increasing popcount order; each entry subtracts all strictly smaller
  // masks, which are already final.
  const long long full = (1LL << c) - 1;
  std::vector<double> comp(static_cast<std::size_t>(full + 1), 0.0);
  for (long long size = 1; size <= c; ++size) {
    for (long long mask = 1; mask <= full; ++mask) {
      if (__builtin_popcountll(static_cast<unsigned long long>(mask)) != size)
        continue;
      std::vector<double> sub;
      for (long long i = 0; i < c; ++i)
        if (mask & (1LL << i)) sub.push_back(fixed[static_cast<std::size_t>(i)]);
      double val = psi_impl(kernel, dist, sub, opt) - theta;
      for (long long lower = (mask - 1) & mask; lower != 0;
           lower = (lower - 1) & mask)
        val -= comp[static_cast<std::size_t>(lower)];
      comp[static_cast<std::size_t>(mask)] = val;
    }
  }
  return comp[static_cast<std::size_t>(full)];
}

HoeffdingTable build_table(const KernelSpec& kernel,
                           const DiscreteDistribution& dist,
                           const HoeffdingOptions& opt) {
  const long long s = kernel.order;
  const long long w = static_cast<long long>(dist.support.size());
  HoeffdingTable table;
  table.s = s;
  table.theta = psi_impl(kernel, dist, {}, opt);
  table.components.resize(static_cast<std::size_t>(s));
  table.v.resize(static_cast<std::size_t>(s));
  table.zeta.resize(static_cast<std::size_t>(s));

  // pow_w[c] = w^c tuple counts.
  std::vector<long long> pow_w(static_cast<std::size_t>(s + 1), 1);
  for (long long c = 1; c <= s; ++c)
    pow_w[static_cast<std::size_t>(c)] = pow_w[static_cast<std::size_t>(c - 1)] * w;

  std::vector<double> fixed;
  std::vector<long long> idx;
  for (long long c = 1; c <= s; ++c) {
    const long long count = pow_w[static_cast<std::size_t>(c)];
    std::vector<double>& comp = table.components[static_cast<std::size_t>(c - 1)];
    comp.assign(static_cast<std::size_t>(count), 0.0);
    double v_acc = 0.0, zeta_acc = 0.0;
    idx.assign(static_cast<std::size_t>(c), 0);
    for (long long t = 0; t < count; ++t) {
      fixed.clear();
      double weight = 1.0;
      for (long long i = 0; i < c; ++i) {
        fixed.push_back(dist.support[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
        weight *= dist.probs[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      }
      const double psi_c = psi_impl(kernel, dist, fixed, opt);
      // Subtract every lower-order component over every sub-tuple of the
      // argument positions, read from the already-built tables.
      double val = psi_c - table.theta;
      for (long long j = 1; j < c; ++j) {
        const std::vector<double>& lower =
            table.components[static_cast<std::size_t>(j - 1)];
        for (SubsetStream sub(c, j); sub.valid(); sub.advance()) {
          long long key = 0;
          for (long long q : sub.current())
            key = key * w + idx[static_cast<std::size_t>(q)];
          val -= lower[static_cast<std::size_t>(key)];
        }
      }
      comp[static_cast<std::size_t>(t)] = val;
      v_acc += weight * val * val;
      zeta_acc += weight * psi_c * psi_c;

      long long pos = c - 1;
      while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == w) {
        idx[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      (void)pos;
    }
    table.v[static_cast<std::size_t>(c - 1)] = v_acc;
    table.zeta[static_cast<std::size_t>(c - 1)] =
        zeta_acc - table.theta * table.theta;
  }
  return table;
}

double variance_decomposition(const HoeffdingTable& table, long long n) {
  if (n < table.s) throw std::invalid_argument("n-too-small");
  double var = 0.0;
  for (long long c = 1; c <= table.s; ++c) {
    const double w = binom_double(table.s, c);
    var += w * w / binom_double(n, c) * table.v[static_cast<std::size_t>(c - 1)];
  }
  return var;
}

ZetaEstimate estimate_zeta(const KernelSpec& kernel,
                           const ObservationSampler& sampler, long long c,
                           long long reps, std::uint64_t seed) {
  const long long s = kernel.order;
  if (c < 1 || c > s) throw std::invalid_argument("invalid-order");
  if (reps < 2) throw std::invalid_argument("invalid-order");
  const long long m = s - c;
  const long long w = sampler.width;

  std::vector<double> a(static_cast<std::size_t>(reps));
  std::vector<double> b(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < reps; ++r) {
    RngStream rng(derive_key(seed, {tag::zeta, static_cast<std::uint64_t>(r)}));
    // Rows: shared block, tail for the left copy, tail for the right copy.
    std::vector<double> vals(static_cast<std::size_t>((c + 2 * m) * w));
    for (long long i = 0; i < c + 2 * m; ++i)
      sampler.draw(rng, vals.data() + i * w);
    const Dataset ds(std::move(vals), w);
    std::vector<long long> rows(static_cast<std::size_t>(s));
    for (long long i = 0; i < c; ++i) rows[static_cast<std::size_t>(i)] = i;
    for (long long i = 0; i < m; ++i)
      rows[static_cast<std::size_t>(c + i)] = c + i;
    RngStream oa(derive_key(seed, {tag::omega, static_cast<std::uint64_t>(r), 1}));
    a[static_cast<std::size_t>(r)] = kernel.evaluate(ds, rows.data(), oa);
    for (long long i = 0; i < m; ++i)
      rows[static_cast<std::size_t>(c + i)] = c + m + i;
    RngStream ob(derive_key(seed, {tag::omega, static_cast<std::uint64_t>(r), 2}));
    b[static_cast<std::size_t>(r)] = kernel.evaluate(ds, rows.data(), ob);
  }

  double ma = 0.0, mb = 0.0;
  for (long long r = 0; r < reps; ++r) {
    ma += a[static_cast<std::size_t>(r)];
    mb += b[static_cast<std::size_t>(r)];
  }
  ma /= static_cast<double>(reps);
  mb /= static_cast<double>(reps);
  double cov = 0.0, sq = 0.0;
  for (long long r = 0; r < reps; ++r) {
    const double prod = (a[static_cast<std::size_t>(r)] - ma) *
                        (b[static_cast<std::size_t>(r)] - mb);
    cov += prod;
    sq += prod * prod;
  }
  ZetaEstimate est;
  est.reps = reps;
  est.value = cov / static_cast<double>(reps - 1);
  const double mean_prod = cov / static_cast<double>(reps);
  const double var_prod =
      (sq - static_cast<double>(reps) * mean_prod * mean_prod) /
      static_cast<double>(reps - 1);
  est.std_error = std::sqrt(std::max(0.0, var_prod) / static_cast<double>(reps));
  return est;
}

double dominance_stat(long long n, long long s, double zeta1, double zeta_s) {
  if (!(zeta1 > 0.0)) throw std::invalid_argument("zeta1-nonpositive");
  return static_cast<double>(s) / static_cast<double>(n) *
         (zeta_s / (static_cast<double>(s) * zeta1) - 1.0);
}

double sampling_stat(long long n, double target_n, long long s, double zeta1) {
  if (!(zeta1 > 0.0)) throw std::invalid_argument("zeta1-nonpositive");
  return static_cast<double>(n) /
         (target_n * static_cast<double>(s) * zeta1);
}

double hajek_ratio(long long n, long long s, double var_u, double zeta1) {
  if (!(zeta1 > 0.0)) throw std::invalid_argument("zeta1-nonpositive");
  return static_cast<double>(n) / (static_cast<double>(s) * static_cast<double>(s)) *
         var_u / zeta1;
}

}  // namespace ujack
