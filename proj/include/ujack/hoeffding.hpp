#pragma once

// Orthogonal decomposition of a symmetric kernel with respect to a finite
// discrete observation law, computed exhaustively: conditional expectations,
// canonical (completely degenerate) components, their second moments, and
// the variance-share diagnostics built on top of them.  Also a Monte Carlo
// estimator of the conditional-covariance scale for kernels under an
// arbitrary continuous observation law.

#include <cstdint>
#include <functional>
#include <vector>

#include "ujack/kernel.hpp"

namespace ujack {

struct DiscreteDistribution {
  std::vector<double> support;  // distinct points
  std::vector<double> probs;    // nonnegative, sums to 1 within 1e-12

  DiscreteDistribution(std::vector<double> pts, std::vector<double> ps);
};

struct HoeffdingTable {
  long long s = 0;
  double theta = 0.0;
  // components[c-1] tabulates the order-c canonical component over all
  // |support|^c argument tuples, row-major in base |support|.
  std::vector<std::vector<double>> components;
  std::vector<double> v;     // v[c-1]    = E[(h^(c))^2]
  std::vector<double> zeta;  // zeta[c-1] = Var(psi_c); zeta[s-1] = Var(h)
};

struct HoeffdingOptions {
  long long randomized_draws = 1;  // R: fixed auxiliary draws to average
  std::uint64_t omega_seed = 0;
};

// Uncentered conditional expectation psi_c: the kernel averaged over the
// trailing s - c arguments under the product law, the leading c arguments
// pinned to `fixed`.  fixed may be empty (giving theta = E[h]).
double psi(const KernelSpec& kernel, const DiscreteDistribution& dist,
           const std::vector<double>& fixed, const HoeffdingOptions& opt = {});

// Canonical component h^(c) at the given c-tuple: psi_c - theta minus every
// lower-order component evaluated on every sub-tuple.
double hoeffding_component(const KernelSpec& kernel,
                           const DiscreteDistribution& dist,
                           const std::vector<double>& fixed,
                           const HoeffdingOptions& opt = {});

// Full table of components and second moments for c = 1..s.
HoeffdingTable build_table(const KernelSpec& kernel,
                           const DiscreteDistribution& dist,
                           const HoeffdingOptions& opt = {});

// Exact variance of the complete U-statistic on n observations:
//   sum_c binom(s,c)^2 / binom(n,c) * v[c].
// Throws "n-too-small" if n < s.
double variance_decomposition(const HoeffdingTable& table, long long n);

// One observation for Monte Carlo work: fills a row of `width` doubles.
struct ObservationSampler {
  long long width = 1;
  std::function<void(RngStream&, double*)> draw;
};

struct ZetaEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long reps = 0;
};

// Monte Carlo estimate of zeta_c = Cov(h(S,T), h(S,T')) where the c-block S
// is shared and the two tails are independent; randomized kernels get
// independent auxiliary draws on the two sides.  With c = s this is the
// kernel variance.
ZetaEstimate estimate_zeta(const KernelSpec& kernel,
                           const ObservationSampler& sampler, long long c,
                           long long reps, std::uint64_t seed);

// Scaled gap between the top and first-order variance shares:
//   (s/n) * (zeta_s / (s * zeta_1) - 1).
// All three throw "zeta1-nonpositive" when zeta_1 <= 0.
double dominance_stat(long long n, long long s, double zeta1, double zeta_s);

// Relative weight of the subset-sampling noise: n / (N * s * zeta_1).
double sampling_stat(long long n, double target_n, long long s, double zeta1);

// Ratio of the actual estimator variance to the first-order approximation
// zeta_1 * s^2 / n.
double hajek_ratio(long long n, long long s, double var_u, double zeta1);

}  // namespace ujack
