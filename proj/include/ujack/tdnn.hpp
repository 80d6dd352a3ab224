#pragma once

// Distributional nearest-neighbor regression at a query point.
//
// The single-scale estimator weights the i-th nearest response by the
// probability that observation i is the nearest neighbor within a uniformly
// drawn size-s subsample: w_i = C(n-i, s-1) / C(n, s).  The two-scale
// version runs two subsampling scales s1 < s2 and combines them with fixed
// weights chosen so the leading smoothing-bias terms cancel, which makes the
// estimator amenable to jackknife variance estimation and studentized
// confidence intervals.

#include <cstdint>
#include <string>
#include <vector>

#include "ujack/dataset.hpp"
#include "ujack/jackknife.hpp"
#include "ujack/kernel.hpp"

namespace ujack {

// Row positions sorted by ascending Euclidean distance between the feature
// columns and the query; distance ties broken toward the lower original id.
std::vector<long long> rank_order(const Dataset& data, const double* query);

// Subsampling weights over ranked neighbors, w_i = C(n-i, s-1) / C(n, s)
// for i = 1..n (returned 0-indexed).  Nonnegative, nonincreasing, summing
// to 1, and zero past rank n - s + 1.  s = 1 gives the flat sample-mean
// weights; s = n puts all mass on the nearest neighbor.
std::vector<double> dnn_weights(long long n, long long s);

// Single-scale estimate: ranked responses dotted with dnn_weights.
double dnn_estimate(const Dataset& data, const double* query, long long s);

struct TdnnWeights {
  double w1 = 0.0;  // attached to the s1 scale; negative when s1 < s2
  double w2 = 0.0;  // 1 - w1
};

// Bias-cancelling scale weights: w1 = 1 / (1 - (s1/s2)^(-2/k)).
// Throws "equal-scales" when s1 == s2.
TdnnWeights tdnn_weights(long long s1, long long s2, long long k);

struct TdnnResult {
  double value = 0.0;
  double dnn_s1 = 0.0;
  double dnn_s2 = 0.0;
  TdnnWeights weights;
  std::vector<std::string> warnings;
};

// Two-scale estimate from a single neighbor-ranking pass.  Warns (without
// failing) when s1/s2 falls outside [0.1, 0.9] or when s2 == n.
TdnnResult tdnn_estimate(const Dataset& data, const double* query,
                         long long s1, long long s2);

// Estimator closure for jackknife re-evaluation: ranks the reference data
// once; each reduced dataset is handled by filtering survivors out of the
// stored ranking and re-running the weight recurrence, O(n) per deletion.
// min_n = s2.
EstimatorFn make_tdnn_estimator(const Dataset& reference,
                                std::vector<double> query, long long s1,
                                long long s2);

// Delete-d jackknife variance of the two-scale estimator.  Requires
// n - d >= s2.
JackknifeReport tdnn_jackknife(const Dataset& data,
                               const std::vector<double>& query, long long s1,
                               long long s2, long long d,
                               const JackknifeOptions& opt = {});

struct CiResult {
  double lo = 0.0;
  double hi = 0.0;
  double half_width = 0.0;
  double z = 0.0;          // normal quantile used
  bool degenerate = false; // variance was exactly zero
};

// Two-sided normal-quantile interval: estimate +- z_{(1+level)/2} * sqrt(var).
// Throws "invalid-level" outside (0,1) and "invalid-variance" below 0.
CiResult studentized_ci(double estimate, double variance, double level);

struct InferenceResult {
  double estimate = 0.0;
  double variance = 0.0;
  CiResult ci;
  long long n = 0, k = 0, s1 = 0, s2 = 0, d = 0;
  double level = 0.0;
  std::vector<std::string> warnings;
};

// Point estimate, jackknife variance, and confidence interval in one call.
InferenceResult tdnn_infer(const Dataset& data, const std::vector<double>& query,
                           long long s1, long long s2, long long d,
                           double level, const JackknifeOptions& opt = {});

// Order-s kernel selecting the response of the subset row nearest to the
// query; its complete U-statistic is exactly dnn_estimate at scale s.
KernelSpec nn_select_kernel(std::vector<double> query, long long s);

// Order-s2 kernel evaluating the two-scale estimator on its subset, with
// the inner s1 scale handled by the closed-form weights on s2 points.
KernelSpec tdnn_kernel(std::vector<double> query, long long s1, long long s2);

}  // namespace ujack
