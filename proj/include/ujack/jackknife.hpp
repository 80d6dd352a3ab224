#pragma once

// Delete-1 and delete-d jackknife variance estimation for an arbitrary
// estimator.  The estimator is re-evaluated on reduced datasets; reduced
// rows keep their original ids (see Dataset), so estimators whose internal
// randomness or caches are keyed by original ids behave coherently across
// deletions.

#include <cstdint>
#include <functional>

#include "ujack/dataset.hpp"

namespace ujack {

struct EstimatorFn {
  long long min_n = 1;  // smallest sample the estimator accepts
  std::function<double(const Dataset&)> apply;
};

enum class JackknifeMode { Exact, Subsampled };

struct JackknifeReport {
  double variance = 0.0;
  long long d = 1;
  long long replicates = 0;  // deletion sets actually evaluated
  JackknifeMode mode = JackknifeMode::Exact;
  std::uint64_t seed = 0;    // subsample seed (Subsampled mode only)
  double full_value = 0.0;   // estimate on the unreduced data
};

struct JackknifeOptions {
  // Exact mode enumerates all C(n, d) deletion sets; refused past this
  // budget with "budget-exceeded".
  long long exact_budget = 1'000'000;
  // B > 0 switches to Subsampled mode: B deletion sets drawn uniformly
  // without replacement.
  long long subsample = 0;
  std::uint64_t seed = 0;
};

// Delete-1 jackknife:  (n-1)/n * sum_i (U_{-i} - U)^2.
JackknifeReport jk_variance(const EstimatorFn& est, const Dataset& data);

// Delete-d jackknife:  (n-d)/d * avg over deletion sets of (U_{-S} - U)^2,
// the average over all C(n, d) sets (Exact) or over B sampled sets
// (Subsampled).  d = 1 Exact coincides with jk_variance bit for bit.
JackknifeReport jkd_variance(const EstimatorFn& est, const Dataset& data,
                             long long d, const JackknifeOptions& opt = {});

}  // namespace ujack
