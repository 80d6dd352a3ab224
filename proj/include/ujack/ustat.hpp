#pragma once

// Generalized U-statistics over size-s subsets of a dataset: complete
// enumeration, Bernoulli-incomplete with N-hat normalization, and the
// Horvitz-Thompson weighting that divides by the subset count times the
// selection probability instead of the realized count.

#include <cstdint>

#include "ujack/dataset.hpp"
#include "ujack/jackknife.hpp"
#include "ujack/kernel.hpp"

namespace ujack {

enum class PlanKind { Complete, Bernoulli, HorvitzThompson };

// How a selection reacts when rows are deleted (jackknife re-evaluation).
//
// KeepMarks: every subset keeps its original selection mark; a reduced
// dataset simply loses the subsets that touch deleted rows.  The selection
// probability stays the one computed on the reference sample size.
//
// RecomputeP: the selection probability is recomputed on the reduced subset
// lattice so the expected number of selected subsets stays targetN; subsets
// keep their marks where both thresholds agree and extra subsets enter where
// the threshold grew.
enum class DeletionCoupling { KeepMarks, RecomputeP };

struct SamplingPlan {
  PlanKind kind = PlanKind::Complete;
  double target_n = 0.0;  // expected number of selected subsets
  DeletionCoupling coupling = DeletionCoupling::KeepMarks;

  static SamplingPlan complete() { return {}; }
  static SamplingPlan bernoulli(double target_n,
                                DeletionCoupling c = DeletionCoupling::KeepMarks) {
    return {PlanKind::Bernoulli, target_n, c};
  }
  static SamplingPlan horvitz_thompson(
      double target_n, DeletionCoupling c = DeletionCoupling::KeepMarks) {
    return {PlanKind::HorvitzThompson, target_n, c};
  }
};

struct EvalOptions {
  std::uint64_t omega_seed = 0;      // randomized-kernel substreams
  std::uint64_t selection_seed = 0;  // subset selection substreams
  long long budget = 10'000'000;     // max kernel evaluations
};

struct UStatResult {
  double value = 0.0;
  long long selected = 0;  // subsets evaluated (N-hat; C(n,s) when complete)
  PlanKind plan = PlanKind::Complete;
  double target_n = 0.0;
  std::uint64_t seed = 0;  // selection seed echo
  // Horvitz-Thompson with an empty selection: value pinned to 0, flagged.
  bool empty_selection = false;
};

// Average of the kernel over all C(n, s) subsets.  Throws
// "order-exceeds-sample" if s > n, "budget-exceeded" if C(n, s) > budget.
UStatResult eval_complete(const Dataset& data, const KernelSpec& kernel,
                          const EvalOptions& opt = {});

// Bernoulli-incomplete: subsets enter independently with probability
// p = target_n / C(n, s); value = sum of selected kernel values / N-hat.
// Collapses to eval_complete bit for bit when p >= 1.  Throws
// "empty-selection" if no subset is selected.
UStatResult eval_incomplete(const Dataset& data, const KernelSpec& kernel,
                            const SamplingPlan& plan,
                            const EvalOptions& opt = {});

// Same selection law, Horvitz-Thompson normalization:
// value = sum of selected kernel values / (p * C(n, s)).  An empty
// selection yields value 0 with the empty_selection flag set.
UStatResult eval_ht(const Dataset& data, const KernelSpec& kernel,
                    const SamplingPlan& plan, const EvalOptions& opt = {});

// Wraps a randomized kernel into a deterministic one by pinning the
// auxiliary stream to a fixed draw index; pass-through for deterministic
// kernels.
KernelSpec fix_omega(const KernelSpec& kernel, std::uint64_t omega_seed,
                     long long draw_index);

// Incomplete-U estimator closure for jackknife use.  The subset selection
// and all kernel values are realized once against the reference data;
// apply(reduced) re-normalizes over the subsets whose rows all survive
// (KeepMarks) or re-runs selection at the reduced-lattice probability
// (RecomputeP).  apply(reference) equals eval_incomplete / eval_ht on the
// reference data exactly.
EstimatorFn make_incomplete_estimator(const Dataset& reference,
                                      const KernelSpec& kernel,
                                      const SamplingPlan& plan,
                                      const EvalOptions& opt = {});

}  // namespace ujack
