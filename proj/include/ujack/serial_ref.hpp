#pragma once

#include "ujack/dataset.hpp"
#include "ujack/jackknife.hpp"
#include "ujack/kernel.hpp"
#include "ujack/ustat.hpp"

// Straight-line single-threaded references: the same contracts as the
// parallel paths, written as plain loops with naive accumulation.  They are
// kept as independent oracles for the test suite and as baselines for the
// benchmark; agreement with the fast paths is to tolerance, not bit-exact,
// because accumulation order differs.
namespace ujack::ref {

// Complete U-statistic by direct enumeration of all C(n, s) subsets.
// Kernel noise is keyed by the sorted original ids, matching eval_complete.
double eval_complete(const Dataset& data, const KernelSpec& kernel,
                     const EvalOptions& opt = {});

// Distributional nearest-neighbor estimate by enumerating every subset and
// averaging the response of each subset's closest point.
double dnn_estimate(const Dataset& data, const double* query, long long s);

// Delete-d jackknife by materializing every deletion set.
double jkd_variance(const EstimatorFn& est, const Dataset& data, long long d);

}  // namespace ujack::ref
