// Timing comparison between the parallel evaluation paths and the plain
// serial references, on workloads large enough to show a spread but small
// enough to finish in seconds.  Also reports the relative disagreement so a
// regression in either path is visible immediately.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ujack/dataset.hpp"
#include "ujack/jackknife.hpp"
#include "ujack/kernel.hpp"
#include "ujack/rng.hpp"
#include "ujack/serial_ref.hpp"
#include "ujack/simulation.hpp"
#include "ujack/tdnn.hpp"
#include "ujack/ustat.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct BenchRow {
  std::string name;
  double serial_s = 0.0;
  double parallel_s = 0.0;
  double rel_diff = 0.0;
};

void print_row(const BenchRow& r) {
  std::printf(
      "%-32s reference %8.3fs  fast %8.3fs  speedup %6.2fx  reldiff %.3e\n",
      r.name.c_str(), r.serial_s, r.parallel_s,
      r.serial_s / (r.parallel_s > 0 ? r.parallel_s : 1e-12), r.rel_diff);
}

double rel_diff(double a, double b) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

BenchRow bench_complete_ustat() {
  // C(28, 4) = 20475 subsets of an order-4 mean kernel, repeated.
  ujack::RngStream rng(ujack::derive_key(11, {ujack::tag::misc}));
  std::vector<double> xs(28);
  for (double& x : xs) x = rng.next_double();
  const ujack::Dataset data = ujack::Dataset::from_scalars(xs);
  const ujack::KernelSpec kern = ujack::mean_kernel(4);

  const int reps = 60;
  BenchRow row;
  row.name = "complete-ustat n=28 s=4";
  double serial_v = 0.0, parallel_v = 0.0;
  auto t0 = clock_type::now();
  for (int r = 0; r < reps; ++r) serial_v = ujack::ref::eval_complete(data, kern);
  row.serial_s = seconds_since(t0);
  t0 = clock_type::now();
  for (int r = 0; r < reps; ++r) parallel_v = ujack::eval_complete(data, kern).value;
  row.parallel_s = seconds_since(t0);
  row.rel_diff = rel_diff(serial_v, parallel_v);
  return row;
}

BenchRow bench_dnn() {
  // Closed-form weighted ranking vs full enumeration, C(22, 4) subsets.
  ujack::DgpConfig dgp;
  dgp.k = 2;
  const ujack::Dataset data = ujack::dgp_sample(dgp, 22, 404);
  const double query[2] = {0.5, 0.5};

  BenchRow row;
  row.name = "dnn n=22 s=4";
  const int reps = 40;
  double serial_v = 0.0, parallel_v = 0.0;
  auto t0 = clock_type::now();
  for (int r = 0; r < reps; ++r)
    serial_v = ujack::ref::dnn_estimate(data, query, 4);
  row.serial_s = seconds_since(t0);
  t0 = clock_type::now();
  for (int r = 0; r < reps * 1000; ++r)
    parallel_v = ujack::dnn_estimate(data, query, 4);
  row.parallel_s = seconds_since(t0) / 1000.0;
  row.rel_diff = rel_diff(serial_v, parallel_v);
  return row;
}

BenchRow bench_jackknife() {
  // Delete-1 jackknife of the two-scale estimator: incremental rank reuse
  // vs re-estimating from scratch per deletion.
  ujack::DgpConfig dgp;
  const ujack::Dataset data = ujack::dgp_sample(dgp, 400, 505);
  const std::vector<double> query = {0.5};
  const long long s2 = 36, s1 = 18;

  ujack::EstimatorFn naive;
  naive.min_n = s2;
  naive.apply = [&](const ujack::Dataset& d) {
    return ujack::tdnn_estimate(d, query.data(), s1, s2).value;
  };

  BenchRow row;
  row.name = "tdnn-jackknife n=400 d=1";
  auto t0 = clock_type::now();
  const double serial_v = ujack::ref::jkd_variance(naive, data, 1);
  row.serial_s = seconds_since(t0);
  t0 = clock_type::now();
  const double parallel_v =
      ujack::tdnn_jackknife(data, query, s1, s2, 1).variance;
  row.parallel_s = seconds_since(t0);
  row.rel_diff = rel_diff(serial_v, parallel_v);
  return row;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (no OpenMP)\n");
#endif
  print_row(bench_complete_ustat());
  print_row(bench_dnn());
  print_row(bench_jackknife());
  return 0;
}
