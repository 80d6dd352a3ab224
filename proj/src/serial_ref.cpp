#include "ujack/serial_ref.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "ujack/combinatorics.hpp"
#include "ujack/rng.hpp"

namespace ujack::ref {

namespace {

// Same keying as the fast path: the draw belongs to the id set.
std::uint64_t omega_key(std::uint64_t omega_seed, const Dataset& d,
                        const long long* rows, long long s) {
  std::vector<long long> ids(static_cast<std::size_t>(s));
  for (long long i = 0; i < s; ++i)
    ids[static_cast<std::size_t>(i)] = d.id(rows[i]);
  std::sort(ids.begin(), ids.end());
  std::uint64_t k = derive_key(omega_seed, {tag::omega});
  for (long long id : ids) k = key_fold(k, static_cast<std::uint64_t>(id));
  return k;
}

}  // namespace

double eval_complete(const Dataset& data, const KernelSpec& kernel,
                     const EvalOptions& opt) {
  const long long s = kernel.order;
  if (s < 1) throw std::invalid_argument("invalid-order");
  if (s > data.n()) throw std::invalid_argument("order-exceeds-sample");
  double acc = 0.0;
  long long count = 0;
  for (SubsetStream st(data.n(), s); st.valid(); st.advance()) {
    const long long* rows = st.current().data();
    RngStream omega(omega_key(opt.omega_seed, data, rows, s));
    acc += kernel.evaluate(data, rows, omega);
    ++count;
  }
  return acc / static_cast<double>(count);
}

double dnn_estimate(const Dataset& data, const double* query, long long s) {
  const long long n = data.n();
  const long long k = data.width() - 1;
  if (data.width() < 2) throw std::invalid_argument("dataset-shape");
  if (s < 1 || s > n) throw std::invalid_argument("invalid-order");
  double acc = 0.0;
  long long count = 0;
  for (SubsetStream st(n, s); st.valid(); st.advance()) {
    const long long* rows = st.current().data();
    long long best = rows[0];
    double best_d = -1.0;
    for (long long i = 0; i < s; ++i) {
      const double* x = data.row(rows[i]);
      double d2 = 0.0;
      for (long long j = 0; j < k; ++j)
        d2 += (x[j] - query[j]) * (x[j] - query[j]);
      if (best_d < 0.0 || d2 < best_d ||
          (d2 == best_d && data.id(rows[i]) < data.id(best))) {
        best_d = d2;
        best = rows[i];
      }
    }
    acc += data.y(best);
    ++count;
  }
  return acc / static_cast<double>(count);
}

double jkd_variance(const EstimatorFn& est, const Dataset& data, long long d) {
  const long long n = data.n();
  if (d < 1 || d >= n) throw std::invalid_argument("invalid-order");
  if (n - d < est.min_n) throw std::invalid_argument("n-too-small");
  const double full = est.apply(data);
  double acc = 0.0;
  long long count = 0;
  std::vector<long long> drop(static_cast<std::size_t>(d));
  for (SubsetStream st(n, d); st.valid(); st.advance()) {
    std::copy(st.current().begin(), st.current().end(), drop.begin());
    const double v = est.apply(data.without_rows(drop));
    acc += (v - full) * (v - full);
    ++count;
  }
  return static_cast<double>(n - d) / static_cast<double>(d) * acc /
         static_cast<double>(count);
}

}  // namespace ujack::ref
