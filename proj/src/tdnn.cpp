#include "ujack/tdnn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "ujack/jackknife.hpp"
#include "ujack/normal.hpp"

namespace ujack {

namespace {

double sq_dist(const Dataset& data, long long row, const double* query) {
  const long long k = data.width() - 1;
  const double* r = data.row(row);
  double acc = 0.0;
  for (long long j = 0; j < k; ++j) {
    const double diff = r[j] - query[j];
    acc += diff * diff;
  }
  return acc;
}

void check_scales(long long n, long long s1, long long s2) {
  if (s1 < 1 || s2 < 1 || s1 > n || s2 > n)
    throw std::invalid_argument("invalid-order");
  if (s1 == s2) throw std::invalid_argument("equal-scales");
}

}  // namespace

std::vector<long long> rank_order(const Dataset& data, const double* query) {
  if (data.width() < 2) throw std::invalid_argument("dataset-shape");
  const long long n = data.n();
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i)
    d2[static_cast<std::size_t>(i)] = sq_dist(data, i, query);
  std::vector<long long> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0LL);
  std::sort(order.begin(), order.end(), [&](long long a, long long b) {
    const double da = d2[static_cast<std::size_t>(a)];
    const double db = d2[static_cast<std::size_t>(b)];
    if (da != db) return da < db;
    return data.id(a) < data.id(b);
  });
  return order;
}

std::vector<double> dnn_weights(long long n, long long s) {
  if (s < 1 || s > n) throw std::invalid_argument("invalid-order");
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  double cur = static_cast<double>(s) / static_cast<double>(n);
  w[0] = cur;
  for (long long i = 1; i < n; ++i) {
    const long long num = n - i - s + 1;
    if (num <= 0) break;  // remaining weights are exactly zero
    cur = cur * static_cast<double>(num) / static_cast<double>(n - i);
    w[static_cast<std::size_t>(i)] = cur;
  }
  return w;
}

double dnn_estimate(const Dataset& data, const double* query, long long s) {
  const std::vector<long long> order = rank_order(data, query);
  const std::vector<double> w = dnn_weights(data.n(), s);
  double acc = 0.0;
  for (long long i = 0; i < data.n(); ++i)
    acc += w[static_cast<std::size_t>(i)] * data.y(order[static_cast<std::size_t>(i)]);
  return acc;
}

TdnnWeights tdnn_weights(long long s1, long long s2, long long k) {
  if (s1 < 1 || s2 < 1 || k < 1) throw std::invalid_argument("invalid-order");
  if (s1 == s2) throw std::invalid_argument("equal-scales");
  const double ratio = static_cast<double>(s1) / static_cast<double>(s2);
  TdnnWeights w;
  w.w1 = 1.0 / (1.0 - std::pow(ratio, -2.0 / static_cast<double>(k)));
  w.w2 = 1.0 - w.w1;
  return w;
}

TdnnResult tdnn_estimate(const Dataset& data, const double* query,
                         long long s1, long long s2) {
  if (data.width() < 2) throw std::invalid_argument("dataset-shape");
  check_scales(data.n(), s1, s2);
  const long long n = data.n();
  const long long k = data.width() - 1;
  TdnnResult res;
  res.weights = tdnn_weights(s1, s2, k);

  const std::vector<long long> order = rank_order(data, query);
  const std::vector<double> wa = dnn_weights(n, s1);
  const std::vector<double> wb = dnn_weights(n, s2);
  double acc1 = 0.0, acc2 = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double yi = data.y(order[static_cast<std::size_t>(i)]);
    acc1 += wa[static_cast<std::size_t>(i)] * yi;
    acc2 += wb[static_cast<std::size_t>(i)] * yi;
  }
  res.dnn_s1 = acc1;
  res.dnn_s2 = acc2;
  res.value = res.weights.w1 * acc1 + res.weights.w2 * acc2;

  const double ratio = static_cast<double>(std::min(s1, s2)) /
                       static_cast<double>(std::max(s1, s2));
  if (ratio < 0.1 || ratio > 0.9)
    res.warnings.push_back("scale-ratio-outside-[0.1,0.9]");
  if (s2 == n) res.warnings.push_back("s2-equals-n");
  return res;
}

namespace {

// Reference ranking shared by all jackknife deletions.
struct TdnnState {
  long long n_ref = 0;
  long long s1 = 0, s2 = 0;
  TdnnWeights tw;
  std::vector<long long> ranked_ids;  // reference rank order
  std::vector<double> ranked_ys;
};

// Two-scale estimate on the survivors of a reduced dataset, walking the
// stored ranking once; the weight recurrences mirror dnn_weights exactly.
double apply_tdnn(const TdnnState& st, const Dataset& reduced) {
  const long long m = reduced.n();
  if (m < std::max(st.s1, st.s2)) throw std::invalid_argument("n-too-small");
  std::vector<char> alive(static_cast<std::size_t>(st.n_ref), 0);
  for (long long i = 0; i < m; ++i)
    alive[static_cast<std::size_t>(reduced.id(i))] = 1;

  double w1 = static_cast<double>(st.s1) / static_cast<double>(m);
  double w2 = static_cast<double>(st.s2) / static_cast<double>(m);
  double acc1 = 0.0, acc2 = 0.0;
  long long rank = 0;  // ranks already consumed among survivors
  const long long total = st.n_ref;
  for (long long t = 0; t < total; ++t) {
    if (!alive[static_cast<std::size_t>(st.ranked_ids[static_cast<std::size_t>(t)])])
      continue;
    const double yi = st.ranked_ys[static_cast<std::size_t>(t)];
    acc1 += w1 * yi;
    acc2 += w2 * yi;
    ++rank;
    if (rank >= m) break;
    const long long num1 = m - rank - st.s1 + 1;
    const long long num2 = m - rank - st.s2 + 1;
    w1 = num1 <= 0 ? 0.0
                   : w1 * static_cast<double>(num1) / static_cast<double>(m - rank);
    w2 = num2 <= 0 ? 0.0
                   : w2 * static_cast<double>(num2) / static_cast<double>(m - rank);
    if (w1 == 0.0 && w2 == 0.0) break;
  }
  return st.tw.w1 * acc1 + st.tw.w2 * acc2;
}

}  // namespace

EstimatorFn make_tdnn_estimator(const Dataset& reference,
                                std::vector<double> query, long long s1,
                                long long s2) {
  if (reference.width() < 2) throw std::invalid_argument("dataset-shape");
  check_scales(reference.n(), s1, s2);
  if (static_cast<long long>(query.size()) != reference.width() - 1)
    throw std::invalid_argument("dataset-shape");
  auto st = std::make_shared<TdnnState>();
  st->n_ref = reference.n();
  st->s1 = s1;
  st->s2 = s2;
  st->tw = tdnn_weights(s1, s2, reference.width() - 1);
  const std::vector<long long> order = rank_order(reference, query.data());
  st->ranked_ids.reserve(order.size());
  st->ranked_ys.reserve(order.size());
  for (long long pos : order) {
    st->ranked_ids.push_back(reference.id(pos));
    st->ranked_ys.push_back(reference.y(pos));
  }
  EstimatorFn est;
  est.min_n = std::max(s1, s2);
  est.apply = [st](const Dataset& d) { return apply_tdnn(*st, d); };
  return est;
}

JackknifeReport tdnn_jackknife(const Dataset& data,
                               const std::vector<double>& query, long long s1,
                               long long s2, long long d,
                               const JackknifeOptions& opt) {
  const EstimatorFn est = make_tdnn_estimator(data, query, s1, s2);
  return jkd_variance(est, data, d, opt);
}

CiResult studentized_ci(double estimate, double variance, double level) {
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("invalid-level");
  if (variance < 0.0) throw std::invalid_argument("invalid-variance");
  CiResult ci;
  ci.z = normal_quantile(0.5 * (1.0 + level));
  ci.half_width = ci.z * std::sqrt(variance);
  ci.lo = estimate - ci.half_width;
  ci.hi = estimate + ci.half_width;
  ci.degenerate = variance == 0.0;
  return ci;
}

InferenceResult tdnn_infer(const Dataset& data, const std::vector<double>& query,
                           long long s1, long long s2, long long d,
                           double level, const JackknifeOptions& opt) {
  InferenceResult out;
  const TdnnResult point = tdnn_estimate(data, query.data(), s1, s2);
  const JackknifeReport jk = tdnn_jackknife(data, query, s1, s2, d, opt);
  out.estimate = point.value;
  out.variance = jk.variance;
  out.ci = studentized_ci(point.value, jk.variance, level);
  out.n = data.n();
  out.k = data.width() - 1;
  out.s1 = s1;
  out.s2 = s2;
  out.d = d;
  out.level = level;
  out.warnings = point.warnings;
  return out;
}

KernelSpec nn_select_kernel(std::vector<double> query, long long s) {
  KernelSpec k;
  k.order = s;
  k.evaluate = [query = std::move(query), s](const Dataset& d,
                                             const long long* rows, RngStream&) {
    long long best = rows[0];
    double best_d = sq_dist(d, rows[0], query.data());
    for (long long i = 1; i < s; ++i) {
      const double di = sq_dist(d, rows[i], query.data());
      if (di < best_d || (di == best_d && d.id(rows[i]) < d.id(best))) {
        best = rows[i];
        best_d = di;
      }
    }
    return d.y(best);
  };
  return k;
}

KernelSpec tdnn_kernel(std::vector<double> query, long long s1, long long s2) {
  if (s1 < 1 || s2 < 2 || s1 >= s2) throw std::invalid_argument("invalid-order");
  KernelSpec k;
  k.order = s2;
  k.evaluate = [query = std::move(query), s1, s2](
                   const Dataset& d, const long long* rows, RngStream&) {
    // Rank the s2 subset rows around the query, then apply the two-scale
    // estimator with the subset playing the role of the sample.
    std::vector<long long> idx(static_cast<std::size_t>(s2));
    std::vector<double> dist(static_cast<std::size_t>(s2));
    for (long long i = 0; i < s2; ++i) {
      idx[static_cast<std::size_t>(i)] = rows[i];
      dist[static_cast<std::size_t>(i)] = sq_dist(d, rows[i], query.data());
    }
    std::vector<long long> ord(static_cast<std::size_t>(s2));
    std::iota(ord.begin(), ord.end(), 0LL);
    std::sort(ord.begin(), ord.end(), [&](long long a, long long b) {
      const double da = dist[static_cast<std::size_t>(a)];
      const double db = dist[static_cast<std::size_t>(b)];
      if (da != db) return da < db;
      return d.id(idx[static_cast<std::size_t>(a)]) <
             d.id(idx[static_cast<std::size_t>(b)]);
    });
    const std::vector<double> w = dnn_weights(s2, s1);
    double inner = 0.0;
    for (long long i = 0; i < s2; ++i)
      inner += w[static_cast<std::size_t>(i)] *
               d.y(idx[static_cast<std::size_t>(ord[static_cast<std::size_t>(i)])]);
    const double nearest =
        d.y(idx[static_cast<std::size_t>(ord[0])]);
    const TdnnWeights tw = tdnn_weights(s1, s2, d.width() - 1);
    return tw.w1 * inner + tw.w2 * nearest;
  };
  return k;
}

}  // namespace ujack
