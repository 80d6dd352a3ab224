#include "ujack/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "ujack/combinatorics.hpp"
#include "ujack/reduce.hpp"

namespace ujack {

namespace {

// Auxiliary-stream key for a subset: master seed folded with the sorted
// original ids, so the draw belongs to the set of observations rather than
// to any particular enumeration order or storage layout.
std::uint64_t omega_key_for(std::uint64_t omega_seed, const Dataset& d,
                            const long long* rows, long long s) {
  std::vector<long long> ids(static_cast<std::size_t>(s));
  for (long long i = 0; i < s; ++i)
    ids[static_cast<std::size_t>(i)] = d.id(rows[i]);
  std::sort(ids.begin(), ids.end());
  std::uint64_t k = derive_key(omega_seed, {tag::omega});
  for (long long id : ids) k = key_fold(k, static_cast<std::uint64_t>(id));
  return k;
}

std::uint64_t selection_key_for(std::uint64_t selection_seed,
                                const std::vector<long long>& sorted_ids) {
  std::uint64_t k = derive_key(selection_seed, {tag::selection});
  for (long long id : sorted_ids) k = key_fold(k, static_cast<std::uint64_t>(id));
  return k;
}

double eval_tuple(const Dataset& d, const KernelSpec& kernel,
                  const long long* rows, std::uint64_t omega_seed) {
  RngStream omega(omega_key_for(omega_seed, d, rows, kernel.order));
  return kernel.evaluate(d, rows, omega);
}

// Kernel sum over all C(n, s) subsets in rank order.  Subsets are buffered
// in chunks and evaluated in parallel over fixed 4096-subset blocks; block
// sums are folded serially, so the result does not depend on thread count.
double sum_over_all_subsets(const Dataset& d, const KernelSpec& kernel,
                            std::uint64_t omega_seed, long long total) {
  const long long s = kernel.order;
  const long long chunk = kReduceBlock * 16;
  std::vector<double> block_sums;
  block_sums.reserve(static_cast<std::size_t>((total + kReduceBlock - 1) /
                                              kReduceBlock));
  std::vector<long long> buf;
  buf.reserve(static_cast<std::size_t>(chunk * s));
  SubsetStream st(d.n(), s);
  while (st.valid()) {
    buf.clear();
    long long m = 0;
    while (st.valid() && m < chunk) {
      const auto& cur = st.current();
      buf.insert(buf.end(), cur.begin(), cur.end());
      ++m;
      st.advance();
    }
    const long long nb = (m + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> local(static_cast<std::size_t>(nb), 0.0);
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < nb; ++b) {
      const long long lo = b * kReduceBlock;
      const long long hi = std::min(lo + kReduceBlock, m);
      double sum = 0.0, comp = 0.0;
      for (long long i = lo; i < hi; ++i) {
        const double v =
            eval_tuple(d, kernel, buf.data() + i * s, omega_seed);
        const double t = sum + v;
        if (std::fabs(sum) >= std::fabs(v))
          comp += (sum - t) + v;
        else
          comp += (v - t) + sum;
        sum = t;
      }
      local[static_cast<std::size_t>(b)] = sum + comp;
    }
    block_sums.insert(block_sums.end(), local.begin(), local.end());
  }
  return detail::pairwise_fold(block_sums.data(),
                               static_cast<long long>(block_sums.size()));
}

// Exact Poisson sampler: product method below 10, Hormann's transformed
// rejection (PTRS) above.
long long poisson_draw(double lambda, RngStream& rng) {
  if (lambda <= 0.0) return 0;
  if (lambda < 10.0) {
    const double limit = std::exp(-lambda);
    long long k = 0;
    double prod = rng.next_double();
    while (prod > limit) {
      ++k;
      prod *= rng.next_double();
    }
    return k;
  }
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.next_double() - 0.5;
    const double v = rng.next_double();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kf * loglam - lambda - std::lgamma(kf + 1.0))
      return static_cast<long long>(kf);
  }
}

struct RealizedSelection {
  // Flat positions into the dataset, s per tuple, in summation order.
  std::vector<long long> tuples;
  long long count = 0;
  double p = 1.0;       // per-tuple selection probability actually used
  double c_total = 0.0; // C(n, s) as a double
  bool enumerable = false;
  bool complete_collapse = false;  // p >= 1, every subset selected
};

RealizedSelection realize_selection(const Dataset& data, long long s,
                                    const SamplingPlan& plan,
                                    const EvalOptions& opt) {
  RealizedSelection sel;
  const long long n = data.n();
  const BigInt c_big = binom(n, s);
  sel.c_total = c_big.convert_to<double>();
  sel.enumerable = c_big <= opt.budget;

  if (sel.enumerable) {
    const long long total = c_big.convert_to<long long>();
    const double p = plan.target_n / sel.c_total;
    if (p >= 1.0) {
      sel.p = 1.0;
      sel.complete_collapse = true;
      sel.count = total;
      return sel;
    }
    sel.p = p;
    std::vector<long long> ids(static_cast<std::size_t>(s));
    for (SubsetStream st(n, s); st.valid(); st.advance()) {
      const auto& cur = st.current();
      for (long long i = 0; i < s; ++i)
        ids[static_cast<std::size_t>(i)] = data.id(cur[static_cast<std::size_t>(i)]);
      std::sort(ids.begin(), ids.end());
      if (uniform_at(selection_key_for(opt.selection_seed, ids)) < p) {
        sel.tuples.insert(sel.tuples.end(), cur.begin(), cur.end());
        ++sel.count;
      }
    }
    return sel;
  }

  // Subset lattice too large to enumerate: realize the same selection law
  // by drawing the selected count, then that many distinct uniform subsets.
  const double p = plan.target_n / sel.c_total;
  if (p >= 1.0) throw std::invalid_argument("budget-exceeded");
  sel.p = p;
  // Poisson count in place of Binomial(C, p): total variation gap is at
  // most C p^2 = target_n * p, required negligible here.
  if (!(p <= 1e-6 || plan.target_n * p <= 1e-4))
    throw std::invalid_argument("plan-not-supported");
  RngStream count_rng(derive_key(opt.selection_seed, {tag::count}));
  const long long count = poisson_draw(plan.target_n, count_rng);
  if (count > opt.budget) throw std::invalid_argument("budget-exceeded");
  RngStream draw_rng(derive_key(opt.selection_seed, {tag::tuple_draw}));
  std::set<std::vector<long long>> seen;
  while (static_cast<long long>(seen.size()) < count) {
    std::vector<long long> pos = random_subset(n, s, draw_rng);
    std::vector<long long> ids(static_cast<std::size_t>(s));
    for (long long i = 0; i < s; ++i)
      ids[static_cast<std::size_t>(i)] = data.id(pos[static_cast<std::size_t>(i)]);
    std::sort(ids.begin(), ids.end());
    if (seen.insert(ids).second)
      sel.tuples.insert(sel.tuples.end(), pos.begin(), pos.end());
  }
  sel.count = count;
  return sel;
}

double sum_selected(const Dataset& data, const KernelSpec& kernel,
                    const RealizedSelection& sel, std::uint64_t omega_seed) {
  const long long s = kernel.order;
  const long long* tuples = sel.tuples.data();
  return deterministic_sum(sel.count, [&](long long i) {
    return eval_tuple(data, kernel, tuples + i * s, omega_seed);
  });
}

void check_order(const Dataset& data, const KernelSpec& kernel) {
  if (kernel.order < 1) throw std::invalid_argument("invalid-order");
  if (kernel.order > data.n())
    throw std::invalid_argument("order-exceeds-sample");
}

}  // namespace

UStatResult eval_complete(const Dataset& data, const KernelSpec& kernel,
                          const EvalOptions& opt) {
  check_order(data, kernel);
  const BigInt c_big = binom(data.n(), kernel.order);
  if (c_big > opt.budget) throw std::invalid_argument("budget-exceeded");
  const long long total = c_big.convert_to<long long>();
  const double sum = sum_over_all_subsets(data, kernel, opt.omega_seed, total);
  UStatResult r;
  r.value = sum / static_cast<double>(total);
  r.selected = total;
  r.plan = PlanKind::Complete;
  r.seed = opt.selection_seed;
  return r;
}

UStatResult eval_incomplete(const Dataset& data, const KernelSpec& kernel,
                            const SamplingPlan& plan, const EvalOptions& opt) {
  check_order(data, kernel);
  if (plan.kind == PlanKind::Complete) {
    UStatResult r = eval_complete(data, kernel, opt);
    return r;
  }
  const RealizedSelection sel = realize_selection(data, kernel.order, plan, opt);
  UStatResult r;
  r.plan = plan.kind;
  r.target_n = plan.target_n;
  r.seed = opt.selection_seed;
  if (sel.complete_collapse) {
    r.value = sum_over_all_subsets(data, kernel, opt.omega_seed, sel.count) /
              static_cast<double>(sel.count);
    r.selected = sel.count;
    return r;
  }
  r.selected = sel.count;
  if (plan.kind == PlanKind::Bernoulli) {
    if (sel.count == 0) throw std::runtime_error("empty-selection");
    r.value = sum_selected(data, kernel, sel, opt.omega_seed) /
              static_cast<double>(sel.count);
    return r;
  }
  // Horvitz-Thompson: divide by p * C(n, s) instead of the realized count.
  if (sel.count == 0) {
    r.value = 0.0;
    r.empty_selection = true;
    return r;
  }
  r.value = sum_selected(data, kernel, sel, opt.omega_seed) /
            (sel.p * sel.c_total);
  return r;
}

UStatResult eval_ht(const Dataset& data, const KernelSpec& kernel,
                    const SamplingPlan& plan, const EvalOptions& opt) {
  SamplingPlan ht = plan;
  ht.kind = PlanKind::HorvitzThompson;
  return eval_incomplete(data, kernel, ht, opt);
}

KernelSpec fix_omega(const KernelSpec& kernel, std::uint64_t omega_seed,
                     long long draw_index) {
  if (!kernel.randomized) return kernel;
  KernelSpec fixed;
  fixed.order = kernel.order;
  fixed.randomized = false;
  fixed.evaluate = [kernel, omega_seed, draw_index](
                       const Dataset& d, const long long* rows, RngStream&) {
    RngStream omega(derive_key(omega_seed,
                               {tag::omega, static_cast<std::uint64_t>(draw_index)}));
    return kernel.evaluate(d, rows, omega);
  };
  return fixed;
}

namespace {

// Shared state for the incomplete-U estimator closure.  Everything here is
// written once by the factory and only read by apply(), which jackknife
// drivers may call from several threads at once.
struct IncompleteState {
  KernelSpec kernel;
  SamplingPlan plan;
  EvalOptions opt;
  long long n_ref = 0;
  long long s = 0;
  double p_ref = 1.0;
  double c_ref = 0.0;
  bool enumerable = false;
  bool complete_collapse = false;
  std::vector<long long> tuple_ids;  // flat sorted-id tuples, summation order
  std::vector<double> values;        // cached kernel values, aligned
  std::vector<long long> lex_order;  // tuple indices sorted lexicographically
};

bool tuple_less(const std::vector<long long>& flat, long long s, long long a,
                const long long* b) {
  const long long* ta = flat.data() + a * s;
  for (long long i = 0; i < s; ++i) {
    if (ta[i] != b[i]) return ta[i] < b[i];
  }
  return false;
}

bool cache_contains(const IncompleteState& st, const long long* ids) {
  long long lo = 0, hi = static_cast<long long>(st.lex_order.size());
  while (lo < hi) {
    const long long mid = (lo + hi) / 2;
    if (tuple_less(st.tuple_ids, st.s, st.lex_order[static_cast<std::size_t>(mid)],
                   ids))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo == static_cast<long long>(st.lex_order.size())) return false;
  const long long* t =
      st.tuple_ids.data() + st.lex_order[static_cast<std::size_t>(lo)] * st.s;
  for (long long i = 0; i < st.s; ++i)
    if (t[i] != ids[i]) return false;
  return true;
}

double apply_keep_marks(const IncompleteState& st, const Dataset& reduced) {
  // Survivor mask over original ids.
  std::vector<char> alive(static_cast<std::size_t>(st.n_ref), 0);
  for (long long i = 0; i < reduced.n(); ++i)
    alive[static_cast<std::size_t>(reduced.id(i))] = 1;
  // Compact the surviving cached values, preserving summation order, so the
  // reduction block structure matches a direct evaluation.
  std::vector<double> surv;
  surv.reserve(st.values.size());
  const long long total = static_cast<long long>(st.values.size());
  for (long long t = 0; t < total; ++t) {
    const long long* ids = st.tuple_ids.data() + t * st.s;
    bool all = true;
    for (long long i = 0; i < st.s; ++i)
      if (!alive[static_cast<std::size_t>(ids[i])]) {
        all = false;
        break;
      }
    if (all) surv.push_back(st.values[static_cast<std::size_t>(t)]);
  }
  const long long m = static_cast<long long>(surv.size());
  const double sum =
      deterministic_sum(m, [&](long long i) { return surv[static_cast<std::size_t>(i)]; });
  if (st.plan.kind == PlanKind::HorvitzThompson) {
    const double c_red = binom_double(reduced.n(), st.s);
    const double denom =
        st.complete_collapse ? c_red : st.p_ref * c_red;
    return m == 0 ? 0.0 : sum / denom;
  }
  if (m == 0) throw std::runtime_error("empty-selection");
  return sum / static_cast<double>(m);
}

double apply_recompute_enumerable(const IncompleteState& st,
                                  const Dataset& reduced) {
  const long long n = reduced.n();
  const double c_red = binom_double(n, st.s);
  const double p = std::min(1.0, st.plan.target_n / c_red);
  std::vector<double> vals;
  std::vector<long long> ids(static_cast<std::size_t>(st.s));
  for (SubsetStream sub(n, st.s); sub.valid(); sub.advance()) {
    const auto& cur = sub.current();
    for (long long i = 0; i < st.s; ++i)
      ids[static_cast<std::size_t>(i)] =
          reduced.id(cur[static_cast<std::size_t>(i)]);
    std::sort(ids.begin(), ids.end());
    if (p < 1.0 &&
        uniform_at(selection_key_for(st.opt.selection_seed, ids)) >= p)
      continue;
    vals.push_back(
        eval_tuple(reduced, st.kernel, cur.data(), st.opt.omega_seed));
  }
  const long long m = static_cast<long long>(vals.size());
  const double sum = deterministic_sum(
      m, [&](long long i) { return vals[static_cast<std::size_t>(i)]; });
  if (st.plan.kind == PlanKind::HorvitzThompson)
    return m == 0 ? 0.0 : sum / (p * c_red);
  if (m == 0) throw std::runtime_error("empty-selection");
  return sum / static_cast<double>(m);
}

double apply_recompute_sampled(const IncompleteState& st,
                               const Dataset& reduced) {
  // Surviving marked tuples, as in keep-marks.
  std::vector<char> alive(static_cast<std::size_t>(st.n_ref), 0);
  for (long long i = 0; i < reduced.n(); ++i)
    alive[static_cast<std::size_t>(reduced.id(i))] = 1;
  std::vector<double> vals;
  std::set<std::vector<long long>> picked;
  const long long total = static_cast<long long>(st.values.size());
  for (long long t = 0; t < total; ++t) {
    const long long* ids = st.tuple_ids.data() + t * st.s;
    bool all = true;
    for (long long i = 0; i < st.s; ++i)
      if (!alive[static_cast<std::size_t>(ids[i])]) {
        all = false;
        break;
      }
    if (all) vals.push_back(st.values[static_cast<std::size_t>(t)]);
  }
  // Extra tuples adopted because the selection threshold grew on the
  // reduced lattice; realized from a stream keyed by the deleted id set.
  const double c_red = binom_double(reduced.n(), st.s);
  const double lambda = st.plan.target_n * (1.0 - c_red / st.c_ref);
  std::uint64_t key = derive_key(st.opt.selection_seed, {tag::count});
  for (long long id = 0; id < st.n_ref; ++id)
    if (!alive[static_cast<std::size_t>(id)])
      key = key_fold(key, static_cast<std::uint64_t>(id));
  RngStream extra_rng(key);
  const long long extra = poisson_draw(lambda, extra_rng);
  std::vector<long long> ids(static_cast<std::size_t>(st.s));
  long long added = 0;
  while (added < extra) {
    std::vector<long long> pos = random_subset(reduced.n(), st.s, extra_rng);
    for (long long i = 0; i < st.s; ++i)
      ids[static_cast<std::size_t>(i)] =
          reduced.id(pos[static_cast<std::size_t>(i)]);
    std::sort(ids.begin(), ids.end());
    if (cache_contains(st, ids.data())) continue;
    if (!picked.insert(ids).second) continue;
    vals.push_back(eval_tuple(reduced, st.kernel, pos.data(), st.opt.omega_seed));
    ++added;
  }
  const long long m = static_cast<long long>(vals.size());
  const double sum = deterministic_sum(
      m, [&](long long i) { return vals[static_cast<std::size_t>(i)]; });
  if (st.plan.kind == PlanKind::HorvitzThompson) {
    const double p = st.plan.target_n / c_red;
    return m == 0 ? 0.0 : sum / (p * c_red);
  }
  if (m == 0) throw std::runtime_error("empty-selection");
  return sum / static_cast<double>(m);
}

}  // namespace

EstimatorFn make_incomplete_estimator(const Dataset& reference,
                                      const KernelSpec& kernel,
                                      const SamplingPlan& plan,
                                      const EvalOptions& opt) {
  check_order(reference, kernel);
  if (plan.kind == PlanKind::Complete) {
    // Complete plan: plain complete U-statistic on whatever data arrives.
    EstimatorFn est;
    est.min_n = kernel.order;
    est.apply = [kernel, opt](const Dataset& d) {
      return eval_complete(d, kernel, opt).value;
    };
    return est;
  }

  auto st = std::make_shared<IncompleteState>();
  st->kernel = kernel;
  st->plan = plan;
  st->opt = opt;
  st->n_ref = reference.n();
  st->s = kernel.order;

  RealizedSelection sel = realize_selection(reference, kernel.order, plan, opt);
  st->p_ref = sel.p;
  st->c_ref = sel.c_total;
  st->enumerable = sel.enumerable;
  st->complete_collapse = sel.complete_collapse;

  if (sel.complete_collapse) {
    // Every subset selected: materialize the full enumeration so deletions
    // reduce to survivor filtering like any other selection.
    sel.tuples.reserve(static_cast<std::size_t>(sel.count * st->s));
    for (SubsetStream sub(reference.n(), st->s); sub.valid(); sub.advance())
      sel.tuples.insert(sel.tuples.end(), sub.current().begin(),
                        sub.current().end());
  }

  const long long m = sel.count;
  st->tuple_ids.resize(static_cast<std::size_t>(m * st->s));
  for (long long t = 0; t < m; ++t) {
    for (long long i = 0; i < st->s; ++i)
      st->tuple_ids[static_cast<std::size_t>(t * st->s + i)] =
          reference.id(sel.tuples[static_cast<std::size_t>(t * st->s + i)]);
    std::sort(st->tuple_ids.begin() + t * st->s,
              st->tuple_ids.begin() + (t + 1) * st->s);
  }
  parallel_fill(m, st->values, [&](long long t) {
    return eval_tuple(reference, kernel, sel.tuples.data() + t * st->s,
                      opt.omega_seed);
  });
  st->lex_order.resize(static_cast<std::size_t>(m));
  for (long long t = 0; t < m; ++t)
    st->lex_order[static_cast<std::size_t>(t)] = t;
  std::sort(st->lex_order.begin(), st->lex_order.end(),
            [&](long long a, long long b) {
              return tuple_less(st->tuple_ids, st->s, a,
                                st->tuple_ids.data() + b * st->s);
            });

  EstimatorFn est;
  est.min_n = kernel.order;
  est.apply = [st](const Dataset& d) {
    if (d.n() < st->s) throw std::invalid_argument("order-exceeds-sample");
    if (st->plan.coupling == DeletionCoupling::KeepMarks ||
        st->complete_collapse)
      return apply_keep_marks(*st, d);
    return st->enumerable ? apply_recompute_enumerable(*st, d)
                          : apply_recompute_sampled(*st, d);
  };
  return est;
}

}  // namespace ujack
