#include "ujack/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ujack/combinatorics.hpp"
#include "ujack/jackknife.hpp"
#include "ujack/kernel.hpp"
#include "ujack/normal.hpp"
#include "ujack/reduce.hpp"
#include "ujack/tdnn.hpp"
#include "ujack/ustat.hpp"

namespace ujack {

namespace {

// Experiment ids folded into replicate seeds so the four studies never
// share a random stream even under one master seed.
constexpr std::uint64_t kExpRatio = 101;
constexpr std::uint64_t kExpCoverage = 102;
constexpr std::uint64_t kExpDominance = 103;
constexpr std::uint64_t kExpIncomplete = 104;
constexpr std::uint64_t kTruthStream = 7001;

std::uint64_t rep_seed(std::uint64_t master, std::uint64_t exp_id,
                       std::uint64_t a, std::uint64_t b, std::uint64_t r) {
  return derive_key(master, {tag::replicate, exp_id, a, b, r});
}

double mean_coord(const double* x, long long k) {
  double acc = 0.0;
  for (long long j = 0; j < k; ++j) acc += x[j];
  return acc / static_cast<double>(k);
}

}  // namespace

double dgp_mu(const DgpConfig& cfg, const double* x) {
  switch (cfg.mu) {
    case MuKind::Linear:
      return 2.0 + 3.0 * mean_coord(x, cfg.k);
    case MuKind::SineProduct: {
      const double m = mean_coord(x, cfg.k);
      return std::sin(2.0 * M_PI * m) * (1.0 + m);
    }
    case MuKind::GaussianBump: {
      double sq = 0.0;
      for (long long j = 0; j < cfg.k; ++j) {
        const double diff = x[j] - 0.5;
        sq += diff * diff;
      }
      return std::exp(-sq / (2.0 * 0.15 * 0.15));
    }
  }
  return 0.0;
}

double dgp_sigma(const DgpConfig& cfg, const double* x) {
  if (cfg.noise == NoiseKind::Homoskedastic) return 0.5;
  return 0.5 + 0.25 * mean_coord(x, cfg.k);
}

void dgp_draw_row(const DgpConfig& cfg, RngStream& rng, double* row) {
  // Truncation of normal(0.5, 0.25) to [0, 1]: inverse CDF on the mass
  // between the standardized endpoints -2 and 2.
  static const double lo = normal_cdf(-2.0);
  static const double hi = normal_cdf(2.0);
  for (long long j = 0; j < cfg.k; ++j) {
    const double u = rng.next_double();
    if (cfg.design == DesignKind::Uniform) {
      row[j] = u;
    } else {
      const double p = lo + u * (hi - lo);
      row[j] = 0.5 + 0.25 * normal_quantile(p);
    }
  }
  const double eps = normal_quantile(
      std::min(1.0 - 1e-17, std::max(1e-300, rng.next_double())));
  row[cfg.k] = dgp_mu(cfg, row) + dgp_sigma(cfg, row) * eps;
}

Dataset dgp_sample(const DgpConfig& cfg, long long n, std::uint64_t seed) {
  const long long w = cfg.k + 1;
  std::vector<double> vals(static_cast<std::size_t>(n * w));
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    RngStream rng(derive_key(seed, {tag::dgp_x, static_cast<std::uint64_t>(i)}));
    dgp_draw_row(cfg, rng, vals.data() + i * w);
  }
  return Dataset(std::move(vals), w);
}

Dataset dgp_sample_scalar(const DgpConfig& cfg, long long n,
                          std::uint64_t seed) {
  std::vector<double> ys(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(cfg.k + 1));
#pragma omp parallel for schedule(static) firstprivate(row)
  for (long long i = 0; i < n; ++i) {
    RngStream rng(derive_key(seed, {tag::dgp_x, static_cast<std::uint64_t>(i)}));
    dgp_draw_row(cfg, rng, row.data());
    ys[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(cfg.k)];
  }
  return Dataset::from_scalars(std::move(ys));
}

ObservationSampler dgp_observation_sampler(const DgpConfig& cfg) {
  ObservationSampler s;
  s.width = cfg.k + 1;
  s.draw = [cfg](RngStream& rng, double* row) { dgp_draw_row(cfg, rng, row); };
  return s;
}

McVariance mc_truth_variance(const std::function<double(std::uint64_t)>& value_at,
                             long long reps, std::uint64_t seed) {
  if (reps < 3) throw std::invalid_argument("invalid-order");
  std::vector<double> v;
  parallel_fill(reps, v, [&](long long r) {
    return value_at(derive_key(seed, {tag::replicate, static_cast<std::uint64_t>(r)}));
  });
  double t = 0.0, q = 0.0;
  for (double x : v) {
    t += x;
    q += x * x;
  }
  const double m = static_cast<double>(reps);
  const double s2 = (q - t * t / m) / (m - 1.0);

  // Delete-1 jackknife of the sample variance over the replicate values.
  double mean_del = 0.0;
  std::vector<double> del(static_cast<std::size_t>(reps));
  for (long long i = 0; i < reps; ++i) {
    const double x = v[static_cast<std::size_t>(i)];
    const double ti = t - x;
    del[static_cast<std::size_t>(i)] =
        (q - x * x - ti * ti / (m - 1.0)) / (m - 2.0);
    mean_del += del[static_cast<std::size_t>(i)];
  }
  mean_del /= m;
  double acc = 0.0;
  for (double dv : del) acc += (dv - mean_del) * (dv - mean_del);

  McVariance out;
  out.variance = s2;
  out.std_error = std::sqrt((m - 1.0) / m * acc);
  out.reps = reps;
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
  const long long m = static_cast<long long>(v.size());
  if (m == 0) return std::nan("");
  const double pos = p * static_cast<double>(m - 1);
  const long long lo = static_cast<long long>(std::floor(pos));
  const long long hi = std::min(lo + 1, m - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[static_cast<std::size_t>(lo)] * (1.0 - frac) +
         v[static_cast<std::size_t>(hi)] * frac;
}

// One-sigma order-statistic band around the median: ranks med +- sqrt(m)/2.
double median_se_sorted(const std::vector<double>& v) {
  const long long m = static_cast<long long>(v.size());
  if (m < 3) return std::nan("");
  const double med = static_cast<double>(m - 1) / 2.0;
  const double half = 0.5 * std::sqrt(static_cast<double>(m));
  const long long lo =
      std::max(0LL, static_cast<long long>(std::floor(med - half)));
  const long long hi =
      std::min(m - 1, static_cast<long long>(std::ceil(med + half)));
  return 0.5 * (v[static_cast<std::size_t>(hi)] - v[static_cast<std::size_t>(lo)]);
}

struct Scales {
  long long s1 = 0;
  long long s2 = 0;
};

Scales scale_rule(const ExperimentConfig& cfg, long long n) {
  Scales sc;
  sc.s2 = static_cast<long long>(std::ceil(std::pow(static_cast<double>(n),
                                                    cfg.s2_gamma)));
  sc.s2 = std::max(2LL, std::min(sc.s2, n));
  sc.s1 = static_cast<long long>(std::ceil(cfg.s1_ratio * static_cast<double>(sc.s2)));
  sc.s1 = std::max(1LL, std::min(sc.s1, sc.s2 - 1));
  return sc;
}

void require_replicates(const ExperimentConfig& cfg) {
  if (cfg.replicates <= 0) throw std::runtime_error("empty-table");
}

CsvRow make_row(const ExperimentConfig& cfg, const char* experiment,
                long long n, long long s1, long long s2, long long d,
                std::string method, std::string metric, double value,
                double mc_se) {
  CsvRow row;
  row.experiment = experiment;
  row.n = n;
  row.s1 = s1;
  row.s2 = s2;
  row.d = d;
  row.method = std::move(method);
  row.metric = std::move(metric);
  row.value = value;
  row.mc_se = mc_se;
  row.seed = cfg.seed;
  return row;
}

JackknifeOptions deletion_options(long long n, long long d,
                                  const ExperimentConfig& cfg,
                                  std::uint64_t sd) {
  JackknifeOptions jo;
  if (binom(n, d) > 20'000) {
    jo.subsample = cfg.subsample_b;
    jo.seed = derive_key(sd, {tag::subsample});
  }
  return jo;
}

}  // namespace

ExperimentTable ratio_experiment(const ExperimentConfig& cfg) {
  require_replicates(cfg);
  ExperimentTable t;
  t.name = "ratio";
  const long long m = cfg.replicates;
  for (long long n : cfg.n_grid) {
    const Scales sc = scale_rule(cfg, n);
    const auto point = [&](std::uint64_t sd) {
      const Dataset data = dgp_sample(cfg.dgp, n, sd);
      return tdnn_estimate(data, cfg.query.data(), sc.s1, sc.s2).value;
    };
    const McVariance mc = mc_truth_variance(
        point, cfg.truth_replicates,
        rep_seed(cfg.seed, kExpRatio, static_cast<std::uint64_t>(n), kTruthStream, 0));
    t.rows.push_back(make_row(cfg, "ratio", n, sc.s1, sc.s2, 0, "mc_truth",
                              "sigma2_mc", mc.variance, mc.std_error));

    for (long long d : cfg.d_list) {
      std::vector<double> ratios;
      parallel_fill(m, ratios, [&](long long r) {
        const std::uint64_t sd =
            rep_seed(cfg.seed, kExpRatio, static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(r));
        const Dataset data = dgp_sample(cfg.dgp, n, sd);
        const JackknifeReport jk = tdnn_jackknife(
            data, cfg.query, sc.s1, sc.s2, d, deletion_options(n, d, cfg, sd));
        return jk.variance / mc.variance;
      });
      std::sort(ratios.begin(), ratios.end());
      t.rows.push_back(make_row(cfg, "ratio", n, sc.s1, sc.s2, d, "tdnn_jkd",
                                "ratio_median", quantile_sorted(ratios, 0.5),
                                median_se_sorted(ratios)));
      t.rows.push_back(make_row(cfg, "ratio", n, sc.s1, sc.s2, d, "tdnn_jkd",
                                "ratio_q25", quantile_sorted(ratios, 0.25), 0.0));
      t.rows.push_back(make_row(cfg, "ratio", n, sc.s1, sc.s2, d, "tdnn_jkd",
                                "ratio_q75", quantile_sorted(ratios, 0.75), 0.0));
    }
  }
  return t;
}

ExperimentTable coverage_experiment(const ExperimentConfig& cfg) {
  require_replicates(cfg);
  ExperimentTable t;
  t.name = "coverage";
  const long long m = cfg.replicates;
  const double truth = dgp_mu(cfg.dgp, cfg.query.data());
  for (long long n : cfg.n_grid) {
    const Scales sc = scale_rule(cfg, n);
    std::vector<double> hits, widths;
    parallel_fill(m, hits, [&](long long r) {
      const std::uint64_t sd =
          rep_seed(cfg.seed, kExpCoverage, static_cast<std::uint64_t>(n), 1, static_cast<std::uint64_t>(r));
      const Dataset data = dgp_sample(cfg.dgp, n, sd);
      const InferenceResult inf = tdnn_infer(data, cfg.query, sc.s1, sc.s2, 1,
                                             cfg.level,
                                             deletion_options(n, 1, cfg, sd));
      return inf.ci.lo <= truth && truth <= inf.ci.hi ? 1.0 : 0.0;
    });
    parallel_fill(m, widths, [&](long long r) {
      const std::uint64_t sd =
          rep_seed(cfg.seed, kExpCoverage, static_cast<std::uint64_t>(n), 1, static_cast<std::uint64_t>(r));
      const Dataset data = dgp_sample(cfg.dgp, n, sd);
      const InferenceResult inf = tdnn_infer(data, cfg.query, sc.s1, sc.s2, 1,
                                             cfg.level,
                                             deletion_options(n, 1, cfg, sd));
      return inf.ci.half_width;
    });
    double p = 0.0;
    for (double h : hits) p += h;
    p /= static_cast<double>(m);
    std::sort(widths.begin(), widths.end());
    t.rows.push_back(make_row(cfg, "coverage", n, sc.s1, sc.s2, 1, "tdnn_jkd",
                              "coverage", p,
                              std::sqrt(p * (1.0 - p) / static_cast<double>(m))));
    t.rows.push_back(make_row(cfg, "coverage", n, sc.s1, sc.s2, 1, "tdnn_jkd",
                              "halfwidth_median", quantile_sorted(widths, 0.5),
                              median_se_sorted(widths)));
  }
  return t;
}

ExperimentTable dominance_experiment(const ExperimentConfig& cfg) {
  require_replicates(cfg);
  ExperimentTable t;
  t.name = "dominance";
  const ObservationSampler sampler = dgp_observation_sampler(cfg.dgp);
  for (long long n : cfg.n_grid) {
    const Scales sc = scale_rule(cfg, n);
    const KernelSpec kern = tdnn_kernel(cfg.query, sc.s1, sc.s2);
    const ZetaEstimate z1 = estimate_zeta(
        kern, sampler, 1, cfg.zeta_reps,
        rep_seed(cfg.seed, kExpDominance, static_cast<std::uint64_t>(n), 1, 0));
    const ZetaEstimate zs = estimate_zeta(
        kern, sampler, sc.s2, cfg.zeta_reps,
        rep_seed(cfg.seed, kExpDominance, static_cast<std::uint64_t>(n), 2, 0));
    const double dom = dominance_stat(n, sc.s2, z1.value, zs.value);
    // Delta method over the two independent estimates.
    const double nn = static_cast<double>(n);
    const double se_dom = std::sqrt(
        std::pow(zs.std_error / (nn * z1.value), 2) +
        std::pow(zs.value * z1.std_error / (nn * z1.value * z1.value), 2));
    t.rows.push_back(make_row(cfg, "dominance", n, sc.s1, sc.s2, 0,
                              "tdnn_kernel", "zeta1", z1.value, z1.std_error));
    t.rows.push_back(make_row(cfg, "dominance", n, sc.s1, sc.s2, 0,
                              "tdnn_kernel", "zeta_top", zs.value, zs.std_error));
    t.rows.push_back(make_row(cfg, "dominance", n, sc.s1, sc.s2, 0,
                              "tdnn_kernel", "dominance", dom, se_dom));
    t.rows.push_back(make_row(cfg, "dominance", n, sc.s1, sc.s2, 0,
                              "tdnn_kernel", "s_zeta1",
                              static_cast<double>(sc.s2) * z1.value,
                              static_cast<double>(sc.s2) * z1.std_error));
  }
  // First-order scale stability across subsampling scales at the largest n.
  const long long n_ref =
      *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
  for (long long s2 : cfg.dominance_s2_list) {
    long long s1 = static_cast<long long>(
        std::ceil(cfg.s1_ratio * static_cast<double>(s2)));
    s1 = std::max(1LL, std::min(s1, s2 - 1));
    const KernelSpec kern = tdnn_kernel(cfg.query, s1, s2);
    const ZetaEstimate z1 = estimate_zeta(
        kern, sampler, 1, cfg.zeta_reps,
        rep_seed(cfg.seed, kExpDominance, static_cast<std::uint64_t>(s2), 3, 0));
    t.rows.push_back(make_row(cfg, "dominance", n_ref, s1, s2, 0, "stability",
                              "s_zeta1", static_cast<double>(s2) * z1.value,
                              static_cast<double>(s2) * z1.std_error));
  }
  return t;
}

ExperimentTable incomplete_experiment(const ExperimentConfig& cfg) {
  require_replicates(cfg);
  ExperimentTable t;
  t.name = "incomplete";
  const long long m = cfg.replicates;
  const DeletionCoupling coupling = cfg.coupling == "recompute"
                                        ? DeletionCoupling::RecomputeP
                                        : DeletionCoupling::KeepMarks;
  for (long long n : cfg.incomplete_n_grid) {
    const long long s = static_cast<long long>(
        std::ceil(std::pow(static_cast<double>(n), cfg.s_exponent)));
    const double target = std::ceil(std::pow(static_cast<double>(n),
                                             cfg.target_exponent));
    const KernelSpec kern = sample_variance_kernel(s);

    const SamplingPlan plans[2] = {
        SamplingPlan::bernoulli(target, coupling),
        SamplingPlan::horvitz_thompson(target, coupling)};
    const char* names[2] = {"bernoulli", "horvitz-thompson"};

    for (int pi = 0; pi < 2; ++pi) {
      const SamplingPlan plan = plans[pi];
      const auto point = [&](std::uint64_t sd) {
        const Dataset data = dgp_sample_scalar(cfg.dgp, n, sd);
        EvalOptions opt;
        opt.omega_seed = derive_key(sd, {tag::omega});
        opt.selection_seed = derive_key(sd, {tag::selection});
        return eval_incomplete(data, kern, plan, opt).value;
      };
      const McVariance mc = mc_truth_variance(
          point, cfg.truth_replicates,
          rep_seed(cfg.seed, kExpIncomplete, static_cast<std::uint64_t>(n),
                   kTruthStream, static_cast<std::uint64_t>(pi)));
      t.rows.push_back(make_row(cfg, "incomplete", n, s, 0, 0, names[pi],
                                "sigma2_mc", mc.variance, mc.std_error));

      std::vector<double> ratios, points;
      parallel_fill(m, ratios, [&](long long r) {
        const std::uint64_t sd =
            rep_seed(cfg.seed, kExpIncomplete, static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(pi), static_cast<std::uint64_t>(r));
        const Dataset data = dgp_sample_scalar(cfg.dgp, n, sd);
        EvalOptions opt;
        opt.omega_seed = derive_key(sd, {tag::omega});
        opt.selection_seed = derive_key(sd, {tag::selection});
        const EstimatorFn est = make_incomplete_estimator(data, kern, plan, opt);
        const JackknifeReport jk = jkd_variance(est, data, 1);
        return jk.variance / mc.variance;
      });
      parallel_fill(m, points, [&](long long r) {
        const std::uint64_t sd =
            rep_seed(cfg.seed, kExpIncomplete, static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(pi), static_cast<std::uint64_t>(r));
        const Dataset data = dgp_sample_scalar(cfg.dgp, n, sd);
        EvalOptions opt;
        opt.omega_seed = derive_key(sd, {tag::omega});
        opt.selection_seed = derive_key(sd, {tag::selection});
        return eval_incomplete(data, kern, plan, opt).value;
      });
      std::sort(ratios.begin(), ratios.end());
      std::sort(points.begin(), points.end());
      t.rows.push_back(make_row(cfg, "incomplete", n, s, 0, 1, names[pi],
                                "ratio_median", quantile_sorted(ratios, 0.5),
                                median_se_sorted(ratios)));
      t.rows.push_back(make_row(cfg, "incomplete", n, s, 0, 1, names[pi],
                                "ratio_q25", quantile_sorted(ratios, 0.25), 0.0));
      t.rows.push_back(make_row(cfg, "incomplete", n, s, 0, 1, names[pi],
                                "ratio_q75", quantile_sorted(ratios, 0.75), 0.0));
      t.rows.push_back(make_row(cfg, "incomplete", n, s, 0, 0, names[pi],
                                "point_median", quantile_sorted(points, 0.5),
                                median_se_sorted(points)));
    }
  }
  return t;
}

std::vector<ExperimentTable> run_experiments(const ExperimentConfig& cfg) {
  std::vector<ExperimentTable> out;
  const std::string& which = cfg.experiment;
  if (which == "ratio" || which == "all") out.push_back(ratio_experiment(cfg));
  if (which == "coverage" || which == "all")
    out.push_back(coverage_experiment(cfg));
  if (which == "dominance" || which == "all")
    out.push_back(dominance_experiment(cfg));
  if (which == "incomplete" || which == "all")
    out.push_back(incomplete_experiment(cfg));
  if (out.empty())
    throw std::runtime_error("config-parse: unknown experiment '" + which + "'");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string table_to_csv(const ExperimentTable& table) {
  std::string out = "experiment,n,s1,s2,d,method,metric,value,mc_se,seed\n";
  for (const CsvRow& r : table.rows) {
    out += r.experiment;
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += std::to_string(r.s1);
    out += ',';
    out += std::to_string(r.s2);
    out += ',';
    out += std::to_string(r.d);
    out += ',';
    out += r.method;
    out += ',';
    out += r.metric;
    out += ',';
    out += format_double(r.value);
    out += ',';
    out += format_double(r.mc_se);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

namespace {

using nlohmann::json;

const char* design_name(DesignKind d) {
  return d == DesignKind::Uniform ? "uniform" : "truncated-normal";
}
const char* mu_name(MuKind m) {
  switch (m) {
    case MuKind::Linear: return "linear";
    case MuKind::SineProduct: return "sine-product";
    case MuKind::GaussianBump: return "gaussian-bump";
  }
  return "sine-product";
}
const char* noise_name(NoiseKind n) {
  return n == NoiseKind::Homoskedastic ? "homoskedastic" : "heteroskedastic";
}

DesignKind design_from(const std::string& s) {
  if (s == "uniform") return DesignKind::Uniform;
  if (s == "truncated-normal") return DesignKind::TruncatedNormal;
  throw std::runtime_error("config-parse: unknown design '" + s + "'");
}
MuKind mu_from(const std::string& s) {
  if (s == "linear") return MuKind::Linear;
  if (s == "sine-product") return MuKind::SineProduct;
  if (s == "gaussian-bump") return MuKind::GaussianBump;
  throw std::runtime_error("config-parse: unknown mu '" + s + "'");
}
NoiseKind noise_from(const std::string& s) {
  if (s == "homoskedastic") return NoiseKind::Homoskedastic;
  if (s == "heteroskedastic") return NoiseKind::Heteroskedastic;
  throw std::runtime_error("config-parse: unknown noise '" + s + "'");
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config-parse: field '") + key +
                             "': " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config-parse: ") + e.what());
  }
  static const char* known[] = {
      "experiment",   "dgp",          "n_grid",          "s2_gamma",
      "s1_ratio",     "d_list",       "replicates",      "truth_replicates",
      "zeta_reps",    "subsample_b",  "query",           "level",
      "incomplete_n_grid", "s_exponent", "target_exponent", "coupling",
      "dominance_s2_list", "out_dir",  "seed",            "threads"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok)
      throw std::runtime_error("config-parse: unknown field '" + item.key() + "'");
  }
  ExperimentConfig cfg;
  read_field(j, "experiment", cfg.experiment);
  if (j.contains("dgp")) {
    const json& d = j.at("dgp");
    static const char* dgp_known[] = {"k", "design", "mu", "noise"};
    for (const auto& item : d.items()) {
      bool ok = false;
      for (const char* k : dgp_known) ok = ok || item.key() == k;
      if (!ok)
        throw std::runtime_error("config-parse: unknown field 'dgp." +
                                 item.key() + "'");
    }
    read_field(d, "k", cfg.dgp.k);
    std::string s;
    s = design_name(cfg.dgp.design);
    read_field(d, "design", s);
    cfg.dgp.design = design_from(s);
    s = mu_name(cfg.dgp.mu);
    read_field(d, "mu", s);
    cfg.dgp.mu = mu_from(s);
    s = noise_name(cfg.dgp.noise);
    read_field(d, "noise", s);
    cfg.dgp.noise = noise_from(s);
  }
  read_field(j, "n_grid", cfg.n_grid);
  read_field(j, "s2_gamma", cfg.s2_gamma);
  read_field(j, "s1_ratio", cfg.s1_ratio);
  read_field(j, "d_list", cfg.d_list);
  read_field(j, "replicates", cfg.replicates);
  read_field(j, "truth_replicates", cfg.truth_replicates);
  read_field(j, "zeta_reps", cfg.zeta_reps);
  read_field(j, "subsample_b", cfg.subsample_b);
  read_field(j, "query", cfg.query);
  read_field(j, "level", cfg.level);
  read_field(j, "incomplete_n_grid", cfg.incomplete_n_grid);
  read_field(j, "s_exponent", cfg.s_exponent);
  read_field(j, "target_exponent", cfg.target_exponent);
  read_field(j, "coupling", cfg.coupling);
  read_field(j, "dominance_s2_list", cfg.dominance_s2_list);
  read_field(j, "out_dir", cfg.out_dir);
  read_field(j, "seed", cfg.seed);
  read_field(j, "threads", cfg.threads);
  if (cfg.dgp.k < 1)
    throw std::runtime_error("config-parse: field 'dgp.k': must be >= 1");
  if (static_cast<long long>(cfg.query.size()) != cfg.dgp.k)
    throw std::runtime_error(
        "config-parse: field 'query': length must equal dgp.k");
  if (cfg.coupling != "keep" && cfg.coupling != "recompute")
    throw std::runtime_error("config-parse: field 'coupling': keep|recompute");
  return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["dgp"] = {{"k", cfg.dgp.k},
              {"design", design_name(cfg.dgp.design)},
              {"mu", mu_name(cfg.dgp.mu)},
              {"noise", noise_name(cfg.dgp.noise)}};
  j["n_grid"] = cfg.n_grid;
  j["s2_gamma"] = cfg.s2_gamma;
  j["s1_ratio"] = cfg.s1_ratio;
  j["d_list"] = cfg.d_list;
  j["replicates"] = cfg.replicates;
  j["truth_replicates"] = cfg.truth_replicates;
  j["zeta_reps"] = cfg.zeta_reps;
  j["subsample_b"] = cfg.subsample_b;
  j["query"] = cfg.query;
  j["level"] = cfg.level;
  j["incomplete_n_grid"] = cfg.incomplete_n_grid;
  j["s_exponent"] = cfg.s_exponent;
  j["target_exponent"] = cfg.target_exponent;
  j["coupling"] = cfg.coupling;
  j["dominance_s2_list"] = cfg.dominance_s2_list;
  j["out_dir"] = cfg.out_dir;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

namespace {

template <class T>
T parse_scalar(const std::string& key, const std::string& value);

template <>
long long parse_scalar<long long>(const std::string& key,
                                  const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config-parse: field '" + key +
                             "': bad integer '" + value + "'");
  }
}

template <>
double parse_scalar<double>(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config-parse: field '" + key + "': bad number '" +
                             value + "'");
  }
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string item =
        value.substr(start, comma == std::string::npos ? std::string::npos
                                                       : comma - start);
    if (!item.empty()) out.push_back(parse_scalar<T>(key, item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty())
    throw std::runtime_error("config-parse: field '" + key + "': empty list");
  return out;
}

}  // namespace

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "experiment") cfg.experiment = value;
  else if (key == "dgp.k") cfg.dgp.k = parse_scalar<long long>(key, value);
  else if (key == "dgp.design") cfg.dgp.design = design_from(value);
  else if (key == "dgp.mu") cfg.dgp.mu = mu_from(value);
  else if (key == "dgp.noise") cfg.dgp.noise = noise_from(value);
  else if (key == "n_grid") cfg.n_grid = parse_list<long long>(key, value);
  else if (key == "s2_gamma") cfg.s2_gamma = parse_scalar<double>(key, value);
  else if (key == "s1_ratio") cfg.s1_ratio = parse_scalar<double>(key, value);
  else if (key == "d_list") cfg.d_list = parse_list<long long>(key, value);
  else if (key == "replicates") cfg.replicates = parse_scalar<long long>(key, value);
  else if (key == "truth_replicates")
    cfg.truth_replicates = parse_scalar<long long>(key, value);
  else if (key == "zeta_reps") cfg.zeta_reps = parse_scalar<long long>(key, value);
  else if (key == "subsample_b")
    cfg.subsample_b = parse_scalar<long long>(key, value);
  else if (key == "query") cfg.query = parse_list<double>(key, value);
  else if (key == "level") cfg.level = parse_scalar<double>(key, value);
  else if (key == "incomplete_n_grid")
    cfg.incomplete_n_grid = parse_list<long long>(key, value);
  else if (key == "s_exponent") cfg.s_exponent = parse_scalar<double>(key, value);
  else if (key == "target_exponent")
    cfg.target_exponent = parse_scalar<double>(key, value);
  else if (key == "coupling") cfg.coupling = value;
  else if (key == "dominance_s2_list")
    cfg.dominance_s2_list = parse_list<long long>(key, value);
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "seed")
    cfg.seed = static_cast<std::uint64_t>(parse_scalar<long long>(key, value));
  else if (key == "threads") cfg.threads = parse_scalar<long long>(key, value);
  else
    throw std::runtime_error("config-parse: unknown field '" + key + "'");
}

std::string run_manifest_json(const ExperimentConfig& cfg,
                              const std::vector<std::string>& outputs,
                              const std::string& started_at,
                              const std::string& finished_at,
                              double wall_seconds) {
  json j;
  j["config"] = json::parse(experiment_config_to_json(cfg));
  j["seed"] = cfg.seed;
  j["versions"]["library"] = kLibraryVersion;
  j["versions"]["compiler"] = __VERSION__;
#ifdef _OPENMP
  j["versions"]["openmp"] = _OPENMP;
#else
  j["versions"]["openmp"] = 0;
#endif
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["wall_seconds"] = wall_seconds;
  j["outputs"] = outputs;
  return j.dump(2);
}

}  // namespace ujack
