#include "ujack/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "ujack/combinatorics.hpp"
#include "ujack/hoeffding.hpp"
#include "ujack/jackknife.hpp"
#include "ujack/kernel.hpp"
#include "ujack/normal.hpp"
#include "ujack/simulation.hpp"
#include "ujack/tdnn.hpp"

namespace ujack::cli {

namespace {

using nlohmann::json;

void cap_threads(long long threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
#else
  (void)threads;
#endif
}

std::string timestamp_utc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream oss;
  oss << f.rdbuf();
  return oss.str();
}

std::vector<double> split_doubles(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size())
        throw std::runtime_error("bad number in list: '" + item + "'");
      out.push_back(v);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::runtime_error("empty number list");
  return out;
}

bool field_is_number(const std::string& field) {
  const char* b = field.data();
  const char* e = b + field.size();
  double v = 0.0;
  const auto res = std::from_chars(b, e, v);
  return res.ec == std::errc() && res.ptr == e;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// verify: named checks with measured-vs-expected reporting.

struct CheckSink {
  std::ostream& out;
  int failures = 0;

  void emit(const std::string& name, bool ok, const std::string& measured,
            const std::string& expected, const std::string& tol) {
    out << (ok ? "PASS " : "FAIL ") << name << ": measured " << measured
        << " expected " << expected;
    if (!tol.empty()) out << " (tol " << tol << ")";
    out << "\n";
    if (!ok) ++failures;
  }
  void close(const std::string& name, double measured, double expected,
             double tol) {
    emit(name, std::abs(measured - expected) <= tol, format_double(measured),
         format_double(expected), format_double(tol));
  }
  void exact(const std::string& name, double measured, double expected) {
    emit(name, measured == expected, format_double(measured),
         format_double(expected), "exact");
  }
  void rational(const std::string& name, const BigRat& measured,
                const BigRat& expected) {
    std::ostringstream m, e;
    m << measured;
    e << expected;
    emit(name, measured == expected, m.str(), e.str(), "exact");
  }
  void integer(const std::string& name, const BigInt& measured,
               const BigInt& expected) {
    std::ostringstream m, e;
    m << measured;
    e << expected;
    emit(name, measured == expected, m.str(), e.str(), "exact");
  }
  void truth(const std::string& name, bool measured) {
    emit(name, measured, measured ? "true" : "false", "true", "");
  }
};

void suite_combinatorics(CheckSink& sink) {
  sink.integer("binom-52-5", binom(52, 5), BigInt(2598960));
  sink.integer("binom-out-of-range", binom(5, 9), BigInt(0));
  sink.truth("chu-vandermonde-12-9-5", chu_vandermonde_check(12, 9, 5));

  long long count = 0;
  for (SubsetStream st(6, 3); st.valid(); st.advance()) ++count;
  sink.integer("subset-stream-count-6-3", BigInt(count), binom(6, 3));

  sink.rational("kernel-product-shared-shared-2-1",
                kernel_product_probability(2, 1, KernelProductVariant::SharedShared),
                BigRat(1, 3));
  sink.rational("kernel-product-shared-new-2-1",
                kernel_product_probability(2, 1, KernelProductVariant::SharedNew),
                BigRat(1, 6));
  sink.rational("kernel-product-new-new-2-1",
                kernel_product_probability(2, 1, KernelProductVariant::NewNew),
                BigRat(1, 3));
  sink.rational("kernel-product-shared-shared-3-2",
                kernel_product_probability(3, 2, KernelProductVariant::SharedShared),
                BigRat(1, 4));
}

void suite_hoeffding(CheckSink& sink) {
  const DiscreteDistribution coin({0.0, 1.0}, {0.5, 0.5});

  // Order-2 variance kernel on a fair coin, n = 4: exact variance 1/96.
  const HoeffdingTable vt = build_table(variance_kernel(), coin);
  sink.close("variance-kernel-coin-n4-variance", variance_decomposition(vt, 4),
             1.0 / 96.0, 1e-12);

  // Mean kernel: theta is the distribution mean and zeta_1 = Var(X)/s^2.
  const DiscreteDistribution tri({0.0, 1.0, 2.0}, {0.2, 0.3, 0.5});
  const HoeffdingTable mt = build_table(mean_kernel(2), tri);
  sink.close("mean-kernel-theta", mt.theta, 1.3, 1e-12);
  const double var_x = (0.0 - 1.3) * (0.0 - 1.3) * 0.2 +
                       (1.0 - 1.3) * (1.0 - 1.3) * 0.3 +
                       (2.0 - 1.3) * (2.0 - 1.3) * 0.5;
  sink.close("mean-kernel-zeta1", mt.zeta[0], var_x / 4.0, 1e-12);

  // Additivity of sigma-field variances: zeta_c = sum_j binom(c,j) V_j.
  const DiscreteDistribution duo({0.3, 1.7}, {0.5, 0.5});
  const HoeffdingTable pt = build_table(product_kernel(), duo);
  sink.close("product-kernel-additivity-c2", pt.zeta[1],
             2.0 * pt.v[0] + pt.v[1], 1e-12);

  sink.exact("dominance-stat-knife-edge", dominance_stat(100, 10, 0.2, 2.0),
             0.0);
  sink.close("hajek-ratio-unit", hajek_ratio(50, 5, 0.15, 0.3), 1.0, 1e-12);
}

void suite_jackknife(CheckSink& sink) {
  RngStream rng(derive_key(7, {tag::misc}));
  const long long n = 17;
  std::vector<double> xs(n);
  for (double& x : xs) x = rng.next_double() * 10.0;
  const Dataset data = Dataset::from_scalars(xs);

  EstimatorFn mean_est;
  mean_est.min_n = 1;
  mean_est.apply = [](const Dataset& d) {
    double acc = 0.0;
    for (long long i = 0; i < d.n(); ++i) acc += d.scalar(i);
    return acc / static_cast<double>(d.n());
  };

  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(n);
  double s2 = 0.0;
  for (double x : xs) s2 += (x - m) * (x - m);
  s2 /= static_cast<double>(n - 1);
  const double target = s2 / static_cast<double>(n);

  const JackknifeReport jk = jk_variance(mean_est, data);
  sink.close("jackknife-mean-is-s2-over-n", jk.variance, target, 1e-12);
  const JackknifeReport jk1 = jkd_variance(mean_est, data, 1);
  sink.exact("delete-1-matches-basic-jackknife", jk1.variance, jk.variance);
  // For the sample mean the delete-d estimator equals S^2/n for every d.
  const JackknifeReport jk3 = jkd_variance(mean_est, data, 3);
  sink.close("delete-3-mean-identity", jk3.variance, target, 1e-12);
}

void suite_tdnn(CheckSink& sink) {
  const Dataset toy = Dataset::from_xy({1.0, 2.0, 3.0}, 1, {10.0, 20.0, 30.0});
  const double query = 0.0;

  const std::vector<double> w = dnn_weights(3, 2);
  sink.close("dnn-weight-rank1-n3-s2", w[0], 2.0 / 3.0, 1e-15);
  sink.close("dnn-weight-rank2-n3-s2", w[1], 1.0 / 3.0, 1e-15);
  sink.exact("dnn-weight-rank3-n3-s2", w[2], 0.0);

  sink.close("dnn-toy-estimate-s2", dnn_estimate(toy, &query, 2), 40.0 / 3.0,
             1e-12);
  sink.close("dnn-s1-is-sample-mean", dnn_estimate(toy, &query, 1), 20.0,
             1e-12);
  sink.close("dnn-sn-is-nearest-neighbor", dnn_estimate(toy, &query, 3), 10.0,
             1e-12);

  const TdnnWeights tw = tdnn_weights(1, 4, 2);
  sink.close("tdnn-weight1-s1-1-s2-4-k2", tw.w1, -1.0 / 3.0, 1e-15);
  sink.close("tdnn-weight2-s1-1-s2-4-k2", tw.w2, 4.0 / 3.0, 1e-15);

  sink.close("tdnn-toy-estimate", tdnn_estimate(toy, &query, 1, 2).value,
             100.0 / 9.0, 1e-12);

  sink.close("normal-quantile-0.975", normal_quantile(0.975), 1.959964, 1e-5);
  const CiResult ci = studentized_ci(0.0, 1.0, 0.95);
  sink.close("ci-upper-level-0.95-var-1", ci.hi, 1.959964, 1e-5);
}

int cmd_verify(const std::string& suite, long long threads, std::ostream& out,
               std::ostream& err) {
  cap_threads(threads);
  CheckSink sink{out};
  bool matched = false;
  if (suite == "combinatorics" || suite == "all") {
    matched = true;
    suite_combinatorics(sink);
  }
  if (suite == "hoeffding" || suite == "all") {
    matched = true;
    suite_hoeffding(sink);
  }
  if (suite == "jackknife" || suite == "all") {
    matched = true;
    suite_jackknife(sink);
  }
  if (suite == "tdnn" || suite == "all") {
    matched = true;
    suite_tdnn(sink);
  }
  if (!matched) {
    err << "unknown-suite: '" << suite
        << "' (expected combinatorics|hoeffding|jackknife|tdnn|all)\n";
    return 2;
  }
  out << (sink.failures == 0 ? "OK" : "FAILURES") << " " << sink.failures
      << " failed\n";
  return sink.failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const std::string& config_path,
            const std::vector<std::string>& overrides, bool have_out,
            const std::string& out_dir, bool have_seed, std::uint64_t seed,
            bool have_threads, long long threads, std::ostream& out,
            std::ostream& err) {
  std::string text;
  try {
    text = read_file(config_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    ExperimentConfig cfg = parse_experiment_config(text);
    for (const std::string& kv : overrides) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        throw std::runtime_error("config-parse: override '" + kv +
                                 "' is not key=value");
      apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (have_out) cfg.out_dir = out_dir;
    if (have_seed) cfg.seed = seed;
    if (have_threads) cfg.threads = threads;
    cap_threads(cfg.threads);

    std::filesystem::create_directories(cfg.out_dir);
    const std::string started = timestamp_utc();
    const auto t0 = std::chrono::steady_clock::now();

    const std::vector<ExperimentTable> tables = run_experiments(cfg);
    std::vector<std::string> outputs;
    for (const ExperimentTable& t : tables) {
      const std::string path = cfg.out_dir + "/" + t.name + ".csv";
      write_file_atomic(path, table_to_csv(t));
      outputs.push_back(path);
      out << "wrote " << path << " (" << t.rows.size() << " rows)\n";
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const std::string manifest_path = cfg.out_dir + "/manifest.json";
    write_file_atomic(manifest_path, run_manifest_json(cfg, outputs, started,
                                                       timestamp_utc(), wall));
    out << "wrote " << manifest_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return std::strncmp(e.what(), "config-parse", 12) == 0 ? 2 : 1;
  }
}

// ---------------------------------------------------------------------------
// estimate

int cmd_estimate(const std::string& data_path, const std::string& x_csv,
                 long long s1, long long s2, long long d, double level,
                 std::uint64_t seed, long long threads, std::ostream& out,
                 std::ostream& err) {
  cap_threads(threads);
  try {
    long long k = 0;
    const Dataset data = parse_xy_csv(read_file(data_path), k);
    const std::vector<double> query = split_doubles(x_csv);
    if (static_cast<long long>(query.size()) != k)
      throw std::runtime_error("--x has " + std::to_string(query.size()) +
                               " coordinates but the file has " +
                               std::to_string(k) + " feature columns");

    const long long n = data.n();
    if (s2 <= 0) {
      s2 = static_cast<long long>(
          std::ceil(std::pow(static_cast<double>(n), 0.6)));
      s2 = std::max(2LL, std::min(s2, n));
    }
    if (s1 <= 0) {
      s1 = (s2 + 1) / 2;
      s1 = std::max(1LL, std::min(s1, s2 - 1));
    }

    JackknifeOptions opt;
    if (binom(n, d) > 20'000) {
      opt.subsample = 800;
      opt.seed = derive_key(seed, {tag::subsample});
    }
    const InferenceResult inf = tdnn_infer(data, query, s1, s2, d, level, opt);

    json j;
    j["estimate"] = inf.estimate;
    j["variance"] = inf.variance;
    j["ci_lo"] = inf.ci.lo;
    j["ci_hi"] = inf.ci.hi;
    j["half_width"] = inf.ci.half_width;
    j["level"] = inf.level;
    j["n"] = inf.n;
    j["k"] = inf.k;
    j["s1"] = inf.s1;
    j["s2"] = inf.s2;
    j["d"] = inf.d;
    j["degenerate"] = inf.ci.degenerate;
    j["warnings"] = inf.warnings;
    out << j.dump() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

Dataset parse_xy_csv(const std::string& text, long long& k_out) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw std::runtime_error("csv-parse: line 1: empty file");

  const std::vector<std::string> header = split_fields(lines[0]);
  if (header.size() < 2)
    throw std::runtime_error(
        "csv-parse: line 1: need at least one feature column and a response "
        "column");
  bool all_numeric = true;
  for (const std::string& h : header) all_numeric = all_numeric && field_is_number(h);
  if (all_numeric)
    throw std::runtime_error("csv-parse: line 1: missing header row");

  const std::size_t ncols = header.size();
  const long long k = static_cast<long long>(ncols) - 1;
  std::vector<double> xs, ys;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty())
      throw std::runtime_error("csv-parse: line " + std::to_string(li + 1) +
                               ": blank line");
    const std::vector<std::string> fields = split_fields(lines[li]);
    if (fields.size() != ncols)
      throw std::runtime_error("csv-parse: line " + std::to_string(li + 1) +
                               ": expected " + std::to_string(ncols) +
                               " columns, got " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < ncols; ++c) {
      const std::string& f = fields[c];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw std::runtime_error("csv-parse: line " + std::to_string(li + 1) +
                                 ", column " + std::to_string(c + 1) +
                                 ": not a number '" + f + "'");
      if (c + 1 < ncols)
        xs.push_back(v);
      else
        ys.push_back(v);
    }
  }
  if (ys.empty()) throw std::runtime_error("csv-parse: line 2: no data rows");
  k_out = k;
  return Dataset::from_xy(xs, k, ys);
}

int run_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{
      "U-statistics, jackknife variance estimation, and two-scale "
      "nearest-neighbor inference"};
  app.name("ujack");
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "Run the oracle check suites");
  std::string suite = "all";
  long long vthreads = 0;
  verify->add_option("suite", suite,
                     "combinatorics|hoeffding|jackknife|tdnn|all");
  verify->add_option("--threads", vthreads, "cap worker threads");

  auto* run = app.add_subcommand("run", "Run configured experiments");
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::uint64_t seed_flag = 0;
  long long rthreads = 0;
  run->add_option("--config", config_path, "JSON experiment config")
      ->required();
  auto* out_opt = run->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed_flag, "master seed");
  auto* thr_opt = run->add_option("--threads", rthreads, "cap worker threads");
  run->add_option("overrides", overrides, "key=value config overrides");

  auto* est = app.add_subcommand(
      "estimate", "Two-scale regression estimate with a confidence interval");
  std::string data_path, x_csv;
  long long s1 = 0, s2 = 0, d = 1, ethreads = 0;
  double level = 0.95;
  std::uint64_t eseed = 0;
  est->add_option("data", data_path,
                  "CSV file: header row, feature columns, then the response")
      ->required();
  est->add_option("--x", x_csv, "query point, comma-separated")->required();
  est->add_option("--s1", s1, "inner subsampling scale (default ceil(s2/2))");
  est->add_option("--s2", s2, "outer subsampling scale (default ceil(n^0.6))");
  est->add_option("--d", d, "jackknife deletion size");
  est->add_option("--level", level, "confidence level in (0,1)");
  est->add_option("--seed", eseed, "seed for subsampled deletion sets");
  est->add_option("--threads", ethreads, "cap worker threads");

  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("ujack");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  if (verify->parsed()) return cmd_verify(suite, vthreads, out, err);
  if (run->parsed())
    return cmd_run(config_path, overrides, out_opt->count() > 0, out_dir,
                   seed_opt->count() > 0, seed_flag, thr_opt->count() > 0,
                   rthreads, out, err);
  if (est->parsed())
    return cmd_estimate(data_path, x_csv, s1, s2, d, level, eseed, ethreads,
                        out, err);
  err << "error: no command\n";
  return 2;
}

}  // namespace ujack::cli
