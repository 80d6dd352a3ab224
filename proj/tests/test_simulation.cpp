#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ujack/rng.hpp"
#include "ujack/simulation.hpp"

using namespace ujack;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.n_grid = {24};
  cfg.d_list = {1};
  cfg.replicates = 6;
  cfg.truth_replicates = 12;
  cfg.zeta_reps = 30000;
  cfg.subsample_b = 20;
  cfg.incomplete_n_grid = {26};
  cfg.dominance_s2_list = {3, 4};
  cfg.seed = 314;
  return cfg;
}

std::string read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(static_cast<bool>(f));
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("regression surfaces and noise scales match their formulas") {
  DgpConfig cfg;
  cfg.k = 2;
  cfg.mu = MuKind::Linear;
  const double x[2] = {0.2, 0.6};
  CHECK(std::abs(dgp_mu(cfg, x) - (2.0 + 3.0 * 0.4)) <= 1e-15);
  cfg.mu = MuKind::SineProduct;
  CHECK(std::abs(dgp_mu(cfg, x) - std::sin(2.0 * M_PI * 0.4) * 1.4) <= 1e-15);
  const double center[2] = {0.5, 0.5};
  CHECK(std::abs(dgp_mu(cfg, center)) <= 1e-15);  // sine vanishes mid-cube
  cfg.mu = MuKind::GaussianBump;
  CHECK(std::abs(dgp_mu(cfg, center) - 1.0) <= 1e-15);
  CHECK(dgp_mu(cfg, x) < 1.0);
  cfg.noise = NoiseKind::Homoskedastic;
  CHECK(dgp_sigma(cfg, x) == 0.5);
  cfg.noise = NoiseKind::Heteroskedastic;
  CHECK(std::abs(dgp_sigma(cfg, x) - (0.5 + 0.25 * 0.4)) <= 1e-15);
}

TEST_CASE("designs stay inside the unit cube and are seed-determined") {
  for (DesignKind design : {DesignKind::Uniform, DesignKind::TruncatedNormal}) {
    DgpConfig cfg;
    cfg.k = 3;
    cfg.design = design;
    const Dataset a = dgp_sample(cfg, 200, 11);
    const Dataset b = dgp_sample(cfg, 200, 11);
    for (long long i = 0; i < a.n(); ++i) {
      for (long long j = 0; j < 3; ++j) {
        CHECK(a.row(i)[j] >= 0.0);
        CHECK(a.row(i)[j] <= 1.0);
        CHECK(a.row(i)[j] == b.row(i)[j]);
      }
      CHECK(a.y(i) == b.y(i));
    }
  }
}

TEST_CASE("each row is a pure function of the seed and row index") {
  DgpConfig cfg;
  const Dataset small = dgp_sample(cfg, 10, 77);
  const Dataset big = dgp_sample(cfg, 40, 77);
  for (long long i = 0; i < 10; ++i) {
    CHECK(small.row(i)[0] == big.row(i)[0]);
    CHECK(small.y(i) == big.y(i));
  }
  // the scalar marginal reuses the same per-row streams
  const Dataset ys = dgp_sample_scalar(cfg, 10, 77);
  CHECK(ys.width() == 1);
  for (long long i = 0; i < 10; ++i) CHECK(ys.scalar(i) == small.y(i));
}

TEST_CASE("observation sampler adapter draws full rows") {
  DgpConfig cfg;
  cfg.k = 2;
  const ObservationSampler s = dgp_observation_sampler(cfg);
  CHECK(s.width == 3);
  RngStream rng(derive_key(4, {tag::misc}));
  double row[3] = {0, 0, 0};
  s.draw(rng, row);
  CHECK(row[0] >= 0.0);
  CHECK(row[0] <= 1.0);
  CHECK(row[1] >= 0.0);
  CHECK(row[1] <= 1.0);
  CHECK(std::isfinite(row[2]));
}

TEST_CASE("Monte Carlo variance recovers a known spread") {
  // replicate values uniform on [0, 2): variance 4/12 = 1/3
  const auto value_at = [](std::uint64_t key) {
    return 2.0 * RngStream(key).next_double();
  };
  const McVariance mc = mc_truth_variance(value_at, 20000, 5);
  CHECK(mc.reps == 20000);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.variance - 1.0 / 3.0) <= 4.0 * mc.std_error);
  // reported uncertainty has the right scale: Var(S^2)/reps for the uniform
  // law gives se ~ sqrt((m4 - s^4)/reps) with m4 = 16/80
  const double se_theory =
      std::sqrt((16.0 / 80.0 - 1.0 / 9.0) / 20000.0);
  CHECK(mc.std_error > 0.3 * se_theory);
  CHECK(mc.std_error < 3.0 * se_theory);
  // deterministic in the seed
  CHECK(mc_truth_variance(value_at, 20000, 5).variance == mc.variance);
  CHECK_THROWS_WITH((void)mc_truth_variance(value_at, 2, 5), "invalid-order");
}

TEST_CASE("double formatting survives a parse round trip") {
  for (double v : {0.1, 1.0 / 3.0, -2.718281828459045e-7, 1e300, 0.0,
                   123456789.123456789, 5e-324}) {
    const std::string s = format_double(v);
    // strtod instead of std::stod: the latter throws on subnormals (ERANGE)
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("tables render with the fixed header and row grammar") {
  ExperimentTable t;
  t.name = "demo";
  CsvRow r;
  r.experiment = "demo";
  r.n = 10;
  r.s1 = 2;
  r.s2 = 4;
  r.d = 1;
  r.method = "m";
  r.metric = "x";
  r.value = 0.25;
  r.mc_se = 0.5;
  r.seed = 9;
  t.rows.push_back(r);
  CHECK(table_to_csv(t) ==
        "experiment,n,s1,s2,d,method,metric,value,mc_se,seed\n"
        "demo,10,2,4,1,m,x,0.25,0.5,9\n");
}

TEST_CASE("atomic writes land complete or not at all") {
  const std::string path = "test_sim_atomic.csv";
  write_file_atomic(path, "a,b\n1,2\n");
  CHECK(read_all(path) == "a,b\n1,2\n");
  write_file_atomic(path, "replaced\n");
  CHECK(read_all(path) == "replaced\n");
  std::remove(path.c_str());
  CHECK_THROWS((void)write_file_atomic("no_such_dir/x.csv", "y"));
}

TEST_CASE("config JSON round trips field for field") {
  ExperimentConfig cfg = tiny_config();
  cfg.experiment = "coverage";
  cfg.dgp.k = 2;
  cfg.dgp.design = DesignKind::TruncatedNormal;
  cfg.dgp.mu = MuKind::GaussianBump;
  cfg.dgp.noise = NoiseKind::Homoskedastic;
  cfg.query = {0.25, 0.75};
  cfg.s2_gamma = 0.7;
  cfg.coupling = "recompute";
  cfg.out_dir = "elsewhere";
  cfg.threads = 2;
  const ExperimentConfig back =
      parse_experiment_config(experiment_config_to_json(cfg));
  CHECK(back.experiment == cfg.experiment);
  CHECK(back.dgp.k == cfg.dgp.k);
  CHECK(back.dgp.design == cfg.dgp.design);
  CHECK(back.dgp.mu == cfg.dgp.mu);
  CHECK(back.dgp.noise == cfg.dgp.noise);
  CHECK(back.n_grid == cfg.n_grid);
  CHECK(back.s2_gamma == cfg.s2_gamma);
  CHECK(back.s1_ratio == cfg.s1_ratio);
  CHECK(back.d_list == cfg.d_list);
  CHECK(back.replicates == cfg.replicates);
  CHECK(back.truth_replicates == cfg.truth_replicates);
  CHECK(back.zeta_reps == cfg.zeta_reps);
  CHECK(back.subsample_b == cfg.subsample_b);
  CHECK(back.query == cfg.query);
  CHECK(back.level == cfg.level);
  CHECK(back.incomplete_n_grid == cfg.incomplete_n_grid);
  CHECK(back.s_exponent == cfg.s_exponent);
  CHECK(back.target_exponent == cfg.target_exponent);
  CHECK(back.coupling == cfg.coupling);
  CHECK(back.dominance_s2_list == cfg.dominance_s2_list);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.seed == cfg.seed);
  CHECK(back.threads == cfg.threads);
}

TEST_CASE("config parsing names the offending field") {
  CHECK_THROWS_WITH((void)parse_experiment_config("{\"bogus\": 1}"),
                    "config-parse: unknown field 'bogus'");
  CHECK_THROWS_WITH((void)parse_experiment_config("{\"dgp\": {\"shape\": 1}}"),
                    "config-parse: unknown field 'dgp.shape'");
  CHECK_THROWS_WITH(
      (void)parse_experiment_config("{\"dgp\": {\"mu\": \"cubic\"}}"),
      "config-parse: unknown mu 'cubic'");
  CHECK_THROWS_WITH((void)parse_experiment_config("{\"dgp\": {\"k\": 0}}"),
                    "config-parse: field 'dgp.k': must be >= 1");
  CHECK_THROWS_WITH(
      (void)parse_experiment_config("{\"dgp\": {\"k\": 2}}"),
      "config-parse: field 'query': length must equal dgp.k");
  CHECK_THROWS_WITH((void)parse_experiment_config("{\"coupling\": \"maybe\"}"),
                    "config-parse: field 'coupling': keep|recompute");
  // malformed JSON and wrong-typed fields keep the prefix
  bool threw = false;
  try {
    (void)parse_experiment_config("{broken");
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).rfind("config-parse:", 0) == 0);
  }
  CHECK(threw);
  threw = false;
  try {
    (void)parse_experiment_config("{\"replicates\": \"many\"}");
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).rfind("config-parse: field 'replicates'", 0) ==
          0);
  }
  CHECK(threw);
}

TEST_CASE("command-line overrides reach every field kind") {
  ExperimentConfig cfg;
  apply_override(cfg, "experiment", "ratio");
  CHECK(cfg.experiment == "ratio");
  apply_override(cfg, "n_grid", "10,20,30");
  CHECK(cfg.n_grid == std::vector<long long>{10, 20, 30});
  apply_override(cfg, "query", "0.25");
  CHECK(cfg.query == std::vector<double>{0.25});
  apply_override(cfg, "s2_gamma", "0.55");
  CHECK(cfg.s2_gamma == 0.55);
  apply_override(cfg, "seed", "12345");
  CHECK(cfg.seed == 12345);
  apply_override(cfg, "threads", "4");
  CHECK(cfg.threads == 4);
  apply_override(cfg, "dgp.mu", "linear");
  CHECK(cfg.dgp.mu == MuKind::Linear);
  apply_override(cfg, "dgp.design", "truncated-normal");
  CHECK(cfg.dgp.design == DesignKind::TruncatedNormal);
  apply_override(cfg, "dgp.noise", "homoskedastic");
  CHECK(cfg.dgp.noise == NoiseKind::Homoskedastic);
  apply_override(cfg, "dgp.k", "1");
  CHECK(cfg.dgp.k == 1);
  apply_override(cfg, "coupling", "recompute");
  CHECK(cfg.coupling == "recompute");
  CHECK_THROWS_WITH((void)apply_override(cfg, "nope", "1"),
                    "config-parse: unknown field 'nope'");
  bool threw = false;
  try {
    apply_override(cfg, "replicates", "1x");
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).rfind("config-parse: field 'replicates'", 0) ==
          0);
  }
  CHECK(threw);
  threw = false;
  try {
    apply_override(cfg, "n_grid", "");
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).rfind("config-parse: field 'n_grid'", 0) == 0);
  }
  CHECK(threw);
}

TEST_CASE("manifests carry the config echo, outputs, and versions") {
  const ExperimentConfig cfg = tiny_config();
  const std::string m = run_manifest_json(
      cfg, {"out/a.csv", "out/b.csv"}, "2026-01-01T00:00:00Z",
      "2026-01-01T00:00:05Z", 5.0);
  CHECK(m.find("\"seed\": 314") != std::string::npos);
  CHECK(m.find("out/a.csv") != std::string::npos);
  CHECK(m.find("out/b.csv") != std::string::npos);
  CHECK(m.find(kLibraryVersion) != std::string::npos);
  CHECK(m.find("2026-01-01T00:00:00Z") != std::string::npos);
  CHECK(m.find("\"wall_seconds\": 5.0") != std::string::npos);
}

TEST_CASE("ratio study emits one truth row and three ratio rows per case") {
  const ExperimentConfig cfg = tiny_config();
  const ExperimentTable t = ratio_experiment(cfg);
  CHECK(t.name == "ratio");
  REQUIRE(t.rows.size() == 4);  // one n, one d
  CHECK(t.rows[0].method == "mc_truth");
  CHECK(t.rows[0].metric == "sigma2_mc");
  CHECK(t.rows[0].value > 0.0);
  CHECK(t.rows[1].metric == "ratio_median");
  CHECK(t.rows[1].method == "tdnn_jkd");
  CHECK(t.rows[1].value > 0.0);
  CHECK(t.rows[2].metric == "ratio_q25");
  CHECK(t.rows[3].metric == "ratio_q75");
  CHECK(t.rows[2].value <= t.rows[1].value);
  CHECK(t.rows[1].value <= t.rows[3].value);
  for (const CsvRow& r : t.rows) CHECK(r.seed == cfg.seed);
}

TEST_CASE("coverage study reports a fraction with a binomial band") {
  const ExperimentTable t = coverage_experiment(tiny_config());
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].metric == "coverage");
  CHECK(t.rows[0].value >= 0.0);
  CHECK(t.rows[0].value <= 1.0);
  CHECK(t.rows[0].mc_se >= 0.0);
  CHECK(t.rows[1].metric == "halfwidth_median");
  CHECK(t.rows[1].value > 0.0);
}

TEST_CASE("variance-share study reports shares and a stability sweep") {
  const ExperimentTable t = dominance_experiment(tiny_config());
  // one n: zeta1, zeta_top, dominance, s_zeta1; plus two stability rows
  REQUIRE(t.rows.size() == 6);
  CHECK(t.rows[0].metric == "zeta1");
  CHECK(t.rows[0].value > 0.0);
  CHECK(t.rows[1].metric == "zeta_top");
  CHECK(t.rows[2].metric == "dominance");
  CHECK(t.rows[3].metric == "s_zeta1");
  CHECK(t.rows[4].method == "stability");
  CHECK(t.rows[4].s2 == 3);
  CHECK(t.rows[5].s2 == 4);
}

TEST_CASE("incomplete study covers both normalizations") {
  ExperimentConfig cfg = tiny_config();
  cfg.replicates = 5;
  cfg.truth_replicates = 10;
  const ExperimentTable t = incomplete_experiment(cfg);
  REQUIRE(t.rows.size() == 10);  // one n, two plans, five rows each
  CHECK(t.rows[0].method == "bernoulli");
  CHECK(t.rows[5].method == "horvitz-thompson");
  for (std::size_t base : {0u, 5u}) {
    CHECK(t.rows[base].metric == "sigma2_mc");
    CHECK(t.rows[base + 1].metric == "ratio_median");
    CHECK(t.rows[base + 4].metric == "point_median");
  }
}

TEST_CASE("experiment dispatch honors the requested study list") {
  ExperimentConfig cfg = tiny_config();
  cfg.experiment = "coverage";
  const auto one = run_experiments(cfg);
  REQUIRE(one.size() == 1);
  CHECK(one[0].name == "coverage");
  cfg.experiment = "everything";
  CHECK_THROWS_WITH((void)run_experiments(cfg),
                    "config-parse: unknown experiment 'everything'");
  cfg.experiment = "ratio";
  cfg.replicates = 0;
  CHECK_THROWS_WITH((void)run_experiments(cfg), "empty-table");
}

TEST_CASE("experiment tables are byte-stable across thread counts") {
  ExperimentConfig cfg = tiny_config();
  cfg.replicates = 4;
  cfg.truth_replicates = 8;
#ifdef _OPENMP
  omp_set_num_threads(3);
#endif
  const std::string threaded = table_to_csv(ratio_experiment(cfg));
#ifdef _OPENMP
  omp_set_num_threads(1);
#endif
  const std::string serial = table_to_csv(ratio_experiment(cfg));
  CHECK(threaded == serial);
}
