#pragma once

// Data-generating processes and the Monte Carlo experiments built on them:
// jackknife-variance ratio studies, confidence-interval coverage, variance-
// share diagnostics, and the incomplete-U counterpart of the ratio study.
// Every experiment emits rows of a single long-format table; identical
// configs and seeds reproduce the table byte for byte at any thread count.

#include <cstdint>
#include <string>
#include <vector>

#include "ujack/dataset.hpp"
#include "ujack/hoeffding.hpp"

namespace ujack {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class DesignKind { Uniform, TruncatedNormal };
enum class MuKind { Linear, SineProduct, GaussianBump };
enum class NoiseKind { Homoskedastic, Heteroskedastic };

struct DgpConfig {
  long long k = 1;
  DesignKind design = DesignKind::Uniform;
  MuKind mu = MuKind::SineProduct;
  NoiseKind noise = NoiseKind::Heteroskedastic;
};

// Regression function and noise scale at a point (k coordinates).
double dgp_mu(const DgpConfig& cfg, const double* x);
double dgp_sigma(const DgpConfig& cfg, const double* x);

// One (X, Y) observation into row[0..k]; consumes k + 1 uniforms.
void dgp_draw_row(const DgpConfig& cfg, RngStream& rng, double* row);

// n iid observations, width k + 1; row i depends only on (seed, i).
Dataset dgp_sample(const DgpConfig& cfg, long long n, std::uint64_t seed);

// The response marginal alone, as a width-1 dataset.
Dataset dgp_sample_scalar(const DgpConfig& cfg, long long n,
                          std::uint64_t seed);

// Adapter for estimate_zeta.
ObservationSampler dgp_observation_sampler(const DgpConfig& cfg);

struct McVariance {
  double variance = 0.0;
  double std_error = 0.0;  // delete-1 jackknife over the replicate values
  long long reps = 0;
};

// Monte Carlo variance of an estimator: `value_at` maps a replicate seed to
// one realized value; the replicate seeds are derived from `seed`.
McVariance mc_truth_variance(const std::function<double(std::uint64_t)>& value_at,
                             long long reps, std::uint64_t seed);

struct ExperimentConfig {
  std::string experiment = "all";  // ratio | coverage | dominance | incomplete | all
  DgpConfig dgp;

  std::vector<long long> n_grid = {100, 250, 500};
  double s2_gamma = 0.6;   // s2 = ceil(n^s2_gamma)
  double s1_ratio = 0.5;   // s1 = ceil(s1_ratio * s2)
  std::vector<long long> d_list = {1, 2};
  long long replicates = 400;        // M
  long long truth_replicates = 1600; // Monte Carlo truth sample size
  long long zeta_reps = 2'000'000;
  long long subsample_b = 800;       // B for delete-d past the exact budget
  std::vector<double> query = {0.5};
  double level = 0.95;

  // incomplete-U study
  std::vector<long long> incomplete_n_grid = {60, 120, 240};
  double s_exponent = 0.5;       // kernel order s = ceil(n^s_exponent)
  double target_exponent = 1.2;  // expected selections N = ceil(n^target_exponent)
  std::string coupling = "keep"; // keep | recompute (jackknife deletion rule)

  // variance-share study
  std::vector<long long> dominance_s2_list = {4, 8, 16};

  std::string out_dir = "out";
  std::uint64_t seed = 1;
  long long threads = 0;  // 0 = leave the runtime default
};

struct CsvRow {
  std::string experiment;
  long long n = 0, s1 = 0, s2 = 0, d = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
  double mc_se = 0.0;
  std::uint64_t seed = 0;
};

struct ExperimentTable {
  std::string name;
  std::vector<CsvRow> rows;
};

ExperimentTable ratio_experiment(const ExperimentConfig& cfg);
ExperimentTable coverage_experiment(const ExperimentConfig& cfg);
ExperimentTable dominance_experiment(const ExperimentConfig& cfg);
ExperimentTable incomplete_experiment(const ExperimentConfig& cfg);

// Dispatch on cfg.experiment ("all" produces all four tables).
std::vector<ExperimentTable> run_experiments(const ExperimentConfig& cfg);

// 17-significant-digit shortest general form, reproducible across runs.
std::string format_double(double v);

// Long-format CSV with the fixed header
// experiment,n,s1,s2,d,method,metric,value,mc_se,seed
std::string table_to_csv(const ExperimentTable& table);

// Write-then-rename; never leaves a partial file at `path`.
void write_file_atomic(const std::string& path, const std::string& content);

// JSON round-trip for configs.  parse throws std::runtime_error with a
// "config-parse:" prefix naming the offending field or parse position.
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

// "key=value" override onto a parsed config (dotted keys for dgp.*; list
// fields take comma-separated values).  Throws std::runtime_error with a
// "config-parse:" prefix for unknown keys or bad values.
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

// Run manifest: config echo, versions, timestamps, outputs written.
std::string run_manifest_json(const ExperimentConfig& cfg,
                              const std::vector<std::string>& outputs,
                              const std::string& started_at,
                              const std::string& finished_at,
                              double wall_seconds);

}  // namespace ujack
