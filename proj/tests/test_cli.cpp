#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ujack/cli.hpp"

using namespace ujack;
using ujack::cli::parse_xy_csv;

namespace {

int run(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run_main(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  REQUIRE(static_cast<bool>(f));
  f << content;
}

std::string read_file_or_fail(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(static_cast<bool>(f));
  return std::string(std::istreambuf_iterator<char>(f), {});
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p, const std::string& content)
      : path(std::move(p)) {
    write_file(path, content);
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("csv parsing: happy path for one and two features") {
  long long k = 0;
  const Dataset one = parse_xy_csv("x,y\n1,10\n2,20\n3,30\n", k);
  CHECK(k == 1);
  CHECK(one.n() == 3);
  CHECK(one.width() == 2);
  CHECK(one.row(1)[0] == 2.0);
  CHECK(one.y(2) == 30.0);
  const Dataset two = parse_xy_csv("a,b,resp\n0.5,-1,7\n.25,2e-1,-3\n", k);
  CHECK(k == 2);
  CHECK(two.n() == 2);
  CHECK(two.row(1)[0] == 0.25);
  CHECK(two.row(1)[1] == 0.2);
  CHECK(two.y(1) == -3.0);
  // trailing newline optional, CRLF tolerated via trimming
  const Dataset crlf = parse_xy_csv("x,y\r\n1,2\r\n", k);
  CHECK(crlf.n() == 1);
  CHECK(crlf.y(0) == 2.0);
}

TEST_CASE("csv parsing: every malformed shape gets a located error") {
  long long k = 0;
  CHECK_THROWS_WITH((void)parse_xy_csv("", k), "csv-parse: line 1: empty file");
  CHECK_THROWS_WITH((void)parse_xy_csv("justone\n1\n", k),
                    "csv-parse: line 1: need at least one feature column and "
                    "a response column");
  CHECK_THROWS_WITH((void)parse_xy_csv("1,10\n2,20\n", k),
                    "csv-parse: line 1: missing header row");
  CHECK_THROWS_WITH((void)parse_xy_csv("x,y\n1\n", k),
                    "csv-parse: line 2: expected 2 columns, got 1");
  CHECK_THROWS_WITH((void)parse_xy_csv("x,y\n1,2\n\n3,4\n", k),
                    "csv-parse: line 3: blank line");
  CHECK_THROWS_WITH((void)parse_xy_csv("x,y\n1,fast\n", k),
                    "csv-parse: line 2, column 2: not a number 'fast'");
  CHECK_THROWS_WITH((void)parse_xy_csv("x,y\n", k),
                    "csv-parse: line 2: no data rows");
}

TEST_CASE("verify subcommand runs suites and reports a summary") {
  std::string out, err;
  CHECK(run({"verify", "all"}, &out, &err) == 0);
  CHECK(out.find("PASS") != std::string::npos);
  CHECK(out.find("FAIL ") == std::string::npos);
  CHECK(out.find("OK 0 failed") != std::string::npos);
  CHECK(err.empty());

  out.clear();
  CHECK(run({"verify", "jackknife"}, &out, &err) == 0);
  CHECK(out.find("jackknife") != std::string::npos);

  CHECK(run({"verify", "bogus"}, &out, &err) == 2);
  CHECK(err.find("unknown-suite: 'bogus'") != std::string::npos);
}

TEST_CASE("estimate subcommand prints a JSON bundle") {
  const TempFile data("cli_test_toy.csv", "x,y\n1,10\n2,20\n3,30\n");
  std::string out, err;
  const int code = run({"estimate", data.path, "--x", "0", "--s1", "1", "--s2",
                        "2"},
                       &out, &err);
  CHECK(code == 0);
  CHECK(err.empty());
  const nlohmann::json j = nlohmann::json::parse(out);
  CHECK(std::abs(j["estimate"].get<double>() - 100.0 / 9.0) <= 1e-12);
  CHECK(j["n"] == 3);
  CHECK(j["k"] == 1);
  CHECK(j["s1"] == 1);
  CHECK(j["s2"] == 2);
  CHECK(j["d"] == 1);
  CHECK(j["level"] == 0.95);
  CHECK(j["variance"].get<double>() >= 0.0);
  CHECK(j["ci_lo"].get<double>() <= j["estimate"].get<double>());
  CHECK(j["ci_hi"].get<double>() >= j["estimate"].get<double>());
}

TEST_CASE("estimate subcommand flags a degenerate interval") {
  // y = 0 everywhere: every weighted replicate is exactly +0.0, so the
  // jackknife variance is exactly zero (constant nonzero y would leave
  // ~1e-29 of weight-rounding noise and an honest non-degenerate flag)
  const TempFile data("cli_test_const.csv",
                      "x,y\n1,0\n2,0\n3,0\n4,0\n5,0\n6,0\n");
  std::string out;
  CHECK(run({"estimate", data.path, "--x", "3.5", "--s1", "2", "--s2", "4"},
            &out) == 0);
  const nlohmann::json j = nlohmann::json::parse(out);
  CHECK(j["estimate"].get<double>() == 0.0);
  CHECK(j["variance"].get<double>() == 0.0);
  CHECK(j["degenerate"].get<bool>());
  CHECK(j["half_width"].get<double>() == 0.0);
}

TEST_CASE("estimate subcommand picks default scales from the sample size") {
  std::string body = "x,y\n";
  for (int i = 0; i < 30; ++i)
    body += std::to_string(i * 0.1) + "," + std::to_string(i) + "\n";
  const TempFile data("cli_test_defaults.csv", body);
  std::string out;
  CHECK(run({"estimate", data.path, "--x", "1.5"}, &out) == 0);
  const nlohmann::json j = nlohmann::json::parse(out);
  // s2 = ceil(30^0.6) = 8, s1 = ceil(8 + 1) / 2 = 4
  CHECK(j["s2"] == 8);
  CHECK(j["s1"] == 4);
}

TEST_CASE("estimate subcommand fails loudly on bad inputs") {
  std::string out, err;
  CHECK(run({"estimate", "no_such_file.csv", "--x", "0"}, &out, &err) == 2);
  CHECK(err.find("cannot open") != std::string::npos);

  const TempFile data("cli_test_dim.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  CHECK(run({"estimate", data.path, "--x", "0.5"}, &out, &err) == 2);
  CHECK(err.find("--x has 1 coordinates but the file has 2 feature columns") !=
        std::string::npos);

  const TempFile bad("cli_test_bad.csv", "1,2\n3,4\n");
  CHECK(run({"estimate", bad.path, "--x", "0"}, &out, &err) == 2);
  CHECK(err.find("missing header row") != std::string::npos);
}

TEST_CASE("run subcommand produces tables, a manifest, and stable bytes") {
  const std::string config_json =
      "{\n"
      "  \"experiment\": \"coverage\",\n"
      "  \"n_grid\": [24],\n"
      "  \"replicates\": 4,\n"
      "  \"truth_replicates\": 8,\n"
      "  \"subsample_b\": 10,\n"
      "  \"seed\": 99\n"
      "}\n";
  const TempFile config("cli_test_config.json", config_json);

  std::string out, err;
  CHECK(run({"run", "--config", config.path, "--out", "cli_test_out_a"}, &out,
            &err) == 0);
  CHECK(err.empty());
  CHECK(out.find("wrote cli_test_out_a/coverage.csv (2 rows)") !=
        std::string::npos);
  CHECK(out.find("wrote cli_test_out_a/manifest.json") != std::string::npos);
  const std::string csv_a = read_file_or_fail("cli_test_out_a/coverage.csv");
  CHECK(csv_a.rfind("experiment,n,s1,s2,d,method,metric,value,mc_se,seed\n",
                    0) == 0);
  const std::string manifest = read_file_or_fail("cli_test_out_a/manifest.json");
  CHECK(manifest.find("\"seed\": 99") != std::string::npos);
  CHECK(manifest.find("coverage.csv") != std::string::npos);

  // identical invocation reproduces the table byte for byte
  CHECK(run({"run", "--config", config.path, "--out", "cli_test_out_b"},
            &out, &err) == 0);
  CHECK(read_file_or_fail("cli_test_out_b/coverage.csv") == csv_a);

  // a different seed (via positional override) changes the contents
  CHECK(run({"run", "--config", config.path, "--out", "cli_test_out_c",
             "seed=100"},
            &out, &err) == 0);
  CHECK(read_file_or_fail("cli_test_out_c/coverage.csv") != csv_a);

  // the --seed flag wins over positional overrides
  CHECK(run({"run", "--config", config.path, "--out", "cli_test_out_d",
             "seed=100", "--seed", "99"},
            &out, &err) == 0);
  CHECK(read_file_or_fail("cli_test_out_d/coverage.csv") == csv_a);

  for (const char* dir : {"cli_test_out_a", "cli_test_out_b", "cli_test_out_c",
                          "cli_test_out_d"}) {
    std::remove((std::string(dir) + "/coverage.csv").c_str());
    std::remove((std::string(dir) + "/manifest.json").c_str());
    std::remove(dir);
  }
}

TEST_CASE("run subcommand distinguishes config errors from runtime errors") {
  std::string out, err;
  CHECK(run({"run", "--config", "no_such_config.json"}, &out, &err) == 2);
  CHECK(err.find("cannot open") != std::string::npos);

  const TempFile bad("cli_test_badcfg.json", "{\"bogus\": 1}");
  CHECK(run({"run", "--config", bad.path}, &out, &err) == 2);
  CHECK(err.find("config-parse: unknown field 'bogus'") != std::string::npos);

  const TempFile okcfg("cli_test_okcfg.json", "{\"experiment\": \"ratio\"}");
  CHECK(run({"run", "--config", okcfg.path, "not-an-override"}, &out, &err) ==
        2);
  CHECK(err.find("is not key=value") != std::string::npos);
}

TEST_CASE("help and argument errors use the conventional exit codes") {
  std::string out, err;
  CHECK(run({"--help"}, &out, &err) == 0);
  CHECK(out.find("ujack") != std::string::npos);
  CHECK(run({"estimate", "--help"}, &out, &err) == 0);
  CHECK(out.find("--x") != std::string::npos);
  // missing required subcommand
  CHECK(run({}, &out, &err) == 2);
  // missing required option
  CHECK(run({"run"}, &out, &err) == 2);
  CHECK(run({"estimate", "file.csv"}, &out, &err) == 2);
}
