#include "lpqn/bench/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

namespace lpqn::bench {
namespace {

TEST(Config, ParsesKeysListsAndComments) {
  const Config c = Config::parse_string("# comment\n a = 1.5 \n\nlist = 1, 2,3\nname = hello world\np = 2/3\nflag = yes\n");
  EXPECT_DOUBLE_EQ(c.get_double("a", 0.0), 1.5);
  EXPECT_EQ(c.get_ints("list", {}), (std::vector<long long>{1, 2, 3}));
  EXPECT_EQ(c.get_string("name", ""), "hello world");
  EXPECT_EQ(c.get_exponent("p", RationalExponent(1, 2)).value(), 2.0 / 3.0);
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(c.get_int("missing", 7), 7);
  EXPECT_TRUE(c.unused_keys().empty());
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::parse_string("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse_string("no equals sign\n"), ConfigError);
  EXPECT_THROW(Config::parse_string(" = 3\n"), ConfigError);
  const Config c = Config::parse_string("x = 1.5e\nn = 3.5\nb = maybe\np = 1/0\nl = ,\n");
  EXPECT_THROW(c.get_double("x", 0.0), ConfigError);
  EXPECT_THROW(c.get_int("n", 0), ConfigError);
  EXPECT_THROW(c.get_bool("b", false), ConfigError);
  EXPECT_THROW(c.get_exponent("p", RationalExponent(1, 2)), ConfigError);
  EXPECT_THROW(c.get_doubles("l", {}), ConfigError);
  EXPECT_THROW(c.require_string("absent"), ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/path.conf"), ConfigError);
}

TEST(Config, ReportsUnusedKeys) {
  const Config c = Config::parse_string("used = 1\ntypo_key = 2\n");
  c.get_int("used", 0);
  EXPECT_EQ(c.unused_keys(), std::vector<std::string>{"typo_key"});
}

TEST(Csv, ShortestRoundTripNumbers) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Csv, BodyQuotingAndPreamble) {
  Table t({"a", "b", "c"});
  t.add({std::string("x,y"), 3LL, 0.25});
  t.add({std::string("say \"hi\""), -1LL, 2.0});
  EXPECT_EQ(t.body(), "a,b,c\n\"x,y\",3,0.25\n\"say \"\"hi\"\"\",-1,2\n");
  std::ostringstream os;
  t.write(os, {{"k", "v"}});
  EXPECT_EQ(os.str().substr(0, 8), "# k = v\n");
  EXPECT_THROW(t.add({1LL}), std::logic_error);
  EXPECT_EQ(t.column("c"), 2u);
  EXPECT_THROW(t.column("zzz"), std::out_of_range);
}

TEST(Summarize, MeansAndStdSkipFailures) {
  Table rows({"g", "v", "status"});
  rows.add({std::string("a"), 1.0, std::string("ok")});
  rows.add({std::string("b"), 10.0, std::string("ok")});
  rows.add({std::string("a"), 3.0, std::string("ok")});
  rows.add({std::string("a"), kNaN, std::string("error: x")});
  const Table s = summarize(rows, {"g"}, {"v"}, true);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(as_string(s.rows()[0][0]), "a");
  EXPECT_EQ(as_double(s.rows()[0][1]), 2.0);  // runs
  EXPECT_EQ(as_double(s.rows()[0][2]), 1.0);  // failures
  EXPECT_DOUBLE_EQ(as_double(s.rows()[0][3]), 2.0);
  EXPECT_DOUBLE_EQ(as_double(s.rows()[0][4]), std::sqrt(2.0));
  EXPECT_TRUE(std::isnan(as_double(s.rows()[1][4])));
}

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(CompanionPath, Suffixes) {
  EXPECT_EQ(companion_path("out/res.csv", "summary"), "out/res.summary.csv");
  EXPECT_EQ(companion_path("res", "timing"), "res.timing.csv");
}

const char* kTinySvr =
    "n = 32\nm = 12\nsigma2 = 0.01\nrho = 30\nmax_iters = 300\nstop_tol = 1e-10\nnum_seeds = 3\n";

TEST(Experiments, SvrRowsCarrySeedsAndAreThreadIndependent) {
  const Config cfg = Config::parse_string(kTinySvr);
  RunOptions one, many;
  one.threads = 1;
  many.threads = 3;
  const ExperimentResult a = run_svr(cfg, one);
  const ExperimentResult b = run_svr(cfg, many);
  EXPECT_EQ(a.rows.body(), b.rows.body());
  EXPECT_EQ(a.summary->body(), b.summary->body());
  ASSERT_EQ(a.rows.size(), 6u);
  const std::size_t seed_col = a.rows.column("seed");
  EXPECT_EQ(as_double(a.rows.rows()[0][seed_col]), 1.0);
  EXPECT_EQ(as_double(a.rows.rows()[5][seed_col]), 3.0);
  EXPECT_EQ(a.exit_code(), exit_ok);
}

TEST(Experiments, SeedBaseOverrideAndConflicts) {
  const Config cfg = Config::parse_string(kTinySvr);
  RunOptions opt;
  opt.threads = 1;
  opt.seed_base = 40;
  const ExperimentResult r = run_svr(cfg, opt);
  EXPECT_EQ(as_double(r.rows.rows()[0][r.rows.column("seed")]), 40.0);
  EXPECT_THROW(run_svr(Config::parse_string("seeds = 5, 9\nn = 32\nm = 12\n"), opt), ConfigError);
  RunOptions plain;
  plain.threads = 1;
  const ExperimentResult listed =
      run_svr(Config::parse_string("seeds = 5, 9\nn = 32\nm = 12\nmax_iters = 10\nsigma2 = 0.01\n"), plain);
  EXPECT_EQ(as_double(listed.rows.rows()[2][listed.rows.column("seed")]), 9.0);
}

TEST(Experiments, ConfigErrorsAreReportedAsConfigErrors) {
  RunOptions opt;
  EXPECT_THROW(run_svr(Config::parse_string("n = 31\n"), opt), ConfigError);
  EXPECT_THROW(run_svr(Config::parse_string("rho = -1\n"), opt), ConfigError);
  EXPECT_THROW(run_matcomp(Config::parse_string("rank = 50\n"), opt), ConfigError);
  EXPECT_THROW(run_apg(Config::parse_string("mus = 0\n"), opt), ConfigError);
  EXPECT_THROW(run_sysid(Config::parse_string("etas = 3\n"), opt), ConfigError);
  EXPECT_THROW(run_classify(Config::parse_string("epsilons = -0.1\n"), opt), ConfigError);
  EXPECT_THROW(run_experiment("nope", Config{}, opt), ConfigError);
}

TEST(Experiments, SolverFailuresBecomeStatusRows) {
  // mu = 1e308 overflows the lp prox weight; the l1 baseline still runs.
  const Config cfg = Config::parse_string("n = 64\nratios = 4\nmus = 1e308\nnum_seeds = 2\n");
  RunOptions opt;
  opt.threads = 2;
  const ExperimentResult r = run_apg(cfg, opt);
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.failures, 2);
  EXPECT_EQ(r.exit_code(), exit_solver_failure);
  for (const auto& row : r.rows.rows()) {
    const std::string& status = as_string(row[r.rows.column("status")]);
    if (as_string(row[r.rows.column("method")]) == "lp_exact") {
      EXPECT_EQ(status.rfind("error: ", 0), 0u);
      EXPECT_TRUE(std::isnan(as_double(row[r.rows.column("rel_error")])));
    } else {
      EXPECT_EQ(status, "ok");
    }
  }
  EXPECT_EQ(as_double(r.summary->rows()[0][r.summary->column("failures")]), 2.0);
  EXPECT_EQ(as_double(r.summary->rows()[1][r.summary->column("failures")]), 0.0);
}

TEST(Experiments, ClassifyFromLabeledFeatureFile) {
  const auto dir = std::filesystem::temp_directory_path() / "lpqn_bench_test";
  std::filesystem::create_directories(dir);
  const auto train = dir / "train.txt";
  const auto bad = dir / "bad.txt";
  {
    std::ofstream f(train);
    CounterRng rng(1, "test.file");
    for (int j = 0; j < 40; ++j) {
      const bool pos = j % 2 == 0;
      f << (pos ? "+1" : "-1");
      for (int i = 1; i <= 6; ++i)
        if (rng.uniform() < (i == 1 ? (pos ? 0.9 : 0.1) : 0.3)) f << ' ' << i << ":1";
      f << '\n';
    }
    std::ofstream g(bad);
    g << "+1 1:1\n-1 x\n";
  }
  RunOptions opt;
  opt.threads = 1;
  const Config cfg =
      Config::parse_string("data_file = " + train.string() + "\nepsilons = 0.3\nnum_seeds = 2\nmax_iters = 30\n");
  const ExperimentResult r = run_classify(cfg, opt);
  EXPECT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.failures, 0);
  for (const auto& row : r.rows.rows()) {
    EXPECT_GE(as_double(row[r.rows.column("train_acc")]), 0.5);
    EXPECT_LE(as_double(row[r.rows.column("nnz")]), 6.0);
  }
  const Config bad_cfg = Config::parse_string("data_file = " + bad.string() + "\n");
  try {
    run_classify(bad_cfg, opt);
    FAIL() << "expected a configuration error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST(Experiments, VerifyPassesAndDetectsInjectedFault) {
  const Config cfg = Config::parse_string(
      "scalar_cases = 50\ngrid_points = 20001\nengine_cases = 10\nhinge_cases = 5\nsvd_matrices = 5\nsvd_probes = 20\n");
  RunOptions opt;
  const ExperimentResult good = run_verify(cfg, opt);
  EXPECT_FALSE(good.verification_failed) << good.report;
  EXPECT_EQ(good.exit_code(), exit_ok);
  opt.inject_fault = true;
  const ExperimentResult bad = run_verify(cfg, opt);
  EXPECT_TRUE(bad.verification_failed);
  EXPECT_EQ(bad.exit_code(), exit_verification_failure);
  EXPECT_NE(bad.report.find("FAIL prox_vs_grid"), std::string::npos);
}

TEST(Experiments, WriteOutputsEchoesParameters) {
  const auto dir = std::filesystem::temp_directory_path() / "lpqn_bench_out";
  std::filesystem::create_directories(dir);
  const Config cfg = Config::parse_string(kTinySvr);
  RunOptions opt;
  opt.threads = 1;
  const ExperimentResult r = run_svr(cfg, opt);
  const auto files = write_outputs(r, (dir / "svr.csv").string(), false);
  ASSERT_EQ(files.size(), 3u);
  std::ifstream f(files[0]);
  std::string first, second;
  std::getline(f, first);
  std::getline(f, second);
  EXPECT_EQ(first, "# experiment = svr");
  EXPECT_EQ(second, "# paper_scale = false");
  const std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_NE(all.find("# rho = 30\n"), std::string::npos);
  EXPECT_NE(all.find("sigma2,seed,method,sparsity"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "svr.summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "svr.timing.csv"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace lpqn::bench
