#pragma once

// Experiment drivers behind the `lpqn` command. Every driver reads its
// parameters from a Config, echoes the resolved values into the CSV preamble,
// runs one task per (grid point, seed) on a worker pool and merges the rows in
// task order, so the CSV body does not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lpqn/apg.hpp"
#include "lpqn/bench/config.hpp"
#include "lpqn/bench/csv.hpp"
#include "lpqn/bench/verify.hpp"
#include "lpqn/convex_proj.hpp"
#include "lpqn/datagen.hpp"
#include "lpqn/errors.hpp"
#include "lpqn/linops.hpp"
#include "lpqn/pqn_admm.hpp"
#include "lpqn/schatten_admm.hpp"

namespace lpqn::bench {

enum ExitCode : int { exit_ok = 0, exit_config_error = 1, exit_solver_failure = 2, exit_verification_failure = 3 };

struct RunOptions {
  std::optional<std::uint64_t> seed_base;
  bool paper_scale = false;
  std::optional<int> threads;
  bool inject_fault = false;  // verify only: perturb the prox weight by 1%
};

struct ExperimentResult {
  std::string experiment;
  Table rows{{}};
  std::optional<Table> summary;
  Table timing{{}};
  std::vector<std::pair<std::string, std::string>> params;
  long long failures = 0;
  bool verification_failed = false;
  std::string report;

  int exit_code() const {
    if (verification_failed) return exit_verification_failure;
    if (failures > 0) return exit_solver_failure;
    return exit_ok;
  }
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"svr", "classify", "sysid", "matcomp", "apg", "verify"};
  return names;
}

// ---------------------------------------------------------------- plumbing

/// Reads parameters through a Config and records the resolved value of each.
class Params {
 public:
  Params(const Config& cfg, bool paper_scale) : cfg_(cfg), paper_(paper_scale) {}

  bool paper_scale() const { return paper_; }

  double num(const std::string& key, double def) { return echo(key, cfg_.get_double(key, def)); }
  double num(const std::string& key, double def, double paper_def) { return num(key, paper_ ? paper_def : def); }

  long long integer(const std::string& key, long long def) {
    const long long v = cfg_.get_int(key, def);
    echo_.emplace_back(key, std::to_string(v));
    return v;
  }
  long long integer(const std::string& key, long long def, long long paper_def) {
    return integer(key, paper_ ? paper_def : def);
  }

  std::vector<double> nums(const std::string& key, const std::vector<double>& def) {
    const auto v = cfg_.get_doubles(key, def);
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    echo_.emplace_back(key, s);
    return v;
  }

  std::vector<long long> ints(const std::string& key, const std::vector<long long>& def) {
    const auto v = cfg_.get_ints(key, def);
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    echo_.emplace_back(key, s);
    return v;
  }

  std::string str(const std::string& key, const std::string& def) {
    const auto v = cfg_.get_string(key, def);
    echo_.emplace_back(key, v);
    return v;
  }

  RationalExponent exponent(const std::string& key, RationalExponent def) {
    const auto v = cfg_.get_exponent(key, def);
    echo_.emplace_back(key, std::to_string(v.s()) + "/" + std::to_string(v.q()));
    return v;
  }

  void note(const std::string& key, const std::string& value) { echo_.emplace_back(key, value); }

  const std::vector<std::pair<std::string, std::string>>& echoed() const { return echo_; }

 private:
  double echo(const std::string& key, double v) {
    echo_.emplace_back(key, format_double(v));
    return v;
  }

  const Config& cfg_;
  bool paper_;
  std::vector<std::pair<std::string, std::string>> echo_;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

/// Seeds are `seeds = a, b, ...` or `seed_base + i` for i < num_seeds.
inline std::vector<std::uint64_t> seed_list(const Config& cfg, Params& P, const RunOptions& opt, long long def_count,
                                            long long paper_count) {
  std::vector<std::uint64_t> out;
  if (cfg.has("seeds")) {
    require(!opt.seed_base, "--seed-base cannot be combined with an explicit seeds list");
    for (long long s : P.ints("seeds", {})) {
      require(s >= 0, "seeds must be nonnegative");
      out.push_back(static_cast<std::uint64_t>(s));
    }
    return out;
  }
  const long long count = P.integer("num_seeds", def_count, paper_count);
  require(count >= 1, "num_seeds must be at least 1");
  long long base = cfg.get_int("seed_base", 1);
  if (opt.seed_base) base = static_cast<long long>(*opt.seed_base);
  require(base >= 0, "seed_base must be nonnegative");
  P.note("seed_base", std::to_string(base));
  for (long long i = 0; i < count; ++i) out.push_back(static_cast<std::uint64_t>(base + i));
  return out;
}

inline int thread_count(const Config& cfg, const RunOptions& opt) {
  long long t = cfg.get_int("threads", 0);
  if (opt.threads) t = *opt.threads;
  require(t >= 0, "threads must be nonnegative");
  if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<int>(t);
}

/// Runs fn(i) for i < count on up to `threads` workers. An exception escaping
/// fn is rethrown after all workers finish (lowest index first).
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct TaskOutput {
  std::vector<std::vector<Cell>> rows;
  std::vector<std::vector<Cell>> timing;
  long long failures = 0;
};

template <class Fn>
void run_tasks(std::size_t count, int threads, ExperimentResult& out, Fn&& fn) {
  std::vector<TaskOutput> outs(count);
  parallel_for(count, threads, [&](std::size_t i) { outs[i] = fn(i); });
  for (auto& o : outs) {
    for (auto& r : o.rows) out.rows.add(std::move(r));
    for (auto& r : o.timing) out.timing.add(std::move(r));
    out.failures += o.failures;
  }
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::string error_status(const std::exception& e) { return std::string("error: ") + e.what(); }

inline long long seed_cell(std::uint64_t s) { return static_cast<long long>(s); }

/// Mean (and optionally sample standard deviation) of numeric columns per
/// group of key columns, over rows whose status is "ok". Groups appear in
/// first-seen order.
inline Table summarize(const Table& rows, const std::vector<std::string>& keys, const std::vector<std::string>& values,
                       bool with_std) {
  std::vector<std::string> header = keys;
  header.push_back("runs");
  header.push_back("failures");
  for (const auto& v : values) {
    header.push_back("mean_" + v);
    if (with_std) header.push_back("std_" + v);
  }
  Table out(header);
  std::vector<std::size_t> key_cols, value_cols;
  for (const auto& k : keys) key_cols.push_back(rows.column(k));
  for (const auto& v : values) value_cols.push_back(rows.column(v));
  const std::size_t status_col = rows.column("status");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const std::vector<Cell>*>> groups;
  std::map<std::string, std::vector<Cell>> group_keys;
  for (const auto& r : rows.rows()) {
    std::string id;
    std::vector<Cell> kc;
    for (std::size_t c : key_cols) {
      id += cell_text(r[c]) + '\x1f';
      kc.push_back(r[c]);
    }
    if (!groups.count(id)) {
      order.push_back(id);
      group_keys[id] = kc;
    }
    groups[id].push_back(&r);
  }
  for (const auto& id : order) {
    std::vector<Cell> row = group_keys[id];
    long long runs = 0, failures = 0;
    for (const auto* r : groups[id]) (as_string((*r)[status_col]) == "ok" ? runs : failures) += 1;
    row.emplace_back(runs);
    row.emplace_back(failures);
    for (std::size_t vc : value_cols) {
      double sum = 0.0, sq = 0.0;
      for (const auto* r : groups[id]) {
        if (as_string((*r)[status_col]) != "ok") continue;
        const double x = as_double((*r)[vc]);
        sum += x;
      }
      const double mean = runs > 0 ? sum / static_cast<double>(runs) : kNaN;
      for (const auto* r : groups[id]) {
        if (as_string((*r)[status_col]) != "ok") continue;
        const double d = as_double((*r)[vc]) - mean;
        sq += d * d;
      }
      row.emplace_back(mean);
      if (with_std) row.emplace_back(runs > 1 ? std::sqrt(sq / static_cast<double>(runs - 1)) : kNaN);
    }
    out.add(std::move(row));
  }
  return out;
}

inline std::string penalty_name(Penalty p) { return p == Penalty::lp ? "pqn" : "l1"; }

// ---------------------------------------------------------------- svr

inline ExperimentResult run_svr(const Config& cfg, const RunOptions& opt) {
  Params P(cfg, opt.paper_scale);
  ExperimentResult out;
  out.experiment = "svr";
  const Index n = P.integer("n", 256, 1024);
  const Index m = P.integer("m", 64, 256);
  const double frac = P.num("sparsity_frac", 0.2);
  const auto sigma2 = P.nums("sigma2", {0.0, 0.01, 0.05});
  const double eps_factor = P.num("eps_factor", 1.05);
  AdmmConfig acfg;
  acfg.p = P.exponent("p", RationalExponent(1, 2));
  acfg.rho = P.num("rho", 30.0);
  acfg.max_iters = static_cast<int>(P.integer("max_iters", 20000));
  acfg.stop_tol = P.num("stop_tol", 1e-10);
  acfg.zero_threshold = P.num("zero_threshold", 1e-6);
  const auto seeds = seed_list(cfg, P, opt, 50, 50);
  const int threads = thread_count(cfg, opt);
  try {
    acfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(n >= 2 && n % 2 == 0, "n must be even and >= 2");
  require(m >= 1 && m <= n, "need 1 <= m <= n");
  require(frac > 0.0 && frac <= 1.0, "sparsity_frac must lie in (0, 1]");
  require(eps_factor >= 1.0, "eps_factor must be >= 1");
  for (double s : sigma2) require(s >= 0.0, "sigma2 entries must be nonnegative");
  out.params = P.echoed();

  out.rows = Table({"sigma2", "seed", "method", "sparsity", "residual", "epsilon", "iters", "best_iter", "status"});
  out.timing = Table({"sigma2", "seed", "method", "wall_ms"});
  const std::size_t per = seeds.size();
  run_tasks(sigma2.size() * per, threads, out, [&](std::size_t task) {
    const double s2 = sigma2[task / per];
    const std::uint64_t seed = seeds[task % per];
    TaskOutput t;
    std::optional<SvrInstance> inst;
    std::optional<ResidualBallProjector> proj;
    std::string setup_error;
    double eps = kNaN;
    try {
      inst = gen_sparse_binary_instance(n, m, frac, std::sqrt(s2), seed);
      const double vn = inst->v.norm();
      eps = vn > 0.0 ? eps_factor * inst->noise.norm() / vn : 0.0;
      proj.emplace(inst->U, inst->v, eps * vn);
    } catch (const std::exception& e) {
      setup_error = error_status(e);
    }
    for (Penalty pen : {Penalty::lp, Penalty::l1}) {
      const std::string method = penalty_name(pen);
      if (!setup_error.empty()) {
        t.rows.push_back({s2, seed_cell(seed), method, kNaN, kNaN, eps, 0LL, 0LL, setup_error});
        t.timing.push_back({s2, seed_cell(seed), method, 0.0});
        ++t.failures;
        continue;
      }
      AdmmConfig c = acfg;
      c.penalty = pen;
      try {
        const SolveReport rep = svr_solve(*proj, n, c);
        const double res = (inst->U * rep.x - inst->v).norm() / std::max(inst->v.norm(), 1e-300);
        t.rows.push_back({s2, seed_cell(seed), method, static_cast<long long>(rep.sparsity), res, eps,
                          static_cast<long long>(rep.iterations), static_cast<long long>(rep.best_iteration),
                          std::string("ok")});
        t.timing.push_back({s2, seed_cell(seed), method, rep.wall_ms});
      } catch (const std::exception& e) {
        t.rows.push_back({s2, seed_cell(seed), method, kNaN, kNaN, eps, 0LL, 0LL, error_status(e)});
        t.timing.push_back({s2, seed_cell(seed), method, 0.0});
        ++t.failures;
      }
    }
    return t;
  });
  out.summary = summarize(out.rows, {"sigma2", "method"}, {"sparsity", "residual", "iters"}, true);
  return out;
}

// ---------------------------------------------------------------- classify

/// Rows of v_j [1, u_j]: the first coordinate of the classifier is the bias.
inline Eigen::MatrixXd classification_margins(const ClassificationData& d) {
  Eigen::MatrixXd A(d.features.rows(), d.features.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(d.features.cols()) = d.features;
  return d.labels.asDiagonal() * A;
}

inline double classification_accuracy(const ClassificationData& d, const Eigen::VectorXd& x) {
  if (d.features.rows() == 0) return kNaN;
  const Eigen::VectorXd score = (d.features * x.tail(x.size() - 1)).array() + x(0);
  long long hits = 0;
  for (Index j = 0; j < score.size(); ++j) hits += ((score(j) >= 0.0 ? 1.0 : -1.0) == d.labels(j)) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(score.size());
}

inline ClassificationData select_rows(const ClassificationData& d, const std::vector<Index>& idx) {
  ClassificationData out;
  out.features.resize(static_cast<Index>(idx.size()), d.features.cols());
  out.labels.resize(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.features.row(static_cast<Index>(k)) = d.features.row(idx[k]);
    out.labels(static_cast<Index>(k)) = d.labels(idx[k]);
  }
  return out;
}

inline void widen(ClassificationData& d, Index n) {
  if (d.features.cols() >= n) return;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(d.features.rows(), n);
  f.leftCols(d.features.cols()) = d.features;
  d.features = std::move(f);
}

inline ExperimentResult run_classify(const Config& cfg, const RunOptions& opt) {
  Params P(cfg, opt.paper_scale);
  ExperimentResult out;
  out.experiment = "classify";
  const std::string data_file = P.str("data_file", "");
  std::string test_file;
  double test_fraction = 0.5;
  Index n_feat = 0, m_train = 0, m_test = 0, k = 0;
  double feature_prob = 0.0, flip_rate = 0.0;
  if (data_file.empty()) {
    n_feat = P.integer("n", 100, 1899);
    m_train = P.integer("m_train", 300, 2000);
    m_test = P.integer("m_test", 300, 2000);
    k = P.integer("k", 5, 40);
    feature_prob = P.num("feature_prob", 0.1, 0.02);
    flip_rate = P.num("flip_rate", 0.05);
    require(n_feat >= 1 && m_train >= 1 && m_test >= 0 && k >= 1 && k <= n_feat, "bad synthetic sizes");
    require(feature_prob > 0.0 && feature_prob < 1.0, "feature_prob must lie in (0, 1)");
    require(flip_rate >= 0.0 && flip_rate < 0.5, "flip_rate must lie in [0, 0.5)");
  } else {
    test_file = P.str("test_file", "");
    n_feat = P.integer("n_features", 0);
    if (test_file.empty()) test_fraction = P.num("test_fraction", 0.5);
    require(n_feat >= 0, "n_features must be nonnegative");
    require(test_fraction >= 0.0 && test_fraction < 1.0, "test_fraction must lie in [0, 1)");
  }
  const auto epsilons = P.nums("epsilons", {0.02, 0.05, 0.1, 0.2, 0.3});
  AdmmConfig acfg;
  acfg.p = P.exponent("p", RationalExponent(1, 2));
  acfg.rho = P.num("rho", 1.0);
  acfg.max_iters = static_cast<int>(P.integer("max_iters", 100));
  acfg.zero_threshold = P.num("zero_threshold", 1e-4);
  HingeOptions hopt;
  hopt.gap_tol = P.num("hinge_gap_tol", 1e-8);
  hopt.max_inner = static_cast<int>(P.integer("hinge_max_inner", 10000));
  hopt.max_outer = static_cast<int>(P.integer("hinge_max_outer", 200));
  const auto seeds = seed_list(cfg, P, opt, 5, 5);
  const int threads = thread_count(cfg, opt);
  try {
    acfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (double e : epsilons) require(e > 0.0, "epsilons must be positive");
  require(hopt.gap_tol > 0.0 && hopt.max_inner >= 1 && hopt.max_outer >= 1, "bad hinge projection options");

  // Files are parsed once; a malformed file is a configuration error.
  ClassificationData file_train, file_test;
  if (!data_file.empty()) {
    try {
      file_train = load_labeled_features(data_file, n_feat);
      if (!test_file.empty()) {
        file_test = load_labeled_features(test_file, n_feat);
        const Index w = std::max(file_train.features.cols(), file_test.features.cols());
        widen(file_train, w);
        widen(file_test, w);
      }
    } catch (const ParseError& e) {
      throw ConfigError(std::string("data file: ") + e.what());
    } catch (const std::runtime_error& e) {
      throw ConfigError(std::string("data file: ") + e.what());
    }
    require(file_train.features.rows() >= 2, "data file needs at least two samples");
  }
  out.params = P.echoed();

  out.rows = Table({"epsilon", "seed", "method", "nnz", "train_acc", "test_acc", "train_hinge", "iters",
                    "inexact_projections", "status"});
  out.timing = Table({"epsilon", "seed", "method", "wall_ms"});
  const std::size_t per = seeds.size();
  run_tasks(epsilons.size() * per, threads, out, [&](std::size_t task) {
    const double eps = epsilons[task / per];
    const std::uint64_t seed = seeds[task % per];
    TaskOutput t;
    ClassificationData train, test;
    std::string setup_error;
    try {
      if (data_file.empty()) {
        const auto syn = gen_classification_synthetic(n_feat, m_train + m_test, k, feature_prob, flip_rate, seed);
        std::vector<Index> a, b;
        for (Index j = 0; j < m_train + m_test; ++j) (j < m_train ? a : b).push_back(j);
        train = select_rows(syn.data, a);
        test = select_rows(syn.data, b);
      } else if (!test_file.empty()) {
        train = file_train;
        test = file_test;
      } else {
        const Index total = file_train.features.rows();
        const Index nt = std::min<Index>(total - 1, static_cast<Index>(std::llround(test_fraction * total)));
        CounterRng rng(seed, "cls.split");
        const auto test_idx = rng.sample_without_replacement(total, nt);
        std::vector<bool> is_test(static_cast<std::size_t>(total), false);
        for (Index i : test_idx) is_test[static_cast<std::size_t>(i)] = true;
        std::vector<Index> a;
        for (Index j = 0; j < total; ++j)
          if (!is_test[static_cast<std::size_t>(j)]) a.push_back(j);
        train = select_rows(file_train, a);
        test = select_rows(file_train, test_idx);
      }
    } catch (const std::exception& e) {
      setup_error = error_status(e);
    }
    for (Penalty pen : {Penalty::lp, Penalty::l1}) {
      const std::string method = penalty_name(pen);
      if (!setup_error.empty()) {
        t.rows.push_back({eps, seed_cell(seed), method, kNaN, kNaN, kNaN, kNaN, 0LL, 0LL, setup_error});
        t.timing.push_back({eps, seed_cell(seed), method, 0.0});
        ++t.failures;
        continue;
      }
      AdmmConfig c = acfg;
      c.penalty = pen;
      long long inexact = 0;
      try {
        const HingeProjector hp(classification_margins(train), eps, hopt);
        const auto project = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
          try {
            return hp(z);
          } catch (const InexactProjectionError& e) {
            ++inexact;
            return e.best_iterate();
          }
        };
        const SolveReport rep = svr_solve(project, train.features.cols() + 1, c);
        const long long nnz = sparsity_count(rep.x.tail(rep.x.size() - 1), c.zero_threshold);
        t.rows.push_back({eps, seed_cell(seed), method, nnz, classification_accuracy(train, rep.x),
                          classification_accuracy(test, rep.x), hp.hinge(rep.x),
                          static_cast<long long>(rep.iterations), inexact, std::string("ok")});
        t.timing.push_back({eps, seed_cell(seed), method, rep.wall_ms});
      } catch (const std::exception& e) {
        t.rows.push_back({eps, seed_cell(seed), method, kNaN, kNaN, kNaN, kNaN, 0LL, inexact, error_status(e)});
        t.timing.push_back({eps, seed_cell(seed), method, 0.0});
        ++t.failures;
      }
    }
    return t;
  });
  out.summary =
      summarize(out.rows, {"epsilon", "method"}, {"nnz", "train_acc", "test_acc", "train_hinge"}, true);
  return out;
}

// ---------------------------------------------------------------- sysid

inline std::string rank_column(double thr) { return "rank@" + format_double(thr); }

inline ExperimentResult run_sysid(const Config& cfg, const RunOptions& opt) {
  Params P(cfg, opt.paper_scale);
  ExperimentResult out;
  out.experiment = "sysid";
  const auto etas = P.ints("etas", {2, 6, 10});
  const Index T = P.integer("T", 50);
  const Index m = P.integer("m", 50);
  const Index n = P.integer("n", 40);
  const auto thresholds = P.nums("thresholds", {1e-4, 1e-5});
  const double eps_factor = P.num("eps_factor", 1.1);
  AdmmConfig acfg;
  acfg.p = P.exponent("p", RationalExponent(1, 2));
  acfg.rho = P.num("rho", 1.0);
  acfg.max_iters = static_cast<int>(P.integer("max_iters", 1000));
  acfg.zero_threshold = thresholds.empty() ? 1e-4 : thresholds.front();
  const auto seeds = seed_list(cfg, P, opt, 20, 50);
  const int threads = thread_count(cfg, opt);
  try {
    acfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (long long e : etas) require(e >= 2 && e % 2 == 0, "etas must be even and >= 2");
  require(T >= 1 && n >= 2 && m >= 1 && m <= n + T - 1, "need T, n >= 1 and m <= n + T - 1");
  for (double t : thresholds) require(t > 0.0, "thresholds must be positive");
  require(eps_factor >= 1.0, "eps_factor must be >= 1");
  const HankelShape shape = HankelShape::near_square(n);
  P.note("hankel_shape", std::to_string(shape.rows) + "x" + std::to_string(shape.cols));
  out.params = P.echoed();

  std::vector<std::string> header{"eta", "seed", "method"};
  for (double thr : thresholds) header.push_back(rank_column(thr));
  for (const char* c : {"fit_ratio", "h_error", "iters", "status"}) header.emplace_back(c);
  out.rows = Table(header);
  out.timing = Table({"eta", "seed", "method", "wall_ms"});
  const std::size_t per = seeds.size();
  run_tasks(etas.size() * per, threads, out, [&](std::size_t task) {
    const long long eta = etas[task / per];
    const std::uint64_t seed = seeds[task % per];
    TaskOutput t;
    const auto fail_row = [&](const std::string& method, const std::string& status) {
      std::vector<Cell> r{eta, seed_cell(seed), method};
      for (std::size_t i = 0; i < thresholds.size(); ++i) r.emplace_back(kNaN);
      r.emplace_back(kNaN);
      r.emplace_back(kNaN);
      r.emplace_back(0LL);
      r.emplace_back(status);
      t.rows.push_back(std::move(r));
      t.timing.push_back({eta, seed_cell(seed), method, 0.0});
      ++t.failures;
    };
    std::optional<SysidInstance> inst;
    std::optional<HankelResidualProjector> proj;
    double eps = kNaN;
    try {
      inst = gen_sysid_instance(eta, T, m, n, seed);
      eps = std::pow(eps_factor * inst->noise.norm(), 2);
      proj.emplace(inst->T, inst->yhat, eps, shape);
    } catch (const std::exception& e) {
      fail_row("pqn", error_status(e));
      fail_row("nuclear", error_status(e));
      return t;
    }
    const Eigen::VectorXd w = antidiag_weights(shape);
    for (Penalty pen : {Penalty::lp, Penalty::l1}) {
      const std::string method = pen == Penalty::lp ? "pqn" : "nuclear";
      AdmmConfig c = acfg;
      c.penalty = pen;
      try {
        const auto project = [&](const Eigen::MatrixXd& Z) { return (*proj)(Z).X; };
        const MatrixSolveReport rep = rankmin_solve(project, shape.rows, shape.cols, c);
        const Eigen::VectorXd x = hankel_adjoint(rep.X, shape).cwiseQuotient(w);
        const double fit = (inst->T * x - inst->yhat).squaredNorm() / eps;
        const double herr = (x - inst->h).norm() / inst->h.norm();
        std::vector<Cell> r{eta, seed_cell(seed), method};
        for (double thr : thresholds) r.emplace_back(static_cast<long long>(rank_estimate(rep.X, thr)));
        r.emplace_back(fit);
        r.emplace_back(herr);
        r.emplace_back(static_cast<long long>(rep.iterations));
        r.emplace_back(std::string("ok"));
        t.rows.push_back(std::move(r));
        t.timing.push_back({eta, seed_cell(seed), method, rep.wall_ms});
      } catch (const std::exception& e) {
        fail_row(method, error_status(e));
      }
    }
    return t;
  });

  // Long format: one line per (eta, method, threshold).
  Table summary({"eta", "method", "threshold", "runs", "failures", "mean_rank", "std_rank"});
  std::vector<Table> per_thr;
  for (double thr : thresholds) per_thr.push_back(summarize(out.rows, {"eta", "method"}, {rank_column(thr)}, true));
  if (!per_thr.empty()) {
    for (std::size_t g = 0; g < per_thr.front().size(); ++g) {
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        const auto& r = per_thr[k].rows()[g];
        summary.add({r[0], r[1], thresholds[k], r[2], r[3], r[4], r[5]});
      }
    }
  }
  out.summary = std::move(summary);
  return out;
}

// ---------------------------------------------------------------- matcomp

inline ExperimentResult run_matcomp(const Config& cfg, const RunOptions& opt) {
  Params P(cfg, opt.paper_scale);
  ExperimentResult out;
  out.experiment = "matcomp";
  const Index rows = P.integer("rows", 40, 100);
  const Index cols = P.integer("cols", 40, 100);
  const Index r = P.integer("rank", 3, 5);
  const double sigma = P.num("sigma", 0.1);
  const double ratio = P.num("sampling_ratio", 0.195);
  const double eps_factor = P.num("eps_factor", 1.0);
  const double rank_thr = P.num("rank_threshold", 1e-4);
  AdmmConfig acfg;
  acfg.p = P.exponent("p", RationalExponent(1, 2));
  acfg.rho = P.num("rho", 0.3);
  acfg.max_iters = static_cast<int>(P.integer("max_iters", 1000));
  acfg.zero_threshold = rank_thr;
  const auto seeds = seed_list(cfg, P, opt, 50, 50);
  const int threads = thread_count(cfg, opt);
  try {
    acfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(rows >= 1 && cols >= 1 && r >= 1 && r <= std::min(rows, cols), "need 1 <= rank <= min(rows, cols)");
  require(ratio > 0.0 && ratio <= 1.0, "sampling_ratio must lie in (0, 1]");
  require(sigma >= 0.0 && eps_factor > 0.0, "sigma must be nonnegative and eps_factor positive");
  out.params = P.echoed();

  out.rows = Table({"seed", "method", "rfd", "rets", "rank", "rank_hit", "residual", "iters", "status"});
  out.timing = Table({"seed", "method", "wall_ms"});
  run_tasks(seeds.size(), threads, out, [&](std::size_t task) {
    const std::uint64_t seed = seeds[task];
    TaskOutput t;
    std::optional<CompletionInstance> inst;
    std::optional<SamplingBallProjector> proj;
    std::string setup_error;
    double eps = kNaN;
    try {
      inst = gen_completion_instance(rows, cols, r, sigma, ratio, seed);
      eps = eps_factor * sigma * std::sqrt(static_cast<double>(inst->omega.size()));
      proj.emplace(rows, cols, inst->omega, inst->b, eps);
    } catch (const std::exception& e) {
      setup_error = error_status(e);
    }
    for (Penalty pen : {Penalty::lp, Penalty::l1}) {
      const std::string method = pen == Penalty::lp ? "pqn" : "nuclear";
      std::string status = setup_error;
      if (status.empty()) {
        AdmmConfig c = acfg;
        c.penalty = pen;
        try {
          const MatrixSolveReport rep = rankmin_solve(*proj, rows, cols, c);
          const double res = eps > 0.0 ? proj->residual(rep.X) / eps : proj->residual(rep.X);
          t.rows.push_back({seed_cell(seed), method, relative_frobenius_distance(rep.X, inst->M),
                            relative_singular_value_error(rep.X, inst->M), static_cast<long long>(rep.rank),
                            static_cast<long long>(rep.rank == r ? 1 : 0), res, static_cast<long long>(rep.iterations),
                            std::string("ok")});
          t.timing.push_back({seed_cell(seed), method, rep.wall_ms});
          continue;
        } catch (const std::exception& e) {
          status = error_status(e);
        }
      }
      t.rows.push_back({seed_cell(seed), method, kNaN, kNaN, kNaN, kNaN, kNaN, 0LL, status});
      t.timing.push_back({seed_cell(seed), method, 0.0});
      ++t.failures;
    }
    return t;
  });
  out.summary = summarize(out.rows, {"method"}, {"rfd", "rets", "rank", "rank_hit", "residual"}, true);
  return out;
}

// ---------------------------------------------------------------- apg

inline ExperimentResult run_apg(const Config& cfg, const RunOptions& opt) {
  Params P(cfg, opt.paper_scale);
  ExperimentResult out;
  out.experiment = "apg";
  const Index n = P.integer("n", 512, 4096);
  const auto ratios = P.ints("ratios", {8, 16});
  const auto mus = P.nums("mus", {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0});
  ApgConfig acfg;
  acfg.p = P.exponent("p", RationalExponent(1, 2));
  acfg.memory = static_cast<int>(P.integer("memory", 5));
  acfg.max_iters = static_cast<int>(P.integer("max_iters", 20000));
  acfg.rel_tol = P.num("rel_tol", 1e-5);
  const double sigma1 = P.num("sigma1", 0.005);
  const double sigma2 = P.num("sigma2", 0.001);
  const double s_frac = P.num("support_frac", 0.5);
  const double sp_thr = P.num("sparsity_threshold", 1e-6);
  const auto seeds = seed_list(cfg, P, opt, 20, 20);
  const int threads = thread_count(cfg, opt);
  for (double mu : mus) require(mu > 0.0, "mus must be positive");
  for (long long q : ratios) require(q >= 1 && q <= n, "ratios must lie in [1, n]");
  require(s_frac > 0.0 && s_frac <= 1.0, "support_frac must lie in (0, 1]");
  require(sigma1 >= 0.0 && sigma2 >= 0.0 && sp_thr > 0.0, "bad noise or sparsity threshold");
  try {
    ApgConfig probe = acfg;
    probe.mu = mus.front();
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  out.params = P.echoed();

  out.rows = Table({"ratio", "mu", "seed", "method", "rel_error", "sparsity", "iters", "converged",
                    "memory_violations", "status"});
  out.timing = Table({"ratio", "mu", "seed", "method", "wall_ms"});
  const std::size_t per = seeds.size();
  const std::size_t per_ratio = mus.size() * per;
  run_tasks(ratios.size() * per_ratio, threads, out, [&](std::size_t task) {
    const long long ratio = ratios[task / per_ratio];
    const double mu = mus[(task % per_ratio) / per];
    const std::uint64_t seed = seeds[task % per];
    const Index m = n / ratio;
    const Index s = static_cast<Index>(std::ceil(s_frac * static_cast<double>(m)));
    TaskOutput t;
    const auto fail = [&](const std::string& method, const std::string& status) {
      t.rows.push_back({ratio, mu, seed_cell(seed), method, kNaN, kNaN, 0LL, 0LL, 0LL, status});
      t.timing.push_back({ratio, mu, seed_cell(seed), method, 0.0});
      ++t.failures;
    };
    std::optional<ApgInstance> inst;
    std::optional<SmoothObjective> obj;
    try {
      inst = gen_apg_instance(n, m, s, sigma1, sigma2, seed);
      obj = SmoothObjective::make(dense_op(inst->A), inst->b);
    } catch (const std::exception& e) {
      fail("lp_exact", error_status(e));
      fail("l1", error_status(e));
      return t;
    }
    const double xs = inst->x_star.norm();
    std::optional<FistaReport> fista;
    std::vector<Cell> l1_row;
    try {
      fista = fista_l1_solve(*obj, mu, acfg.max_iters, acfg.rel_tol);
      l1_row = {ratio, mu, seed_cell(seed), std::string("l1"), (fista->x - inst->x_star).norm() / xs,
                static_cast<long long>(sparsity_count(fista->x, sp_thr)), static_cast<long long>(fista->iterations),
                static_cast<long long>(fista->converged), 0LL, std::string("ok")};
    } catch (const std::exception& e) {
      fail("lp_exact", "error: l1 start unavailable");
      fail("l1", error_status(e));
      return t;
    }
    try {
      ApgConfig c = acfg;
      c.mu = mu;
      const ApgReport rep = apg_solve(*obj, c, Eigen::VectorXd::Zero(n), fista->x);
      long long viol = 0;
      for (const auto& st : rep.steps) viol += (st.accepted && st.F_y > st.Delta) ? 1 : 0;
      t.rows.push_back({ratio, mu, seed_cell(seed), std::string("lp_exact"), (rep.x - inst->x_star).norm() / xs,
                        static_cast<long long>(sparsity_count(rep.x, sp_thr)), static_cast<long long>(rep.iterations),
                        static_cast<long long>(rep.converged), viol, std::string("ok")});
      t.timing.push_back({ratio, mu, seed_cell(seed), std::string("lp_exact"), rep.wall_ms});
    } catch (const std::exception& e) {
      fail("lp_exact", error_status(e));
    }
    t.rows.push_back(std::move(l1_row));
    t.timing.push_back({ratio, mu, seed_cell(seed), std::string("l1"), fista->wall_ms});
    return t;
  });
  out.summary = summarize(out.rows, {"ratio", "mu", "method"},
                          {"rel_error", "sparsity", "iters", "converged", "memory_violations"}, false);
  return out;
}

// ---------------------------------------------------------------- verify

inline ExperimentResult run_verify(const Config& cfg, const RunOptions& opt) {
  Params P(cfg, opt.paper_scale);
  ExperimentResult out;
  out.experiment = "verify";
  const long long base = opt.seed_base ? static_cast<long long>(*opt.seed_base) : cfg.get_int("seed_base", 1);
  require(base >= 0, "seed_base must be nonnegative");
  P.note("seed_base", std::to_string(base));
  const auto seed = static_cast<std::uint64_t>(base);
  const int scalar_cases = static_cast<int>(P.integer("scalar_cases", 1000));
  const Index grid = P.integer("grid_points", 50001);
  const int engine_cases = static_cast<int>(P.integer("engine_cases", 100));
  const int hinge_cases = static_cast<int>(P.integer("hinge_cases", 50));
  const int svd_matrices = static_cast<int>(P.integer("svd_matrices", 100));
  const int svd_probes = static_cast<int>(P.integer("svd_probes", 100));
  double fault = P.num("fault_prox_scale", 1.0);
  if (opt.inject_fault) {
    fault = 1.01;
    P.note("fault_prox_scale(cli)", format_double(fault));
  }
  require(scalar_cases >= 1 && grid >= 3 && engine_cases >= 1 && hinge_cases >= 1, "suite sizes must be positive");
  require(svd_matrices >= 1 && svd_probes >= 0, "svd suite sizes must be positive");
  require(fault > 0.0, "fault_prox_scale must be positive");
  out.params = P.echoed();

  std::vector<SuiteResult> suites;
  const auto epi = epigraph_suite({RationalExponent(1, 3), RationalExponent(1, 2), RationalExponent(2, 3)},
                                  scalar_cases, grid, seed);
  suites.push_back(epi.oracle);
  suites.push_back(epi.optimality);
  suites.push_back(prox_suite(RationalExponent(1, 2), scalar_cases, grid, seed, fault));
  suites.push_back(residual_ball_suite(engine_cases, seed));
  suites.push_back(hankel_residual_suite(engine_cases, seed));
  suites.push_back(hinge_suite(hinge_cases, 12, 6, seed));
  suites.push_back(adjoint_suite(20, seed));
  suites.push_back(gradient_suite(20, seed));
  const auto svd = svd_reduction_suite(svd_matrices, svd_probes, 20, seed, RationalExponent(1, 2));
  suites.push_back(svd.identity);
  suites.push_back(svd.probe);

  out.rows = Table({"suite", "cases", "worst", "tolerance", "pass", "worst_case"});
  out.timing = Table({"suite", "seconds"});
  std::ostringstream rep;
  for (const auto& s : suites) {
    out.rows.add({s.name, s.cases, s.worst, s.tolerance, static_cast<long long>(s.pass), s.detail});
    out.timing.add({s.name, s.seconds});
    rep << (s.pass ? "PASS " : "FAIL ") << s.name << ": worst " << detail::fmt(s.worst) << " (tol "
        << detail::fmt(s.tolerance) << ", " << s.cases << " cases)";
    if (!s.pass) rep << " at " << s.detail;
    rep << '\n';
    if (!s.pass) out.verification_failed = true;
  }
  out.report = rep.str();
  return out;
}

inline ExperimentResult run_experiment(const std::string& name, const Config& cfg, const RunOptions& opt) {
  if (name == "svr") return run_svr(cfg, opt);
  if (name == "classify") return run_classify(cfg, opt);
  if (name == "sysid") return run_sysid(cfg, opt);
  if (name == "matcomp") return run_matcomp(cfg, opt);
  if (name == "apg") return run_apg(cfg, opt);
  if (name == "verify") return run_verify(cfg, opt);
  throw ConfigError("unknown experiment '" + name + "'");
}

/// `<stem>.<tag>.csv` next to `<stem>.csv`.
inline std::string companion_path(const std::string& out, const std::string& tag) {
  const std::string ext = ".csv";
  if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0) {
    return out.substr(0, out.size() - ext.size()) + "." + tag + ext;
  }
  return out + "." + tag + ext;
}

/// Writes the result table, its summary and the timing sidecar.
inline std::vector<std::string> write_outputs(const ExperimentResult& res, const std::string& out, bool paper_scale) {
  std::vector<std::pair<std::string, std::string>> pre{{"experiment", res.experiment},
                                                       {"paper_scale", paper_scale ? "true" : "false"}};
  pre.insert(pre.end(), res.params.begin(), res.params.end());
  std::vector<std::string> written{out};
  res.rows.write_file(out, pre);
  if (res.summary) {
    written.push_back(companion_path(out, "summary"));
    res.summary->write_file(written.back(), pre);
  }
  written.push_back(companion_path(out, "timing"));
  res.timing.write_file(written.back(), pre);
  return written;
}

}  // namespace lpqn::bench
