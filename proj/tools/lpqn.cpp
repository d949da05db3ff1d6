#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lpqn/bench/experiments.hpp"

namespace {

using lpqn::bench::ConfigError;
using lpqn::bench::ExitCode;

void print_summary(const lpqn::bench::ExperimentResult& res) {
  if (!res.report.empty()) std::cout << res.report;
  if (res.summary) std::cout << res.summary->body();
  if (res.failures > 0) std::cerr << res.failures << " solver run(s) failed; see the status column\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse and low-rank recovery experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_path;
  long long seed_base = -1;
  bool paper_scale = false;
  int threads = -1;
  bool inject_fault = false;

  for (const auto& name : lpqn::bench::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "key = value configuration file")->required();
    sub->add_option("--seed-base", seed_base, "first seed (overrides seed_base)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--paper-scale", paper_scale, "use full problem sizes");
    sub->add_option("--out", out_path, "result CSV path (default <experiment>.csv)");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    if (name == "verify") sub->add_flag("--inject-fault", inject_fault, "scale the prox weight by 1.01");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::exit_ok : ExitCode::exit_config_error;
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  lpqn::bench::RunOptions opt;
  if (seed_base >= 0) opt.seed_base = static_cast<std::uint64_t>(seed_base);
  if (threads >= 0) opt.threads = threads;
  opt.paper_scale = paper_scale;
  opt.inject_fault = inject_fault;
  if (out_path.empty()) out_path = experiment + ".csv";

  lpqn::bench::ExperimentResult res;
  try {
    const auto cfg = lpqn::bench::Config::load(config_path);
    res = lpqn::bench::run_experiment(experiment, cfg, opt);
    for (const auto& k : cfg.unused_keys()) std::cerr << "warning: unused config key '" << k << "'\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ExitCode::exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return ExitCode::exit_solver_failure;
  }

  try {
    for (const auto& path : lpqn::bench::write_outputs(res, out_path, paper_scale)) std::cerr << "wrote " << path << '\n';
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return ExitCode::exit_config_error;
  }
  print_summary(res);
  return res.exit_code();
}
