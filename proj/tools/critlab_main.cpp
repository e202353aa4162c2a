#include "critlab/app/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <mutex>
#include <optional>

namespace {

using namespace critlab;
using namespace critlab::app;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

int run(ExperimentKind kind, const Options& options) {
  ExperimentConfig config = options.config_path.empty() ? preset(kind) : load_config(options.config_path);
  if (config.experiment != kind)
    throw Error(ErrorKind::validation, std::string("config key 'experiment': file declares '") +
                                           to_string(config.experiment) + "' but the subcommand is '" +
                                           to_string(kind) + "'");
  if (options.seed) config.seed = *options.seed;
  if (!options.out_dir.empty()) config.output.directory = options.out_dir;

  std::mutex log_mutex;
  const auto start = std::chrono::steady_clock::now();
  Log log;
  if (options.verbose) {
    log = [&](const std::string& message) {
      const std::chrono::duration<double> t = std::chrono::steady_clock::now() - start;
      std::lock_guard lock(log_mutex);
      std::cerr << "[" << t.count() << "s] " << message << "\n";
    };
  }
  const auto output = run_experiment(config, log);
  write_outputs(output, config.output.directory);
  if (options.verbose) std::cerr << "wrote " << config.output.directory << "/report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for weighted critical-exponent problems with boundary data"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  Options options;
  std::optional<ExperimentKind> chosen;
  for (ExperimentKind kind : all_experiment_kinds()) {
    auto* sub = app.add_subcommand(to_string(kind), std::string("run the ") + to_string(kind) + " experiment");
    sub->add_option("--config", options.config_path, "YAML configuration (default: built-in preset)");
    sub->add_option("--out", options.out_dir, "output directory (overrides output.directory)");
    sub->add_option("--seed", options.seed, "seed for randomized checks (overrides seed)");
    sub->add_flag("--verbose", options.verbose, "progress messages on stderr");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(*chosen, options);
  } catch (const Error& e) {
    std::cerr << "critlab: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "critlab: internal error: " << e.what() << "\n";
    return 3;
  }
}
