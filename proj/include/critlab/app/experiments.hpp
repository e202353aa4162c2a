#pragma once

// Experiment runners behind the command line: each turns a configuration into
// a JSON report plus CSV tables, without touching the filesystem.

#include "critlab/app/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace critlab::app {

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

struct ExperimentOutput {
  nlohmann::json report;
  std::vector<Table> tables;
};

using Log = std::function<void(const std::string&)>;

std::string version();

nlohmann::json grid_descriptor(const Grid<double>& grid);

ExperimentOutput run_experiment(const ExperimentConfig& config, const Log& log = {});

/// Header row plus one line per row; doubles in shortest round-trip form.
std::string to_csv(const Table& table);

/// Writes report.json and <table>.csv into `directory` (created if needed).
void write_outputs(const ExperimentOutput& output, const std::filesystem::path& directory);

/// Sign bucket of a multiplier: "+", "0", "-", or "unresolved" between the
/// 1e-6 sign threshold and the 1e-4 * energy_scale zero band.
std::string multiplier_sign(double multiplier, double energy_scale);

/// Label of the attainment claim that covers (n, alpha, lambda, ||v||_q),
/// or "none" outside every covered regime.
std::string claim_source(int n, double alpha, double lambda, double v_norm, bool trace_sign_ok);

}  // namespace critlab::app
