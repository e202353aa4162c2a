#pragma once

// Experiment configuration: a YAML key tree, parsed strictly (unknown keys
// are errors) and re-emitted canonically so that parse(emit(c)) == c.

#include "critlab/critlab.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace critlab::app {

enum class ExperimentKind {
  auxiliary,
  eigen,
  bubble_sweep,
  perturbed_bubble_sweep,
  delta_sweep,
  minimize,
  multiplier_scan,
  inequality_probe,
  regime_table,
};

const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);
const std::vector<ExperimentKind>& all_experiment_kinds();

struct GridConfig {
  std::string kind = "radial";  // radial | tensor
  int dimension = 3;
  double radius = 1.0;          // radial: outer radius
  long cells = 1024;            // radial: number of cells M
  double grading = 0.0;         // radial: 0 = uniform, > 0 refines towards r = 0
  std::vector<double> origin = {0.0, 0.0, 0.0};  // tensor
  double spacing = 0.0625;                       // tensor
  std::vector<long> tensor_cells = {16, 16, 16}; // tensor

  bool operator==(const GridConfig&) const = default;
};

struct WeightConfig {
  std::string kind = "constant";  // constant | power_bump | tabulated
  double p0 = 1.0;
  double gamma = 1.0;
  double alpha = 2.0;
  double bump_radius = 1.0;
  std::vector<double> center;     // empty = origin
  std::vector<double> radii;      // tabulated
  std::vector<double> values;     // tabulated

  bool operator==(const WeightConfig&) const = default;
};

struct BoundaryConfig {
  std::string kind = "constant";  // constant | trace_of
  double value = 0.0;             // the constant, or the scale of the trace function
  std::string function = "x1x2x3";
  bool nonnegative = false;

  bool operator==(const BoundaryConfig&) const = default;
};

struct BubbleConfig {
  double epsilon = 0.1;
  double cutoff = 0.0;  // 0 = dist(a, boundary) / 4

  bool operator==(const BubbleConfig&) const = default;
};

struct SweepConfig {
  double eps_min = 1e-3;
  double eps_max = 1e-1;
  int count = 12;
  double target_norm = 0.8;  // delta sweeps: ||u||_q of the fixed profile

  bool operator==(const SweepConfig&) const = default;
};

struct MinimizeSection {
  std::string mode = "automatic";  // automatic | sphere_retraction | convex_ball
  long max_iterations = 20000;
  double initial_step = 1.0;
  double gradient_tol = 1e-12;
  double stall_tol = 1e-10;
  double theta = 0.9;
  double rho_min = 0.0;            // 0 = 10 h
  double amplitude_factor = 10.0;
  std::string seed = "v_plus_bubble";  // v | v_plus_bubble

  bool operator==(const MinimizeSection&) const = default;
};

struct ScanConfig {
  std::vector<double> factors = {0.5, 1.0, 1.5};

  bool operator==(const ScanConfig&) const = default;
};

struct ProbeConfig {
  std::vector<double> quartic_q = {3.0, 4.0, 5.0};
  long quartic_samples = 100000;
  std::vector<double> remainder_q = {2.2, 2.5, 2.8};
  long remainder_samples = 100000;

  bool operator==(const ProbeConfig&) const = default;
};

struct RegimeConfig {
  std::vector<int> dimensions = {3, 4, 5};
  std::vector<double> alphas = {1.5, 3.0};
  std::vector<double> lambdas = {-2.0, 0.0, 2.0};
  double boundary_value = 0.1;

  bool operator==(const RegimeConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";

  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::auxiliary;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  GridConfig grid;
  WeightConfig weight;
  BoundaryConfig boundary;
  BubbleConfig bubble;
  SweepConfig sweep;
  MinimizeSection minimize;
  ScanConfig scan;
  ProbeConfig probe;
  RegimeConfig regime;
  OutputConfig output;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Default parameters for each experiment kind.
ExperimentConfig preset(ExperimentKind kind);

/// Parses YAML text; keys not given keep the preset values of the declared
/// experiment. Unknown keys and malformed values raise validation errors
/// naming the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical YAML emission (every key, fixed order, round-trip precision).
std::string emit_config(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical emission with the output section reset, as 16
/// hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Semantic checks that do not need a grid (ranges, enumerations).
void check_config(const ExperimentConfig& config);

GridPtr<double> build_grid(const GridConfig& grid);
WeightSpec<double> build_weight(const WeightConfig& weight, int dimension);
BoundarySpec<double> build_boundary(const BoundaryConfig& boundary);
ConstraintMode parse_mode(const std::string& mode);

}  // namespace critlab::app
