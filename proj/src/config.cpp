#include "critlab/app/config.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace critlab::app {

namespace {

constexpr std::array<ExperimentKind, 9> kKinds = {
    ExperimentKind::auxiliary,       ExperimentKind::eigen,
    ExperimentKind::bubble_sweep,    ExperimentKind::perturbed_bubble_sweep,
    ExperimentKind::delta_sweep,     ExperimentKind::minimize,
    ExperimentKind::multiplier_scan, ExperimentKind::inequality_probe,
    ExperimentKind::regime_table,
};

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::validation, "config key '" + key + "': " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown(const YAML::Node& node, const std::string& path,
                    std::initializer_list<const char*> known) {
  if (!node.IsMap()) invalid(path.empty() ? "<root>" : path, "expected a mapping");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : node) {
    const auto key = item.first.as<std::string>();
    if (!allowed.count(key)) invalid(join(path, key), "unknown key");
  }
}

template <typename T>
T convert(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    invalid(key, "malformed value");
  }
}

template <typename T>
void read(const YAML::Node& map, const std::string& path, const char* key, T& out) {
  const YAML::Node node = map[key];
  if (!node) return;
  const std::string full = join(path, key);
  if constexpr (std::is_same_v<T, bool> || std::is_arithmetic_v<T> ||
                std::is_same_v<T, std::string>) {
    if (!node.IsScalar()) invalid(full, "expected a scalar");
    out = convert<T>(node, full);
  } else {
    if (!node.IsSequence()) invalid(full, "expected a sequence");
    T values;
    for (const auto& element : node)
      values.push_back(convert<typename T::value_type>(element, full));
    out = std::move(values);
  }
}

YAML::Node section(const YAML::Node& root, const char* key,
                   std::initializer_list<const char*> known) {
  const YAML::Node node = root[key];
  if (node) reject_unknown(node, key, known);
  return node;
}

std::string number(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

void emit_numbers(YAML::Emitter& out, const std::vector<double>& values) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double v : values) out << number(v);
  out << YAML::EndSeq;
}

template <typename Int>
void emit_integers(YAML::Emitter& out, const std::vector<Int>& values) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Int v : values) out << v;
  out << YAML::EndSeq;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) invalid(key, what);
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::auxiliary: return "auxiliary";
    case ExperimentKind::eigen: return "eigen";
    case ExperimentKind::bubble_sweep: return "bubble_sweep";
    case ExperimentKind::perturbed_bubble_sweep: return "perturbed_bubble_sweep";
    case ExperimentKind::delta_sweep: return "delta_sweep";
    case ExperimentKind::minimize: return "minimize";
    case ExperimentKind::multiplier_scan: return "multiplier_scan";
    case ExperimentKind::inequality_probe: return "inequality_probe";
    case ExperimentKind::regime_table: return "regime_table";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto kind : kKinds)
    if (name == to_string(kind)) return kind;
  invalid("experiment", "unknown experiment kind '" + name + "'");
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
  static const std::vector<ExperimentKind> kinds(kKinds.begin(), kKinds.end());
  return kinds;
}

ExperimentConfig preset(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::auxiliary:
      c.grid.kind = "tensor";
      c.grid.origin = {0.0, 0.0, 0.0};
      c.grid.spacing = 1.0 / 16;
      c.grid.tensor_cells = {16, 16, 16};
      c.boundary.kind = "trace_of";
      c.boundary.function = "x1x2x3";
      c.boundary.value = 1.0;
      break;
    case ExperimentKind::eigen:
      c.grid.cells = 512;
      break;
    case ExperimentKind::bubble_sweep:
      c.grid.dimension = 4;
      c.grid.radius = 2.0;
      c.grid.cells = 1 << 14;
      c.grid.grading = 8.0;
      break;
    case ExperimentKind::perturbed_bubble_sweep:
      c.grid.dimension = 5;
      c.grid.radius = 2.0;
      c.grid.cells = 1 << 14;
      c.grid.grading = 8.0;
      c.weight.kind = "power_bump";
      c.weight.alpha = 3.0;
      c.weight.bump_radius = 2.0;
      c.lambda = 1.0;
      // The eps^2 term only dominates the eps^3 boundary and weight terms below ~1e-2.
      c.sweep.eps_min = 1e-4;
      c.sweep.eps_max = 5e-3;
      break;
    case ExperimentKind::delta_sweep:
      c.grid.radius = 2.0;
      c.grid.cells = 1 << 14;
      c.grid.grading = 8.0;
      break;
    case ExperimentKind::minimize:
      c.grid.cells = 4096;
      c.grid.grading = 8.0;
      c.bubble.epsilon = 0.1;
      break;
    case ExperimentKind::multiplier_scan:
      c.grid.cells = 2048;
      c.grid.grading = 6.0;
      c.bubble.epsilon = 0.5;
      break;
    case ExperimentKind::inequality_probe:
      break;
    case ExperimentKind::regime_table:
      c.grid.cells = 1024;
      c.grid.grading = 6.0;
      c.weight.kind = "power_bump";
      c.bubble.epsilon = 0.5;
      // Minimizers in the covered regimes peak at radius ~5e-3 on this grid, inside
      // the default 10 h; a tighter radius keeps them from reading as concentration.
      c.minimize.rho_min = 1e-3;
      break;
  }
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::validation, std::string("config is not valid YAML: ") + e.what());
  }
  if (!root || root.IsNull()) invalid("<root>", "empty configuration");
  reject_unknown(root, "", {"experiment", "seed", "lambda", "grid", "weight", "boundary", "bubble",
                            "sweep", "minimize", "scan", "probe", "regime", "output"});
  if (!root["experiment"]) invalid("experiment", "missing");
  ExperimentConfig c = preset(parse_experiment_kind(convert<std::string>(root["experiment"], "experiment")));
  read(root, "", "seed", c.seed);
  read(root, "", "lambda", c.lambda);

  if (auto n = section(root, "grid", {"kind", "dimension", "radius", "cells", "grading", "origin",
                                      "spacing", "tensor_cells"})) {
    read(n, "grid", "kind", c.grid.kind);
    read(n, "grid", "dimension", c.grid.dimension);
    read(n, "grid", "radius", c.grid.radius);
    read(n, "grid", "cells", c.grid.cells);
    read(n, "grid", "grading", c.grid.grading);
    read(n, "grid", "origin", c.grid.origin);
    read(n, "grid", "spacing", c.grid.spacing);
    read(n, "grid", "tensor_cells", c.grid.tensor_cells);
  }
  if (auto n = section(root, "weight", {"kind", "p0", "gamma", "alpha", "bump_radius", "center",
                                        "radii", "values"})) {
    read(n, "weight", "kind", c.weight.kind);
    read(n, "weight", "p0", c.weight.p0);
    read(n, "weight", "gamma", c.weight.gamma);
    read(n, "weight", "alpha", c.weight.alpha);
    read(n, "weight", "bump_radius", c.weight.bump_radius);
    read(n, "weight", "center", c.weight.center);
    read(n, "weight", "radii", c.weight.radii);
    read(n, "weight", "values", c.weight.values);
  }
  if (auto n = section(root, "boundary", {"kind", "value", "function", "nonnegative"})) {
    read(n, "boundary", "kind", c.boundary.kind);
    read(n, "boundary", "value", c.boundary.value);
    read(n, "boundary", "function", c.boundary.function);
    read(n, "boundary", "nonnegative", c.boundary.nonnegative);
  }
  if (auto n = section(root, "bubble", {"epsilon", "cutoff"})) {
    read(n, "bubble", "epsilon", c.bubble.epsilon);
    read(n, "bubble", "cutoff", c.bubble.cutoff);
  }
  if (auto n = section(root, "sweep", {"eps_min", "eps_max", "count", "target_norm"})) {
    read(n, "sweep", "eps_min", c.sweep.eps_min);
    read(n, "sweep", "eps_max", c.sweep.eps_max);
    read(n, "sweep", "count", c.sweep.count);
    read(n, "sweep", "target_norm", c.sweep.target_norm);
  }
  if (auto n = section(root, "minimize", {"mode", "max_iterations", "initial_step", "gradient_tol",
                                          "stall_tol", "theta", "rho_min", "amplitude_factor",
                                          "seed"})) {
    read(n, "minimize", "mode", c.minimize.mode);
    read(n, "minimize", "max_iterations", c.minimize.max_iterations);
    read(n, "minimize", "initial_step", c.minimize.initial_step);
    read(n, "minimize", "gradient_tol", c.minimize.gradient_tol);
    read(n, "minimize", "stall_tol", c.minimize.stall_tol);
    read(n, "minimize", "theta", c.minimize.theta);
    read(n, "minimize", "rho_min", c.minimize.rho_min);
    read(n, "minimize", "amplitude_factor", c.minimize.amplitude_factor);
    read(n, "minimize", "seed", c.minimize.seed);
  }
  if (auto n = section(root, "scan", {"factors"})) read(n, "scan", "factors", c.scan.factors);
  if (auto n = section(root, "probe", {"quartic_q", "quartic_samples", "remainder_q",
                                       "remainder_samples"})) {
    read(n, "probe", "quartic_q", c.probe.quartic_q);
    read(n, "probe", "quartic_samples", c.probe.quartic_samples);
    read(n, "probe", "remainder_q", c.probe.remainder_q);
    read(n, "probe", "remainder_samples", c.probe.remainder_samples);
  }
  if (auto n = section(root, "regime", {"dimensions", "alphas", "lambdas", "boundary_value"})) {
    read(n, "regime", "dimensions", c.regime.dimensions);
    read(n, "regime", "alphas", c.regime.alphas);
    read(n, "regime", "lambdas", c.regime.lambdas);
    read(n, "regime", "boundary_value", c.regime.boundary_value);
  }
  if (auto n = section(root, "output", {"directory"})) read(n, "output", "directory", c.output.directory);
  check_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string emit_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "experiment" << YAML::Value << to_string(c.experiment);
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "lambda" << YAML::Value << number(c.lambda);

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << c.grid.kind;
  out << YAML::Key << "dimension" << YAML::Value << c.grid.dimension;
  out << YAML::Key << "radius" << YAML::Value << number(c.grid.radius);
  out << YAML::Key << "cells" << YAML::Value << c.grid.cells;
  out << YAML::Key << "grading" << YAML::Value << number(c.grid.grading);
  out << YAML::Key << "origin" << YAML::Value;
  emit_numbers(out, c.grid.origin);
  out << YAML::Key << "spacing" << YAML::Value << number(c.grid.spacing);
  out << YAML::Key << "tensor_cells" << YAML::Value;
  emit_integers(out, c.grid.tensor_cells);
  out << YAML::EndMap;

  out << YAML::Key << "weight" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << c.weight.kind;
  out << YAML::Key << "p0" << YAML::Value << number(c.weight.p0);
  out << YAML::Key << "gamma" << YAML::Value << number(c.weight.gamma);
  out << YAML::Key << "alpha" << YAML::Value << number(c.weight.alpha);
  out << YAML::Key << "bump_radius" << YAML::Value << number(c.weight.bump_radius);
  out << YAML::Key << "center" << YAML::Value;
  emit_numbers(out, c.weight.center);
  out << YAML::Key << "radii" << YAML::Value;
  emit_numbers(out, c.weight.radii);
  out << YAML::Key << "values" << YAML::Value;
  emit_numbers(out, c.weight.values);
  out << YAML::EndMap;

  out << YAML::Key << "boundary" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << c.boundary.kind;
  out << YAML::Key << "value" << YAML::Value << number(c.boundary.value);
  out << YAML::Key << "function" << YAML::Value << c.boundary.function;
  out << YAML::Key << "nonnegative" << YAML::Value << c.boundary.nonnegative;
  out << YAML::EndMap;

  out << YAML::Key << "bubble" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epsilon" << YAML::Value << number(c.bubble.epsilon);
  out << YAML::Key << "cutoff" << YAML::Value << number(c.bubble.cutoff);
  out << YAML::EndMap;

  out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "eps_min" << YAML::Value << number(c.sweep.eps_min);
  out << YAML::Key << "eps_max" << YAML::Value << number(c.sweep.eps_max);
  out << YAML::Key << "count" << YAML::Value << c.sweep.count;
  out << YAML::Key << "target_norm" << YAML::Value << number(c.sweep.target_norm);
  out << YAML::EndMap;

  out << YAML::Key << "minimize" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << c.minimize.mode;
  out << YAML::Key << "max_iterations" << YAML::Value << c.minimize.max_iterations;
  out << YAML::Key << "initial_step" << YAML::Value << number(c.minimize.initial_step);
  out << YAML::Key << "gradient_tol" << YAML::Value << number(c.minimize.gradient_tol);
  out << YAML::Key << "stall_tol" << YAML::Value << number(c.minimize.stall_tol);
  out << YAML::Key << "theta" << YAML::Value << number(c.minimize.theta);
  out << YAML::Key << "rho_min" << YAML::Value << number(c.minimize.rho_min);
  out << YAML::Key << "amplitude_factor" << YAML::Value << number(c.minimize.amplitude_factor);
  out << YAML::Key << "seed" << YAML::Value << c.minimize.seed;
  out << YAML::EndMap;

  out << YAML::Key << "scan" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "factors" << YAML::Value;
  emit_numbers(out, c.scan.factors);
  out << YAML::EndMap;

  out << YAML::Key << "probe" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "quartic_q" << YAML::Value;
  emit_numbers(out, c.probe.quartic_q);
  out << YAML::Key << "quartic_samples" << YAML::Value << c.probe.quartic_samples;
  out << YAML::Key << "remainder_q" << YAML::Value;
  emit_numbers(out, c.probe.remainder_q);
  out << YAML::Key << "remainder_samples" << YAML::Value << c.probe.remainder_samples;
  out << YAML::EndMap;

  out << YAML::Key << "regime" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dimensions" << YAML::Value;
  emit_integers(out, c.regime.dimensions);
  out << YAML::Key << "alphas" << YAML::Value;
  emit_numbers(out, c.regime.alphas);
  out << YAML::Key << "lambdas" << YAML::Value;
  emit_numbers(out, c.regime.lambdas);
  out << YAML::Key << "boundary_value" << YAML::Value << number(c.regime.boundary_value);
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "directory" << YAML::Value << c.output.directory;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  // Where results land is not part of what was computed.
  ExperimentConfig keyed = config;
  keyed.output = OutputConfig{};
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : emit_config(keyed)) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

void check_config(const ExperimentConfig& c) {
  const auto& g = c.grid;
  require(g.kind == "radial" || g.kind == "tensor", "grid.kind", "must be radial or tensor");
  if (g.kind == "radial") {
    require(g.dimension >= 3, "grid.dimension", "must be >= 3");
    require(g.radius > 0, "grid.radius", "must be > 0");
    require(g.cells >= 16, "grid.cells", "must be >= 16");
    require(g.grading >= 0, "grid.grading", "must be >= 0");
  } else {
    require(g.dimension == 3, "grid.dimension", "tensor grids are 3-D");
    require(g.origin.size() == 3, "grid.origin", "needs 3 coordinates");
    require(g.spacing > 0, "grid.spacing", "must be > 0");
    require(g.tensor_cells.size() == 3, "grid.tensor_cells", "needs 3 entries");
    for (long n : g.tensor_cells) require(n >= 2, "grid.tensor_cells", "entries must be >= 2");
  }
  const auto& w = c.weight;
  require(w.kind == "constant" || w.kind == "power_bump" || w.kind == "tabulated", "weight.kind",
          "must be constant, power_bump or tabulated");
  require(w.center.empty() || int(w.center.size()) == g.dimension, "weight.center",
          "must be empty or have the grid dimension");
  if (w.kind == "constant") require(w.p0 > 0, "weight.p0", "must be > 0");
  if (w.kind == "power_bump") {
    require(w.p0 > 0, "weight.p0", "must be > 0");
    require(w.gamma > 0, "weight.gamma", "must be > 0");
    require(w.alpha > 1, "weight.alpha", "must be > 1");
    require(w.bump_radius > 0, "weight.bump_radius", "must be > 0");
  }
  if (w.kind == "tabulated")
    require(!w.radii.empty() && w.radii.size() == w.values.size(), "weight.values",
            "needs as many entries as weight.radii");
  const auto& b = c.boundary;
  require(b.kind == "constant" || b.kind == "trace_of", "boundary.kind", "must be constant or trace_of");
  require(b.function == "x1x2x3" || b.function == "exp_cos" || b.function == "linear",
          "boundary.function", "must be x1x2x3, exp_cos or linear");
  require(c.bubble.epsilon > 0, "bubble.epsilon", "must be > 0");
  require(c.bubble.cutoff >= 0, "bubble.cutoff", "must be >= 0");
  require(c.sweep.eps_min > 0 && c.sweep.eps_max > c.sweep.eps_min, "sweep.eps_max",
          "needs 0 < eps_min < eps_max");
  require(c.sweep.count >= 5, "sweep.count", "must be >= 5");
  require(c.sweep.target_norm > 0 && c.sweep.target_norm < 1, "sweep.target_norm",
          "must lie in (0, 1)");
  parse_mode(c.minimize.mode);
  require(c.minimize.seed == "v" || c.minimize.seed == "v_plus_bubble", "minimize.seed",
          "must be v or v_plus_bubble");
  require(c.minimize.max_iterations > 0, "minimize.max_iterations", "must be > 0");
  require(c.minimize.theta > 0 && c.minimize.theta < 1, "minimize.theta", "must lie in (0, 1)");
  require(c.minimize.gradient_tol > 0 && c.minimize.stall_tol > 0, "minimize.gradient_tol",
          "tolerances must be > 0");
  for (double f : c.scan.factors) require(f > 0, "scan.factors", "entries must be > 0");
  require(c.probe.quartic_samples >= 1 && c.probe.remainder_samples >= 1, "probe.quartic_samples",
          "sample counts must be >= 1");
  for (int n : c.regime.dimensions) require(n >= 3, "regime.dimensions", "entries must be >= 3");
  for (double a : c.regime.alphas) require(a > 1, "regime.alphas", "entries must be > 1");
}

GridPtr<double> build_grid(const GridConfig& g) {
  if (g.kind == "radial")
    return make_grid<double>(RadialGrid<double>::graded(g.dimension, g.radius, g.cells, g.grading));
  Point<double> origin = Eigen::Map<const Vector<double>>(g.origin.data(), Index(g.origin.size()));
  return make_grid<double>(
      TensorGrid<double>(origin, g.spacing, {g.tensor_cells[0], g.tensor_cells[1], g.tensor_cells[2]}));
}

WeightSpec<double> build_weight(const WeightConfig& w, int dimension) {
  Point<double> center = w.center.empty()
                             ? Point<double>(Point<double>::Zero(dimension))
                             : Point<double>(Eigen::Map<const Vector<double>>(w.center.data(),
                                                                              Index(w.center.size())));
  if (w.kind == "constant") return WeightSpec<double>::constant(w.p0);
  if (w.kind == "power_bump")
    return WeightSpec<double>::power_bump(w.p0, w.gamma, w.alpha, center, w.bump_radius);
  return WeightSpec<double>::tabulated(
      Eigen::Map<const Vector<double>>(w.radii.data(), Index(w.radii.size())),
      Eigen::Map<const Vector<double>>(w.values.data(), Index(w.values.size())), center);
}

BoundarySpec<double> build_boundary(const BoundaryConfig& b) {
  if (b.kind == "constant") return BoundarySpec<double>::constant(b.value, b.nonnegative);
  TraceFunction f = TraceFunction::x1x2x3;
  if (b.function == "exp_cos") f = TraceFunction::exp_cos;
  if (b.function == "linear") f = TraceFunction::linear;
  return BoundarySpec<double>::trace_of(f, b.value, b.nonnegative);
}

ConstraintMode parse_mode(const std::string& mode) {
  if (mode == "automatic") return ConstraintMode::automatic;
  if (mode == "sphere_retraction") return ConstraintMode::sphere_retraction;
  if (mode == "convex_ball") return ConstraintMode::convex_ball;
  invalid("minimize.mode", "must be automatic, sphere_retraction or convex_ball");
}

}  // namespace critlab::app
