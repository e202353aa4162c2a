#include "critlab/app/config.hpp"
#include "critlab/app/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

using namespace critlab;
using namespace critlab::app;
using doctest::Approx;

namespace {

ErrorKind kind_of(const auto& call, std::string* message = nullptr) {
  try {
    call();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("every preset survives emit and parse") {
  for (auto kind : all_experiment_kinds()) {
    CAPTURE(to_string(kind));
    const auto c = preset(kind);
    CHECK(c.experiment == kind);
    const auto back = parse_config(emit_config(c));
    CHECK(back == c);
    CHECK(emit_config(back) == emit_config(c));
    CHECK(parse_experiment_kind(to_string(kind)) == kind);
  }
}

TEST_CASE("non-default values round trip at full precision") {
  auto c = preset(ExperimentKind::minimize);
  c.seed = 18446744073709551615ull;
  c.lambda = -0.1;
  c.grid.grading = 1.0 / 3.0;
  c.weight.kind = "power_bump";
  c.weight.center = {0.0, 0.0, 0.0};
  c.minimize.rho_min = 2.5e-7;
  c.scan.factors = {0.1, 0.7, 1e-300};
  CHECK(parse_config(emit_config(c)) == c);
}

TEST_CASE("partial documents fill in from the experiment preset") {
  const auto c = parse_config("experiment: eigen\ngrid:\n  cells: 64\n");
  auto expected = preset(ExperimentKind::eigen);
  expected.grid.cells = 64;
  CHECK(c == expected);
}

TEST_CASE("unknown and malformed keys are named") {
  std::string message;
  CHECK(kind_of([] { parse_config("experiment: auxiliary\ngrid:\n  bogus: 1\n"); }, &message) ==
        ErrorKind::validation);
  CHECK(message.find("grid.bogus") != std::string::npos);
  CHECK(kind_of([] { parse_config("experiment: auxiliary\ncolour: red\n"); }, &message) == ErrorKind::validation);
  CHECK(message.find("colour") != std::string::npos);
  CHECK(kind_of([] { parse_config("experiment: auxiliary\nsweep:\n  count: many\n"); }, &message) ==
        ErrorKind::validation);
  CHECK(message.find("sweep.count") != std::string::npos);
  CHECK(kind_of([] { parse_config("experiment: teleport\n"); }) == ErrorKind::validation);
}

TEST_CASE("config hash is stable and sensitive") {
  const auto a = preset(ExperimentKind::bubble_sweep);
  auto b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(parse_config(emit_config(a))) == config_hash(a));
  auto moved = a;
  moved.output.directory = "elsewhere";
  CHECK(config_hash(moved) == config_hash(a));
}

TEST_CASE("exit codes by error kind") {
  CHECK(exit_code(ErrorKind::validation) == 2);
  CHECK(exit_code(ErrorKind::rejected_run) == 2);
  CHECK(exit_code(ErrorKind::solver_failure) == 3);
  CHECK(exit_code(ErrorKind::stagnation) == 3);
  CHECK(exit_code(ErrorKind::io) == 4);
}

TEST_CASE("multiplier sign buckets") {
  CHECK(multiplier_sign(0.5, 10) == "+");
  CHECK(multiplier_sign(-0.5, 10) == "-");
  CHECK(multiplier_sign(5e-4, 10) == "0");
  CHECK(multiplier_sign(-5e-4, 10) == "0");
  CHECK(multiplier_sign(5e-7, 1e-4) == "unresolved");
}

TEST_CASE("claim sources") {
  CHECK(claim_source(3, 1.0, 0.0, 1.2, true) == "supercritical_trace");
  CHECK(claim_source(3, 1.0, 0.0, 1.2, false) == "supercritical_trace");
  CHECK(claim_source(3, 1.0, 0.0, 0.5, true) == "subcritical_trace");
  CHECK(claim_source(3, 1.0, 0.0, 0.5, false) == "none");
  CHECK(claim_source(3, 0.5, 0.0, 0.5, true) == "none");  // n = 2 alpha + 2 is not covered
  CHECK(claim_source(6, 1.5, 2.0, 0.5, true) == "none");
  CHECK(claim_source(3, 3.0, 2.0, 0.5, true) == "positive_lambda_flat_weight");
  CHECK(claim_source(4, 1.5, 2.0, 0.5, true) == "positive_lambda_low_dimension");
  CHECK(claim_source(4, 1.5, -2.0, 0.5, true) == "negative_lambda_low_dimension");
  CHECK(claim_source(5, 1.5, -2.0, 0.5, true) == "none");
  CHECK(claim_source(5, 2.0, -2.0, 0.5, true) == "negative_lambda_low_dimension");
  CHECK(claim_source(3, 3.0, 2.0, 1.5, true) == "none");
}

TEST_CASE("csv formatting") {
  Table t{"demo", {"a", "b", "c"}, {}};
  t.rows.push_back({Cell{0.1}, Cell{42LL}, Cell{std::string("x")}});
  t.rows.push_back({Cell{1e-300}, Cell{-1LL}, Cell{std::nan("")}});
  CHECK(to_csv(t) == "a,b,c\n0.1,42,x\n1e-300,-1,nan\n");
}

TEST_CASE("auxiliary run with constant data") {
  auto c = preset(ExperimentKind::auxiliary);
  c.grid.kind = "radial";
  c.grid.cells = 128;
  c.grid.grading = 2.0;
  c.boundary.kind = "constant";
  c.boundary.value = 0.4;
  const auto out = run_experiment(c);
  const auto& r = out.report.at("results");
  const double volume = 4 * std::acos(-1.0) / 3;
  CHECK(r.at("v_lq_norm").get<double>() == Approx(0.4 * std::pow(volume, 1.0 / 6)).epsilon(1e-10));
  CHECK(r.at("maximum_principle").get<bool>());
  CHECK(out.report.at("experiment") == "auxiliary");
  CHECK(out.report.at("config_hash") == config_hash(c));
  CHECK(out.report.at("grid").at("kind") == "radial");
}

TEST_CASE("experiment runs are reproducible") {
  auto c = preset(ExperimentKind::inequality_probe);
  c.probe.quartic_samples = 2000;
  c.probe.remainder_samples = 2000;
  const auto a = run_experiment(c), b = run_experiment(c);
  CHECK(a.report == b.report);
  REQUIRE(a.tables.size() == b.tables.size());
  for (std::size_t k = 0; k < a.tables.size(); ++k) CHECK(to_csv(a.tables[k]) == to_csv(b.tables[k]));
  c.seed = 5;
  CHECK(run_experiment(c).report.at("seed") == 5);
}

TEST_CASE("shipped configs parse and validate") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(CRITLAB_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path().string());
    CHECK_NOTHROW(check_config(c));
    CHECK(parse_config(emit_config(c)) == c);
    ++count;
  }
  CHECK(count > 0);
}
