#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace critlab {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A point of R^n; its size is the ambient dimension.
template <typename Scalar>
using Point = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

enum class ErrorKind {
  invalid_field,
  dimension_mismatch,
  out_of_domain,
  validation,
  degenerate_grid,
  domain,
  geometry,
  precondition,
  wrong_regime,
  nonpositive_remainder,
  mode,
  rejected_run,
  solver_failure,
  stagnation,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_field: return "invalid-field";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::out_of_domain: return "out-of-domain";
    case ErrorKind::validation: return "validation";
    case ErrorKind::degenerate_grid: return "degenerate-grid";
    case ErrorKind::domain: return "domain";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::wrong_regime: return "wrong-regime";
    case ErrorKind::nonpositive_remainder: return "nonpositive-remainder";
    case ErrorKind::mode: return "mode";
    case ErrorKind::rejected_run: return "rejected-run";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::stagnation: return "stagnation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library. `value()` carries the residual or
/// Rayleigh quotient for solver failures and NaN otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        double value = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

/// Process exit code associated with an error: 2 validation, 3 solver, 4 I/O.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::solver_failure:
    case ErrorKind::stagnation: return 3;
    case ErrorKind::io: return 4;
    default: return 2;
  }
}

template <typename Scalar>
Scalar pi() {
  return std::numbers::pi_v<Scalar>;
}

/// Surface measure of the unit sphere S^{n-1} in R^n, 2 pi^{n/2} / Gamma(n/2).
template <typename Scalar>
Scalar sphere_area(int n) {
  using std::pow;
  using std::tgamma;
  const Scalar half_n = Scalar(n) / 2;
  return 2 * pow(pi<Scalar>(), half_n) / tgamma(half_n);
}

/// Critical Sobolev exponent 2n/(n-2).
template <typename Scalar>
Scalar critical_exponent(int n) {
  if (n < 3) throw Error(ErrorKind::domain, "critical exponent needs n >= 3");
  return Scalar(2 * n) / Scalar(n - 2);
}

}  // namespace critlab
