#pragma once

// Scalar inequalities behind the superposition estimates:
//   (a+b)^q >= a^q + q a^{q-1} b + q a b^{q-1} + b^q        (q >= 3)
//   |(a+b)^q - a^q - q a^{q-1} b - q a b^{q-1} - b^q|
//       <= C a^{q-1} b (a <= b),  C a b^{q-1} (a >= b)      (2 < q < 3)

#include "critlab/core.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

namespace critlab {

template <typename Scalar>
bool check_quartic_bound(Scalar a, Scalar b, Scalar q) {
  if (!(a >= 0 && b >= 0)) throw Error(ErrorKind::precondition, "quartic bound needs a, b >= 0");
  if (!(q >= 3)) throw Error(ErrorKind::wrong_regime, "quartic bound needs q >= 3; use remainder_ratio");
  using std::pow;
  const Scalar lhs = pow(a + b, q);
  const Scalar rhs = pow(a, q) + q * pow(a, q - 1) * b + q * a * pow(b, q - 1) + pow(b, q);
  return lhs >= rhs - Scalar(1e-12) * std::max(std::abs(lhs), std::abs(rhs));
}

/// (t^q + q t^{q-1} + q t + 1) / (1+t)^q; at most 1 when q >= 3.
template <typename Scalar>
Scalar quartic_ratio(Scalar t, Scalar q) {
  using std::pow;
  return (pow(t, q) + q * pow(t, q - 1) + q * t + 1) / pow(1 + t, q);
}

/// |(1+t)^q - (t^q + q t^{q-1} + q t + 1)| over t (t >= 1) or t^{q-1} (t <= 1).
template <typename Scalar>
Scalar remainder_ratio_at(Scalar t, Scalar q) {
  using std::pow;
  // Symmetric under t -> 1/t, so work with s <= 1 and divide through by s^{q-1}.
  const Scalar s = t <= 1 ? t : 1 / t;
  if (s > Scalar(0.25)) return std::abs(pow(1 + s, q) - (pow(s, q) + q * pow(s, q - 1) + q * s + 1)) / pow(s, q - 1);
  // (1+s)^q - 1 - q s as its binomial tail; the direct form loses everything below s ~ 1e-8.
  Scalar term = q * (q - 1) / 2 * s * s, tail = 0;
  for (int k = 2; k < 200 && std::abs(term) > std::numeric_limits<Scalar>::epsilon() * std::abs(tail) / 4; ++k) {
    tail += term;
    term *= (q - k) / (k + 1) * s;
  }
  return std::abs(tail / pow(s, q - 1) - q - s);
}

template <typename Scalar>
struct RemainderProbe {
  Scalar q = 0;
  Index samples = 0;
  Scalar max_ratio = 0;
  Scalar argmax_a = 1;  // the maximizing pair is (a, b) = (1, t)
  Scalar argmax_b = 0;
};

/// Supremum of the remainder ratio over `samples` log-uniform t = b/a in
/// [1e-6, 1e6], drawn from a seeded generator; `reciprocal` evaluates at 1/t.
template <typename Scalar>
RemainderProbe<Scalar> remainder_ratio(Scalar q, Index samples, std::uint64_t seed = 0,
                                       bool reciprocal = false) {
  if (!(q > 2 && q < 3)) throw Error(ErrorKind::wrong_regime, "remainder probes need 2 < q < 3");
  if (samples < 1) throw Error(ErrorKind::validation, "remainder probe needs samples >= 1");
  std::mt19937_64 rng(seed);
  const Scalar lo = std::log(Scalar(1e-6)), hi = std::log(Scalar(1e6));
  RemainderProbe<Scalar> probe;
  probe.q = q;
  probe.samples = samples;
  for (Index i = 0; i < samples; ++i) {
    // 53 random bits -> uniform in [0, 1), independent of the library's distributions.
    const Scalar u = Scalar(rng() >> 11) * Scalar(0x1.0p-53);
    Scalar t = std::exp(lo + (hi - lo) * u);
    if (reciprocal) t = 1 / t;
    const Scalar ratio = remainder_ratio_at(t, q);
    if (!std::isfinite(ratio))
      throw Error(ErrorKind::validation, "non-finite remainder ratio at t = " + std::to_string(double(t)));
    if (ratio > probe.max_ratio) {
      probe.max_ratio = ratio;
      probe.argmax_b = t;
    }
  }
  return probe;
}

}  // namespace critlab
