#pragma once

// Gauss-Legendre rules and a small adaptive integrator.

#include "critlab/core.hpp"

#include <utility>
#include <vector>

namespace critlab {

template <typename Scalar>
struct GaussRule {
  std::vector<Scalar> nodes;    // on [-1, 1]
  std::vector<Scalar> weights;
};

/// n-point Gauss-Legendre rule; nodes by Newton on the three-term recurrence.
template <typename Scalar>
GaussRule<Scalar> gauss_legendre(int n) {
  GaussRule<Scalar> rule;
  rule.nodes.resize(std::size_t(n));
  rule.weights.resize(std::size_t(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi<Scalar>() * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = (Scalar(2 * k - 1) * x * p1 - Scalar(k - 1) * p0) / Scalar(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 4 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[std::size_t(i)] = -x;
    rule.nodes[std::size_t(n - 1 - i)] = x;
    rule.weights[std::size_t(i)] = w;
    rule.weights[std::size_t(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[std::size_t(n / 2)] = 0;
  return rule;
}

template <typename Scalar, typename F>
Scalar apply_rule(const GaussRule<Scalar>& rule, const F& f, Scalar a, Scalar b) {
  const Scalar mid = (a + b) / 2, half = (b - a) / 2;
  Scalar sum = 0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
  return half * sum;
}

/// Adaptive bisection comparing 10- and 20-point Gauss-Legendre on each
/// piece until they agree to `tol` relative to the running total.
template <typename Scalar, typename F>
Scalar integrate_adaptive(const F& f, Scalar a, Scalar b, Scalar tol = Scalar(1e-14),
                          int max_depth = 40) {
  static const GaussRule<Scalar> coarse = gauss_legendre<Scalar>(10);
  static const GaussRule<Scalar> fine = gauss_legendre<Scalar>(20);
  const Scalar scale = std::abs(apply_rule(fine, f, a, b));
  Scalar total = 0;
  std::vector<std::pair<std::pair<Scalar, Scalar>, int>> stack{{{a, b}, 0}};
  while (!stack.empty()) {
    const auto [interval, depth] = stack.back();
    stack.pop_back();
    const auto [lo, hi] = interval;
    const Scalar g20 = apply_rule(fine, f, lo, hi);
    const Scalar g10 = apply_rule(coarse, f, lo, hi);
    if (std::abs(g20 - g10) <= tol * std::max(scale, Scalar(1e-300)) || depth >= max_depth) {
      total += g20;
    } else {
      const Scalar mid = (lo + hi) / 2;
      stack.push_back({{mid, hi}, depth + 1});
      stack.push_back({{lo, mid}, depth + 1});
    }
  }
  return total;
}

}  // namespace critlab
