#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "collprob/errors.hpp"

namespace collprob {

struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing in (-1, 1)
  std::vector<double> weights;  // positive, sum to 2
  int order = 0;
};

namespace detail {

// Legendre P_n and P_n' at x via the three-term recurrence.
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

inline QuadratureRule make_gauss_legendre(int order) {
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  if (order == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 2.0;
    return rule;
  }
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev initial guess for the i-th root (descending), Newton to 1e-15.
    double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const auto [p, d] = legendre(order, x);
      dp = d;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    dp = legendre(order, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[order - 1 - i] = x;
    rule.weights[order - 1 - i] = w;
    rule.nodes[i] = -x;
    rule.weights[i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace detail

// Cached rule lookup; construction is idempotent and the cache is safe under
// concurrent first access.
inline const QuadratureRule& gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<const QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) {
    it = cache.emplace(order, std::make_unique<const QuadratureRule>(
                                  detail::make_gauss_legendre(order)))
             .first;
  }
  return *it->second;
}

// Signed integral over [a, b]; a > b flips the sign via the affine map.
template <typename F>
double integrate(const QuadratureRule& rule, F&& f, double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("integrate: non-finite interval");
  }
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(mid + half * rule.nodes[i]);
    if (!std::isfinite(v)) {
      throw NumericDomainError("integrate: non-finite integrand value");
    }
    acc += rule.weights[i] * v;
  }
  return acc * half;
}

}  // namespace collprob
