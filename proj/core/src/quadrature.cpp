#include "wavelab/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "wavelab/errors.hpp"

namespace wavelab {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) {
    throw InvalidArgument("Gauss-Legendre rule needs at least one point");
  }
  QuadratureRule rule;
  rule.dimension = 1;
  rule.exact_degree = 2 * n - 1;
  rule.points.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  // Newton on P_n over [-1, 1], then map to [0, 1]; roots come out in
  // descending order so fill from the back.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    // recompute the derivative at the converged root
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const auto slot = static_cast<std::size_t>(n - 1 - i);
    rule.points[slot] = {0.5 * (x + 1.0), 0.0};
    rule.weights[slot] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

QuadratureRule triangle_degree4() {
  constexpr double a1 = 0.445948490915964886318329253883;
  constexpr double b1 = 0.108103018168070227363341492234;
  constexpr double w1 = 0.223381589678011465695007008433;
  constexpr double a2 = 0.091576213509770743459571463402;
  constexpr double b2 = 0.816847572980458513080857073196;
  constexpr double w2 = 0.109951743655321867638326324900;

  QuadratureRule rule;
  rule.dimension = 2;
  rule.exact_degree = 4;
  rule.points = {{a1, a1}, {b1, a1}, {a1, b1}, {a2, a2}, {b2, a2}, {a2, b2}};
  rule.weights = {w1, w1, w1, w2, w2, w2};
  for (double& w : rule.weights) {
    w *= 0.5;
  }
  return rule;
}

}  // namespace wavelab
