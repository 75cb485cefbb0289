#include "chcda/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace chcda {

namespace {

TriangleRule make_degree6() {
  TriangleRule rule;
  rule.degree = 6;
  auto add_orbit3 = [&rule](double a, double w) {
    const double b = 1.0 - 2.0 * a;
    // barycentric (b, a, a) and permutations; reference point = (l1, l2)
    rule.points.push_back({Eigen::Vector2d(a, a), 0.5 * w});
    rule.points.push_back({Eigen::Vector2d(b, a), 0.5 * w});
    rule.points.push_back({Eigen::Vector2d(a, b), 0.5 * w});
  };
  auto add_orbit6 = [&rule](double a, double b, double w) {
    const double c = 1.0 - a - b;
    const std::array<std::array<double, 2>, 6> perms = {
        {{a, b}, {b, a}, {a, c}, {c, a}, {b, c}, {c, b}}};
    for (const auto& p : perms) rule.points.push_back({Eigen::Vector2d(p[0], p[1]), 0.5 * w});
  };
  add_orbit3(0.249286745170910, 0.116786275726379);
  add_orbit3(0.063089014491502, 0.050844906370207);
  add_orbit6(0.053145049844817, 0.310352451033784, 0.082851075618374);
  return rule;
}

}  // namespace

const TriangleRule& triangle_rule_degree6() {
  static const TriangleRule rule = make_degree6();
  return rule;
}

LineRule gauss_line_rule(int npoints) {
  if (npoints < 1) throw std::invalid_argument("gauss_line_rule: npoints must be >= 1");
  LineRule rule;
  rule.degree = 2 * npoints - 1;
  rule.nodes.resize(npoints);
  rule.weights.resize(npoints);
  const int n = npoints;
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Map [-1, 1] to [0, 1].
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const LineRule& edge_rule() {
  static const LineRule rule = [] {
    LineRule r;
    r.degree = 5;
    const double s = std::sqrt(0.6);
    r.nodes = {0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)};
    r.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    return r;
  }();
  return rule;
}

TriangleRule collapsed_gauss_rule(int npoints) {
  const LineRule line = gauss_line_rule(npoints);
  TriangleRule rule;
  rule.degree = 2 * npoints - 2;
  for (int i = 0; i < npoints; ++i) {
    for (int j = 0; j < npoints; ++j) {
      const double u = line.nodes[i];
      const double v = line.nodes[j];
      // (u, v) in the unit square -> (u, (1 - u) v) with Jacobian (1 - u).
      rule.points.push_back(
          {Eigen::Vector2d(u, (1.0 - u) * v), line.weights[i] * line.weights[j] * (1.0 - u)});
    }
  }
  return rule;
}

}  // namespace chcda
