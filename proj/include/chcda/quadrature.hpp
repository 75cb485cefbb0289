#pragma once

#include <Eigen/Dense>

#include <vector>

namespace chcda {

struct QuadraturePoint {
  Eigen::Vector2d point;
  double weight = 0.0;
};

/// Rule on the reference triangle {(0,0), (1,0), (0,1)}; weights sum to 1/2.
struct TriangleRule {
  std::vector<QuadraturePoint> points;
  int degree = 0;
};

/// Rule on the reference interval [0, 1]; weights sum to 1.
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int degree = 0;
};

/// Symmetric 12-point rule, exact through degree 6.
const TriangleRule& triangle_rule_degree6();

/// Gauss-Legendre rule with `npoints` nodes, exact through degree 2 * npoints - 1.
LineRule gauss_line_rule(int npoints);

/// Three-point Gauss rule used on edges.
const LineRule& edge_rule();

/// Collapsed (Duffy) tensor Gauss rule with `npoints` per direction, exact
/// through degree 2 * npoints - 2. Not symmetric; used where a higher degree
/// than the standard rule is needed.
TriangleRule collapsed_gauss_rule(int npoints);

}  // namespace chcda
