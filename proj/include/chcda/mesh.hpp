#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace chcda {

using Point = Eigen::Vector2d;

enum class EdgeKind { interior, boundary };

/// Mesh edge with its orientation data. For interior edges the unit normal
/// points from `minus` into `plus`; for boundary edges it is the outward
/// normal of Omega and `plus` is -1.
struct Edge {
  std::array<int, 2> vertices{};
  EdgeKind kind = EdgeKind::interior;
  int minus = -1;
  int plus = -1;
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();
  double length = 0.0;
};

/// Everything needed to evaluate normal-derivative jumps and averages on one
/// edge.
struct EdgeTrace {
  Point a;
  Point b;
  Eigen::Vector2d normal;
  double length = 0.0;
  EdgeKind kind = EdgeKind::interior;
  int minus = -1;
  int plus = -1;
};

/// Structured triangulation of the unit square. Each of the n x n squares is
/// split by one diagonal into two right isosceles triangles. The diagonal runs
/// lower-left to upper-right except in the bottom-right and top-left corner
/// squares, where it is flipped so no triangle owns two boundary edges.
///
/// Triangles are stored counterclockwise, two per square, square-major in the
/// order (j * n + i). Local edge k of a triangle joins local vertices k and
/// (k + 1) % 3. The mesh is immutable after construction.
class Mesh {
 public:
  /// Throws std::invalid_argument for n < 2.
  static Mesh build_uniform(int n);

  int subdivisions() const { return n_; }
  double h() const { return h_; }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const std::array<int, 3>> triangles() const { return triangles_; }
  std::span<const Edge> edges() const { return edges_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  /// Global edge indices of the three local edges of triangle t.
  const std::array<int, 3>& triangle_edges(int t) const { return triangle_edges_.at(t); }

  double area(int t) const;
  double diameter(int t) const;

  /// Throws std::out_of_range for an invalid index.
  EdgeTrace edge_trace_geometry(int edge_index) const;

  /// Whether square (i, j) uses the flipped (lower-right to upper-left) diagonal.
  bool diagonal_flipped(int i, int j) const;

  /// Triangle containing p via the structured inverse map. Points on shared
  /// edges go to the lowest-indexed candidate in the owning square, and
  /// points on square boundaries go to the square with the larger index.
  /// Throws std::out_of_range if p lies outside the closed unit square.
  int locate(const Point& p) const;

  /// Recomputes normals and lengths from coordinates and checks the
  /// topological invariants. Returns the largest geometric deviation found;
  /// throws std::logic_error on a topological violation.
  double self_check() const;

 private:
  Mesh() = default;

  int n_ = 0;
  double h_ = 0.0;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<Edge> edges_;
};

}  // namespace chcda
