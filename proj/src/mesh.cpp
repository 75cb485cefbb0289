#include "chcda/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace chcda {

namespace {

Eigen::Vector2d unit_normal_away_from(const Point& a, const Point& b, const Point& opposite) {
  Eigen::Vector2d t = b - a;
  Eigen::Vector2d n(t.y(), -t.x());
  n.normalize();
  if (n.dot(opposite - a) > 0.0) n = -n;
  return n;
}

}  // namespace

Mesh Mesh::build_uniform(int n) {
  if (n < 2) {
    throw std::invalid_argument("Mesh::build_uniform: n must be >= 2 (got " + std::to_string(n) +
                                "); n = 1 puts two boundary edges on a corner triangle");
  }
  Mesh mesh;
  mesh.n_ = n;
  mesh.h_ = std::sqrt(2.0) / n;

  const int nv = n + 1;
  mesh.vertices_.reserve(static_cast<std::size_t>(nv * nv));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // i == n gives exactly 1.0, which the boundary classification relies on.
      mesh.vertices_.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    }
  }

  auto vid = [nv](int i, int j) { return j * nv + i; };
  mesh.triangles_.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      if (mesh.diagonal_flipped(i, j)) {
        mesh.triangles_.push_back({v00, v10, v01});
        mesh.triangles_.push_back({v10, v11, v01});
      } else {
        mesh.triangles_.push_back({v00, v10, v11});
        mesh.triangles_.push_back({v00, v11, v01});
      }
    }
  }

  // Edges, lexicographic by sorted vertex pair.
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(mesh.triangles_.size() * 3);
  for (const auto& tri : mesh.triangles_) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      pairs.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  mesh.edges_.resize(pairs.size());
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    mesh.edges_[e].vertices = {pairs[e].first, pairs[e].second};
  }

  mesh.triangle_edges_.resize(mesh.triangles_.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles_[t];
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      std::pair<int, int> key(std::min(a, b), std::max(a, b));
      auto it = std::lower_bound(pairs.begin(), pairs.end(), key);
      const int e = static_cast<int>(it - pairs.begin());
      mesh.triangle_edges_[t][k] = e;
      Edge& edge = mesh.edges_[e];
      if (edge.minus < 0) {
        edge.minus = t;
      } else if (edge.plus < 0) {
        edge.plus = t;
      } else {
        throw std::logic_error("Mesh::build_uniform: edge shared by more than two triangles");
      }
    }
  }

  for (int e = 0; e < mesh.num_edges(); ++e) {
    Edge& edge = mesh.edges_[e];
    const Point& a = mesh.vertices_[edge.vertices[0]];
    const Point& b = mesh.vertices_[edge.vertices[1]];
    edge.length = (b - a).norm();
    edge.kind = edge.plus < 0 ? EdgeKind::boundary : EdgeKind::interior;
    const auto& tri = mesh.triangles_[edge.minus];
    int opposite = -1;
    for (int v : tri) {
      if (v != edge.vertices[0] && v != edge.vertices[1]) opposite = v;
    }
    edge.normal = unit_normal_away_from(a, b, mesh.vertices_[opposite]);
  }
  return mesh;
}

bool Mesh::diagonal_flipped(int i, int j) const {
  return (i == n_ - 1 && j == 0) || (i == 0 && j == n_ - 1);
}

double Mesh::area(int t) const {
  const auto& tri = triangles_.at(t);
  const Point e1 = vertices_[tri[1]] - vertices_[tri[0]];
  const Point e2 = vertices_[tri[2]] - vertices_[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double Mesh::diameter(int t) const {
  const auto& tri = triangles_.at(t);
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    d = std::max(d, (vertices_[tri[(k + 1) % 3]] - vertices_[tri[k]]).norm());
  }
  return d;
}

EdgeTrace Mesh::edge_trace_geometry(int edge_index) const {
  if (edge_index < 0 || edge_index >= num_edges()) {
    throw std::out_of_range("Mesh::edge_trace_geometry: edge index " + std::to_string(edge_index) +
                            " out of range");
  }
  const Edge& e = edges_[edge_index];
  return EdgeTrace{vertices_[e.vertices[0]], vertices_[e.vertices[1]], e.normal, e.length, e.kind,
                   e.minus, e.plus};
}

int Mesh::locate(const Point& p) const {
  constexpr double slack = 1e-12;
  if (!(p.x() >= -slack && p.x() <= 1.0 + slack && p.y() >= -slack && p.y() <= 1.0 + slack)) {
    throw std::out_of_range("Mesh::locate: point (" + std::to_string(p.x()) + ", " +
                            std::to_string(p.y()) + ") lies outside the unit square");
  }
  const double x = std::clamp(p.x(), 0.0, 1.0) * n_;
  const double y = std::clamp(p.y(), 0.0, 1.0) * n_;
  const int i = std::min(static_cast<int>(std::floor(x)), n_ - 1);
  const int j = std::min(static_cast<int>(std::floor(y)), n_ - 1);
  const double lx = x - i, ly = y - j;
  const int base = 2 * (j * n_ + i);
  if (diagonal_flipped(i, j)) {
    return lx + ly <= 1.0 ? base : base + 1;
  }
  return ly <= lx ? base : base + 1;
}

double Mesh::self_check() const {
  double deviation = 0.0;
  double total_area = 0.0;
  for (int t = 0; t < num_triangles(); ++t) {
    const double a = area(t);
    if (!(a > 0.0)) throw std::logic_error("Mesh::self_check: triangle not counterclockwise");
    total_area += a;
    int boundary_edges = 0;
    for (int e : triangle_edges_[t]) {
      if (edges_[e].kind == EdgeKind::boundary) ++boundary_edges;
    }
    if (boundary_edges > 1) {
      throw std::logic_error("Mesh::self_check: triangle " + std::to_string(t) +
                             " has more than one boundary edge");
    }
  }
  deviation = std::max(deviation, std::abs(total_area - 1.0));

  for (const Edge& e : edges_) {
    const Point& a = vertices_[e.vertices[0]];
    const Point& b = vertices_[e.vertices[1]];
    const bool geometric_boundary = (a.x() == b.x() && (a.x() == 0.0 || a.x() == 1.0)) ||
                                    (a.y() == b.y() && (a.y() == 0.0 || a.y() == 1.0));
    if ((e.kind == EdgeKind::boundary) != geometric_boundary) {
      throw std::logic_error("Mesh::self_check: edge classification disagrees with geometry");
    }
    if (e.kind == EdgeKind::interior && (e.minus < 0 || e.plus < 0)) {
      throw std::logic_error("Mesh::self_check: interior edge without two neighbours");
    }
    deviation = std::max(deviation, std::abs((b - a).norm() - e.length));
    deviation = std::max(deviation, std::abs(e.normal.norm() - 1.0));
    deviation = std::max(deviation, std::abs(e.normal.dot(b - a)));
    // Normal must leave the minus triangle.
    const Point centroid = (vertices_[triangles_[e.minus][0]] + vertices_[triangles_[e.minus][1]] +
                            vertices_[triangles_[e.minus][2]]) /
                           3.0;
    if (e.normal.dot(0.5 * (a + b) - centroid) <= 0.0) {
      throw std::logic_error("Mesh::self_check: edge normal points into its minus triangle");
    }
  }
  if (num_vertices() - num_edges() + num_triangles() != 1) {
    throw std::logic_error("Mesh::self_check: Euler characteristic differs from 1");
  }
  return deviation;
}

}  // namespace chcda
