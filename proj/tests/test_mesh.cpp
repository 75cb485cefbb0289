#include "chcda/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

using chcda::EdgeKind;
using chcda::Mesh;

namespace {

struct Counts {
  int vertices, triangles, edges;
};

Counts closed_form(int n) { return {(n + 1) * (n + 1), 2 * n * n, 2 * n * (n + 1) + n * n}; }

}  // namespace

TEST(Mesh, RejectsTooFewSubdivisions) {
  EXPECT_THROW(Mesh::build_uniform(1), std::invalid_argument);
  EXPECT_THROW(Mesh::build_uniform(0), std::invalid_argument);
  EXPECT_NO_THROW(Mesh::build_uniform(2));
}

TEST(Mesh, TwoByTwoCounts) {
  const Mesh mesh = Mesh::build_uniform(2);
  EXPECT_EQ(mesh.num_triangles(), 8);
  EXPECT_EQ(mesh.num_vertices(), 9);
  EXPECT_EQ(mesh.num_edges(), 16);
  int boundary = 0;
  for (const auto& e : mesh.edges()) boundary += e.kind == EdgeKind::boundary;
  EXPECT_EQ(boundary, 8);
}

TEST(Mesh, SixtyFourCounts) {
  const Mesh mesh = Mesh::build_uniform(64);
  EXPECT_EQ(mesh.num_triangles(), 8192);
  EXPECT_EQ(mesh.num_vertices(), 4225);
  EXPECT_EQ(mesh.num_edges(), 12416);
  EXPECT_NEAR(mesh.h(), std::numbers::sqrt2 / 64, 1e-15);
}

TEST(Mesh, ClosedFormCountsAndEuler) {
  for (int n : {2, 3, 5, 8, 17}) {
    const Mesh mesh = Mesh::build_uniform(n);
    const Counts c = closed_form(n);
    EXPECT_EQ(mesh.num_vertices(), c.vertices);
    EXPECT_EQ(mesh.num_triangles(), c.triangles);
    EXPECT_EQ(mesh.num_edges(), c.edges);
    EXPECT_EQ(mesh.num_vertices() - mesh.num_edges() + mesh.num_triangles(), 1);
  }
}

TEST(Mesh, AreasSumToOneAndTrianglesAreCounterclockwise) {
  for (int n : {2, 7, 16}) {
    const Mesh mesh = Mesh::build_uniform(n);
    double total = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const auto& tri = mesh.triangles()[t];
      const auto& a = mesh.vertices()[tri[0]];
      const auto& b = mesh.vertices()[tri[1]];
      const auto& c = mesh.vertices()[tri[2]];
      const double signed_area = 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
      EXPECT_GT(signed_area, 0.0);
      EXPECT_NEAR(signed_area, mesh.area(t), 1e-15);
      total += mesh.area(t);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Mesh, EdgeAdjacencyAndNormals) {
  const Mesh mesh = Mesh::build_uniform(6);
  std::map<int, int> triangles_per_edge;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int e : mesh.triangle_edges(t)) ++triangles_per_edge[e];
  }
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto& edge = mesh.edges()[e];
    EXPECT_NEAR(edge.normal.norm(), 1.0, 1e-14);
    const auto& a = mesh.vertices()[edge.vertices[0]];
    const auto& b = mesh.vertices()[edge.vertices[1]];
    EXPECT_NEAR(edge.normal.dot(b - a), 0.0, 1e-14);
    EXPECT_NEAR(edge.length, (b - a).norm(), 1e-15);
    if (edge.kind == EdgeKind::interior) {
      EXPECT_EQ(triangles_per_edge[e], 2);
      EXPECT_LT(edge.minus, edge.plus);
      // normal points from the minus centroid towards the plus centroid
      auto centroid = [&](int t) {
        const auto& tri = mesh.triangles()[t];
        return (mesh.vertices()[tri[0]] + mesh.vertices()[tri[1]] + mesh.vertices()[tri[2]]) / 3.0;
      };
      EXPECT_GT(edge.normal.dot(centroid(edge.plus) - centroid(edge.minus)), 0.0);
    } else {
      EXPECT_EQ(triangles_per_edge[e], 1);
      EXPECT_EQ(edge.plus, -1);
      const bool on_boundary = (a.x() == 0 && b.x() == 0) || (a.x() == 1 && b.x() == 1) ||
                               (a.y() == 0 && b.y() == 0) || (a.y() == 1 && b.y() == 1);
      EXPECT_TRUE(on_boundary);
      const Eigen::Vector2d mid = 0.5 * (a + b);
      EXPECT_FALSE((mid + 1e-3 * edge.normal).cwiseAbs().maxCoeff() <= 1.0 &&
                   (mid + 1e-3 * edge.normal).minCoeff() >= 0.0);
    }
  }
}

TEST(Mesh, NoTriangleHasTwoBoundaryEdges) {
  for (int n : {2, 3, 4, 9, 32}) {
    const Mesh mesh = Mesh::build_uniform(n);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      int boundary = 0;
      for (int e : mesh.triangle_edges(t)) boundary += mesh.edges()[e].kind == EdgeKind::boundary;
      EXPECT_LE(boundary, 1) << "n = " << n << ", triangle " << t;
    }
  }
}

TEST(Mesh, OnlyCornerSquaresAreFlipped) {
  const int n = 5;
  const Mesh mesh = Mesh::build_uniform(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const bool corner = (i == n - 1 && j == 0) || (i == 0 && j == n - 1);
      EXPECT_EQ(mesh.diagonal_flipped(i, j), corner);
    }
  }
}

TEST(Mesh, MinimumAngleIsFortyFiveDegrees) {
  const Mesh mesh = Mesh::build_uniform(8);
  for (const auto& tri : mesh.triangles()) {
    double min_angle = 180.0;
    for (int k = 0; k < 3; ++k) {
      const auto& p = mesh.vertices()[tri[k]];
      const Eigen::Vector2d u = mesh.vertices()[tri[(k + 1) % 3]] - p;
      const Eigen::Vector2d v = mesh.vertices()[tri[(k + 2) % 3]] - p;
      min_angle = std::min(min_angle, std::acos(u.dot(v) / (u.norm() * v.norm())) * 180.0 / std::numbers::pi);
    }
    EXPECT_NEAR(min_angle, 45.0, 1e-10);
  }
}

TEST(Mesh, EdgesAreLexicographicallySorted) {
  const Mesh mesh = Mesh::build_uniform(4);
  for (int e = 1; e < mesh.num_edges(); ++e) {
    EXPECT_LT(mesh.edges()[e - 1].vertices, mesh.edges()[e].vertices);
    EXPECT_LT(mesh.edges()[e].vertices[0], mesh.edges()[e].vertices[1]);
  }
}

TEST(Mesh, EdgeTraceGeometry) {
  const Mesh mesh = Mesh::build_uniform(4);
  EXPECT_THROW(mesh.edge_trace_geometry(-1), std::out_of_range);
  EXPECT_THROW(mesh.edge_trace_geometry(mesh.num_edges()), std::out_of_range);
  int bottom = 0, horizontal_interior = 0;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto tr = mesh.edge_trace_geometry(e);
    if (tr.kind == EdgeKind::boundary && tr.a.y() == 0.0 && tr.b.y() == 0.0) {
      EXPECT_EQ(tr.normal, Eigen::Vector2d(0.0, -1.0));
      ++bottom;
    }
    if (tr.kind == EdgeKind::interior && tr.a.y() == tr.b.y()) {
      EXPECT_NEAR(std::abs(tr.normal.y()), 1.0, 1e-15);
      EXPECT_EQ(tr.normal.x(), 0.0);
      ++horizontal_interior;
    }
  }
  EXPECT_EQ(bottom, 4);
  EXPECT_EQ(horizontal_interior, 12);
}

TEST(Mesh, LocateFindsContainingTriangle) {
  const Mesh mesh = Mesh::build_uniform(7);
  for (double x : {0.0, 0.013, 0.5, 0.71, 1.0}) {
    for (double y : {0.0, 0.33, 0.5, 0.999, 1.0}) {
      const int t = mesh.locate({x, y});
      const auto& tri = mesh.triangles()[t];
      const auto& a = mesh.vertices()[tri[0]];
      const auto& b = mesh.vertices()[tri[1]];
      const auto& c = mesh.vertices()[tri[2]];
      auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) { return u.x() * v.y() - u.y() * v.x(); };
      const Eigen::Vector2d p(x, y);
      EXPECT_GE(cross(b - a, p - a), -1e-12);
      EXPECT_GE(cross(c - b, p - b), -1e-12);
      EXPECT_GE(cross(a - c, p - c), -1e-12);
    }
  }
  EXPECT_THROW(mesh.locate({1.1, 0.5}), std::out_of_range);
  EXPECT_THROW(mesh.locate({0.5, -0.2}), std::out_of_range);
}

TEST(Mesh, SelfCheckPasses) {
  for (int n : {2, 4, 16}) EXPECT_LT(Mesh::build_uniform(n).self_check(), 1e-12);
}
