#include "chcda/space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace chcda {

namespace {

const std::array<Eigen::Vector2d, 3>& reference_barycentric_gradients() {
  static const std::array<Eigen::Vector2d, 3> g = {Eigen::Vector2d(-1.0, -1.0),
                                                   Eigen::Vector2d(1.0, 0.0),
                                                   Eigen::Vector2d(0.0, 1.0)};
  return g;
}

constexpr std::array<std::array<int, 2>, 3> kEdgeVertices = {{{0, 1}, {1, 2}, {2, 0}}};

}  // namespace

BasisValues eval_basis(const Eigen::Vector2d& ref_point) {
  const std::array<double, 3> lambda = {1.0 - ref_point.x() - ref_point.y(), ref_point.x(),
                                        ref_point.y()};
  const auto& g = reference_barycentric_gradients();
  BasisValues out;
  for (int i = 0; i < 3; ++i) {
    out.value[i] = lambda[i] * (2.0 * lambda[i] - 1.0);
    out.grad[i] = (4.0 * lambda[i] - 1.0) * g[i];
    out.hess[i] = 4.0 * g[i] * g[i].transpose();
  }
  for (int k = 0; k < 3; ++k) {
    const int i = kEdgeVertices[k][0], j = kEdgeVertices[k][1];
    out.value[3 + k] = 4.0 * lambda[i] * lambda[j];
    out.grad[3 + k] = 4.0 * (lambda[j] * g[i] + lambda[i] * g[j]);
    out.hess[3 + k] = 4.0 * (g[i] * g[j].transpose() + g[j] * g[i].transpose());
  }
  return out;
}

void ElementGeometry::push_forward(BasisValues& basis) const {
  const Eigen::Matrix2d inv_t = inverse.transpose();
  for (int i = 0; i < 6; ++i) {
    basis.grad[i] = inv_t * basis.grad[i];
    basis.hess[i] = inv_t * basis.hess[i] * inverse;
  }
}

DofMap::DofMap(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  num_dofs_ = nv + mesh.num_edges();
  element_dofs_.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& edges = mesh.triangle_edges(t);
    element_dofs_[t] = {tri[0], tri[1], tri[2], nv + edges[0], nv + edges[1], nv + edges[2]};
  }
}

Space::Space(Mesh mesh) : mesh_(std::move(mesh)), dofs_(mesh_) {
  const int n = mesh_.subdivisions();
  geometry_.resize(mesh_.num_triangles());
  for (int t = 0; t < mesh_.num_triangles(); ++t) {
    const auto& tri = mesh_.triangles()[t];
    const auto verts = mesh_.vertices();
    ElementGeometry& g = geometry_[t];
    g.origin = verts[tri[0]];
    g.jacobian.col(0) = verts[tri[1]] - verts[tri[0]];
    g.jacobian.col(1) = verts[tri[2]] - verts[tri[0]];
    g.det = g.jacobian.determinant();
    g.inverse = g.jacobian.inverse();
  }

  nodes_.resize(num_dofs());
  for (int v = 0; v < mesh_.num_vertices(); ++v) nodes_[v] = mesh_.vertices()[v];
  for (int e = 0; e < mesh_.num_edges(); ++e) {
    const auto& edge = mesh_.edges()[e];
    nodes_[mesh_.num_vertices() + e] =
        0.5 * (mesh_.vertices()[edge.vertices[0]] + mesh_.vertices()[edge.vertices[1]]);
  }

  const int side = 2 * n + 1;
  lattice_.assign(static_cast<std::size_t>(side * side), -1);
  for (int d = 0; d < num_dofs(); ++d) {
    const int a = static_cast<int>(std::lround(nodes_[d].x() * 2 * n));
    const int b = static_cast<int>(std::lround(nodes_[d].y() * 2 * n));
    lattice_[static_cast<std::size_t>(b * side + a)] = d;
  }

  reference_tables_.reserve(volume_rule().points.size());
  for (const auto& qp : volume_rule().points) reference_tables_.push_back(eval_basis(qp.point));
}

std::shared_ptr<const Space> Space::uniform(int n) {
  return std::make_shared<const Space>(Mesh::build_uniform(n));
}

int Space::lattice_dof(int a, int b) const {
  const int side = 2 * mesh_.subdivisions() + 1;
  if (a < 0 || b < 0 || a >= side || b >= side) return -1;
  return lattice_[static_cast<std::size_t>(b * side + a)];
}

BasisValues Space::basis_at(int t, const Eigen::Vector2d& x) const {
  const ElementGeometry& g = geometry_[t];
  BasisValues b = eval_basis(g.to_reference(x));
  g.push_forward(b);
  return b;
}

Field::Field(std::shared_ptr<const Space> s, Eigen::VectorXd v)
    : space(std::move(s)), values(std::move(v)) {
  if (!space) throw std::invalid_argument("Field: null space");
  if (values.size() != space->num_dofs()) {
    throw std::invalid_argument("Field: coefficient count does not match the space");
  }
}

Field::Field(std::shared_ptr<const Space> s) : space(std::move(s)) {
  if (!space) throw std::invalid_argument("Field: null space");
  values = Eigen::VectorXd::Zero(space->num_dofs());
}

Field interpolate_nodal(std::shared_ptr<const Space> space, const PointFunction& f) {
  Field out(space);
  for (int d = 0; d < space->num_dofs(); ++d) out.values[d] = f(space->node(d));
  return out;
}

double evaluate_field(const Field& field, const Eigen::Vector2d& point) {
  const Space& space = *field.space;
  const int t = space.mesh().locate(point);
  const Eigen::Vector2d p(std::clamp(point.x(), 0.0, 1.0), std::clamp(point.y(), 0.0, 1.0));
  const BasisValues b = eval_basis(space.geometry(t).to_reference(p));
  const auto& dofs = space.dofs().element(t);
  double v = 0.0;
  for (int i = 0; i < 6; ++i) v += b.value[i] * field.values[dofs[i]];
  return v;
}

}  // namespace chcda
