#pragma once

#include "chcda/mesh.hpp"
#include "chcda/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace chcda {

/// Values, gradients and Hessians of the six quadratic Lagrange basis
/// functions at one point. Local ordering: vertices 0, 1, 2, then midpoints of
/// edges (0,1), (1,2), (2,0).
struct BasisValues {
  std::array<double, 6> value{};
  std::array<Eigen::Vector2d, 6> grad;
  std::array<Eigen::Matrix2d, 6> hess;
};

/// P2 nodal basis on the reference triangle.
BasisValues eval_basis(const Eigen::Vector2d& ref_point);

/// Affine map x = origin + jacobian * xi from the reference triangle.
struct ElementGeometry {
  Eigen::Vector2d origin;
  Eigen::Matrix2d jacobian;
  Eigen::Matrix2d inverse;  // jacobian^{-1}
  double det = 0.0;

  Eigen::Vector2d to_physical(const Eigen::Vector2d& ref) const { return origin + jacobian * ref; }
  Eigen::Vector2d to_reference(const Eigen::Vector2d& x) const { return inverse * (x - origin); }

  /// Maps reference basis data to physical gradients and Hessians in place.
  void push_forward(BasisValues& basis) const;
};

/// Per-triangle global DOF indices: vertex DOFs first, then one DOF per edge
/// numbered V + edge_index.
class DofMap {
 public:
  explicit DofMap(const Mesh& mesh);

  int size() const { return num_dofs_; }
  const std::array<int, 6>& element(int t) const { return element_dofs_[t]; }

 private:
  int num_dofs_ = 0;
  std::vector<std::array<int, 6>> element_dofs_;
};

/// Quadratic Lagrange space on a structured mesh together with the quadrature
/// tables used by every assembly routine. Immutable and shareable.
class Space {
 public:
  explicit Space(Mesh mesh);

  static std::shared_ptr<const Space> uniform(int n);

  const Mesh& mesh() const { return mesh_; }
  const DofMap& dofs() const { return dofs_; }
  int num_dofs() const { return dofs_.size(); }

  const ElementGeometry& geometry(int t) const { return geometry_[t]; }
  const Eigen::Vector2d& node(int dof) const { return nodes_[dof]; }

  /// DOF sitting on the P2 node lattice point (a, b) / (2n), or -1.
  int lattice_dof(int a, int b) const;

  const TriangleRule& volume_rule() const { return triangle_rule_degree6(); }

  /// Reference basis tables at the volume quadrature points (reference
  /// derivatives; call ElementGeometry::push_forward for physical ones).
  const std::vector<BasisValues>& reference_tables() const { return reference_tables_; }

  /// Physical basis data of triangle t at physical point x.
  BasisValues basis_at(int t, const Eigen::Vector2d& x) const;

 private:
  Mesh mesh_;
  DofMap dofs_;
  std::vector<ElementGeometry> geometry_;
  std::vector<Eigen::Vector2d> nodes_;
  std::vector<int> lattice_;
  std::vector<BasisValues> reference_tables_;
};

/// Coefficient vector over a Space.
struct Field {
  std::shared_ptr<const Space> space;
  Eigen::VectorXd values;

  Field() = default;
  Field(std::shared_ptr<const Space> s, Eigen::VectorXd v);
  explicit Field(std::shared_ptr<const Space> s);

  bool all_finite() const { return values.allFinite(); }
};

using PointFunction = std::function<double(const Eigen::Vector2d&)>;

Field interpolate_nodal(std::shared_ptr<const Space> space, const PointFunction& f);

/// Throws std::out_of_range outside the closed unit square.
double evaluate_field(const Field& field, const Eigen::Vector2d& point);

}  // namespace chcda
