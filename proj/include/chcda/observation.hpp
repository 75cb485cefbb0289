#pragma once

#include "chcda/forms.hpp"
#include "chcda/space.hpp"

#include <memory>
#include <string>
#include <vector>

namespace chcda {

/// Uniform partition of the unit square into m x m cells of side H = 1/m,
/// realizing I_H as the L2 projection onto cellwise constants. Cells must be
/// unions of whole mesh squares, i.e. m must divide the mesh subdivision n.
class CoarseObservationGrid {
 public:
  /// Throws std::invalid_argument when m does not divide n.
  CoarseObservationGrid(std::shared_ptr<const Space> space, int cells_per_side);

  /// Accepts H only when 1/H is an integer (to 1e-9) dividing n.
  static CoarseObservationGrid from_resolution(std::shared_ptr<const Space> space, double H);

  int cells_per_side() const { return m_; }
  int num_cells() const { return m_ * m_; }
  double resolution() const { return 1.0 / m_; }
  double cell_area(int) const { return 1.0 / (static_cast<double>(m_) * m_); }

  /// Cell index (cj * m + ci) owning triangle t.
  int cell_of_triangle(int t) const { return triangle_cell_[t]; }
  const std::vector<int>& triangles_in_cell(int c) const { return cell_triangles_[c]; }

  /// Column c holds int_cell psi_i for every DOF i.
  const SparseMatrix& cell_integrals() const { return cell_integrals_; }

  const std::shared_ptr<const Space>& space() const { return space_; }

 private:
  std::shared_ptr<const Space> space_;
  int m_ = 0;
  std::vector<int> triangle_cell_;
  std::vector<std::vector<int>> cell_triangles_;
  SparseMatrix cell_integrals_;
};

/// Nearest cells-per-side m (dividing n) to 1/H in log scale. `note` receives
/// a description when the requested value is not itself aligned.
int aligned_cells_per_side(double H, int n, std::string* note = nullptr);

/// Per-cell averages of a field, computed by quadrature over each cell's
/// triangles.
Eigen::VectorXd project_IH(const Field& field, const CoarseObservationGrid& grid);

/// N_ij = (I_H psi_j, psi_i).
AssembledForm assemble_nudging(const CoarseObservationGrid& grid);

/// omega * sum_cells avg_cell(phi_true) * int_cell psi_i.
Eigen::VectorXd observation_rhs(const Field& truth, const CoarseObservationGrid& grid,
                                double omega);

/// Masked-node nudging: v is the P2 field equal to 1 at the DOFs sitting on
/// the coarse cell centres and 0 elsewhere; the nudging term becomes
/// omega (v phi - v phi_true, v psi).
struct IndicatorNudging {
  AssembledForm matrix;   // omega * int v^2 psi_j psi_i
  Eigen::VectorXd rhs;    // omega * int v^2 phi_true psi_i
};

/// DOFs at the centres of the grid's cells. Throws std::invalid_argument if
/// a centre is not a mesh node.
std::vector<int> indicator_nodes(const CoarseObservationGrid& grid);

/// Unscaled weighted mass matrix int v^2 psi_j psi_i.
SparseMatrix assemble_indicator_mass(const Space& space, const std::vector<int>& nodes);

IndicatorNudging indicator_variant_rhs(const Field& phi, const Field& truth,
                                       const CoarseObservationGrid& grid, double omega);

/// Observation operator consumed by the time stepper: a fixed matrix and the
/// matching right-hand side built from a truth snapshot.
class ObservationOperator {
 public:
  virtual ~ObservationOperator() = default;
  /// Unscaled operator (the scheme multiplies by omega).
  virtual const SparseMatrix& matrix() const = 0;
  virtual Eigen::VectorXd rhs(const Field& truth, double omega) const = 0;
  virtual std::string describe() const = 0;
};

class CellAverageObservation final : public ObservationOperator {
 public:
  explicit CellAverageObservation(CoarseObservationGrid grid);
  const SparseMatrix& matrix() const override { return nudging_; }
  Eigen::VectorXd rhs(const Field& truth, double omega) const override;
  std::string describe() const override;
  const CoarseObservationGrid& grid() const { return grid_; }

 private:
  CoarseObservationGrid grid_;
  SparseMatrix nudging_;
};

class IndicatorObservation final : public ObservationOperator {
 public:
  explicit IndicatorObservation(CoarseObservationGrid grid);
  const SparseMatrix& matrix() const override { return weighted_mass_; }
  Eigen::VectorXd rhs(const Field& truth, double omega) const override;
  std::string describe() const override;

 private:
  CoarseObservationGrid grid_;
  std::vector<int> nodes_;
  SparseMatrix weighted_mass_;
};

}  // namespace chcda
