#include "chcda/observation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace chcda {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// The indicator-weighted mass integrand v^2 psi_i psi_j has degree 8.
const TriangleRule& degree8_rule() {
  static const TriangleRule rule = collapsed_gauss_rule(5);
  return rule;
}

}  // namespace

CoarseObservationGrid::CoarseObservationGrid(std::shared_ptr<const Space> space, int cells_per_side)
    : space_(std::move(space)), m_(cells_per_side) {
  const int n = space_->mesh().subdivisions();
  if (m_ < 1 || n % m_ != 0) {
    throw std::invalid_argument("CoarseObservationGrid: H = 1/" + std::to_string(m_) +
                                " is not aligned with the mesh (n = " + std::to_string(n) +
                                "); H * n must be a positive integer");
  }
  const int ratio = n / m_;
  const int nt = space_->mesh().num_triangles();
  triangle_cell_.resize(nt);
  cell_triangles_.resize(static_cast<std::size_t>(m_ * m_));
  for (int t = 0; t < nt; ++t) {
    const int square = t / 2;
    const int i = square % n, j = square / n;
    const int c = (j / ratio) * m_ + (i / ratio);
    triangle_cell_[t] = c;
    cell_triangles_[c].push_back(t);
  }

  const auto& rule = space_->volume_rule();
  Triplets triplets;
  for (int t = 0; t < nt; ++t) {
    const double det = std::abs(space_->geometry(t).det);
    const auto& dofs = space_->dofs().element(t);
    for (int i = 0; i < 6; ++i) {
      double integral = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        integral += rule.points[q].weight * det * space_->reference_tables()[q].value[i];
      }
      triplets.emplace_back(dofs[i], triangle_cell_[t], integral);
    }
  }
  cell_integrals_.resize(space_->num_dofs(), num_cells());
  cell_integrals_.setFromTriplets(triplets.begin(), triplets.end());
  cell_integrals_.makeCompressed();
}

CoarseObservationGrid CoarseObservationGrid::from_resolution(std::shared_ptr<const Space> space,
                                                             double H) {
  if (!(H > 0.0 && H <= 1.0)) {
    throw std::invalid_argument("CoarseObservationGrid: H must lie in (0, 1]");
  }
  const double inv = 1.0 / H;
  const long m = std::lround(inv);
  if (std::abs(inv - static_cast<double>(m)) > 1e-9 * inv) {
    throw std::invalid_argument("CoarseObservationGrid: 1/H = " + std::to_string(inv) +
                                " is not an integer; H is misaligned with the mesh");
  }
  return CoarseObservationGrid(std::move(space), static_cast<int>(m));
}

int aligned_cells_per_side(double H, int n, std::string* note) {
  if (!(H > 0.0)) throw std::invalid_argument("aligned_cells_per_side: H must be positive");
  const double target = std::log(1.0 / H);
  int best = 1;
  double best_distance = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= n; ++m) {
    if (n % m != 0) continue;
    const double d = std::abs(std::log(static_cast<double>(m)) - target);
    if (d < best_distance - 1e-12) {
      best_distance = d;
      best = m;
    }
  }
  if (note && std::abs(1.0 / best - H) > 1e-9) {
    std::ostringstream os;
    os << "H = " << H << " is not aligned with n = " << n << "; using H = 1/" << best;
    *note = os.str();
  }
  return best;
}

Eigen::VectorXd project_IH(const Field& field, const CoarseObservationGrid& grid) {
  const Space& space = *grid.space();
  if (field.values.size() != space.num_dofs()) {
    throw std::invalid_argument("project_IH: field lives on a different space");
  }
  const auto& rule = space.volume_rule();
  Eigen::VectorXd averages = Eigen::VectorXd::Zero(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) {
    double integral = 0.0;
    for (int t : grid.triangles_in_cell(c)) {
      const double det = std::abs(space.geometry(t).det);
      const auto& dofs = space.dofs().element(t);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        double v = 0.0;
        for (int i = 0; i < 6; ++i) v += field.values[dofs[i]] * space.reference_tables()[q].value[i];
        integral += rule.points[q].weight * det * v;
      }
    }
    averages[c] = integral / grid.cell_area(c);
  }
  return averages;
}

AssembledForm assemble_nudging(const CoarseObservationGrid& grid) {
  const SparseMatrix& b = grid.cell_integrals();
  const double inv_area = 1.0 / grid.cell_area(0);
  SparseMatrix n = (b * b.transpose()) * inv_area;
  n.makeCompressed();
  return {std::move(n), true, FormKind::nudging};
}

Eigen::VectorXd observation_rhs(const Field& truth, const CoarseObservationGrid& grid,
                                double omega) {
  if (!truth.space) throw std::invalid_argument("observation_rhs: missing truth snapshot");
  const Eigen::VectorXd averages = project_IH(truth, grid);
  return omega * (grid.cell_integrals() * averages);
}

std::vector<int> indicator_nodes(const CoarseObservationGrid& grid) {
  const Space& space = *grid.space();
  const int n = space.mesh().subdivisions();
  const int m = grid.cells_per_side();
  std::vector<int> nodes;
  nodes.reserve(static_cast<std::size_t>(m * m));
  for (int cj = 0; cj < m; ++cj) {
    for (int ci = 0; ci < m; ++ci) {
      // centre (ci + 1/2)/m on the lattice of spacing 1/(2n)
      const long num_a = static_cast<long>(2 * ci + 1) * n;
      const long num_b = static_cast<long>(2 * cj + 1) * n;
      if (num_a % m != 0 || num_b % m != 0) {
        throw std::invalid_argument("indicator_nodes: grid point of cell (" + std::to_string(ci) +
                                    ", " + std::to_string(cj) + ") is not a mesh node");
      }
      const int dof = space.lattice_dof(static_cast<int>(num_a / m), static_cast<int>(num_b / m));
      if (dof < 0) throw std::invalid_argument("indicator_nodes: grid point is not a mesh node");
      nodes.push_back(dof);
    }
  }
  return nodes;
}

SparseMatrix assemble_indicator_mass(const Space& space, const std::vector<int>& nodes) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(space.num_dofs());
  for (int d : nodes) v[d] = 1.0;

  const TriangleRule& rule = degree8_rule();
  std::vector<BasisValues> tables;
  tables.reserve(rule.points.size());
  for (const auto& qp : rule.points) tables.push_back(eval_basis(qp.point));

  Triplets triplets;
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto& dofs = space.dofs().element(t);
    bool touched = false;
    for (int i = 0; i < 6; ++i) touched = touched || v[dofs[i]] != 0.0;
    if (!touched) continue;
    const double det = std::abs(space.geometry(t).det);
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      double vq = 0.0;
      for (int i = 0; i < 6; ++i) vq += v[dofs[i]] * tables[q].value[i];
      const double w = rule.points[q].weight * det * vq * vq;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) local(i, j) += w * tables[q].value[i] * tables[q].value[j];
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) triplets.emplace_back(dofs[i], dofs[j], local(i, j));
    }
  }
  SparseMatrix m(space.num_dofs(), space.num_dofs());
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

IndicatorNudging indicator_variant_rhs(const Field& phi, const Field& truth,
                                       const CoarseObservationGrid& grid, double omega) {
  const Space& space = *grid.space();
  if (phi.values.size() != space.num_dofs() || truth.values.size() != space.num_dofs()) {
    throw std::invalid_argument("indicator_variant_rhs: field size mismatch");
  }
  const SparseMatrix weighted = assemble_indicator_mass(space, indicator_nodes(grid));
  IndicatorNudging out;
  out.matrix = {omega * weighted, true, FormKind::indicator};
  out.rhs = omega * (weighted * truth.values);
  return out;
}

CellAverageObservation::CellAverageObservation(CoarseObservationGrid grid)
    : grid_(std::move(grid)), nudging_(assemble_nudging(grid_).matrix) {}

Eigen::VectorXd CellAverageObservation::rhs(const Field& truth, double omega) const {
  return observation_rhs(truth, grid_, omega);
}

std::string CellAverageObservation::describe() const {
  return "cell-average H=1/" + std::to_string(grid_.cells_per_side());
}

IndicatorObservation::IndicatorObservation(CoarseObservationGrid grid)
    : grid_(std::move(grid)),
      nodes_(indicator_nodes(grid_)),
      weighted_mass_(assemble_indicator_mass(*grid_.space(), nodes_)) {}

Eigen::VectorXd IndicatorObservation::rhs(const Field& truth, double omega) const {
  return omega * (weighted_mass_ * truth.values);
}

std::string IndicatorObservation::describe() const {
  return "indicator H=1/" + std::to_string(grid_.cells_per_side());
}

}  // namespace chcda
