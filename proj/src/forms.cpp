#include "chcda/forms.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace chcda {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(int n, const Triplets& triplets) {
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

// Hessians of the six physical basis functions on triangle t (constant).
std::array<Eigen::Matrix2d, 6> element_hessians(const Space& space, int t) {
  BasisValues b = eval_basis(Eigen::Vector2d(1.0 / 3.0, 1.0 / 3.0));
  space.geometry(t).push_forward(b);
  return b.hess;
}

double double_dot(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
  return (a.array() * b.array()).sum();
}

// Broken Hessian product plus optional consistency terms and the jump penalty.
SparseMatrix assemble_hessian_form(const Space& space, double sigma, bool consistency) {
  const Mesh& mesh = space.mesh();
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 36 +
                   static_cast<std::size_t>(mesh.num_edges()) * 81);

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto hess = element_hessians(space, t);
    const double area = 0.5 * std::abs(space.geometry(t).det);
    const auto& dofs = space.dofs().element(t);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        triplets.emplace_back(dofs[i], dofs[j], area * double_dot(hess[j], hess[i]));
      }
    }
  }

  for (int e = 0; e < mesh.num_edges(); ++e) {
    const EdgeBasisTraces tr = edge_basis_traces(space, e);
    const double penalty = sigma / tr.length;
    for (int i = 0; i < tr.num_dofs; ++i) {
      for (int j = 0; j < tr.num_dofs; ++j) {
        double v = 0.0;
        for (int q = 0; q < EdgeBasisTraces::kPoints; ++q) {
          const auto& jump = tr.jump[q];
          const auto& avg = tr.average[q];
          double integrand = penalty * jump[j] * jump[i];
          if (consistency) integrand += avg[j] * jump[i] + avg[i] * jump[j];
          v += tr.weights[q] * integrand;
        }
        triplets.emplace_back(tr.dofs[i], tr.dofs[j], v);
      }
    }
  }
  return from_triplets(space.num_dofs(), triplets);
}

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string("non-finite entries in ") + what);
  }
}

}  // namespace

std::string to_string(FormKind kind) {
  switch (kind) {
    case FormKind::mass: return "mass";
    case FormKind::stiffness: return "stiffness";
    case FormKind::cip: return "cip";
    case FormKind::norm_2h: return "norm_2h";
    case FormKind::nudging: return "nudging";
    case FormKind::indicator: return "indicator";
    case FormKind::jacobian: return "jacobian";
  }
  return "unknown";
}

PenaltySetting::PenaltySetting(double sigma) : sigma_(sigma) {
  if (!(sigma >= 1.0)) {
    throw std::invalid_argument("PenaltySetting: sigma must be >= 1 (got " + std::to_string(sigma) +
                                ")");
  }
}

EdgeBasisTraces edge_basis_traces(const Space& space, int edge) {
  const EdgeTrace geo = space.mesh().edge_trace_geometry(edge);
  EdgeBasisTraces tr;
  tr.normal = geo.normal;
  tr.length = geo.length;
  tr.kind = geo.kind;

  const LineRule& rule = edge_rule();
  for (int q = 0; q < EdgeBasisTraces::kPoints; ++q) {
    tr.points[q] = geo.a + rule.nodes[q] * (geo.b - geo.a);
    tr.weights[q] = rule.weights[q] * geo.length;
  }

  const auto& minus_dofs = space.dofs().element(geo.minus);
  for (int i = 0; i < 6; ++i) tr.dofs[i] = minus_dofs[i];
  tr.num_dofs = 6;
  std::array<int, 6> plus_slot{};
  if (geo.kind == EdgeKind::interior) {
    const auto& plus_dofs = space.dofs().element(geo.plus);
    for (int i = 0; i < 6; ++i) {
      const auto begin = tr.dofs.begin();
      const auto end = begin + tr.num_dofs;
      const auto it = std::find(begin, end, plus_dofs[i]);
      if (it != end) {
        plus_slot[i] = static_cast<int>(it - begin);
      } else {
        plus_slot[i] = tr.num_dofs;
        tr.dofs[tr.num_dofs++] = plus_dofs[i];
      }
    }
  }

  const Eigen::Vector2d& n = geo.normal;
  for (int q = 0; q < EdgeBasisTraces::kPoints; ++q) {
    const BasisValues bm = space.basis_at(geo.minus, tr.points[q]);
    if (geo.kind == EdgeKind::boundary) {
      for (int i = 0; i < 6; ++i) {
        tr.jump[q][i] = -n.dot(bm.grad[i]);
        tr.average[q][i] = n.dot(bm.hess[i] * n);
      }
      continue;
    }
    const BasisValues bp = space.basis_at(geo.plus, tr.points[q]);
    for (int i = 0; i < 6; ++i) {
      tr.jump[q][i] -= n.dot(bm.grad[i]);
      tr.average[q][i] += 0.5 * n.dot(bm.hess[i] * n);
    }
    for (int i = 0; i < 6; ++i) {
      const int k = plus_slot[i];
      tr.jump[q][k] += n.dot(bp.grad[i]);
      tr.average[q][k] += 0.5 * n.dot(bp.hess[i] * n);
    }
  }
  return tr;
}

AssembledForm assemble_mass(const Space& space) {
  const Mesh& mesh = space.mesh();
  const auto& rule = space.volume_rule();
  const auto& tables = space.reference_tables();
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 36);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double det = std::abs(space.geometry(t).det);
    const auto& dofs = space.dofs().element(t);
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double w = rule.points[q].weight * det;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) local(i, j) += w * tables[q].value[i] * tables[q].value[j];
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) triplets.emplace_back(dofs[i], dofs[j], local(i, j));
    }
  }
  return {from_triplets(space.num_dofs(), triplets), true, FormKind::mass};
}

AssembledForm assemble_stiffness(const Space& space) {
  const Mesh& mesh = space.mesh();
  const auto& rule = space.volume_rule();
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 36);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementGeometry& g = space.geometry(t);
    const double det = std::abs(g.det);
    const auto& dofs = space.dofs().element(t);
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      BasisValues b = space.reference_tables()[q];
      g.push_forward(b);
      const double w = rule.points[q].weight * det;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) local(i, j) += w * b.grad[i].dot(b.grad[j]);
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) triplets.emplace_back(dofs[i], dofs[j], local(i, j));
    }
  }
  return {from_triplets(space.num_dofs(), triplets), true, FormKind::stiffness};
}

AssembledForm assemble_cip(const Space& space, PenaltySetting penalty) {
  return {assemble_hessian_form(space, penalty.sigma(), true), true, FormKind::cip};
}

AssembledForm assemble_norm_2h_gram(const Space& space, PenaltySetting penalty) {
  return {assemble_hessian_form(space, penalty.sigma(), false), true, FormKind::norm_2h};
}

double norm_2h(const Field& v, PenaltySetting penalty) {
  const Space& space = *v.space;
  double sum = 0.0;
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const auto hess = element_hessians(space, t);
    const auto& dofs = space.dofs().element(t);
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 6; ++i) h += v.values[dofs[i]] * hess[i];
    sum += 0.5 * std::abs(space.geometry(t).det) * double_dot(h, h);
  }
  for (int e = 0; e < space.mesh().num_edges(); ++e) {
    const EdgeBasisTraces tr = edge_basis_traces(space, e);
    for (int q = 0; q < EdgeBasisTraces::kPoints; ++q) {
      double jump = 0.0;
      for (int k = 0; k < tr.num_dofs; ++k) jump += tr.jump[q][k] * v.values[tr.dofs[k]];
      sum += penalty.sigma() / tr.length * tr.weights[q] * jump * jump;
    }
  }
  return std::sqrt(sum);
}

void write_matrix_market(const SparseMatrix& matrix, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int c = 0; c < matrix.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(matrix, c); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
  if (!out) throw std::runtime_error("write_matrix_market: write failed for " + path);
}

void SchemeParameters::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("SchemeParameters: dt must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("SchemeParameters: epsilon must be positive");
  if (!(omega >= 0.0)) throw std::invalid_argument("SchemeParameters: omega must be >= 0");
}

SchemeOperators assemble_scheme_operators(std::shared_ptr<const Space> space,
                                          PenaltySetting penalty, SparseMatrix nudging) {
  SchemeOperators ops;
  ops.mass = assemble_mass(*space).matrix;
  ops.stiffness = assemble_stiffness(*space).matrix;
  ops.cip = assemble_cip(*space, penalty).matrix;
  if (nudging.rows() == 0) {
    nudging.resize(space->num_dofs(), space->num_dofs());
  } else if (nudging.rows() != space->num_dofs() || nudging.cols() != space->num_dofs()) {
    throw std::invalid_argument("assemble_scheme_operators: nudging operator has wrong size");
  }
  ops.nudging = std::move(nudging);
  ops.space = std::move(space);
  return ops;
}

Eigen::VectorXd cubic_term(const Space& space, const Eigen::VectorXd& phi) {
  const auto& rule = space.volume_rule();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.num_dofs());
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const ElementGeometry& g = space.geometry(t);
    const double det = std::abs(g.det);
    const auto& dofs = space.dofs().element(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      BasisValues b = space.reference_tables()[q];
      g.push_forward(b);
      double value = 0.0;
      Eigen::Vector2d grad = Eigen::Vector2d::Zero();
      for (int i = 0; i < 6; ++i) {
        value += phi[dofs[i]] * b.value[i];
        grad += phi[dofs[i]] * b.grad[i];
      }
      const Eigen::Vector2d flux = rule.points[q].weight * det * 3.0 * value * value * grad;
      for (int i = 0; i < 6; ++i) out[dofs[i]] += flux.dot(b.grad[i]);
    }
  }
  return out;
}

namespace {

// Local 6x6 blocks of the cubic-term derivative, one per element.
template <typename Sink>
void for_each_cubic_block(const Space& space, const Eigen::VectorXd& phi, Sink&& sink) {
  const auto& rule = space.volume_rule();
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    const ElementGeometry& g = space.geometry(t);
    const double det = std::abs(g.det);
    const auto& dofs = space.dofs().element(t);
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      BasisValues b = space.reference_tables()[q];
      g.push_forward(b);
      double value = 0.0;
      Eigen::Vector2d grad = Eigen::Vector2d::Zero();
      for (int i = 0; i < 6; ++i) {
        value += phi[dofs[i]] * b.value[i];
        grad += phi[dofs[i]] * b.grad[i];
      }
      const double w = rule.points[q].weight * det;
      for (int j = 0; j < 6; ++j) {
        const Eigen::Vector2d dflux = 3.0 * value * value * b.grad[j] + 6.0 * value * b.value[j] * grad;
        for (int i = 0; i < 6; ++i) local(i, j) += w * dflux.dot(b.grad[i]);
      }
    }
    sink(t, dofs, local);
  }
}

}  // namespace

SparseMatrix cubic_jacobian(const Space& space, const Eigen::VectorXd& phi) {
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(space.mesh().num_triangles()) * 36);
  for_each_cubic_block(space, phi,
                       [&](int, const std::array<int, 6>& dofs, const Eigen::Matrix<double, 6, 6>& local) {
                         for (int i = 0; i < 6; ++i) {
                           for (int j = 0; j < 6; ++j) triplets.emplace_back(dofs[i], dofs[j], local(i, j));
                         }
                       });
  return from_triplets(space.num_dofs(), triplets);
}

Eigen::VectorXd assemble_residual(const SchemeOperators& ops, const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& phi_prev,
                                  const Eigen::VectorXd& obs_rhs, const SchemeParameters& params) {
  params.validate();
  const int n = ops.space->num_dofs();
  if (phi.size() != n || phi_prev.size() != n || obs_rhs.size() != n) {
    throw std::invalid_argument("assemble_residual: inconsistent vector sizes");
  }
  require_finite(phi, "phi");
  require_finite(phi_prev, "phi_prev");
  require_finite(obs_rhs, "obs_rhs");
  const double eps2 = params.epsilon * params.epsilon;
  Eigen::VectorXd r = ops.mass * (phi - phi_prev) / params.dt;
  r += cubic_term(*ops.space, phi);
  r -= ops.stiffness * phi_prev;
  r += eps2 * (ops.cip * phi);
  if (params.omega != 0.0) r += params.omega * (ops.nudging * phi);
  r -= obs_rhs;
  return r;
}

AssembledForm assemble_jacobian(const SchemeOperators& ops, const Eigen::VectorXd& phi,
                                const SchemeParameters& params) {
  params.validate();
  require_finite(phi, "phi");
  const double eps2 = params.epsilon * params.epsilon;
  SparseMatrix j = ops.mass / params.dt + eps2 * ops.cip;
  if (params.omega != 0.0) j += params.omega * ops.nudging;
  j += cubic_jacobian(*ops.space, phi);
  j.makeCompressed();
  return {std::move(j), false, FormKind::jacobian};
}

JacobianAssembler::JacobianAssembler(const SchemeOperators& ops, const SchemeParameters& params)
    : space_(ops.space) {
  params.validate();
  const double eps2 = params.epsilon * params.epsilon;
  base_ = ops.mass / params.dt + eps2 * ops.cip;
  if (params.omega != 0.0) base_ += params.omega * ops.nudging;
  base_.makeCompressed();

  slots_.resize(space_->mesh().num_triangles());
  const int* outer = base_.outerIndexPtr();
  const int* inner = base_.innerIndexPtr();
  for (int t = 0; t < space_->mesh().num_triangles(); ++t) {
    const auto& dofs = space_->dofs().element(t);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        // column-major: column dofs[j], row dofs[i]
        const int* begin = inner + outer[dofs[j]];
        const int* end = inner + outer[dofs[j] + 1];
        const int* it = std::lower_bound(begin, end, dofs[i]);
        if (it == end || *it != dofs[i]) {
          throw std::logic_error("JacobianAssembler: element coupling missing from pattern");
        }
        slots_[t][i * 6 + j] = static_cast<int>(it - inner);
      }
    }
  }
  current_ = base_;
}

const SparseMatrix& JacobianAssembler::assemble(const Eigen::VectorXd& phi) {
  require_finite(phi, "phi");
  std::copy(base_.valuePtr(), base_.valuePtr() + base_.nonZeros(), current_.valuePtr());
  double* values = current_.valuePtr();
  for_each_cubic_block(*space_, phi,
                       [&](int t, const std::array<int, 6>&, const Eigen::Matrix<double, 6, 6>& local) {
                         const auto& slot = slots_[t];
                         for (int i = 0; i < 6; ++i) {
                           for (int j = 0; j < 6; ++j) values[slot[i * 6 + j]] += local(i, j);
                         }
                       });
  return current_;
}

}  // namespace chcda
