#pragma once

#include "chcda/space.hpp"

#include <Eigen/Sparse>

#include <array>
#include <string>
#include <vector>

namespace chcda {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class FormKind { mass, stiffness, cip, norm_2h, nudging, indicator, jacobian };

std::string to_string(FormKind kind);

struct AssembledForm {
  SparseMatrix matrix;
  bool symmetric = true;
  FormKind kind = FormKind::mass;
};

inline constexpr double kDefaultPenalty = 5.0;

/// Interior penalty parameter; rejects values below 1.
class PenaltySetting {
 public:
  explicit PenaltySetting(double sigma = kDefaultPenalty);
  double sigma() const { return sigma_; }

 private:
  double sigma_;
};

/// Basis traces on one edge at the physical edge quadrature points. `dofs`
/// is the union of the adjacent elements' DOFs (9 for interior edges, 6 on
/// the boundary). `jump[q][k]` is the normal-derivative jump of basis
/// function dofs[k] and `average[q][k]` its averaged second normal
/// derivative, with the boundary conventions jump = -n.grad, average = n.H.n.
struct EdgeBasisTraces {
  static constexpr int kMaxDofs = 9;
  static constexpr int kPoints = 3;

  int num_dofs = 0;
  std::array<int, kMaxDofs> dofs{};
  std::array<Eigen::Vector2d, kPoints> points;
  std::array<double, kPoints> weights{};  // physical, sum to |e|
  std::array<std::array<double, kMaxDofs>, kPoints> jump{};
  std::array<std::array<double, kMaxDofs>, kPoints> average{};
  Eigen::Vector2d normal;
  double length = 0.0;
  EdgeKind kind = EdgeKind::interior;
};

EdgeBasisTraces edge_basis_traces(const Space& space, int edge);

AssembledForm assemble_mass(const Space& space);
AssembledForm assemble_stiffness(const Space& space);

/// Symmetric C0 interior penalty form: broken Hessian product, both
/// consistency terms and the sigma/|e| jump penalty.
AssembledForm assemble_cip(const Space& space, PenaltySetting penalty);

/// Gram matrix of the mesh-dependent norm: broken Hessian product plus the
/// jump penalty, without the consistency terms.
AssembledForm assemble_norm_2h_gram(const Space& space, PenaltySetting penalty);

double norm_2h(const Field& v, PenaltySetting penalty);

/// Writes a matrix in MatrixMarket coordinate format (general, 1-based).
void write_matrix_market(const SparseMatrix& matrix, const std::string& path);

struct SchemeParameters {
  double dt = 0.002;
  double epsilon = 0.05;
  double omega = 0.0;
  void validate() const;
};

/// Constant operators of the time-discrete scheme. `nudging` is the unscaled
/// observation operator (the scheme multiplies it by omega).
struct SchemeOperators {
  std::shared_ptr<const Space> space;
  SparseMatrix mass;
  SparseMatrix stiffness;
  SparseMatrix cip;
  SparseMatrix nudging;
};

/// Nudging may be an empty (0 x 0) matrix when no observations are used.
SchemeOperators assemble_scheme_operators(std::shared_ptr<const Space> space,
                                          PenaltySetting penalty, SparseMatrix nudging = {});

/// (grad(phi^3), grad psi_i), integrated by quadrature of the pointwise cube.
Eigen::VectorXd cubic_term(const Space& space, const Eigen::VectorXd& phi);

/// Derivative of cubic_term: int (3 phi^2 grad psi_j + 6 phi psi_j grad phi) . grad psi_i.
SparseMatrix cubic_jacobian(const Space& space, const Eigen::VectorXd& phi);

/// Residual of one backward-Euler step with nudging:
///   M(phi - phi_prev)/dt + (grad phi^3, grad psi) - K phi_prev + eps^2 A phi
///   + omega N phi - obs_rhs.
/// Throws std::invalid_argument on non-finite input.
Eigen::VectorXd assemble_residual(const SchemeOperators& ops, const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& phi_prev,
                                  const Eigen::VectorXd& obs_rhs, const SchemeParameters& params);

/// J = M/dt + cubic_jacobian(phi) + eps^2 A + omega N.
AssembledForm assemble_jacobian(const SchemeOperators& ops, const Eigen::VectorXd& phi,
                                const SchemeParameters& params);

/// Reassembles the Jacobian into a fixed sparsity pattern so the sparse LU
/// symbolic analysis can be reused across Newton iterations.
class JacobianAssembler {
 public:
  JacobianAssembler(const SchemeOperators& ops, const SchemeParameters& params);

  /// Updates and returns the Jacobian at phi. The pattern never changes.
  const SparseMatrix& assemble(const Eigen::VectorXd& phi);

 private:
  std::shared_ptr<const Space> space_;
  SparseMatrix base_;
  SparseMatrix current_;
  std::vector<std::array<int, 36>> slots_;
};

}  // namespace chcda
