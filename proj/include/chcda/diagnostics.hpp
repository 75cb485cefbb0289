#pragma once

#include "chcda/forms.hpp"
#include "chcda/observation.hpp"
#include "chcda/space.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace chcda {

/// Constants appearing in the stability, uniqueness and error conditions.
/// `label` says where the numbers came from ("estimated", "textbook", ...).
struct AnalysisConstants {
  double c_coer = 1.0;
  double c_cont = 1.0;
  double c_p = 1.0;
  double c_i = 1.0;
  double c_inf = 1.0;
  double c_data = 1.0;
  double c_data_prime = 1.0;
  std::string label = "textbook";

  /// Every constant equal to one.
  static AnalysisConstants textbook();
};

struct ExtremalEigenvalues {
  double min = 0.0;
  double max = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Extreme eigenvalues of A x = lambda B x on {x : c^T x = 0}, where A and B
/// annihilate the constant vector and c = M 1. Lanczos on B~^{-1} A~ in the
/// B~ inner product with A~ = A + c c^T, B~ = B + c c^T; the constant mode
/// is an invariant direction and is projected out. Throws std::runtime_error
/// if B~ cannot be factorized.
ExtremalEigenvalues extremal_generalized_eigenvalues(const SparseMatrix& a, const SparseMatrix& b,
                                                     const Eigen::VectorXd& c,
                                                     double rel_tol = 1e-8, int max_iter = 400);

struct CoercivityEstimate {
  double c_coer = 0.0;
  double c_cont = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Extremal Rayleigh quotients of a_IP(w,w) / ||w||_{2,h}^2 over the
/// complement of constants.
CoercivityEstimate estimate_coercivity_continuity(const Space& space, PenaltySetting penalty);

/// max(||v|| / ||grad v|| on mean-zero fields, ||grad v|| / ||v||_{2,h}).
double estimate_poincare_constant(const Space& space, PenaltySetting penalty);

/// sqrt(max ||I_H v - v||^2 / ||grad v||^2) / H over fields with nonzero
/// gradient, for cell-average observations.
double estimate_interpolation_constant(const CoarseObservationGrid& grid);

/// Per-mesh estimates: C_coer, C_cont, C_P from eigenvalue problems, C_I from
/// the grid, and C_inf, C_data, C_data' from the sup and L2 norms of
/// `reference` (typically the initial truth state).
AnalysisConstants estimate_constants(const CoarseObservationGrid& grid, PenaltySetting penalty,
                                     const Field& reference);

double l2_norm(const Field& phi);
double l2_error(const Field& phi, const Field& reference);
double l2_norm(const Space& space, const Eigen::VectorXd& phi);
double l2_error(const Space& space, const Eigen::VectorXd& phi, const Eigen::VectorXd& reference);

/// int 1/4 (phi^2 - 1)^2 + eps^2 / 2 |grad phi|^2 with the degree-6 rule.
double energy(const Field& phi, double epsilon);
double energy(const Space& space, const Eigen::VectorXd& phi, double epsilon);

/// int phi.
double mass(const Space& space, const Eigen::VectorXd& phi);

/// Largest |phi| over nodes and volume quadrature points.
double sup_norm(const Space& space, const Eigen::VectorXd& phi);

struct GradSplitReport {
  double max_ratio = 0.0;
  int samples = 0;
  int excluded = 0;  // pairs with ||w||_{2,h} below 1e-14
  bool holds = false;
};

/// Samples |(grad w, grad v)| / (||w||_{2,h} ||v||) over random coefficient
/// pairs, smooth profiles and diagonal pairs v = w; the bound is sqrt(2).
GradSplitReport verify_grad_split(std::shared_ptr<const Space> space, PenaltySetting penalty,
                                  int samples, std::uint64_t seed);

enum class DecayStatus { decaying, non_decaying, degenerate };

std::string to_string(DecayStatus status);

struct DecayFit {
  DecayStatus status = DecayStatus::degenerate;
  double plateau = 0.0;
  double log_slope = 0.0;   // d log(error - plateau) / d step
  double ratio = 1.0;       // per-step contraction r with a_m ~ a_0 r^{-m}
  double rate = 0.0;        // lambda with r = 1 + lambda dt (NaN if dt <= 0)
  int window_begin = 0;
  int window_end = 0;       // exclusive
};

/// Fits the geometric decay envelope a_m ~ a_0 r^{-m} + plateau. The plateau
/// is the median of the last 10% of the series; the fit window runs from
/// step 2 until the series first drops below 10x the plateau. Requires at
/// least 20 entries.
DecayFit fit_decay_envelope(std::span<const double> errors, double dt = 0.0);

}  // namespace chcda
