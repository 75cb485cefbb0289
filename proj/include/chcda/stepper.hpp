#pragma once

#include "chcda/diagnostics.hpp"
#include "chcda/forms.hpp"
#include "chcda/observation.hpp"

#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace chcda {

struct StepperConfig {
  double dt = 0.002;
  double epsilon = 0.05;
  double omega = 0.0;
  double sigma = kDefaultPenalty;
  double newton_tol = 1e-10;
  int newton_max = 30;
  double linear_tol = 1e-11;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  SchemeParameters scheme() const { return {dt, epsilon, omega}; }
};

struct StepStats {
  int newton_iterations = 0;
  int halvings = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::vector<double> residual_history;
};

/// Raised when Newton or the inner linear solve fails; carries the partial
/// iteration history.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, StepStats stats)
      : std::runtime_error(what), stats_(std::move(stats)) {}
  const StepStats& stats() const { return stats_; }

 private:
  StepStats stats_;
};

/// Backward-Euler step of the nudged scheme solved by Newton's method. The
/// constant operators and the LU symbolic analysis are built once.
class Stepper {
 public:
  /// `nudging` is the unscaled observation matrix, or empty for omega = 0.
  Stepper(std::shared_ptr<const Space> space, StepperConfig config, SparseMatrix nudging = {});

  /// Solves G(phi) = 0 starting from phi_prev. Throws StepFailure.
  Field step(const Field& phi_prev, const Eigen::VectorXd& obs_rhs, StepStats* stats = nullptr);

  const StepperConfig& config() const { return config_; }
  const SchemeOperators& operators() const { return ops_; }
  const std::shared_ptr<const Space>& space() const { return ops_.space; }

 private:
  StepperConfig config_;
  SchemeOperators ops_;
  JacobianAssembler jacobian_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

struct RunRow {
  int step = 0;
  double t = 0.0;
  double l2_error = 0.0;  // NaN without a truth reference
  double energy = 0.0;
  double mass = 0.0;
  int newton_iters = 0;
};

struct Snapshot {
  int step = 0;
  double t = 0.0;
  Field field;
};

struct RunLog {
  std::string label;
  std::string manifest_hash;
  std::vector<RunRow> rows;  // step 0 holds the initial state
  std::vector<Snapshot> snapshots;
  Field final_field;
  bool completed = false;
  std::string failure;

  std::vector<double> errors() const;
};

/// Truth field at a given step, or nullptr when unavailable.
using TruthSource = std::function<const Field*(int step)>;

struct RunOptions {
  int steps = 0;
  TruthSource truth;
  const ObservationOperator* observation = nullptr;  // required when omega > 0
  std::vector<int> snapshot_steps;
  std::string label;
};

/// Advances `steps` steps from phi0. A failed step ends the run with
/// completed = false and the rows gathered so far.
RunLog run(Stepper& stepper, const Field& phi0, const RunOptions& options);

struct ConditionReport {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double uniqueness_margin = 0.0;
  double H = 0.0;
  StepperConfig config;
  AnalysisConstants constants;

  bool stability_holds() const { return lambda0 > 0.0; }
  bool decay_holds() const { return lambda1 > 0.0; }
  bool uniqueness_holds() const { return uniqueness_margin > 0.0; }
};

/// Evaluates the stability, decay and uniqueness conditions. Pure arithmetic.
ConditionReport condition_report(const StepperConfig& config, double H,
                                 const AnalysisConstants& constants);

}  // namespace chcda
