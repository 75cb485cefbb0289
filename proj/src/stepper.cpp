#include "chcda/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace chcda {

namespace {

constexpr int kMaxHalvings = 12;

std::string describe_failure(const std::string& reason, const StepStats& stats) {
  std::ostringstream os;
  os << reason << " after " << stats.newton_iterations << " Newton iterations (residual "
     << stats.initial_residual << " -> " << stats.final_residual << ")";
  return os.str();
}

}  // namespace

void StepperConfig::validate() const {
  scheme().validate();
  (void)PenaltySetting{sigma};
  if (!(newton_tol > 0.0 && newton_tol < 1.0)) throw std::invalid_argument("newton_tol must lie in (0, 1)");
  if (!(linear_tol > 0.0 && linear_tol < 1.0)) throw std::invalid_argument("linear_tol must lie in (0, 1)");
  if (newton_max < 1) throw std::invalid_argument("newton_max must be at least 1");
}

Stepper::Stepper(std::shared_ptr<const Space> space, StepperConfig config, SparseMatrix nudging)
    : config_((config.validate(), config)),
      ops_(assemble_scheme_operators(std::move(space), PenaltySetting{config.sigma}, std::move(nudging))),
      jacobian_(ops_, config_.scheme()) {
  if (config_.omega > 0.0 && ops_.nudging.nonZeros() == 0) {
    throw std::invalid_argument("Stepper: omega > 0 requires an observation operator");
  }
  lu_.analyzePattern(jacobian_.assemble(Eigen::VectorXd::Zero(ops_.space->num_dofs())));
}

Field Stepper::step(const Field& phi_prev, const Eigen::VectorXd& obs_rhs, StepStats* stats_out) {
  const SchemeParameters params = config_.scheme();
  const int n = ops_.space->num_dofs();
  if (phi_prev.values.size() != n) throw std::invalid_argument("Stepper::step: field size mismatch");

  StepStats stats;
  Eigen::VectorXd phi = phi_prev.values;
  Eigen::VectorXd r = assemble_residual(ops_, phi, phi_prev.values, obs_rhs, params);
  double rnorm = r.norm();
  stats.initial_residual = rnorm;
  stats.final_residual = rnorm;
  stats.residual_history.push_back(rnorm);
  const double target = config_.newton_tol * std::max(1.0, rnorm);

  while (rnorm > target) {
    if (stats.newton_iterations >= config_.newton_max) {
      throw StepFailure(describe_failure("Newton did not converge", stats), stats);
    }
    const SparseMatrix& jac = jacobian_.assemble(phi);
    lu_.factorize(jac);
    if (lu_.info() != Eigen::Success) {
      throw StepFailure(describe_failure("Jacobian factorization failed", stats), stats);
    }
    Eigen::VectorXd delta = lu_.solve(-r);
    Eigen::VectorXd lin = jac * delta + r;
    if (lin.norm() > config_.linear_tol * rnorm) {
      delta += lu_.solve(-lin);  // one step of iterative refinement
      lin = jac * delta + r;
    }
    if (!delta.allFinite() || lin.norm() > config_.linear_tol * rnorm) {
      throw StepFailure(describe_failure("linear solve missed its tolerance", stats), stats);
    }

    double scale = 1.0;
    Eigen::VectorXd trial = phi + delta;
    Eigen::VectorXd r_trial = assemble_residual(ops_, trial, phi_prev.values, obs_rhs, params);
    while (!(r_trial.norm() < rnorm) && stats.halvings < kMaxHalvings && r_trial.norm() > target) {
      scale *= 0.5;
      ++stats.halvings;
      trial = phi + scale * delta;
      r_trial = assemble_residual(ops_, trial, phi_prev.values, obs_rhs, params);
    }
    phi = std::move(trial);
    r = std::move(r_trial);
    rnorm = r.norm();
    ++stats.newton_iterations;
    stats.final_residual = rnorm;
    stats.residual_history.push_back(rnorm);
    if (!std::isfinite(rnorm)) throw StepFailure(describe_failure("residual is not finite", stats), stats);
  }
  if (stats_out) *stats_out = stats;
  return Field(ops_.space, std::move(phi));
}

std::vector<double> RunLog::errors() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.l2_error);
  return out;
}

RunLog run(Stepper& stepper, const Field& phi0, const RunOptions& options) {
  const Space& space = *stepper.space();
  const StepperConfig& cfg = stepper.config();
  if (cfg.omega > 0.0 && (!options.observation || !options.truth)) {
    throw std::invalid_argument("run: omega > 0 needs an observation operator and a truth source");
  }
  RunLog log;
  log.label = options.label;
  auto wants_snapshot = [&](int step) {
    return std::find(options.snapshot_steps.begin(), options.snapshot_steps.end(), step) !=
           options.snapshot_steps.end();
  };
  auto record = [&](int step, const Field& phi, int iters) {
    RunRow row;
    row.step = step;
    row.t = step * cfg.dt;
    const Field* truth = options.truth ? options.truth(step) : nullptr;
    row.l2_error = truth ? l2_error(space, phi.values, truth->values) : std::numeric_limits<double>::quiet_NaN();
    row.energy = energy(space, phi.values, cfg.epsilon);
    row.mass = mass(space, phi.values);
    row.newton_iters = iters;
    log.rows.push_back(row);
    if (wants_snapshot(step)) log.snapshots.push_back({step, row.t, phi});
  };

  Field phi = phi0;
  record(0, phi, 0);
  const Eigen::VectorXd no_obs = Eigen::VectorXd::Zero(space.num_dofs());
  for (int m = 1; m <= options.steps; ++m) {
    Eigen::VectorXd obs = no_obs;
    if (cfg.omega > 0.0) {
      const Field* truth = options.truth(m);
      if (!truth) {
        log.failure = "no truth snapshot for step " + std::to_string(m);
        log.final_field = phi;
        return log;
      }
      obs = options.observation->rhs(*truth, cfg.omega);
    }
    StepStats stats;
    try {
      phi = stepper.step(phi, obs, &stats);
    } catch (const StepFailure& e) {
      log.failure = "step " + std::to_string(m) + ": " + e.what();
      log.final_field = phi;
      return log;
    }
    record(m, phi, stats.newton_iterations);
  }
  log.final_field = std::move(phi);
  log.completed = true;
  return log;
}

ConditionReport condition_report(const StepperConfig& config, double H,
                                 const AnalysisConstants& c) {
  ConditionReport r;
  r.config = config;
  r.H = H;
  r.constants = c;
  const double eps2 = config.epsilon * config.epsilon;
  const double w = config.omega;
  const double interp = c.c_i * c.c_i * c.c_p * c.c_p * H * H;
  r.lambda0 = (w * c.c_coer * eps2 - 2.0 * w * w * interp - 4.0) / (c.c_coer * eps2 + 4.0 * config.dt);
  const double sup = c.c_inf * c.c_inf + c.c_data_prime * c.c_data_prime;
  r.lambda1 = (c.c_coer * eps2 * w - 4.0 * interp * w * w - 72.0 * sup * sup - 16.0) /
              (c.c_coer * eps2 + 16.0 * config.dt);
  r.uniqueness_margin = (1.0 / config.dt + w) -
                        (interp * w * w + 18.0 * std::pow(c.c_inf, 4)) / (c.c_coer * eps2);
  return r;
}

}  // namespace chcda
