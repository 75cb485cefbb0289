#pragma once

#include "chcda/diagnostics.hpp"
#include "chcda/manifest.hpp"
#include "chcda/observation.hpp"
#include "chcda/stepper.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace chcda {

/// Truth trajectory kept in memory, shared read-only by every assimilated run.
struct TruthStore {
  std::shared_ptr<const Space> space;
  std::vector<Field> trajectory;  // steps 0..M
  RunLog log;

  const Field* at(int step) const;
  TruthSource source() const;
};

/// Solves the un-nudged scheme from the Ritz projection of the cross profile.
TruthStore generate_truth(const RunManifest& manifest);

/// One "step_<m>.field" file per step under dir.
void save_truth_trajectory(const TruthStore& truth, const std::filesystem::path& dir);

/// Reads a trajectory written by save_truth_trajectory and recomputes its
/// log. Throws std::runtime_error on missing or mismatched files.
TruthStore load_truth_trajectory(const RunManifest& manifest, const std::filesystem::path& dir);

/// Nodal values uniform in [-1, 1] from mt19937_64(seed).
Field random_field(std::shared_ptr<const Space> space, std::uint64_t seed);

/// Initial state of an assimilated run per manifest.ic.
Field assimilation_initial_condition(const RunManifest& manifest, std::shared_ptr<const Space> space);

/// Observation operator of the requested kind on the grid aligned with H.
std::unique_ptr<ObservationOperator> make_observation(ObservationKind kind, const CoarseObservationGrid& grid);

struct AssimilationRun {
  double omega = 0.0;
  double H_requested = 0.0;
  int cells_per_side = 0;
  std::string alignment_note;
  RunLog log;
};

/// One twin run against the stored truth. omega = 0 gives the free run.
AssimilationRun assimilate(const RunManifest& manifest, const TruthStore& truth, double omega, double H);

struct RunRequest {
  double omega;
  double H;
};

/// Runs independent requests on manifest.workers threads; results keep the
/// request order.
std::vector<AssimilationRun> run_batch(const RunManifest& manifest, const TruthStore& truth,
                                       const std::vector<RunRequest>& requests);

/// One run per distinct aligned H in manifest.H_list at manifest.omega.
std::vector<AssimilationRun> experiment_H_sweep(const RunManifest& manifest, const TruthStore& truth);

/// One run per omega in manifest.omega_list at manifest.H, plus an omega = 0
/// control when the list lacks one.
std::vector<AssimilationRun> experiment_omega_sweep(const RunManifest& manifest, const TruthStore& truth);

struct RunSummary {
  std::string label;
  double omega = 0.0;
  double H = 0.0;
  bool completed = false;
  double initial_error = 0.0;
  double final_error = 0.0;
  double late_log_error = 0.0;  // mean log10 error over t in [T/2, T]
  double energy_rel_error = 0.0;
  DecayFit fit;
  bool converged = false;  // final <= 1e-3 initial and a decaying fit
  bool stalled = false;    // final >= 0.1 initial
};

RunSummary summarize(const AssimilationRun& run, const TruthStore& truth, double dt);

/// Per-run CSVs, combined error and energy SVGs, VTK snapshots and a
/// summary CSV under output_dir/name. Returns the written paths.
std::vector<std::filesystem::path> emit_artifacts(const RunManifest& manifest, const TruthStore& truth,
                                                  const std::vector<AssimilationRun>& runs,
                                                  const std::string& name);

/// Writes the truth CSV, energy plot, mesh and snapshots under
/// output_dir/truth.
std::vector<std::filesystem::path> emit_truth_artifacts(const RunManifest& manifest, const TruthStore& truth);

/// Per-step cell averages of the truth on the grid aligned with H, as
/// t,cell_i,cell_j,value rows. Returns the number of rows written.
std::size_t write_observation_audit(const RunManifest& manifest, const TruthStore& truth, double H,
                                    const std::filesystem::path& path);

}  // namespace chcda
