#include "chcda/experiments.hpp"

#include "chcda/io.hpp"
#include "chcda/projection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

namespace chcda {

namespace fs = std::filesystem;

namespace {

std::string run_label(double omega, int cells) {
  std::ostringstream os;
  os << "omega" << omega;
  if (omega > 0.0) os << "_H1-" << cells;
  return os.str();
}

std::string time_tag(double t) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << t;
  return os.str();
}

}  // namespace

const Field* TruthStore::at(int step) const {
  if (step < 0 || step >= static_cast<int>(trajectory.size())) return nullptr;
  return &trajectory[static_cast<std::size_t>(step)];
}

TruthSource TruthStore::source() const {
  return [this](int step) { return at(step); };
}

TruthStore generate_truth(const RunManifest& manifest) {
  manifest.validate();
  TruthStore store;
  store.space = Space::uniform(manifest.n);
  const PenaltySetting penalty{manifest.sigma};
  Field phi = ritz_project(store.space, CrossProfile(manifest.epsilon), penalty).field;

  Stepper stepper(store.space, manifest.stepper_config(0.0));
  const int steps = manifest.steps();
  store.trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  store.trajectory.push_back(phi);
  const std::vector<int> snaps = manifest.snapshot_steps();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(store.space->num_dofs());
  RunLog log;
  log.label = "truth";
  log.manifest_hash = manifest.hash();
  auto record = [&](int step, const Field& f, int iters) {
    RunRow row;
    row.step = step;
    row.t = step * manifest.dt;
    row.l2_error = 0.0;
    row.energy = energy(f, manifest.epsilon);
    row.mass = mass(*store.space, f.values);
    row.newton_iters = iters;
    log.rows.push_back(row);
    if (std::find(snaps.begin(), snaps.end(), step) != snaps.end()) log.snapshots.push_back({step, row.t, f});
  };
  record(0, phi, 0);
  for (int m = 1; m <= steps; ++m) {
    StepStats stats;
    phi = stepper.step(phi, zero, &stats);
    store.trajectory.push_back(phi);
    record(m, phi, stats.newton_iterations);
  }
  log.final_field = phi;
  log.completed = true;
  store.log = std::move(log);
  return store;
}

namespace {

fs::path step_file(const fs::path& dir, int step) {
  std::ostringstream os;
  os << "step_" << std::setw(6) << std::setfill('0') << step << ".field";
  return dir / os.str();
}

}  // namespace

void save_truth_trajectory(const TruthStore& truth, const fs::path& dir) {
  for (std::size_t m = 0; m < truth.trajectory.size(); ++m) {
    save_field(truth.trajectory[m], step_file(dir, static_cast<int>(m)));
  }
}

TruthStore load_truth_trajectory(const RunManifest& manifest, const fs::path& dir) {
  manifest.validate();
  TruthStore store;
  store.space = Space::uniform(manifest.n);
  const std::vector<int> snaps = manifest.snapshot_steps();
  store.log.label = "truth";
  store.log.manifest_hash = manifest.hash();
  for (int m = 0; m <= manifest.steps(); ++m) {
    const fs::path path = step_file(dir, m);
    if (!fs::exists(path)) throw std::runtime_error("truth trajectory is missing " + path.string());
    store.trajectory.push_back(load_field(store.space, path));
    const Field& f = store.trajectory.back();
    RunRow row;
    row.step = m;
    row.t = m * manifest.dt;
    row.energy = energy(f, manifest.epsilon);
    row.mass = mass(*store.space, f.values);
    store.log.rows.push_back(row);
    if (std::find(snaps.begin(), snaps.end(), m) != snaps.end()) store.log.snapshots.push_back({m, row.t, f});
  }
  store.log.final_field = store.trajectory.back();
  store.log.completed = true;
  return store;
}

Field random_field(std::shared_ptr<const Space> space, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Eigen::VectorXd v(space->num_dofs());
  for (auto& x : v) x = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
  return Field(std::move(space), std::move(v));
}

Field assimilation_initial_condition(const RunManifest& manifest, std::shared_ptr<const Space> space) {
  switch (manifest.ic) {
    case InitialKind::random: return random_field(std::move(space), manifest.seed);
    case InitialKind::cross:
      return ritz_project(std::move(space), CrossProfile(manifest.epsilon), PenaltySetting{manifest.sigma}).field;
    case InitialKind::file: return load_field(std::move(space), manifest.ic_file);
  }
  throw std::invalid_argument("unknown initial condition kind");
}

std::unique_ptr<ObservationOperator> make_observation(ObservationKind kind, const CoarseObservationGrid& grid) {
  if (kind == ObservationKind::indicator) return std::make_unique<IndicatorObservation>(grid);
  return std::make_unique<CellAverageObservation>(grid);
}

AssimilationRun assimilate(const RunManifest& manifest, const TruthStore& truth, double omega, double H) {
  AssimilationRun out;
  out.omega = omega;
  out.H_requested = H;
  out.cells_per_side = aligned_cells_per_side(H, manifest.n, &out.alignment_note);

  std::unique_ptr<ObservationOperator> observation;
  SparseMatrix nudging;
  if (omega > 0.0) {
    observation = make_observation(manifest.observation, CoarseObservationGrid(truth.space, out.cells_per_side));
    nudging = observation->matrix();
  }
  Stepper stepper(truth.space, manifest.stepper_config(omega), std::move(nudging));
  RunOptions options;
  options.steps = manifest.steps();
  options.truth = truth.source();
  options.observation = observation.get();
  options.snapshot_steps = manifest.snapshot_steps();
  options.label = run_label(omega, out.cells_per_side);
  out.log = run(stepper, assimilation_initial_condition(manifest, truth.space), options);
  out.log.manifest_hash = manifest.hash();
  return out;
}

std::vector<AssimilationRun> run_batch(const RunManifest& manifest, const TruthStore& truth,
                                       const std::vector<RunRequest>& requests) {
  std::vector<AssimilationRun> results(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i] = assimilate(manifest, truth, requests[i].omega, requests[i].H);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(manifest.workers), requests.size());
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < count; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<AssimilationRun> experiment_H_sweep(const RunManifest& manifest, const TruthStore& truth) {
  std::vector<RunRequest> requests;
  std::vector<int> seen;
  for (double H : manifest.H_list) {
    const int m = aligned_cells_per_side(H, manifest.n);
    if (std::find(seen.begin(), seen.end(), m) != seen.end()) continue;
    seen.push_back(m);
    requests.push_back({manifest.omega, H});
  }
  return run_batch(manifest, truth, requests);
}

std::vector<AssimilationRun> experiment_omega_sweep(const RunManifest& manifest, const TruthStore& truth) {
  std::vector<RunRequest> requests;
  for (double w : manifest.omega_list) requests.push_back({w, manifest.H});
  if (std::none_of(requests.begin(), requests.end(), [](const RunRequest& r) { return r.omega == 0.0; })) {
    requests.push_back({0.0, manifest.H});
  }
  return run_batch(manifest, truth, requests);
}

RunSummary summarize(const AssimilationRun& run, const TruthStore& truth, double dt) {
  RunSummary s;
  s.label = run.log.label;
  s.omega = run.omega;
  s.H = 1.0 / run.cells_per_side;
  s.completed = run.log.completed;
  if (run.log.rows.empty()) return s;
  const auto& rows = run.log.rows;
  s.initial_error = rows.front().l2_error;
  s.final_error = rows.back().l2_error;
  const double T = rows.back().t;
  double sum = 0.0;
  int count = 0;
  for (const auto& r : rows) {
    if (r.t >= 0.5 * T - 1e-12) {
      sum += std::log10(std::max(r.l2_error, 1e-300));
      ++count;
    }
  }
  s.late_log_error = count ? sum / count : 0.0;
  const auto last = static_cast<std::size_t>(rows.back().step);
  if (last < truth.log.rows.size()) {
    const double e_true = truth.log.rows[last].energy;
    s.energy_rel_error = std::abs(rows.back().energy - e_true) / std::abs(e_true);
  }
  if (rows.size() >= 20) s.fit = fit_decay_envelope(run.log.errors(), dt);
  s.converged = s.completed && s.final_error <= 1e-3 * s.initial_error && s.fit.status == DecayStatus::decaying;
  s.stalled = s.final_error >= 0.1 * s.initial_error;
  return s;
}

std::vector<fs::path> emit_artifacts(const RunManifest& manifest, const TruthStore& truth,
                                     const std::vector<AssimilationRun>& runs, const std::string& name) {
  const fs::path dir = fs::path(manifest.output_dir) / name;
  const std::string hash = manifest.hash();
  std::vector<fs::path> written;
  std::vector<PlotSeries> errors, energies;

  PlotSeries truth_energy{"truth", {}, {}};
  for (const auto& r : truth.log.rows) {
    truth_energy.x.push_back(r.t);
    truth_energy.y.push_back(r.energy);
  }
  energies.push_back(truth_energy);

  for (const auto& run : runs) {
    const fs::path csv = dir / (run.log.label + ".csv");
    write_run_csv(run.log, csv);
    written.push_back(csv);
    PlotSeries e{run.log.label, {}, {}}, en{run.log.label, {}, {}};
    for (const auto& r : run.log.rows) {
      e.x.push_back(r.t);
      e.y.push_back(r.l2_error);
      en.x.push_back(r.t);
      en.y.push_back(r.energy);
    }
    errors.push_back(std::move(e));
    energies.push_back(std::move(en));
    for (const auto& snap : run.log.snapshots) {
      const fs::path vtk = dir / "vtk" / (run.log.label + "_t" + time_tag(snap.t) + ".vtk");
      write_vtk_field(snap.field, "phi", vtk, hash);
      written.push_back(vtk);
      const fs::path csv = dir / "fields" / (run.log.label + "_t" + time_tag(snap.t) + ".csv");
      write_field_csv(snap.field, csv, hash);
      written.push_back(csv);
    }
  }
  write_svg_plot(errors, dir / "error.svg", name + ": L2 error", "error", true, hash);
  write_svg_plot(energies, dir / "energy.svg", name + ": energy", "energy", false, hash);
  written.push_back(dir / "error.svg");
  written.push_back(dir / "energy.svg");

  const fs::path summary_path = dir / "summary.csv";
  std::ofstream out(summary_path);
  if (!out) throw std::runtime_error("cannot open " + summary_path.string() + " for writing");
  out << std::setprecision(10) << "# manifest " << hash << '\n'
      << "label,omega,H,completed,initial_error,final_error,late_log10_error,energy_rel_error,decay_status,"
         "decay_ratio,plateau,converged\n";
  for (const auto& run : runs) {
    const RunSummary s = summarize(run, truth, manifest.dt);
    out << s.label << ',' << s.omega << ',' << s.H << ',' << s.completed << ',' << s.initial_error << ','
        << s.final_error << ',' << s.late_log_error << ',' << s.energy_rel_error << ',' << to_string(s.fit.status)
        << ',' << s.fit.ratio << ',' << s.fit.plateau << ',' << s.converged << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + summary_path.string());
  written.push_back(summary_path);
  return written;
}

std::vector<fs::path> emit_truth_artifacts(const RunManifest& manifest, const TruthStore& truth) {
  const fs::path dir = fs::path(manifest.output_dir) / "truth";
  const std::string hash = manifest.hash();
  std::vector<fs::path> written;
  write_run_csv(truth.log, dir / "truth.csv");
  written.push_back(dir / "truth.csv");
  write_vtk_mesh(truth.space->mesh(), dir / "mesh.vtk", hash);
  written.push_back(dir / "mesh.vtk");
  PlotSeries e{"truth", {}, {}};
  for (const auto& r : truth.log.rows) {
    e.x.push_back(r.t);
    e.y.push_back(r.energy);
  }
  write_svg_plot({e}, dir / "energy.svg", "truth energy", "energy", false, hash);
  written.push_back(dir / "energy.svg");
  for (const auto& snap : truth.log.snapshots) {
    const fs::path vtk = dir / "vtk" / ("truth_t" + time_tag(snap.t) + ".vtk");
    write_vtk_field(snap.field, "phi", vtk, hash);
    written.push_back(vtk);
    const fs::path csv = dir / "fields" / ("truth_t" + time_tag(snap.t) + ".csv");
    write_field_csv(snap.field, csv, hash);
    written.push_back(csv);
  }
  return written;
}

std::size_t write_observation_audit(const RunManifest& manifest, const TruthStore& truth, double H,
                                    const fs::path& path) {
  const CoarseObservationGrid grid(truth.space, aligned_cells_per_side(H, manifest.n));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17) << "# manifest " << manifest.hash() << "\nt,cell_i,cell_j,value\n";
  const int m = grid.cells_per_side();
  std::size_t rows = 0;
  for (std::size_t k = 0; k < truth.trajectory.size(); ++k) {
    const Eigen::VectorXd avg = project_IH(truth.trajectory[k], grid);
    const double t = static_cast<double>(k) * manifest.dt;
    for (int c = 0; c < grid.num_cells(); ++c, ++rows) out << t << ',' << c % m << ',' << c / m << ',' << avg[c] << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
  return rows;
}

}  // namespace chcda
