#include "chcda/experiments.hpp"
#include "chcda/io.hpp"
#include "chcda/projection.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace chcda;

namespace {

constexpr const char* kOutputRootEnv = "CHCDA_OUTPUT_ROOT";

struct Common {
  std::string config;
  std::string truth_dir;
  bool full_scale = false;
  std::map<std::string, std::string> values;
};

// Every manifest key becomes a --flag; flags override the config file.
void add_manifest_flags(CLI::App& app, Common& common) {
  app.add_option("--config", common.config, "key = value manifest file")->check(CLI::ExistingFile);
  app.add_option("--truth-dir", common.truth_dir, "load the truth trajectory from per-step files");
  app.add_flag("--full-scale", common.full_scale, "start from the n = 64 parameter set instead of the desk-scale defaults");
  const std::pair<const char*, const char*> keys[] = {
      {"n", "mesh subdivisions per side"},
      {"epsilon", "interface width"},
      {"sigma", "interior penalty parameter"},
      {"dt", "time step"},
      {"T", "final time"},
      {"omega", "nudging parameter of single runs"},
      {"H", "observation resolution of single runs"},
      {"omega_list", "comma-separated nudging parameters"},
      {"H_list", "comma-separated observation resolutions"},
      {"ic", "initial condition of assimilated runs: cross, random or file"},
      {"ic_file", "coefficient file for ic = file"},
      {"seed", "random initial condition seed"},
      {"observation", "indicator or cell-average"},
      {"output_dir", "output directory (relative paths resolve under $CHCDA_OUTPUT_ROOT)"},
      {"snapshot_times", "comma-separated VTK snapshot times"},
      {"workers", "concurrent runs in sweeps"},
      {"newton_tol", "Newton residual tolerance"},
      {"newton_max", "Newton iteration cap"},
  };
  for (const auto& [key, help] : keys) {
    std::string flag = std::string("--") + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    app.add_option_function<std::string>(
        flag, [&common, key = std::string(key)](const std::string& v) { common.values[key] = v; }, help);
  }
}

RunManifest resolve_manifest(const Common& common) {
  RunManifest m = common.full_scale ? full_scale_manifest() : RunManifest{};
  if (!common.config.empty()) m = RunManifest::load(common.config, m);
  for (const auto& [k, v] : common.values) m.set(k, v);
  if (const char* root = std::getenv(kOutputRootEnv); root && *root && fs::path(m.output_dir).is_relative()) {
    m.output_dir = (fs::path(root) / m.output_dir).string();
  }
  m.validate();
  return m;
}

// Refuses a penalty for which the interior penalty form is not coercive on
// this mesh.
void check_penalty(const RunManifest& m) {
  const CoercivityEstimate e = estimate_coercivity_continuity(*Space::uniform(m.n), PenaltySetting{m.sigma});
  std::cerr << "penalty check: sigma = " << m.sigma << ", C_coer = " << e.c_coer << '\n';
  if (!(e.c_coer > 0.0)) {
    throw std::invalid_argument("penalty sigma = " + std::to_string(m.sigma) + " is not coercive on n = " +
                                std::to_string(m.n));
  }
}

TruthStore obtain_truth(const RunManifest& m, const Common& common) {
  check_penalty(m);
  if (!common.truth_dir.empty()) {
    std::cerr << "loading truth trajectory from " << common.truth_dir << '\n';
    return load_truth_trajectory(m, common.truth_dir);
  }
  std::cerr << "computing truth: n = " << m.n << ", " << m.steps() << " steps\n";
  return generate_truth(m);
}

void write_manifest_copy(const RunManifest& m, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "manifest.txt");
  out << "# hash " << m.hash() << '\n' << m.serialize();
}

int report_runs(const RunManifest& m, const TruthStore& truth, const std::vector<AssimilationRun>& runs,
                const std::string& name) {
  const auto paths = emit_artifacts(m, truth, runs, name);
  write_manifest_copy(m, fs::path(m.output_dir) / name);
  bool all_completed = true;
  std::cout << std::setprecision(4);
  for (const auto& run : runs) {
    if (!run.alignment_note.empty()) std::cerr << "note: " << run.alignment_note << '\n';
    const RunSummary s = summarize(run, truth, m.dt);
    std::cout << std::left << std::setw(20) << s.label << " initial " << s.initial_error << "  final "
              << s.final_error << "  late log10 " << s.late_log_error << "  decay " << to_string(s.fit.status)
              << (s.converged ? "  converged" : "") << '\n';
    if (!run.log.completed) {
      all_completed = false;
      std::cerr << run.log.label << " stopped early: " << run.log.failure << '\n';
    }
  }
  std::cout << "wrote " << paths.size() << " files under " << (fs::path(m.output_dir) / name).string() << '\n';
  return all_completed ? 0 : 1;
}

int cmd_truth(const Common& common, bool save_trajectory) {
  const RunManifest m = resolve_manifest(common);
  check_penalty(m);
  const TruthStore truth = generate_truth(m);
  const auto paths = emit_truth_artifacts(m, truth);
  write_manifest_copy(m, fs::path(m.output_dir) / "truth");
  if (save_trajectory) save_truth_trajectory(truth, fs::path(m.output_dir) / "truth" / "trajectory");
  const auto& rows = truth.log.rows;
  std::cout << std::setprecision(10) << "truth: " << rows.size() - 1 << " steps, energy " << rows.front().energy
            << " -> " << rows.back().energy << ", mass drift " << rows.back().mass - rows.front().mass << '\n'
            << "wrote " << paths.size() << " files under " << (fs::path(m.output_dir) / "truth").string() << '\n';
  return 0;
}

int cmd_assimilate(const Common& common, bool audit) {
  const RunManifest m = resolve_manifest(common);
  const TruthStore truth = obtain_truth(m, common);
  if (audit) {
    const fs::path path = fs::path(m.output_dir) / "assimilate" / "observations.csv";
    const std::size_t rows = write_observation_audit(m, truth, m.H, path);
    std::cout << "wrote " << rows << " cell averages to " << path.string() << '\n';
  }
  return report_runs(m, truth, {assimilate(m, truth, m.omega, m.H)}, "assimilate");
}

int cmd_sweep_h(const Common& common) {
  const RunManifest m = resolve_manifest(common);
  const TruthStore truth = obtain_truth(m, common);
  return report_runs(m, truth, experiment_H_sweep(m, truth), "sweep-h");
}

int cmd_sweep_omega(const Common& common) {
  const RunManifest m = resolve_manifest(common);
  const TruthStore truth = obtain_truth(m, common);
  return report_runs(m, truth, experiment_omega_sweep(m, truth), "sweep-omega");
}

void dump_matrices(const RunManifest& m, const std::shared_ptr<const Space>& space, const fs::path& dir) {
  const PenaltySetting penalty{m.sigma};
  fs::create_directories(dir);
  write_matrix_market(assemble_mass(*space).matrix, (dir / "mass.mtx").string());
  write_matrix_market(assemble_stiffness(*space).matrix, (dir / "stiffness.mtx").string());
  write_matrix_market(assemble_cip(*space, penalty).matrix, (dir / "cip.mtx").string());
  write_matrix_market(assemble_norm_2h_gram(*space, penalty).matrix, (dir / "norm_2h_gram.mtx").string());
  const CoarseObservationGrid grid(space, aligned_cells_per_side(m.H, m.n));
  write_matrix_market(assemble_nudging(grid).matrix, (dir / "nudging.mtx").string());
  write_matrix_market(assemble_indicator_mass(*space, indicator_nodes(grid)), (dir / "indicator.mtx").string());
  std::cout << "wrote matrices to " << dir.string() << '\n';
}

int cmd_report(const Common& common, const std::string& matrix_dir) {
  const RunManifest m = resolve_manifest(common);
  const auto space = Space::uniform(m.n);
  const PenaltySetting penalty{m.sigma};
  if (!matrix_dir.empty()) dump_matrices(m, space, matrix_dir);
  const Field reference = ritz_project(space, CrossProfile(m.epsilon), penalty).field;

  const fs::path dir = fs::path(m.output_dir) / "report";
  fs::create_directories(dir);
  std::ofstream csv(dir / "conditions.csv");
  csv << std::setprecision(10) << "# manifest " << m.hash() << '\n'
      << "constants,n,H,omega,c_coer,c_cont,c_p,c_i,c_inf,c_data_prime,lambda0,lambda1,uniqueness_margin\n";

  std::vector<int> cells;
  for (double H : m.H_list) {
    const int c = aligned_cells_per_side(H, m.n);
    if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
  }
  std::cout << std::setprecision(5);
  for (int c : cells) {
    const CoarseObservationGrid grid(space, c);
    for (const AnalysisConstants& k : {AnalysisConstants::textbook(), estimate_constants(grid, penalty, reference)}) {
      std::cout << "n = " << m.n << ", H = 1/" << c << ", constants: " << k.label << "\n  C_coer " << k.c_coer
                << "  C_cont " << k.c_cont << "  C_P " << k.c_p << "  C_I " << k.c_i << "  C_inf " << k.c_inf
                << "  C_data' " << k.c_data_prime << '\n';
      for (double w : m.omega_list) {
        const ConditionReport r = condition_report(m.stepper_config(w), grid.resolution(), k);
        std::cout << "  omega " << std::setw(6) << w << ": lambda0 " << std::setw(12) << r.lambda0 << "  lambda1 "
                  << std::setw(12) << r.lambda1 << "  uniqueness " << std::setw(12) << r.uniqueness_margin
                  << (r.stability_holds() ? "" : "  (stability condition not met)") << '\n';
        csv << k.label << ',' << m.n << ',' << grid.resolution() << ',' << w << ',' << k.c_coer << ',' << k.c_cont
            << ',' << k.c_p << ',' << k.c_i << ',' << k.c_inf << ',' << k.c_data_prime << ',' << r.lambda0 << ','
            << r.lambda1 << ',' << r.uniqueness_margin << '\n';
      }
    }
  }
  std::cout << "The conditions are sufficient, not necessary: runs may converge where they are negative.\n"
            << "wrote " << (dir / "conditions.csv").string() << '\n';
  return csv ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cahn-Hilliard C0 interior penalty solver with nudging data assimilation"};
  app.require_subcommand(1);

  Common common;
  bool save_trajectory = false;
  auto* truth = app.add_subcommand("truth", "compute the truth trajectory from the cross initial state");
  truth->add_flag("--save-trajectory", save_trajectory, "write one coefficient file per step");
  auto* assim = app.add_subcommand("assimilate", "one nudged run against the truth at --omega and --H");
  bool audit = false;
  assim->add_flag("--audit-observations", audit, "write the per-step truth cell averages");
  auto* sweep_h = app.add_subcommand("sweep-h", "nudged runs over --H-list at --omega");
  auto* sweep_omega = app.add_subcommand("sweep-omega", "nudged runs over --omega-list at --H plus a free run");
  auto* report = app.add_subcommand("report", "analysis constants and condition values per H and omega");
  std::string matrix_dir;
  report->add_option("--dump-matrices", matrix_dir, "write the assembled matrices in MatrixMarket format to this directory");
  for (auto* sub : {truth, assim, sweep_h, sweep_omega, report}) add_manifest_flags(*sub, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*truth) return cmd_truth(common, save_trajectory);
    if (*assim) return cmd_assimilate(common, audit);
    if (*sweep_h) return cmd_sweep_h(common);
    if (*sweep_omega) return cmd_sweep_omega(common);
    if (*report) return cmd_report(common, matrix_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
