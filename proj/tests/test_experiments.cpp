#include "chcda/experiments.hpp"
#include "chcda/io.hpp"
#include "chcda/manifest.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace chcda;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t c = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++c;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("chcda_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunManifest tiny_physics() {
  RunManifest m;
  m.n = 4;
  m.epsilon = 0.1;
  m.T = 0.04;
  m.omega = 400.0;
  m.H = 0.25;
  m.omega_list = {1.0, 400.0};
  m.H_list = {0.5, 0.25, 0.26};
  m.snapshot_times = {0.0, 0.002, 0.04};
  return m;
}

RunManifest tiny(const std::string& name) {
  RunManifest m = tiny_physics();
  m.output_dir = scratch(name).string();
  return m;
}

// The truth for the tiny manifest is shared across tests; it only depends
// on the physics fields.
const TruthStore& tiny_truth() {
  static const TruthStore truth = generate_truth(tiny_physics());
  return truth;
}

}  // namespace

TEST(Manifest, DesktopDefaults) {
  const RunManifest m;
  EXPECT_EQ(m.n, 32);
  EXPECT_EQ(m.steps(), 500);
  EXPECT_EQ(m.snapshot_steps(), (std::vector<int>{0, 1, 5, 25, 500}));
  EXPECT_EQ(m.observation, ObservationKind::indicator);
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(full_scale_manifest().n, 64);
  EXPECT_NO_THROW(full_scale_manifest().validate());
  const StepperConfig cfg = m.stepper_config(20.0);
  EXPECT_EQ(cfg.omega, 20.0);
  EXPECT_EQ(cfg.dt, m.dt);
  EXPECT_EQ(cfg.sigma, m.sigma);
}

TEST(Manifest, SetParsesAndRejects) {
  RunManifest m;
  m.set("omega_list", "1, 2,3.5");
  EXPECT_EQ(m.omega_list, (std::vector<double>{1.0, 2.0, 3.5}));
  m.set("observation", "cell-average");
  EXPECT_EQ(m.observation, ObservationKind::cell_average);
  m.set("ic", "cross");
  EXPECT_EQ(m.ic, InitialKind::cross);
  m.set("seed", "42");
  EXPECT_EQ(m.seed, 42u);
  EXPECT_THROW(m.set("nonsense", "1"), std::invalid_argument);
  EXPECT_THROW(m.set("n", "3x"), std::invalid_argument);
  EXPECT_THROW(m.set("dt", ""), std::invalid_argument);
  EXPECT_THROW(m.set("ic", "sphere"), std::invalid_argument);
}

TEST(Manifest, ValidateRejectsInconsistentFields) {
  auto broken = [](auto mutate) {
    RunManifest m;
    mutate(m);
    return m;
  };
  EXPECT_THROW(broken([](auto& m) { m.n = 1; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](auto& m) { m.T = 0.0011; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](auto& m) { m.snapshot_times = {0.003}; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](auto& m) { m.snapshot_times = {2.0}; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](auto& m) { m.omega_list = {-1.0}; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](auto& m) { m.H = 0.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](auto& m) { m.ic = InitialKind::file; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](auto& m) { m.workers = 0; }).validate(), std::invalid_argument);
}

TEST(Manifest, TextRoundTripAndComments) {
  RunManifest m;
  m.omega = 1000.0;
  m.H_list = {0.125, 0.0625};
  m.seed = 7;
  std::istringstream in(m.serialize());
  const RunManifest back = RunManifest::parse(in);
  EXPECT_EQ(back.serialize(), m.serialize());
  EXPECT_EQ(back.hash(), m.hash());

  std::istringstream partial("# comment line\nomega = 20   # trailing\n\n dt=0.001\n");
  const RunManifest p = RunManifest::parse(partial);
  EXPECT_EQ(p.omega, 20.0);
  EXPECT_EQ(p.dt, 0.001);
  EXPECT_EQ(p.n, 32);
  std::istringstream bad("omega 20\n");
  EXPECT_THROW(RunManifest::parse(bad), std::invalid_argument);
  EXPECT_THROW(RunManifest::load("/nonexistent/manifest.txt"), std::runtime_error);
}

TEST(Manifest, HashCoversPhysicsOnly) {
  RunManifest a;
  RunManifest b = a;
  b.output_dir = "elsewhere";
  b.workers = 8;
  EXPECT_EQ(a.hash(), b.hash());
  b.seed += 1;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_EQ(a.hash().find_first_not_of("0123456789abcdef"), std::string::npos);
  // published FNV-1a 64 test vectors
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Io, RunCsvRoundTrip) {
  const fs::path dir = scratch("csv");
  RunLog log;
  log.label = "x";
  log.manifest_hash = "0123456789abcdef";
  for (int k = 0; k < 4; ++k) log.rows.push_back({k, 0.002 * k, 1.0 / (k + 3), 0.1 * k, 0.5, k});
  log.rows[0].l2_error = std::numeric_limits<double>::quiet_NaN();
  write_run_csv(log, dir / "sub" / "x.csv");
  const std::string text = slurp(dir / "sub" / "x.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "# manifest 0123456789abcdef");
  EXPECT_NE(text.find(std::string("\n") + kCsvHeader + "\n"), std::string::npos);
  const RunLog back = read_run_csv(dir / "sub" / "x.csv");
  EXPECT_EQ(back.manifest_hash, log.manifest_hash);
  ASSERT_EQ(back.rows.size(), 4u);
  EXPECT_TRUE(std::isnan(back.rows[0].l2_error));
  for (int k = 1; k < 4; ++k) {
    EXPECT_EQ(back.rows[k].l2_error, log.rows[k].l2_error);
    EXPECT_EQ(back.rows[k].t, log.rows[k].t);
    EXPECT_EQ(back.rows[k].newton_iters, k);
  }
  std::ofstream(dir / "bad.csv") << "step,t\n1,2\n";
  EXPECT_THROW(read_run_csv(dir / "bad.csv"), std::runtime_error);
  EXPECT_THROW(read_run_csv(dir / "missing.csv"), std::runtime_error);
}

TEST(Io, SvgHasOnePolylinePerSeries) {
  const fs::path dir = scratch("svg");
  std::vector<PlotSeries> series;
  for (int s = 0; s < 3; ++s) {
    PlotSeries p{"run" + std::to_string(s), {}, {}};
    for (int k = 0; k < 10; ++k) {
      p.x.push_back(k);
      p.y.push_back(std::pow(10.0, -k - s));
    }
    series.push_back(p);
  }
  write_svg_plot(series, dir / "e.svg", "error", "L2 error", true, "feedfacefeedface");
  const std::string svg = slurp(dir / "e.svg");
  EXPECT_EQ(count(svg, "<polyline"), 3u);
  EXPECT_NE(svg.find("feedfacefeedface"), std::string::npos);
  EXPECT_NE(svg.find("1e-"), std::string::npos);
  EXPECT_EQ(svg.rfind("</svg>"), svg.size() - std::string("</svg>\n").size());
}

TEST(Io, FieldFilesRoundTrip) {
  const fs::path dir = scratch("field");
  const auto space = Space::uniform(4);
  const Field f = random_field(space, 3);
  save_field(f, dir / "f.field");
  EXPECT_EQ(load_field(space, dir / "f.field").values, f.values);
  EXPECT_THROW(load_field(Space::uniform(3), dir / "f.field"), std::runtime_error);

  write_vtk_field(f, "phi", dir / "f.vtk", "abc");
  const std::string vtk = slurp(dir / "f.vtk");
  EXPECT_NE(vtk.find("phi manifest abc"), std::string::npos);
  EXPECT_NE(vtk.find("POINTS 81 double"), std::string::npos);
  EXPECT_NE(vtk.find("CELLS 32 224"), std::string::npos);
  EXPECT_EQ(count(vtk, "\n22\n") + 0, 32u);
  EXPECT_NE(vtk.find("POINT_DATA 81"), std::string::npos);

  write_vtk_mesh(space->mesh(), dir / "m.vtk", "abc");
  const std::string mesh = slurp(dir / "m.vtk");
  EXPECT_NE(mesh.find("POINTS 25 double"), std::string::npos);
  EXPECT_NE(mesh.find("CELL_TYPES 32"), std::string::npos);

  write_field_csv(f, dir / "f.csv", "abc");
  std::ifstream in(dir / "f.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# manifest abc");
  std::getline(in, line);
  EXPECT_EQ(line, "dof_index,x,y,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 81);
}

TEST(Experiments, RandomFieldIsSeededUniform) {
  const auto space = Space::uniform(4);
  const Field a = random_field(space, 20240601);
  const Field b = random_field(space, 20240601);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, random_field(space, 20240602).values);
  EXPECT_LE(a.values.cwiseAbs().maxCoeff(), 1.0);
  std::mt19937_64 gen(20240601);
  const double first = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
  EXPECT_EQ(a.values[0], first);
}

TEST(Experiments, TruthTrajectoryConservesMass) {
  const TruthStore& truth = tiny_truth();
  ASSERT_EQ(truth.trajectory.size(), 21u);
  ASSERT_TRUE(truth.log.completed);
  for (std::size_t k = 1; k < truth.log.rows.size(); ++k) {
    EXPECT_NEAR(truth.log.rows[k].mass, truth.log.rows[0].mass, 1e-12);
    EXPECT_LE(truth.log.rows[k].energy, truth.log.rows[k - 1].energy + 1e-12);
  }
  EXPECT_EQ(truth.at(0), &truth.trajectory[0]);
  EXPECT_EQ(truth.at(21), nullptr);
  EXPECT_EQ(truth.source()(20), &truth.trajectory[20]);
}

TEST(Experiments, TruthTrajectoryFilesRoundTrip) {
  const RunManifest m = tiny("traj");
  const TruthStore& truth = tiny_truth();
  save_truth_trajectory(truth, fs::path(m.output_dir) / "traj");
  const TruthStore back = load_truth_trajectory(m, fs::path(m.output_dir) / "traj");
  ASSERT_EQ(back.trajectory.size(), truth.trajectory.size());
  for (std::size_t k = 0; k < truth.trajectory.size(); ++k) EXPECT_EQ(back.trajectory[k].values, truth.trajectory[k].values);
  fs::remove(fs::path(m.output_dir) / "traj" / "step_000007.field");
  EXPECT_THROW(load_truth_trajectory(m, fs::path(m.output_dir) / "traj"), std::runtime_error);
}

TEST(Experiments, AssimilateLabelsAndRows) {
  const RunManifest m = tiny("assim");
  const TruthStore& truth = tiny_truth();
  const AssimilationRun run = assimilate(m, truth, 400.0, 0.25);
  EXPECT_EQ(run.log.label, "omega400_H1-4");
  EXPECT_EQ(run.cells_per_side, 4);
  EXPECT_TRUE(run.alignment_note.empty());
  EXPECT_TRUE(run.log.completed);
  EXPECT_EQ(run.log.rows.size(), 21u);
  EXPECT_EQ(run.log.snapshots.size(), 3u);
  EXPECT_EQ(run.log.manifest_hash, m.hash());
  const AssimilationRun free = assimilate(m, truth, 0.0, 0.25);
  EXPECT_EQ(free.log.label, "omega0");
  const AssimilationRun odd = assimilate(m, truth, 400.0, 0.3);
  EXPECT_EQ(odd.cells_per_side, 4);
  EXPECT_FALSE(odd.alignment_note.empty());
}

TEST(Experiments, BatchIsDeterministicAcrossWorkerCounts) {
  RunManifest m = tiny("batch");
  const TruthStore& truth = tiny_truth();
  const std::vector<RunRequest> requests{{400.0, 0.25}, {1.0, 0.5}, {0.0, 0.25}};
  const auto serial = run_batch(m, truth, requests);
  m.workers = 3;
  const auto parallel = run_batch(m, truth, requests);
  ASSERT_EQ(serial.size(), 3u);
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].log.label, parallel[k].log.label);
    EXPECT_EQ(serial[k].log.final_field.values, parallel[k].log.final_field.values);
  }
}

TEST(Experiments, SweepsDeduplicateAndAddControl) {
  const RunManifest m = tiny("sweeps");
  const TruthStore& truth = tiny_truth();
  const auto hs = experiment_H_sweep(m, truth);
  ASSERT_EQ(hs.size(), 2u);  // 0.25 and 0.26 both align to 1/4
  EXPECT_EQ(hs[0].cells_per_side, 2);
  EXPECT_EQ(hs[1].cells_per_side, 4);
  const auto ws = experiment_omega_sweep(m, truth);
  ASSERT_EQ(ws.size(), 3u);
  EXPECT_EQ(ws[2].omega, 0.0);
  EXPECT_EQ(ws[2].log.label, "omega0");
}

TEST(Experiments, SummaryAndArtifacts) {
  const RunManifest m = tiny("artifacts");
  const TruthStore& truth = tiny_truth();
  const std::vector<AssimilationRun> runs = experiment_omega_sweep(m, truth);
  const RunSummary s = summarize(runs[1], truth, m.dt);
  EXPECT_EQ(s.label, "omega400_H1-4");
  EXPECT_TRUE(s.completed);
  EXPECT_EQ(s.initial_error, runs[1].log.rows.front().l2_error);
  EXPECT_EQ(s.final_error, runs[1].log.rows.back().l2_error);
  EXPECT_LT(s.final_error, s.initial_error);

  const auto paths = emit_artifacts(m, truth, runs, "sweep");
  for (const auto& p : paths) EXPECT_TRUE(fs::exists(p)) << p;
  const fs::path dir = fs::path(m.output_dir) / "sweep";
  std::size_t vtk = 0, csv = 0;
  for (const auto& e : fs::directory_iterator(dir / "vtk")) vtk += e.path().extension() == ".vtk";
  for (const auto& e : fs::directory_iterator(dir / "fields")) csv += e.path().extension() == ".csv";
  EXPECT_EQ(vtk, m.snapshot_times.size() * runs.size());
  EXPECT_EQ(csv, m.snapshot_times.size() * runs.size());
  EXPECT_EQ(count(slurp(dir / "error.svg"), "<polyline"), runs.size());
  EXPECT_NE(slurp(dir / "summary.csv").find(m.hash()), std::string::npos);
  for (const auto& run : runs) {
    const fs::path p = dir / (run.log.label + ".csv");
    ASSERT_TRUE(fs::exists(p));
    EXPECT_EQ(read_run_csv(p).rows.size(), run.log.rows.size());
  }

  // rerunning the same manifest reproduces the CSVs byte for byte
  const std::string before = slurp(dir / "omega400_H1-4.csv");
  emit_artifacts(m, truth, experiment_omega_sweep(m, truth), "sweep");
  EXPECT_EQ(slurp(dir / "omega400_H1-4.csv"), before);

  const auto truth_paths = emit_truth_artifacts(m, truth);
  EXPECT_TRUE(fs::exists(fs::path(m.output_dir) / "truth" / "truth.csv"));
  EXPECT_TRUE(fs::exists(fs::path(m.output_dir) / "truth" / "mesh.vtk"));
}

TEST(Experiments, ObservationAuditRows) {
  const RunManifest m = tiny("audit");
  const TruthStore& truth = tiny_truth();
  const fs::path p = fs::path(m.output_dir) / "obs.csv";
  EXPECT_EQ(write_observation_audit(m, truth, 0.5, p), 21u * 4u);
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# manifest " + m.hash());
  std::getline(in, line);
  EXPECT_EQ(line, "t,cell_i,cell_j,value");
}

TEST(Experiments, CellAverageObservationKind) {
  RunManifest m = tiny("cellavg");
  m.observation = ObservationKind::cell_average;
  const AssimilationRun run = assimilate(m, tiny_truth(), 400.0, 0.25);
  EXPECT_TRUE(run.log.completed);
  EXPECT_LT(run.log.errors().back(), run.log.errors().front());
  const auto space = Space::uniform(4);
  EXPECT_EQ(make_observation(ObservationKind::cell_average, CoarseObservationGrid(space, 2))->describe(),
            "cell-average H=1/2");
}
