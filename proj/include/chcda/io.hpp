#pragma once

#include "chcda/stepper.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace chcda {

inline constexpr const char* kCsvHeader = "step,t,l2_error,energy,mass,newton_iters";

/// First line "# manifest <hash>", then the fixed header and one row per step.
void write_run_csv(const RunLog& log, const std::filesystem::path& path);

/// Parses a file written by write_run_csv. Throws std::runtime_error on a
/// malformed file.
RunLog read_run_csv(const std::filesystem::path& path);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line plot with one polyline per series. With log_y the axis is log10 and
/// non-positive values are dropped.
void write_svg_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                    const std::string& title, const std::string& y_label, bool log_y,
                    const std::string& manifest_hash);

/// Legacy ASCII VTK of a P2 field as quadratic triangles over the node cloud.
void write_vtk_field(const Field& field, const std::string& name, const std::filesystem::path& path,
                     const std::string& manifest_hash);

/// Flat CSV of a field: "# manifest <hash>", then dof_index,x,y,value.
void write_field_csv(const Field& field, const std::filesystem::path& path, const std::string& manifest_hash);
/// Legacy ASCII VTK of the linear mesh.
void write_vtk_mesh(const Mesh& mesh, const std::filesystem::path& path, const std::string& manifest_hash);

/// Plain-text coefficient dump: a "chcda-field <n> <count>" line followed by
/// one value per line.
void save_field(const Field& field, const std::filesystem::path& path);
Field load_field(std::shared_ptr<const Space> space, const std::filesystem::path& path);

}  // namespace chcda
