#pragma once

#include "chcda/stepper.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace chcda {

enum class InitialKind { cross, random, file };
enum class ObservationKind { indicator, cell_average };

std::string to_string(InitialKind kind);
std::string to_string(ObservationKind kind);

/// Parameters of a twin experiment. Keys in the text format are the field
/// names below; lists are comma separated.
struct RunManifest {
  int n = 32;
  double epsilon = 0.05;
  double sigma = kDefaultPenalty;
  double dt = 0.002;
  double T = 1.0;
  double omega = 400.0;  // single run (assimilate, H sweep)
  double H = 0.03125;    // single run (assimilate, omega sweep)
  std::vector<double> omega_list{1.0, 20.0, 400.0, 1000.0, 5000.0};
  std::vector<double> H_list{0.011049, 0.015625, 0.03125, 0.0625, 0.125};
  InitialKind ic = InitialKind::random;
  std::string ic_file;
  std::uint64_t seed = 20240601;
  ObservationKind observation = ObservationKind::indicator;
  std::string output_dir = "chcda-out";
  std::vector<double> snapshot_times{0.0, 0.002, 0.01, 0.05, 1.0};
  int workers = 1;
  double newton_tol = 1e-10;
  int newton_max = 30;

  /// Sets one field from its text form. Throws std::invalid_argument for an
  /// unknown key or an unparsable value.
  void set(const std::string& key, const std::string& value);

  /// Throws std::invalid_argument if any field is out of range or a snapshot
  /// time is not on the step grid.
  void validate() const;

  int steps() const;
  std::vector<int> snapshot_steps() const;
  StepperConfig stepper_config(double omega_value) const;

  /// Canonical "key = value" listing (fixed key order, full precision).
  std::string serialize() const;
  /// FNV-1a 64 of the canonical listing of the physics fields, as 16 hex
  /// digits. Output paths and the worker count do not enter the hash.
  std::string hash() const;

  /// Reads "key = value" lines; '#' starts a comment.
  /// Keys absent from the input keep their value from `base`.
  static RunManifest parse(std::istream& in, RunManifest base);
  static RunManifest parse(std::istream& in);
  static RunManifest load(const std::filesystem::path& path, RunManifest base);
  static RunManifest load(const std::filesystem::path& path);
};

/// Parameters of the full-scale suite (n = 64).
RunManifest full_scale_manifest();

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace chcda
