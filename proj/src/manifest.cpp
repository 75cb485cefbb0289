#include "chcda/manifest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace chcda {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("manifest: " + key + " expects a number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("manifest: " + key + " expects an integer, got '" + text + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

std::string to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::cross: return "cross";
    case InitialKind::random: return "random";
    case InitialKind::file: return "file";
  }
  return "unknown";
}

std::string to_string(ObservationKind kind) {
  return kind == ObservationKind::indicator ? "indicator" : "cell-average";
}

void RunManifest::set(const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  if (key == "n") n = parse_int<int>(key, value);
  else if (key == "epsilon") epsilon = parse_double(key, value);
  else if (key == "sigma") sigma = parse_double(key, value);
  else if (key == "dt") dt = parse_double(key, value);
  else if (key == "T") T = parse_double(key, value);
  else if (key == "omega") omega = parse_double(key, value);
  else if (key == "H") H = parse_double(key, value);
  else if (key == "omega_list") omega_list = parse_list(key, value);
  else if (key == "H_list") H_list = parse_list(key, value);
  else if (key == "snapshot_times") snapshot_times = parse_list(key, value);
  else if (key == "seed") seed = parse_int<std::uint64_t>(key, value);
  else if (key == "workers") workers = parse_int<int>(key, value);
  else if (key == "newton_tol") newton_tol = parse_double(key, value);
  else if (key == "newton_max") newton_max = parse_int<int>(key, value);
  else if (key == "output_dir") output_dir = trim(value);
  else if (key == "ic_file") ic_file = trim(value);
  else if (key == "ic") {
    const std::string v = trim(value);
    if (v == "cross") ic = InitialKind::cross;
    else if (v == "random") ic = InitialKind::random;
    else if (v == "file") ic = InitialKind::file;
    else throw std::invalid_argument("manifest: ic must be cross, random or file, got '" + v + "'");
  } else if (key == "observation") {
    const std::string v = trim(value);
    if (v == "indicator") observation = ObservationKind::indicator;
    else if (v == "cell-average") observation = ObservationKind::cell_average;
    else throw std::invalid_argument("manifest: observation must be indicator or cell-average, got '" + v + "'");
  } else {
    throw std::invalid_argument("manifest: unknown key '" + key + "'");
  }
}

int RunManifest::steps() const { return static_cast<int>(std::lround(T / dt)); }

std::vector<int> RunManifest::snapshot_steps() const {
  std::vector<int> out;
  for (double t : snapshot_times) out.push_back(static_cast<int>(std::lround(t / dt)));
  return out;
}

StepperConfig RunManifest::stepper_config(double omega_value) const {
  StepperConfig cfg;
  cfg.dt = dt;
  cfg.epsilon = epsilon;
  cfg.sigma = sigma;
  cfg.omega = omega_value;
  cfg.newton_tol = newton_tol;
  cfg.newton_max = newton_max;
  return cfg;
}

void RunManifest::validate() const {
  if (n < 2) throw std::invalid_argument("manifest: n must be at least 2");
  if (!(T > 0.0)) throw std::invalid_argument("manifest: T must be positive");
  stepper_config(omega).validate();
  for (double w : omega_list) stepper_config(w).validate();
  auto check_H = [](double h) {
    if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("manifest: H values must lie in (0, 1]");
  };
  check_H(H);
  for (double h : H_list) check_H(h);
  if (std::abs(steps() * dt - T) > 1e-9 * T) {
    throw std::invalid_argument("manifest: T is not a whole number of steps");
  }
  for (double t : snapshot_times) {
    const double m = t / dt;
    std::ostringstream os;
    if (t < 0.0 || t > T * (1 + 1e-12)) {
      os << "manifest: snapshot time " << t << " lies outside [0, T = " << T << "]";
      throw std::invalid_argument(os.str());
    }
    if (std::abs(m - std::round(m)) > 1e-6) {
      os << "manifest: snapshot time " << t << " is not on the step grid";
      throw std::invalid_argument(os.str());
    }
  }
  if (ic == InitialKind::file && ic_file.empty()) throw std::invalid_argument("manifest: ic = file needs ic_file");
  if (workers < 1) throw std::invalid_argument("manifest: workers must be at least 1");
}

std::string RunManifest::serialize() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "n = " << n << "\nepsilon = " << epsilon << "\nsigma = " << sigma << "\ndt = " << dt
     << "\nT = " << T << "\nomega = " << omega << "\nH = " << H << "\nomega_list = " << format_list(omega_list)
     << "\nH_list = " << format_list(H_list) << "\nic = " << to_string(ic) << "\nic_file = " << ic_file
     << "\nseed = " << seed << "\nobservation = " << to_string(observation)
     << "\nsnapshot_times = " << format_list(snapshot_times) << "\nnewton_tol = " << newton_tol
     << "\nnewton_max = " << newton_max << '\n';
  const std::string physics = os.str();
  return physics + "output_dir = " + output_dir + "\nworkers = " + std::to_string(workers) + '\n';
}

std::string RunManifest::hash() const {
  const std::string text = serialize();
  const std::string physics = text.substr(0, text.find("output_dir = "));
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(physics);
  return os.str();
}

RunManifest RunManifest::parse(std::istream& in, RunManifest m) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": expected key = value");
    }
    m.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

RunManifest RunManifest::load(const std::filesystem::path& path, RunManifest base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  return parse(in, std::move(base));
}

RunManifest RunManifest::parse(std::istream& in) { return parse(in, RunManifest{}); }

RunManifest RunManifest::load(const std::filesystem::path& path) { return load(path, RunManifest{}); }

RunManifest full_scale_manifest() {
  RunManifest m;
  m.n = 64;
  return m;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace chcda
