#include "chcda/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace chcda {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

}  // namespace

void write_run_csv(const RunLog& log, const fs::path& path) {
  std::ofstream out = open_output(path);
  out << "# manifest " << log.manifest_hash << '\n' << kCsvHeader << '\n';
  for (const auto& r : log.rows) {
    out << r.step << ',' << r.t << ',' << r.l2_error << ',' << r.energy << ',' << r.mass << ','
        << r.newton_iters << '\n';
  }
  finish(out, path);
}

RunLog read_run_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  RunLog log;
  log.label = path.stem().string();
  std::string line;
  if (!std::getline(in, line) || line.rfind("# manifest ", 0) != 0) {
    throw std::runtime_error(path.string() + ": missing manifest line");
  }
  log.manifest_hash = line.substr(11);
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    RunRow r;
    std::string err;
    if (!(row >> r.step >> r.t >> err >> r.energy >> r.mass >> r.newton_iters)) {
      throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    }
    r.l2_error = err == "nan" || err == "-nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(err);
    log.rows.push_back(r);
  }
  log.completed = true;
  return log;
}

void write_svg_plot(const std::vector<PlotSeries>& series, const fs::path& path, const std::string& title,
                    const std::string& y_label, bool log_y, const std::string& manifest_hash) {
  constexpr double width = 720, height = 440, left = 80, right = 170, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto transform = [&](double y) { return log_y ? std::log10(y) : y; };
  auto usable = [&](double y) { return std::isfinite(y) && (!log_y || y > 0.0); };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, transform(s.y[i]));
      ymax = std::max(ymax, transform(s.y[i]));
    }
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (log_y) ymin = std::floor(ymin), ymax = std::ceil(ymax);
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  std::ofstream out = open_output(path);
  out << std::setprecision(6);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- manifest " << manifest_hash << " -->\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int yticks = log_y ? static_cast<int>(ymax - ymin) : 5;
  const int ystride = std::max(1, yticks / 10);
  for (int k = 0; k <= yticks; k += ystride) {
    const double y = ymin + (ymax - ymin) * k / std::max(yticks, 1);
    out << "<line x1=\"" << left - 4 << "\" x2=\"" << left << "\" y1=\"" << py(y) << "\" y2=\"" << py(y)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">";
    if (log_y) {
      out << "1e" << static_cast<int>(std::lround(y));
    } else {
      out << y;
    }
    out << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double x = xmin + (xmax - xmin) * k / 5.0;
    out << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << x
        << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">t</text>\n";
  out << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << top + ph / 2 << ")\">" << xml_escape(y_label) << (log_y ? " (log10)" : "") << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!usable(series[s].y[i])) continue;
      out << px(series[s].x[i]) << ',' << py(transform(series[s].y[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 32 << "\" y1=\"" << ly << "\" y2=\""
        << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[s].label)
        << "</text>\n";
  }
  out << "</svg>\n";
  finish(out, path);
}

void write_vtk_field(const Field& field, const std::string& name, const fs::path& path,
                     const std::string& manifest_hash) {
  const Space& space = *field.space;
  const Mesh& mesh = space.mesh();
  std::ofstream out = open_output(path);
  out << "# vtk DataFile Version 3.0\n" << name << " manifest " << manifest_hash << "\nASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\nPOINTS " << space.num_dofs() << " double\n";
  for (int d = 0; d < space.num_dofs(); ++d) out << space.node(d).x() << ' ' << space.node(d).y() << " 0\n";
  const int nt = mesh.num_triangles();
  out << "CELLS " << nt << ' ' << 7 * nt << '\n';
  for (int t = 0; t < nt; ++t) {
    const auto& dofs = space.dofs().element(t);
    out << 6;
    for (int d : dofs) out << ' ' << d;  // same node order as VTK_QUADRATIC_TRIANGLE
    out << '\n';
  }
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "22\n";
  out << "POINT_DATA " << space.num_dofs() << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (int d = 0; d < space.num_dofs(); ++d) out << field.values[d] << '\n';
  finish(out, path);
}

void write_field_csv(const Field& field, const fs::path& path, const std::string& manifest_hash) {
  const Space& space = *field.space;
  std::ofstream out = open_output(path);
  out << "# manifest " << manifest_hash << "\ndof_index,x,y,value\n";
  for (int d = 0; d < space.num_dofs(); ++d) {
    out << d << ',' << space.node(d).x() << ',' << space.node(d).y() << ',' << field.values[d] << '\n';
  }
  finish(out, path);
}

void write_vtk_mesh(const Mesh& mesh, const fs::path& path, const std::string& manifest_hash) {
  std::ofstream out = open_output(path);
  out << "# vtk DataFile Version 3.0\nmesh manifest " << manifest_hash << "\nASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\nPOINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << " 0\n";
  const int nt = mesh.num_triangles();
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& tri : mesh.triangles()) out << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "5\n";
  finish(out, path);
}

void save_field(const Field& field, const fs::path& path) {
  std::ofstream out = open_output(path);
  out << "chcda-field " << field.space->mesh().subdivisions() << ' ' << field.values.size() << '\n';
  for (double v : field.values) out << v << '\n';
  finish(out, path);
}

Field load_field(std::shared_ptr<const Space> space, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string tag;
  int n = 0;
  long count = 0;
  if (!(in >> tag >> n >> count) || tag != "chcda-field") {
    throw std::runtime_error(path.string() + ": not a field file");
  }
  if (n != space->mesh().subdivisions() || count != space->num_dofs()) {
    throw std::runtime_error(path.string() + ": field was written for n = " + std::to_string(n) +
                             ", expected n = " + std::to_string(space->mesh().subdivisions()));
  }
  Eigen::VectorXd values(count);
  for (long i = 0; i < count; ++i) {
    if (!(in >> values[i])) throw std::runtime_error(path.string() + ": truncated field file");
  }
  return Field(std::move(space), std::move(values));
}

}  // namespace chcda
