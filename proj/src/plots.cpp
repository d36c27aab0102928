#include "dapigrid/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dapigrid/errors.hpp"

namespace dapigrid {

namespace {

// DG colours in declaration order; cycles beyond four.
constexpr const char* kColors[] = {"#1f4fd1", "#d62728", "#2ca02c", "#8c564b", "#9467bd", "#ff7f0e"};

constexpr double kWidth = 720, kHeight = 360;
constexpr double kLeft = 80, kRight = 20, kTop = 36, kBottom = 48;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(1e-6, 1e-3 * std::abs(hi));
      lo -= pad;
      hi += pad;
    }
  }
};

class Canvas {
 public:
  Canvas(Range x, Range y) : x_(x), y_(y) {}

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  void frame(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    svg_ << "<rect x='" << kLeft << "' y='" << kTop << "' width='" << kWidth - kLeft - kRight << "' height='"
         << kHeight - kTop - kBottom << "' fill='none' stroke='#444'/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = x_.lo + (x_.hi - x_.lo) * k / 4.0;
      const double yv = y_.lo + (y_.hi - y_.lo) * k / 4.0;
      svg_ << "<text x='" << px(xv) << "' y='" << kHeight - kBottom + 16 << "' font-size='11' text-anchor='middle'>"
           << label(xv) << "</text>\n";
      svg_ << "<text x='" << kLeft - 6 << "' y='" << py(yv) + 4 << "' font-size='11' text-anchor='end'>" << label(yv)
           << "</text>\n";
    }
    svg_ << "<text x='" << kWidth / 2 << "' y='22' font-size='14' text-anchor='middle'>" << title << "</text>\n";
    svg_ << "<text x='" << kWidth / 2 << "' y='" << kHeight - 8 << "' font-size='12' text-anchor='middle'>" << xlabel
         << "</text>\n";
    svg_ << "<text x='16' y='" << kHeight / 2 << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 "
         << kHeight / 2 << ")'>" << ylabel << "</text>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
    if (pts.empty()) return;
    svg_ << "<polyline fill='none' stroke='" << color << "' stroke-width='1.4' points='";
    for (const auto& [x, y] : pts) svg_ << px(x) << "," << py(y) << " ";
    svg_ << "'/>\n";
  }

  void dot(double x, double y, const std::string& color) {
    svg_ << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='2.5' fill='" << color << "'/>\n";
  }

  void legend(int index, const std::string& text, const char* color) {
    const double x = kLeft + 10 + 70 * index;
    svg_ << "<line x1='" << x << "' y1='" << kTop + 12 << "' x2='" << x + 18 << "' y2='" << kTop + 12 << "' stroke='"
         << color << "' stroke-width='2'/><text x='" << x + 22 << "' y='" << kTop + 16 << "' font-size='11'>" << text
         << "</text>\n";
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << svg_.str() << "</svg>\n";
  }

 private:
  static std::string label(double v) {
    std::ostringstream os;
    os.precision(std::abs(v) >= 1000 ? 6 : 4);
    os << v;
    return os.str();
  }

  Range x_, y_;
  std::ostringstream svg_;
};

struct Family {
  const char* file;
  const char* title;
  const char* unit;
  Eigen::VectorXd Sample::*field;
};

}  // namespace

std::vector<std::filesystem::path> plot_trajectory(const Trajectory& tr, const std::filesystem::path& dir) {
  const Family families[] = {
      {"frequency.svg", "Frequency", "f [Hz]", &Sample::f_hz},
      {"voltage.svg", "Voltage amplitude", "E [V]", &Sample::E},
      {"active_power.svg", "Active power", "P [W]", &Sample::P},
      {"reactive_power.svg", "Reactive power", "Q [VAr]", &Sample::Q},
      {"Omega.svg", "Frequency secondary variable", "Omega [rad/s]", &Sample::Omega},
      {"e.svg", "Voltage secondary variable", "e [V]", &Sample::e},
  };
  std::vector<std::filesystem::path> written;
  for (const Family& f : families) {
    Range xr, yr;
    for (const Sample& s : tr.samples) {
      xr.add(s.t);
      for (Eigen::Index i = 0; i < (s.*f.field).size(); ++i) yr.add((s.*f.field)(i));
    }
    xr.finish();
    yr.finish();
    Canvas c(xr, yr);
    c.frame(f.title, "t [s]", f.unit);
    for (int i = 0; i < tr.n; ++i) {
      const char* color = kColors[i % std::size(kColors)];
      std::vector<std::pair<double, double>> run;
      for (const Sample& s : tr.samples) {
        const double v = (s.*f.field)(i);
        if (std::isfinite(v) && std::isfinite(s.t)) {
          run.emplace_back(s.t, v);
        } else {
          c.polyline(run, color);
          run.clear();
        }
      }
      c.polyline(run, color);
      c.legend(i, "DG " + std::to_string(i + 1), color);
    }
    written.push_back(dir / f.file);
    c.save(written.back());
  }
  return written;
}

std::filesystem::path plot_trace(const TraceTable& table, const std::string& gain, const std::filesystem::path& dir) {
  Range xr, yr;
  for (const auto& row : table.eigenvalues)
    for (const auto& z : row) {
      xr.add(z.real());
      yr.add(z.imag());
    }
  xr.finish();
  yr.finish();
  Canvas c(xr, yr);
  c.frame("Eigenvalue trace (" + gain + ")", "Re", "Im");
  const std::size_t rows = table.eigenvalues.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const int shade = rows > 1 ? static_cast<int>(200 - 200.0 * static_cast<double>(r) / (rows - 1)) : 0;
    std::ostringstream color;
    color << "rgb(" << shade << "," << shade << ",255)";
    for (const auto& z : table.eigenvalues[r])
      if (std::isfinite(z.real()) && std::isfinite(z.imag())) c.dot(z.real(), z.imag(), color.str());
  }
  const auto path = dir / "trace.svg";
  c.save(path);
  return path;
}

std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  const auto traj = dir / "trajectory.csv";
  const auto trace = dir / "trace.csv";
  if (!std::filesystem::exists(traj) && !std::filesystem::exists(trace))
    throw ParseError("no trajectory.csv or trace.csv in " + dir.string());
  if (std::filesystem::exists(traj)) written = plot_trajectory(read_trajectory_csv(traj), dir);
  if (std::filesystem::exists(trace)) {
    // trace.log starts with "gain <name>".
    std::string gain = "gain";
    std::ifstream meta(dir / "trace.log");
    std::string first;
    if (meta && std::getline(meta, first) && first.rfind("gain ", 0) == 0) gain = first.substr(5);
    written.push_back(plot_trace(read_trace_csv(trace), gain, dir));
  }
  return written;
}

}  // namespace dapigrid
