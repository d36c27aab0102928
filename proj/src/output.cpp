#include "dapigrid/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "dapigrid/errors.hpp"

namespace dapigrid {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void put(std::ostream& os, double x) {
  if (std::isnan(x)) os << "nan";
  else os << x;
}

double parse_cell(const std::string& cell, const std::string& where) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) throw ParseError(where + ": bad number '" + cell + "'");
  return value;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.front() == ' ')) cell.erase(cell.begin());
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace

std::string trajectory_header(int n) {
  std::ostringstream os;
  os << "t";
  const auto block = [&](const char* name, const char* unit) {
    for (int i = 1; i <= n; ++i) os << "," << name << "_" << i << unit;
  };
  block("omega", "[Hz]");
  block("E", "[V]");
  block("P", "[W]");
  block("Q", "[VAr]");
  block("Omega", "");
  block("e", "");
  return os.str();
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out = open_out(path);
  out << trajectory_header(trajectory.n) << "\n";
  for (const Sample& s : trajectory.samples) {
    put(out, s.t);
    for (const Eigen::VectorXd* v : {&s.f_hz, &s.E, &s.P, &s.Q, &s.Omega, &s.e})
      for (Eigen::Index i = 0; i < v->size(); ++i) {
        out << ",";
        put(out, (*v)(i));
      }
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  const std::size_t columns = split(line).size();
  if (columns < 7 || (columns - 1) % 6 != 0) throw ParseError(path.string() + ": unexpected header");
  Trajectory tr;
  tr.n = static_cast<int>((columns - 1) / 6);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = path.string() + ":" + std::to_string(row);
    if (cells.size() != columns) throw ParseError(where + ": expected " + std::to_string(columns) + " cells");
    Sample s;
    s.t = parse_cell(cells[0], where);
    std::size_t c = 1;
    for (Eigen::VectorXd* v : {&s.f_hz, &s.E, &s.P, &s.Q, &s.Omega, &s.e}) {
      v->resize(tr.n);
      for (int i = 0; i < tr.n; ++i) (*v)(i) = parse_cell(cells[c++], where);
    }
    tr.samples.push_back(std::move(s));
  }
  return tr;
}

void write_events_log(const std::filesystem::path& path, const std::vector<EventRecord>& events) {
  std::ofstream out = open_out(path);
  out << std::setprecision(10);
  for (const EventRecord& ev : events) {
    out << ev.time << " " << ev.kind;
    if (!ev.args.empty()) out << " " << ev.args;
    out << "\n";
  }
}

void write_trace_csv(const std::filesystem::path& path, const EigenTrace& trace) {
  std::ofstream out = open_out(path);
  const std::size_t m = trace.points.empty() ? 0 : trace.points.front().eigenvalues.size();
  out << "gain_value";
  for (std::size_t k = 1; k <= m; ++k) out << ",re_" << k << ",im_" << k;
  out << "\n";
  for (const TracePoint& p : trace.points) {
    out << p.gain_value;
    for (const auto& z : p.eigenvalues) out << "," << z.real() << "," << z.imag();
    out << "\n";
  }
}

TraceTable read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  const std::size_t columns = split(line).size();
  if (columns < 1 || (columns - 1) % 2 != 0) throw ParseError(path.string() + ": unexpected header");
  TraceTable table;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = path.string() + ":" + std::to_string(row);
    if (cells.size() != columns) throw ParseError(where + ": expected " + std::to_string(columns) + " cells");
    table.gain.push_back(parse_cell(cells[0], where));
    ComplexList values;
    for (std::size_t c = 1; c + 1 < cells.size(); c += 2)
      values.emplace_back(parse_cell(cells[c], where), parse_cell(cells[c + 1], where));
    table.eigenvalues.push_back(std::move(values));
  }
  return table;
}

nlohmann::ordered_json stability_json(const StabilityReport& r) {
  nlohmann::ordered_json eig = nlohmann::ordered_json::array();
  for (const auto& z : r.eigenvalues) eig.push_back({{"re", z.real()}, {"im", z.imag()}});
  return {{"lambda_min_W1_sym", r.lambda_min_w1},
          {"lambda_min_W2_sym", r.lambda_min_w2},
          {"condition_W1", r.condition_w1},
          {"condition_W2", r.condition_w2},
          {"max_real_eig_W", r.max_real},
          {"max_relative_residual", r.max_residual},
          {"sufficiency_consistent", r.sufficiency_consistent},
          {"eigenvalues_W", eig}};
}

Summary summarize(const Scenario& scenario, const Trajectory& trajectory, const StabilityReport& report) {
  Summary s;
  if (!trajectory.samples.empty()) {
    const Sample& last = trajectory.samples.back();
    s.t = last.t;
    s.metrics = compute_metrics(last, scenario.controllers, scenario.nominal_frequency_hz);
  }
  s.condition_w1 = report.condition_w1;
  s.condition_w2 = report.condition_w2;
  return s;
}

nlohmann::ordered_json summary_json(const Summary& s) {
  return {{"t", s.t},
          {"max_frequency_deviation_hz", s.metrics.max_freq_dev_hz},
          {"p_sharing_spread", s.metrics.p_share_spread},
          {"p_sharing_relative", s.metrics.p_share_relative},
          {"q_sharing_spread", s.metrics.q_share_spread},
          {"max_voltage_deviation_v", s.metrics.max_voltage_dev},
          {"condition_W1", s.condition_w1},
          {"condition_W2", s.condition_w2}};
}

std::string summary_table(const Summary& s) {
  std::ostringstream os;
  os << std::setprecision(6);
  const auto row = [&](const char* name, auto value) { os << std::left << std::setw(30) << name << value << "\n"; };
  row("time [s]", s.t);
  row("max |f - f*| [Hz]", s.metrics.max_freq_dev_hz);
  row("P-sharing spread [rad/s]", s.metrics.p_share_spread);
  row("P-sharing spread / mean", s.metrics.p_share_relative);
  row("Q-sharing spread", s.metrics.q_share_spread);
  row("max |E - E*| [V]", s.metrics.max_voltage_dev);
  row("condition W1", s.condition_w1 ? "true" : "false");
  row("condition W2", s.condition_w2 ? "true" : "false");
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

}  // namespace dapigrid
