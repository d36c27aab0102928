#pragma once

// Artifact files: trajectory.csv, events.log, trace.csv, stability.json and
// the summary derived from the last trajectory row.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dapigrid/analysis.hpp"
#include "dapigrid/simengine.hpp"

namespace dapigrid {

/// `t,omega_1[Hz],...,E_1[V],...,P_1[W],...,Q_1[VAr],...,Omega_1,...,e_1,...`
std::string trajectory_header(int n);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);
/// Inverse of write_trajectory_csv; "nan" cells read back as NaN.
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// One `t kind args` line per event.
void write_events_log(const std::filesystem::path& path, const std::vector<EventRecord>& events);

/// `gain_value,re_1,im_1,...,re_m,im_m`.
void write_trace_csv(const std::filesystem::path& path, const EigenTrace& trace);

struct TraceTable {
  std::vector<double> gain;
  std::vector<ComplexList> eigenvalues;
};
TraceTable read_trace_csv(const std::filesystem::path& path);

nlohmann::ordered_json stability_json(const StabilityReport& report);

struct Summary {
  double t = 0.0;
  OperatingMetrics metrics;
  bool condition_w1 = false;
  bool condition_w2 = false;
};

/// Metrics from the last trajectory row plus the scenario's ratings, and the
/// two stability flags of the final configuration.
Summary summarize(const Scenario& scenario, const Trajectory& trajectory, const StabilityReport& report);
nlohmann::ordered_json summary_json(const Summary& summary);
std::string summary_table(const Summary& summary);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dapigrid
