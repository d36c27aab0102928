#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dapigrid/output.hpp"

namespace dapigrid {

/// One SVG per signal family (frequency, voltage, active_power,
/// reactive_power, Omega, e), one coloured line per DG. NaN samples break
/// lines. Returns the files written.
std::vector<std::filesystem::path> plot_trajectory(const Trajectory& trajectory, const std::filesystem::path& dir);

/// Complex-plane scatter of every trace row, shaded from light (first gain
/// value) to dark (last).
std::filesystem::path plot_trace(const TraceTable& table, const std::string& gain, const std::filesystem::path& dir);

/// Renders whatever of trajectory.csv and trace.csv exists in `dir`. Throws
/// ParseError if neither is present.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir);

}  // namespace dapigrid
