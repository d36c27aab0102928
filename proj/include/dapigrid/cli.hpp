#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "dapigrid/scenario.hpp"

namespace dapigrid {

enum class Mode { kSimulate, kAnalyze, kTrace, kPlot };

struct RunOptions {
  Mode mode = Mode::kSimulate;
  std::filesystem::path scenario;
  std::filesystem::path out;
  std::optional<std::string> gain;
  std::optional<double> from;
  std::optional<double> to;
  std::optional<int> points;
  std::optional<std::uint64_t> seed;
};

/// Applies DAPIGRID_TOL (if set) to the integrator tolerances. Throws
/// ParseError for a malformed value and ValidationError for a nonpositive one.
void apply_tolerance_override(Scenario& scenario, const char* value);

/// Runs one mode, writing artifacts to options.out and a summary to `log`.
/// Errors propagate as dapigrid::Error.
void run(const RunOptions& options, std::ostream& log);

/// Full command-line entry point; returns the process exit status.
int main_entry(int argc, char** argv, std::ostream& log, std::ostream& err);

}  // namespace dapigrid
