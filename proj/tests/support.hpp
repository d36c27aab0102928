#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>

#include "dapigrid/scenario.hpp"
#include "dapigrid/scenario_io.hpp"

namespace testing {

inline std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(DAPIGRID_SCENARIO_DIR) / (name + ".json");
}

inline dapigrid::Scenario bundled(const std::string& name) { return dapigrid::parse_scenario(scenario_path(name)); }

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// Fresh directory under the build tree, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(DAPIGRID_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
