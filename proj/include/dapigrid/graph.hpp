#pragma once

#include <Eigen/Dense>

#include <vector>

namespace dapigrid {

/// Connected components of the undirected graph whose edge (i, j) exists when
/// weights(i, j) > 0 or weights(j, i) > 0. Each component is a sorted list of
/// node indices; components are ordered by their smallest node.
std::vector<std::vector<int>> connected_components(const Eigen::MatrixXd& weights);

/// True when the graph has at most one component (empty and singleton graphs
/// count as connected).
bool is_connected(const Eigen::MatrixXd& weights);

}  // namespace dapigrid
