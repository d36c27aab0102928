#include "dapigrid/graph.hpp"

#include <algorithm>

namespace dapigrid {

std::vector<std::vector<int>> connected_components(const Eigen::MatrixXd& weights) {
  const int n = static_cast<int>(weights.rows());
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> components;
  std::vector<int> stack;
  for (int root = 0; root < n; ++root) {
    if (label[root] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    label[root] = id;
    stack.push_back(root);
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      components[id].push_back(i);
      for (int j = 0; j < n; ++j) {
        if (label[j] >= 0) continue;
        if (weights(i, j) > 0.0 || weights(j, i) > 0.0) {
          label[j] = id;
          stack.push_back(j);
        }
      }
    }
  }
  for (auto& c : components) std::sort(c.begin(), c.end());
  return components;
}

bool is_connected(const Eigen::MatrixXd& weights) { return connected_components(weights).size() <= 1; }

}  // namespace dapigrid
