#pragma once

// Droop laws, the two DAPI secondary controllers, and the communication
// layer they average over.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace dapigrid {

struct DgController {
  double m = 0.0;          // P-omega droop, rad/(W s)
  double n = 0.0;          // Q-E droop, V/VAr
  double k = 0.0;          // frequency integral time constant, s
  double kappa = 0.0;      // voltage integral time constant, s
  double beta = 0.0;       // voltage regulation gain, >= 0
  double omega_ref = 0.0;  // rad/s
  double E_ref = 0.0;      // V (amplitude)
  double Q_rated = 0.0;    // VAr
  double P_rated = 0.0;    // W

  /// Throws ValidationError naming `where` when a gain or rating is out of range.
  void validate(const std::string& where = "controller") const;
  friend bool operator==(const DgController&, const DgController&) = default;
};

/// Per-DG gains stacked into vectors for a subset of DGs (the online ones).
struct GainVectors {
  Eigen::VectorXd m, n, k, kappa, beta, E_ref, Q_rated, P_rated;
  double omega_ref = 0.0;

  static GainVectors gather(std::span<const DgController> controllers, const std::vector<int>& indices);
  static GainVectors gather(std::span<const DgController> controllers);
  int size() const { return static_cast<int>(m.size()); }
};

/// Weighted adjacency matrix of a communication layer. weights(i, j) > 0
/// means DG i listens to DG j.
class CommGraph {
 public:
  CommGraph() = default;
  /// Throws ValidationError for negative or non-finite weights, a nonzero
  /// diagonal, or asymmetry when `directed` is false.
  explicit CommGraph(Eigen::MatrixXd weights, bool directed = false);

  static CommGraph ring(int n, double weight);
  static CommGraph chain(int n, double weight);
  static CommGraph complete(int n, double weight);
  static CommGraph empty(int n) { return CommGraph(Eigen::MatrixXd::Zero(n, n)); }

  int size() const { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  bool directed() const { return directed_; }

  /// diag(row sums) - weights.
  Eigen::MatrixXd laplacian() const;

  /// Sets w(i, j), and w(j, i) too unless the graph is directed.
  CommGraph with_link(int i, int j, double weight) const;
  /// Restriction to `nodes` (remaining weights unchanged).
  CommGraph subgraph(const std::vector<int>& nodes) const;

  friend bool operator==(const CommGraph&, const CommGraph&) = default;

 private:
  Eigen::MatrixXd weights_;
  bool directed_ = false;
};

/// -L x, i.e. xdot_i = -sum_j a_ij (x_i - x_j).
Eigen::VectorXd consensus_rhs(const CommGraph& graph, const Eigen::VectorXd& x);

/// Undirected connectivity over edges with positive weight in either direction.
bool connectivity(const CommGraph& graph);

/// omega_i = omega* - m_i P_i + Omega_i.
double droop_frequency(const DgController& ctrl, double P, double Omega);

/// dOmega_i/dt = (-(omega_i - omega*) - sum_j a_ij (Omega_i - Omega_j)) / k_i.
Eigen::VectorXd dapi_frequency_rhs(const GainVectors& gains, const CommGraph& graph_a,
                                   const Eigen::VectorXd& omega, const Eigen::VectorXd& Omega);
Eigen::VectorXd dapi_frequency_rhs(std::span<const DgController> controllers, const CommGraph& graph_a,
                                   const Eigen::VectorXd& omega, const Eigen::VectorXd& Omega);

/// E_i = E* - n_i Q_i + e_i.
double droop_voltage(const DgController& ctrl, double Q, double e);

/// de_i/dt = (-beta_i (E_i - E*) - sum_j b_ij (Q_i/Q_i* - Q_j/Q_j*)) / kappa_i.
Eigen::VectorXd dapi_voltage_rhs(const GainVectors& gains, const CommGraph& graph_b, const Eigen::VectorXd& E,
                                 const Eigen::VectorXd& Q, const Eigen::VectorXd& e);
Eigen::VectorXd dapi_voltage_rhs(std::span<const DgController> controllers, const CommGraph& graph_b,
                                 const Eigen::VectorXd& E, const Eigen::VectorXd& Q, const Eigen::VectorXd& e);

}  // namespace dapigrid
