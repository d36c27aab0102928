#pragma once

// Small-signal tools: the linearized voltage/reactive-power subsystem
//   d/dt [E; e] = W [E; e] + u,  W = [[-W1, I], [-W2, 0]],
//   W1 = I + N [E*] Y,  W2 = kappa^-1 (beta + L_B [Q*]^-1 [E*] Y),
// its sufficient stability conditions, the finite-difference Jacobian of the
// full nonlinear loop, and eigenvalue traces under gain sweeps.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "dapigrid/linalg.hpp"
#include "dapigrid/scenario.hpp"
#include "dapigrid/simengine.hpp"

namespace dapigrid {

using ComplexList = std::vector<std::complex<double>>;

struct LinearVoltageSystem {
  Eigen::MatrixXd W;
  Eigen::MatrixXd W1;
  Eigen::MatrixXd W2;
  Eigen::VectorXd u;  // [E*; kappa^-1 beta E*]

  int size() const { return static_cast<int>(W1.rows()); }
};

/// Uses the online DGs of `net` (passive buses Kron-reduced). The gains of
/// `controllers` and the weights of `graph_b` are indexed like the full bus
/// list.
LinearVoltageSystem build_linear_voltage_system(const NetworkModel& net, const std::vector<DgController>& controllers,
                                                const CommGraph& graph_b);
LinearVoltageSystem build_linear_voltage_system(const Configuration& config);
/// From the stiffness matrix Y = -(Ybus + Yload), stacked gains and the
/// Laplacian of layer B, all over the same DGs.
LinearVoltageSystem build_linear_voltage_system(const Eigen::MatrixXd& Y, const GainVectors& gains,
                                                const Eigen::MatrixXd& laplacian_b);

struct StabilityReport {
  double lambda_min_w1 = 0.0;  // of W1 + W1^T
  double lambda_min_w2 = 0.0;  // of W2 + W2^T
  bool condition_w1 = false;
  bool condition_w2 = false;
  ComplexList eigenvalues;     // of W, descending real part
  double max_real = 0.0;
  double max_residual = 0.0;   // max ||W v - lambda v|| / ||W||
  /// False only if both conditions hold and W still has Re >= 0.
  bool sufficiency_consistent = true;
};

StabilityReport check_stability_conditions(const LinearVoltageSystem& sys);

/// det(s^2 I + s W1 + W2) = 0 roots, the second route to eig(W).
ComplexList characteristic_roots(const LinearVoltageSystem& sys);

/// Grounded state y = [theta_2 - theta_1, ..., theta_n - theta_1; E; Omega; e]
/// of dimension 4n - 1.
Eigen::VectorXd ground(const ClosedLoop& loop, const Eigen::VectorXd& x);

/// Central-difference Jacobian of the closed loop at x, absolute step h.
/// Throws DomainError if x is not an equilibrium (grounded residual above
/// `max_residual`).
Eigen::MatrixXd jacobian_full(const ClosedLoop& loop, const Eigen::VectorXd& x, double h = 1e-6,
                              double max_residual = 1e-9);
/// The same without grounding (4n x 4n); carries the rotational zero mode.
Eigen::MatrixXd jacobian_ungrounded(const ClosedLoop& loop, const Eigen::VectorXd& x, double h = 1e-6);

/// Scenario's configuration after all of its events, with secondary control
/// switched on: the setting used for operating points.
Configuration final_configuration(const Scenario& scenario);

/// Operating point of the final configuration, settled to `tol` from the
/// default initial state or from `start` when given.
SteadyState operating_point(const Scenario& scenario, double tol = 1e-10, const SystemState* start = nullptr);

/// Scenario copy with one gain replaced: k, kappa or beta on every DG, or b
/// as the value of every positive weight of layer B.
Scenario with_gain(const Scenario& scenario, const std::string& gain, double value);

/// Nominal value of a gain in the scenario (first DG's value, or the
/// largest B weight for b).
double nominal_gain(const Scenario& scenario, const std::string& gain);

/// Geometric grid from `from` to `to` inclusive.
std::vector<double> geometric_grid(double from, double to, int points);

/// Eigenvalues of one linearization with mode bookkeeping.
struct ModeSet {
  std::vector<linalg::EigenPair<double>> pairs;  // descending real part
  std::vector<double> frequency_weight;          // participation on angle and Omega states
};

ModeSet analyze_modes(const Eigen::MatrixXd& jacobian, int n_active);

struct TracePoint {
  double gain_value = 0.0;
  ComplexList eigenvalues;  // descending real part
  ModeSet modes;
};

struct EigenTrace {
  std::string gain;
  std::vector<TracePoint> points;
  std::vector<std::string> warnings;  // grid points that failed, in order
};

/// Linearizes at the operating point of every grid value, each settled from
/// the nominal operating point. Points run in parallel; a point whose
/// operating point fails ends the trace there.
EigenTrace eigen_trace(const Scenario& base, const std::string& gain, const std::vector<double>& grid);

/// Slowest real eigenvalue dominated by the frequency states (|Im| below
/// tolerance), or NaN if none.
double slowest_real_frequency_mode(const ModeSet& modes);

/// Least-damped complex pair dominated by the voltage states; returns its
/// upper-half-plane member or NaN.
std::complex<double> least_damped_voltage_pair(const ModeSet& modes);

/// Rightmost complex pair dominated by the voltage states (upper member) or NaN.
std::complex<double> slowest_voltage_pair(const ModeSet& modes);

/// Follows one eigenvalue through a trace by nearest-neighbour matching,
/// starting from `start` at point `from`. Returns one value per point.
ComplexList follow_eigenvalue(const EigenTrace& trace, std::size_t from, std::complex<double> start);

/// Default sweep grid for a gain: geometric over [nominal / 4, 4 nominal],
/// extended to 8 nominal for kappa.
std::vector<double> default_grid(const Scenario& scenario, const std::string& gain, int points = 9);

/// Randomized check that the two conditions imply a Hurwitz W.
struct SufficiencyCheck {
  int draws = 0;
  int both_conditions = 0;  // draws where both conditions held
  int counterexamples = 0;  // ... and W was nevertheless not Hurwitz
  double worst_max_real = 0.0;  // largest max Re(eig W) among conditioned draws
};

/// Draws admissible systems with 1 <= n <= max_n DGs (random connected
/// networks, loads, droop and secondary gains, symmetric layer B).
SufficiencyCheck random_sufficiency_check(std::uint64_t seed, int draws = 1000, int max_n = 4);

/// -Re(lambda) / |lambda|.
double damping_ratio(std::complex<double> lambda);

}  // namespace dapigrid
