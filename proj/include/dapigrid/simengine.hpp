#pragma once

// Closed-loop microgrid dynamics in a frame rotating at omega*:
//   theta_i'      = -m_i P_i + Omega_i
//   tau_E E_i'    = -(E_i - E*_i) - n_i Q_i + e_i
//   k_i Omega_i'  = -(omega_i - omega*) - sum_j a_ij (Omega_i - Omega_j)
//   kappa_i e_i'  = -beta_i (E_i - E*_i) - sum_j b_ij (Q_i/Q*_i - Q_j/Q*_j)
// with P, Q from the full nonlinear flow. Secondary states are frozen while
// secondary control is disabled.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "dapigrid/control.hpp"
#include "dapigrid/netmodel.hpp"
#include "dapigrid/powerflow.hpp"
#include "dapigrid/scenario.hpp"

namespace dapigrid {

/// Full-length state (one entry per bus). Entries of offline DGs are frozen
/// placeholders and excluded from every sum.
struct SystemState {
  double t = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd E;
  Eigen::VectorXd Omega;
  Eigen::VectorXd e;
  std::vector<bool> active;

  int size() const { return static_cast<int>(theta.size()); }
};

/// Everything that fixes the vector field between two events.
struct Configuration {
  NetworkModel network;
  std::vector<DgController> controllers;
  CommGraph comm_a;
  CommGraph comm_b;
  bool secondary_enabled = false;
  double tau_E = 1.0;

  static Configuration initial(const Scenario& scenario);
};

/// theta = 0, E = E*, Omega = e = 0; activity follows the network.
SystemState default_initial_state(const Scenario& scenario);

/// The vector field restricted to online DGs, with the stacked state
/// x = [theta; E; Omega; e] (length 4 * active count).
class ClosedLoop {
 public:
  explicit ClosedLoop(const Configuration& config);

  int size() const { return static_cast<int>(active_.size()); }
  int state_size() const { return 4 * size(); }
  const std::vector<int>& active() const { return active_; }
  const ReducedNetwork& network() const { return net_; }
  const GainVectors& gains() const { return gains_; }
  const CommGraph& comm_a() const { return comm_a_; }
  const CommGraph& comm_b() const { return comm_b_; }
  bool secondary_enabled() const { return secondary_; }

  Eigen::VectorXd pack(const SystemState& state) const;
  void unpack(const Eigen::VectorXd& x, SystemState& state) const;

  Eigen::VectorXd rhs(const Eigen::VectorXd& x) const;
  InjectionVector injections(const Eigen::VectorXd& x) const;
  /// omega_i = omega* - m_i P_i + Omega_i, rad/s.
  Eigen::VectorXd frequencies(const Eigen::VectorXd& x, const InjectionVector& inj) const;

  /// max-norm of the derivative with the common angle drift removed
  /// (theta rates taken relative to the first online DG).
  double grounded_residual(const Eigen::VectorXd& derivative) const;

 private:
  std::vector<int> active_;
  ReducedNetwork net_;
  GainVectors gains_;
  CommGraph comm_a_;
  CommGraph comm_b_;
  bool secondary_ = false;
  double tau_E_ = 1.0;
};

/// Time derivative of the full stacked state; zero for offline DGs.
SystemState closed_loop_rhs(const Configuration& config, const SystemState& state);
SystemState closed_loop_rhs(const NetworkModel& net, const std::vector<DgController>& controllers,
                            const CommGraph& comm_a, const CommGraph& comm_b, const SystemState& state,
                            bool secondary_enabled, double tau_E = 1.0);

/// One output row. Offline DGs carry NaN.
struct Sample {
  double t = 0.0;
  Eigen::VectorXd f_hz, E, P, Q, Omega, e;
};

struct Trajectory {
  int n = 0;
  std::vector<Sample> samples;
};

struct EventRecord {
  double time = 0.0;
  std::string kind;
  std::string args;
};

struct RunResult {
  Trajectory trajectory;
  std::vector<EventRecord> events;
  SystemState final_state;
  Configuration final_config;
};

/// Applies one event to the configuration and state. Throws ValidationError
/// for inconsistent events and TopologyError if the electrical network splits.
EventRecord apply_event(const ScenarioEvent& event, Configuration& config, SystemState& state);

/// Integrates the scenario from its default initial state to sim.t_end,
/// stopping at each event time, sampling at sim.sample_rate with pre- and
/// post-event rows at event times.
RunResult integrate(const Scenario& scenario);

struct SteadyState {
  SystemState state;
  Configuration config;
  double residual = 0.0;  // grounded derivative max-norm
};

/// Continues from `state` under a fixed configuration until the grounded
/// residual stays below `tol` for `window` seconds. Throws ConvergenceError
/// after `horizon` seconds.
SteadyState settle(const Configuration& config, SystemState state, const SimSettings& sim, double window,
                   double tol, double horizon);

/// Runs the scenario to t_end, then settles under the final configuration.
SteadyState steady_state(const Scenario& scenario, double window, double tol);
SteadyState steady_state(const Scenario& scenario);

/// Builds an output row for the given state.
Sample make_sample(const ClosedLoop& loop, const SystemState& state);

/// Steady-state quality indicators.
struct OperatingMetrics {
  double max_freq_dev_hz = 0.0;     // max_i |f_i - f*|
  double p_share_spread = 0.0;      // max_ij |m_i P_i - m_j P_j|, rad/s
  double p_share_relative = 0.0;    // spread / mean_i(m_i P_i)
  double q_share_spread = 0.0;      // max_ij |Q_i/Q*_i - Q_j/Q*_j|
  double max_voltage_dev = 0.0;     // max_i |E_i - E*_i|, V
};

/// Metrics over the online DGs of one sample. `controllers` is the full list.
OperatingMetrics compute_metrics(const Sample& sample, const std::vector<DgController>& controllers,
                                 double nominal_frequency_hz);
OperatingMetrics compute_metrics(const SteadyState& steady, double nominal_frequency_hz);

}  // namespace dapigrid
