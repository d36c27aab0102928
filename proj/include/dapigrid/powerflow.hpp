#pragma once

#include <Eigen/Dense>

#include <span>

#include "dapigrid/netmodel.hpp"

namespace dapigrid {

struct DgController;

/// Active (W) and reactive (VAr) output of each online DG: line injection plus
/// the collocated load draw.
struct InjectionVector {
  Eigen::VectorXd P;
  Eigen::VectorXd Q;
};

/// Full lossless AC flow:
///   P_i = sum_j E_i E_j / X_ij sin(th_i - th_j) + G_i E_i^2
///   Q_i = E_i^2 / X_i - sum_j E_i E_j / X_ij cos(th_i - th_j) + B_i E_i^2
/// with 1/X_i = sum_j 1/X_ij. Vectors are indexed like `net.buses`.
InjectionVector injections_nonlinear(const ReducedNetwork& net, const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& E);
InjectionVector injections_nonlinear(const NetworkModel& net, const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& E);

/// Line-only part of P (no load term); sums to zero for a lossless network.
Eigen::VectorXd line_active_power(const ReducedNetwork& net, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& E);

/// Decoupled reactive flow Q_i = -E_i^2 Yload_ii + E_i sum_j Ybus_ij (E_i - E_j).
Eigen::VectorXd injections_decoupled_reactive(const SusceptanceMatrices& y, const Eigen::VectorXd& E);
Eigen::VectorXd injections_decoupled_reactive(const NetworkModel& net, const Eigen::VectorXd& E);

/// Total active power drawn by the loads at voltages E.
double consumed_active_power(const ReducedNetwork& net, const Eigen::VectorXd& E);

/// Droop-only synchronous frequency omega* + P0 / sum_i (1/m_i), with P0 the
/// net injection of the loads (negative of the consumed power).
double droop_steady_frequency(std::span<const DgController> controllers, double consumed_power);

}  // namespace dapigrid
