#include "dapigrid/powerflow.hpp"

#include <cmath>
#include <string>

#include "dapigrid/control.hpp"
#include "dapigrid/errors.hpp"

namespace dapigrid {

namespace {

void require_positive_voltages(const Eigen::VectorXd& E) {
  for (Eigen::Index i = 0; i < E.size(); ++i) {
    if (!(E(i) > 0.0) || !std::isfinite(E(i)))
      throw DomainError("voltage magnitude at position " + std::to_string(i) + " is " +
                        std::to_string(E(i)) + "; must be finite and > 0");
  }
}

void require_size(const ReducedNetwork& net, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != net.size())
    throw ValidationError(what, "expected " + std::to_string(net.size()) + " entries, got " +
                                    std::to_string(v.size()));
}

}  // namespace

InjectionVector injections_nonlinear(const ReducedNetwork& net, const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& E) {
  require_size(net, theta, "theta");
  require_size(net, E, "E");
  require_positive_voltages(E);
  const int n = net.size();
  InjectionVector out;
  out.P = Eigen::VectorXd::Zero(n);
  out.Q = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double p = 0.0;
    double q = 0.0;
    double self = 0.0;
    for (int j = 0; j < n; ++j) {
      const double b = net.line_susceptance(i, j);
      if (b == 0.0 || j == i) continue;
      const double delta = theta(i) - theta(j);
      const double eij = E(i) * E(j) * b;
      p += eij * std::sin(delta);
      q -= eij * std::cos(delta);
      self += b;
    }
    const double e2 = E(i) * E(i);
    out.P(i) = p + net.load_conductance(i) * e2;
    out.Q(i) = e2 * self + q + net.load_susceptance(i) * e2;
  }
  return out;
}

InjectionVector injections_nonlinear(const NetworkModel& net, const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& E) {
  return injections_nonlinear(reduce(net), theta, E);
}

Eigen::VectorXd line_active_power(const ReducedNetwork& net, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& E) {
  InjectionVector inj = injections_nonlinear(net, theta, E);
  return inj.P - (net.load_conductance.array() * E.array().square()).matrix();
}

Eigen::VectorXd injections_decoupled_reactive(const SusceptanceMatrices& y, const Eigen::VectorXd& E) {
  if (E.size() != y.bus.rows())
    throw ValidationError("E", "expected " + std::to_string(y.bus.rows()) + " entries");
  require_positive_voltages(E);
  const Eigen::Index n = E.size();
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double flow = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) flow += y.bus(i, j) * (E(i) - E(j));
    q(i) = -E(i) * E(i) * y.load(i, i) + E(i) * flow;
  }
  return q;
}

Eigen::VectorXd injections_decoupled_reactive(const NetworkModel& net, const Eigen::VectorXd& E) {
  return injections_decoupled_reactive(build_susceptance_matrices(net), E);
}

double consumed_active_power(const ReducedNetwork& net, const Eigen::VectorXd& E) {
  return net.load_conductance.dot(E.array().square().matrix());
}

double droop_steady_frequency(std::span<const DgController> controllers, double consumed_power) {
  if (controllers.empty()) throw ValidationError("controllers", "at least one controller is required");
  double inverse_sum = 0.0;
  for (const DgController& c : controllers) {
    if (!(c.m > 0.0)) throw ValidationError("controllers/m", "droop coefficient must be > 0");
    inverse_sum += 1.0 / c.m;
  }
  return controllers.front().omega_ref - consumed_power / inverse_sum;
}

}  // namespace dapigrid
