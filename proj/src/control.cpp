#include "dapigrid/control.hpp"

#include <cmath>
#include <numeric>

#include "dapigrid/errors.hpp"
#include "dapigrid/graph.hpp"

namespace dapigrid {

namespace {

void require_positive(double value, const std::string& where, const char* name) {
  if (!(std::isfinite(value) && value > 0.0))
    throw ValidationError(where + "/" + name, "must be finite and > 0");
}

}  // namespace

void DgController::validate(const std::string& where) const {
  require_positive(m, where, "m");
  require_positive(n, where, "n");
  require_positive(k, where, "k");
  require_positive(kappa, where, "kappa");
  if (!(std::isfinite(beta) && beta >= 0.0)) throw ValidationError(where + "/beta", "must be finite and >= 0");
  require_positive(omega_ref, where, "f_ref");
  require_positive(E_ref, where, "E_ref");
  require_positive(Q_rated, where, "Q_rated");
  require_positive(P_rated, where, "P_rated");
}

GainVectors GainVectors::gather(std::span<const DgController> controllers, const std::vector<int>& indices) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  GainVectors g;
  g.m.resize(n);
  g.n.resize(n);
  g.k.resize(n);
  g.kappa.resize(n);
  g.beta.resize(n);
  g.E_ref.resize(n);
  g.Q_rated.resize(n);
  g.P_rated.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const DgController& c = controllers[static_cast<std::size_t>(indices[a])];
    g.m(a) = c.m;
    g.n(a) = c.n;
    g.k(a) = c.k;
    g.kappa(a) = c.kappa;
    g.beta(a) = c.beta;
    g.E_ref(a) = c.E_ref;
    g.Q_rated(a) = c.Q_rated;
    g.P_rated(a) = c.P_rated;
  }
  if (!indices.empty()) g.omega_ref = controllers[static_cast<std::size_t>(indices.front())].omega_ref;
  return g;
}

GainVectors GainVectors::gather(std::span<const DgController> controllers) {
  std::vector<int> all(controllers.size());
  std::iota(all.begin(), all.end(), 0);
  return gather(controllers, all);
}

CommGraph::CommGraph(Eigen::MatrixXd weights, bool directed) : weights_(std::move(weights)), directed_(directed) {
  if (weights_.rows() != weights_.cols()) throw ValidationError("comm", "adjacency matrix must be square");
  const Eigen::Index n = weights_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = weights_(i, j);
      const std::string where = "comm/" + std::to_string(i) + "/" + std::to_string(j);
      if (!std::isfinite(w) || w < 0.0) throw ValidationError(where, "weights must be finite and >= 0");
      if (i == j && w != 0.0) throw ValidationError(where, "diagonal must be zero");
      if (!directed_ && w != weights_(j, i))
        throw ValidationError(where, "weights must be symmetric unless the layer is directed");
    }
  }
}

CommGraph CommGraph::ring(int n, double weight) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  if (n == 2) {
    w(0, 1) = w(1, 0) = weight;
  } else if (n > 2) {
    for (int i = 0; i < n; ++i) {
      const int j = (i + 1) % n;
      w(i, j) = w(j, i) = weight;
    }
  }
  return CommGraph(w);
}

CommGraph CommGraph::chain(int n, double weight) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) w(i, i + 1) = w(i + 1, i) = weight;
  return CommGraph(w);
}

CommGraph CommGraph::complete(int n, double weight) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(n, n, weight);
  w.diagonal().setZero();
  return CommGraph(w);
}

Eigen::MatrixXd CommGraph::laplacian() const {
  Eigen::MatrixXd l = -weights_;
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) l(i, i) = weights_.row(i).sum();
  return l;
}

CommGraph CommGraph::with_link(int i, int j, double weight) const {
  if (i < 0 || j < 0 || i >= size() || j >= size() || i == j)
    throw ValidationError("comm-link-set", "invalid link (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  Eigen::MatrixXd w = weights_;
  w(i, j) = weight;
  if (!directed_) w(j, i) = weight;
  return CommGraph(std::move(w), directed_);
}

CommGraph CommGraph::subgraph(const std::vector<int>& nodes) const {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) w(a, b) = weights_(nodes[a], nodes[b]);
  return CommGraph(std::move(w), directed_);
}

Eigen::VectorXd consensus_rhs(const CommGraph& graph, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd& a = graph.weights();
  const Eigen::Index n = x.size();
  if (a.rows() != n) throw ValidationError("consensus", "state size does not match the graph");
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (a(i, j) != 0.0) s += a(i, j) * (x(i) - x(j));
    out(i) = -s;
  }
  return out;
}

bool connectivity(const CommGraph& graph) { return is_connected(graph.weights()); }

double droop_frequency(const DgController& ctrl, double P, double Omega) { return ctrl.omega_ref - ctrl.m * P + Omega; }

Eigen::VectorXd dapi_frequency_rhs(const GainVectors& gains, const CommGraph& graph_a, const Eigen::VectorXd& omega,
                                   const Eigen::VectorXd& Omega) {
  const Eigen::VectorXd error = omega.array() - gains.omega_ref;
  return ((-error + consensus_rhs(graph_a, Omega)).array() / gains.k.array()).matrix();
}

Eigen::VectorXd dapi_frequency_rhs(std::span<const DgController> controllers, const CommGraph& graph_a,
                                   const Eigen::VectorXd& omega, const Eigen::VectorXd& Omega) {
  return dapi_frequency_rhs(GainVectors::gather(controllers), graph_a, omega, Omega);
}

double droop_voltage(const DgController& ctrl, double Q, double e) { return ctrl.E_ref - ctrl.n * Q + e; }

Eigen::VectorXd dapi_voltage_rhs(const GainVectors& gains, const CommGraph& graph_b, const Eigen::VectorXd& E,
                                 const Eigen::VectorXd& Q, const Eigen::VectorXd& e) {
  (void)e;  // the secondary law does not feed back its own state
  const Eigen::VectorXd ratio = (Q.array() / gains.Q_rated.array()).matrix();
  const Eigen::VectorXd regulation = (gains.beta.array() * (E - gains.E_ref).array()).matrix();
  return ((-regulation + consensus_rhs(graph_b, ratio)).array() / gains.kappa.array()).matrix();
}

Eigen::VectorXd dapi_voltage_rhs(std::span<const DgController> controllers, const CommGraph& graph_b,
                                 const Eigen::VectorXd& E, const Eigen::VectorXd& Q, const Eigen::VectorXd& e) {
  return dapi_voltage_rhs(GainVectors::gather(controllers), graph_b, E, Q, e);
}

}  // namespace dapigrid
