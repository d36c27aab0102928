#include "dapigrid/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dapigrid/errors.hpp"
#include "dapigrid/graph.hpp"

namespace dapigrid {

namespace {

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

void validate_load(const Load& load, const std::string& where) {
  if (!finite_nonnegative(load.susceptance))
    throw ValidationError(where + "/susceptance", "must be finite and >= 0");
  if (!finite_nonnegative(load.conductance))
    throw ValidationError(where + "/conductance", "must be finite and >= 0");
}

std::string describe_components(const NetworkModel& net, const std::vector<std::vector<int>>& comps) {
  std::ostringstream os;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    os << (c ? " | " : "") << "{";
    for (std::size_t k = 0; k < comps[c].size(); ++k)
      os << (k ? "," : "") << net.bus(comps[c][k]).id;
    os << "}";
  }
  return os.str();
}

}  // namespace

double reactance_from_inductance(double inductance, double frequency_hz) {
  return 2.0 * std::numbers::pi * frequency_hz * inductance;
}

NetworkModel::NetworkModel(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
  const int n = size();
  if (n < 2) throw ValidationError("network/buses", "at least two buses are required");
  for (int i = 0; i < n; ++i) {
    validate_load(buses_[i].load, "network/buses/" + std::to_string(i) + "/load");
    if (buses_[i].junction && buses_[i].dg_online)
      throw ValidationError("network/buses/" + std::to_string(i), "a junction bus has no DG to bring online");
    for (int j = 0; j < i; ++j)
      if (buses_[j].id == buses_[i].id)
        throw ValidationError("network/buses/" + std::to_string(i) + "/id",
                              "duplicate bus id " + std::to_string(buses_[i].id));
  }
  for (std::size_t k = 0; k < lines_.size(); ++k) {
    const Line& line = lines_[k];
    const std::string where = "network/lines/" + std::to_string(k);
    if (line.from < 0 || line.from >= n || line.to < 0 || line.to >= n)
      throw ValidationError(where, "endpoint out of range");
    if (line.from == line.to) throw ValidationError(where, "line endpoints must differ");
    if (!(std::isfinite(line.reactance) && line.reactance > 0.0))
      throw ValidationError(where + "/X", "reactance must be finite and > 0");
    if (!finite_nonnegative(line.resistance))
      throw ValidationError(where + "/R", "resistance must be finite and >= 0");
    for (std::size_t m = 0; m < k; ++m)
      if (lines_[m].joins(line.from, line.to))
        throw ValidationError(where, "duplicate line between the same pair of buses");
  }
}

int NetworkModel::index_of(int id) const {
  for (int i = 0; i < size(); ++i)
    if (buses_[i].id == id) return i;
  return -1;
}

std::vector<int> NetworkModel::online_buses() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (buses_[i].dg_online) out.push_back(i);
  return out;
}

NetworkModel NetworkModel::with_load(int bus, Load load) const {
  validate_load(load, "load-set");
  NetworkModel copy = *this;
  copy.buses_.at(static_cast<std::size_t>(bus)).load = load;
  return copy;
}

NetworkModel NetworkModel::with_line_status(int i, int j, LineStatus status) const {
  NetworkModel copy = *this;
  for (Line& line : copy.lines_) {
    if (line.joins(i, j)) {
      line.status = status;
      return copy;
    }
  }
  throw ValidationError("line", "no line between buses " + std::to_string(i) + " and " + std::to_string(j));
}

NetworkModel NetworkModel::with_dg_online(int bus, bool online) const {
  NetworkModel copy = *this;
  copy.buses_.at(static_cast<std::size_t>(bus)).dg_online = online;
  return copy;
}

Eigen::MatrixXd NetworkModel::line_susceptance() const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(size(), size());
  for (const Line& line : lines_) {
    if (!line.connected()) continue;
    const double y = 1.0 / line.reactance;
    b(line.from, line.to) = y;
    b(line.to, line.from) = y;
  }
  return b;
}

ReducedNetwork reduce(const NetworkModel& net) {
  const Eigen::MatrixXd b = net.line_susceptance();
  const std::vector<int> online = net.online_buses();
  if (online.empty()) throw TopologyError("network has no online DG bus");

  const auto comps = connected_components(b);
  std::vector<int> comp_of(static_cast<std::size_t>(net.size()));
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (int i : comps[c]) comp_of[i] = static_cast<int>(c);
  const int main = comp_of[online.front()];
  for (int i : online) {
    if (comp_of[i] != main) {
      throw TopologyError("electrical network is split into islands " + describe_components(net, comps) +
                          "; online DG buses must share one island");
    }
  }

  std::vector<int> passive;
  for (int i : comps[main])
    if (!net.bus(i).dg_online) passive.push_back(i);

  ReducedNetwork out;
  out.buses = online;
  const int na = static_cast<int>(online.size());
  out.load_susceptance.resize(na);
  out.load_conductance.resize(na);
  for (int a = 0; a < na; ++a) {
    out.load_susceptance(a) = net.bus(online[a]).load.susceptance;
    out.load_conductance(a) = net.bus(online[a]).load.conductance;
  }

  if (passive.empty()) {
    out.line_susceptance.resize(na, na);
    for (int a = 0; a < na; ++a)
      for (int c = 0; c < na; ++c) out.line_susceptance(a, c) = b(online[a], online[c]);
    return out;
  }

  for (int k : passive) {
    if (net.bus(k).load.conductance != 0.0) {
      throw ValidationError("network/buses/" + std::to_string(k) + "/load",
                            "bus " + std::to_string(net.bus(k).id) +
                                " has no online DG but carries an active-power load");
    }
  }

  // Stiffness form Y = Laplacian(b) + diag(load b); eliminate passive nodes.
  const int np = static_cast<int>(passive.size());
  auto stiffness = [&](int i, int j) {
    if (i != j) return -b(i, j);
    return b.row(i).sum() + net.bus(i).load.susceptance;
  };
  Eigen::MatrixXd yaa(na, na), yak(na, np), ykk(np, np);
  for (int a = 0; a < na; ++a) {
    for (int c = 0; c < na; ++c) yaa(a, c) = stiffness(online[a], online[c]);
    for (int k = 0; k < np; ++k) yak(a, k) = stiffness(online[a], passive[k]);
  }
  for (int k = 0; k < np; ++k)
    for (int l = 0; l < np; ++l) ykk(k, l) = stiffness(passive[k], passive[l]);

  Eigen::MatrixXd yred = yaa - yak * ykk.partialPivLu().solve(yak.transpose());
  yred = 0.5 * (yred + yred.transpose()).eval();

  const double scale = yaa.cwiseAbs().maxCoeff();
  out.line_susceptance = Eigen::MatrixXd::Zero(na, na);
  for (int a = 0; a < na; ++a) {
    for (int c = 0; c < na; ++c) {
      if (a == c) continue;
      const double y = -yred(a, c);
      out.line_susceptance(a, c) = y > 1e-14 * scale ? y : 0.0;
    }
  }
  for (int a = 0; a < na; ++a) {
    const double shunt = yred(a, a) - out.line_susceptance.row(a).sum();
    out.load_susceptance(a) = shunt > 1e-12 * scale ? shunt : 0.0;
  }
  return out;
}

SusceptanceMatrices build_susceptance_matrices(const ReducedNetwork& net) {
  const int n = net.size();
  SusceptanceMatrices out;
  out.bus = net.line_susceptance;
  for (int i = 0; i < n; ++i) out.bus(i, i) = -net.line_susceptance.row(i).sum();
  out.load = Eigen::MatrixXd::Zero(n, n);
  out.load.diagonal() = -net.load_susceptance;
  return out;
}

SusceptanceMatrices build_susceptance_matrices(const NetworkModel& net) {
  return build_susceptance_matrices(reduce(net));
}

bool electrical_connectivity(const NetworkModel& net) {
  const auto online = net.online_buses();
  if (online.size() <= 1) return true;
  const auto comps = connected_components(net.line_susceptance());
  for (const auto& comp : comps) {
    const bool has_first = std::binary_search(comp.begin(), comp.end(), online.front());
    if (!has_first) continue;
    for (int i : online)
      if (!std::binary_search(comp.begin(), comp.end(), i)) return false;
    return true;
  }
  return false;
}

}  // namespace dapigrid
