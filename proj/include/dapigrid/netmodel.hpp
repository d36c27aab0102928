#pragma once

// Electrical topology of an islanded microgrid: DG buses with collocated
// constant-impedance loads, joined by purely inductive lines. SI units.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace dapigrid {

/// Constant-impedance load in consumption convention: at voltage E it draws
/// conductance * E^2 watts and susceptance * E^2 VAr (inductive, >= 0).
struct Load {
  double susceptance = 0.0;
  double conductance = 0.0;

  bool attached() const { return susceptance != 0.0 || conductance != 0.0; }
  friend bool operator==(const Load&, const Load&) = default;
};

struct Bus {
  int id = 0;
  std::string name;
  Load load;
  /// A bus whose DG is offline stays in the network as a passive junction.
  bool dg_online = true;
  /// Passive junction without a DG; never online.
  bool junction = false;

  friend bool operator==(const Bus&, const Bus&) = default;
};

enum class LineStatus { kConnected, kDisconnected };

struct Line {
  int from = 0;  // bus index (declaration order), not the file id
  int to = 0;
  double reactance = 0.0;   // ohms
  double resistance = 0.0;  // ohms; carried for documentation, not used by the flow model
  LineStatus status = LineStatus::kConnected;

  bool connected() const { return status == LineStatus::kConnected; }
  bool joins(int i, int j) const { return (from == i && to == j) || (from == j && to == i); }
  friend bool operator==(const Line&, const Line&) = default;
};

/// X = 2 pi f L.
double reactance_from_inductance(double inductance, double frequency_hz = 50.0);

/// Immutable network value. Event-driven changes return a modified copy.
class NetworkModel {
 public:
  NetworkModel() = default;
  /// Throws ValidationError on any invariant violation.
  NetworkModel(std::vector<Bus> buses, std::vector<Line> lines);

  int size() const { return static_cast<int>(buses_.size()); }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const Bus& bus(int index) const { return buses_.at(static_cast<std::size_t>(index)); }

  /// Index of the bus with the given file id, or -1.
  int index_of(int id) const;
  std::vector<int> online_buses() const;

  NetworkModel with_load(int bus, Load load) const;
  NetworkModel with_line_status(int i, int j, LineStatus status) const;
  NetworkModel with_dg_online(int bus, bool online) const;

  /// Full n x n matrix of 1/X_ij over connected lines; zero diagonal.
  Eigen::MatrixXd line_susceptance() const;

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
};

/// The network as seen from the online DG terminals. Passive buses (offline
/// DGs, junctions) are eliminated by Kron reduction, which is exact for a
/// lossless linear network; their reactive loads reappear as equivalent
/// shunts at the DG buses.
struct ReducedNetwork {
  std::vector<int> buses;            // online bus indices, ascending
  Eigen::MatrixXd line_susceptance;  // symmetric, zero diagonal, 1/X_eq
  Eigen::VectorXd load_susceptance;  // consumption convention
  Eigen::VectorXd load_conductance;

  int size() const { return static_cast<int>(buses.size()); }
};

/// Throws TopologyError if the online buses are not electrically connected,
/// ValidationError if a passive bus carries an active-power load.
ReducedNetwork reduce(const NetworkModel& net);

/// Bus susceptance matrix (off-diagonal +1/X_ij, diagonal minus the row sum)
/// and the diagonal load susceptance matrix in generator convention (an
/// inductive load contributes -b). With these signs the reactive injection is
/// Q_i = -E_i^2 Yload_ii + E_i sum_j Ybus_ij (E_i - E_j), and the stiffness
/// matrix Y = -(Ybus + Yload) is a symmetric M-matrix.
struct SusceptanceMatrices {
  Eigen::MatrixXd bus;
  Eigen::MatrixXd load;

  Eigen::MatrixXd stiffness() const { return -(bus + load); }
};

SusceptanceMatrices build_susceptance_matrices(const ReducedNetwork& net);
SusceptanceMatrices build_susceptance_matrices(const NetworkModel& net);

/// True iff all online buses lie in one island of the connected-line graph.
bool electrical_connectivity(const NetworkModel& net);

}  // namespace dapigrid
