#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dapigrid/control.hpp"
#include "dapigrid/netmodel.hpp"

namespace dapigrid {

enum class EventKind {
  kEnableSecondary,
  kDisableSecondary,
  kLoadSet,
  kCommLinkSet,
  kDgPlugOut,
  kDgPlugIn,
};

enum class CommLayer { kA, kB, kBoth };

struct ScenarioEvent {
  double time = 0.0;
  EventKind kind = EventKind::kEnableSecondary;
  int bus = -1;  // load-set, dg-plug-out, dg-plug-in (bus index)
  Load load;     // load-set
  CommLayer layer = CommLayer::kBoth;
  int i = -1;  // comm-link-set endpoints (bus indices)
  int j = -1;
  double weight = 0.0;

  friend bool operator==(const ScenarioEvent&, const ScenarioEvent&) = default;
};

std::string to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(const std::string& text);
std::string to_string(CommLayer layer);

struct SimSettings {
  double t_end = 0.0;
  double rtol = 1e-9;
  double atol = 1e-9;
  double sample_rate = 100.0;  // Hz
  double tau_E = 1.0;          // voltage low-pass time constant, s
  double max_step = 0.05;      // s
  double steady_tol = 1e-9;    // grounded derivative norm
  double steady_window = 1.0;  // s
  double steady_horizon = 600.0;  // extra time allowed to settle after t_end, s

  friend bool operator==(const SimSettings&, const SimSettings&) = default;
};

/// Gain sweep used by eigenvalue traces. `gain` is one of k, kappa, beta, b.
struct SweepSpec {
  std::string gain;
  double from = 0.0;
  double to = 0.0;
  int points = 0;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct Scenario {
  std::string name;
  double nominal_frequency_hz = 50.0;
  NetworkModel network;
  std::vector<DgController> controllers;  // one per bus, declaration order
  CommGraph comm_a;
  CommGraph comm_b;
  std::vector<ScenarioEvent> events;
  SimSettings sim;
  std::optional<SweepSpec> sweep;

  int size() const { return network.size(); }

  /// Cross-section checks: sizes, event order and targets, plug-in/out
  /// consistency. Throws ValidationError with a field path.
  void validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

}  // namespace dapigrid
