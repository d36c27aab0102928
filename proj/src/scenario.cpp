#include "dapigrid/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "dapigrid/errors.hpp"

namespace dapigrid {

namespace {

struct KindName {
  EventKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {EventKind::kEnableSecondary, "enable-secondary"}, {EventKind::kDisableSecondary, "disable-secondary"},
    {EventKind::kLoadSet, "load-set"},                 {EventKind::kCommLinkSet, "comm-link-set"},
    {EventKind::kDgPlugOut, "dg-plug-out"},            {EventKind::kDgPlugIn, "dg-plug-in"},
};

void require(bool ok, const std::string& field, const std::string& reason) {
  if (!ok) throw ValidationError(field, reason);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

std::string to_string(EventKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

std::optional<EventKind> event_kind_from_string(const std::string& text) {
  for (const auto& kn : kKindNames)
    if (text == kn.name) return kn.kind;
  return std::nullopt;
}

std::string to_string(CommLayer layer) {
  switch (layer) {
    case CommLayer::kA:
      return "A";
    case CommLayer::kB:
      return "B";
    case CommLayer::kBoth:
      return "AB";
  }
  return "AB";
}

void Scenario::validate() const {
  const int n = size();
  require(n >= 2, "network/buses", "at least two buses are required");
  require(std::isfinite(nominal_frequency_hz) && nominal_frequency_hz > 0.0, "network/nominal_frequency_hz",
          "must be > 0");
  require(static_cast<int>(controllers.size()) == n, "controllers",
          "expected one controller per bus (" + std::to_string(n) + ")");
  double omega_ref = 0.0;
  for (int i = 0; i < n; ++i) {
    if (network.bus(i).junction) continue;
    controllers[i].validate("controllers/" + std::to_string(i));
    if (omega_ref == 0.0) omega_ref = controllers[i].omega_ref;
    require(controllers[i].omega_ref == omega_ref, "controllers/" + std::to_string(i) + "/f_ref",
            "all DGs must share one nominal frequency");
  }
  require(comm_a.size() == n, "comm/A", "matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  require(comm_b.size() == n, "comm/B", "matrix must be " + std::to_string(n) + "x" + std::to_string(n));

  require(sim.t_end >= 0.0 && std::isfinite(sim.t_end), "sim/t_end", "must be finite and >= 0");
  require(positive(sim.rtol), "sim/rtol", "must be > 0");
  require(positive(sim.atol), "sim/atol", "must be > 0");
  require(positive(sim.sample_rate), "sim/sample_rate", "must be > 0");
  require(positive(sim.tau_E), "sim/tau_E", "must be > 0");
  require(positive(sim.max_step), "sim/max_step", "must be > 0");
  require(positive(sim.steady_tol), "sim/steady_tol", "must be > 0");
  require(positive(sim.steady_window), "sim/steady_window", "must be > 0");
  require(positive(sim.steady_horizon), "sim/steady_horizon", "must be > 0");

  std::vector<bool> online(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) online[i] = network.bus(i).dg_online;
  require(std::any_of(online.begin(), online.end(), [](bool b) { return b; }), "network/buses",
          "at least one DG must start online");

  for (std::size_t k = 0; k < events.size(); ++k) {
    const ScenarioEvent& ev = events[k];
    const std::string where = "events/" + std::to_string(k);
    require(std::isfinite(ev.time) && ev.time >= 0.0, where + "/t", "event time must be finite and >= 0");
    require(ev.time <= sim.t_end, where + "/t", "event time exceeds sim/t_end");
    if (k > 0) {
      const ScenarioEvent& prev = events[k - 1];
      require(ev.time >= prev.time, where + "/t", "events must be sorted by time");
      // Simultaneous events must be of one kind so that their order is immaterial.
      require(ev.time != prev.time || ev.kind == prev.kind, where,
              "simultaneous events must share one kind");
    }
    auto require_bus = [&](int bus) {
      require(bus >= 0 && bus < n, where + "/bus", "unknown bus");
    };
    switch (ev.kind) {
      case EventKind::kEnableSecondary:
      case EventKind::kDisableSecondary:
        break;
      case EventKind::kLoadSet:
        require_bus(ev.bus);
        require(std::isfinite(ev.load.susceptance) && ev.load.susceptance >= 0.0, where + "/susceptance",
                "must be finite and >= 0");
        require(std::isfinite(ev.load.conductance) && ev.load.conductance >= 0.0, where + "/conductance",
                "must be finite and >= 0");
        break;
      case EventKind::kCommLinkSet:
        require(ev.i >= 0 && ev.i < n && ev.j >= 0 && ev.j < n && ev.i != ev.j, where, "invalid link endpoints");
        require(std::isfinite(ev.weight) && ev.weight >= 0.0, where + "/weight", "must be finite and >= 0");
        break;
      case EventKind::kDgPlugOut:
        require_bus(ev.bus);
        require(online[ev.bus], where + "/bus", "dg-plug-out of a DG that is already offline");
        online[ev.bus] = false;
        require(std::any_of(online.begin(), online.end(), [](bool b) { return b; }), where,
                "at least one DG must stay online");
        break;
      case EventKind::kDgPlugIn:
        require_bus(ev.bus);
        require(!online[ev.bus], where + "/bus", "dg-plug-in only applies to an offline DG");
        require(!network.bus(ev.bus).junction, where + "/bus", "a junction bus has no DG");
        online[ev.bus] = true;
        break;
    }
  }
  for (std::size_t k = 1; k < events.size(); ++k) {
    for (std::size_t l = 0; l < k; ++l) {
      const ScenarioEvent& a = events[k];
      const ScenarioEvent& b = events[l];
      if (a.time != b.time) continue;
      bool conflict = false;
      if (a.kind == EventKind::kCommLinkSet) {
        // Repeating one assignment is harmless; two different weights for one link are not.
        const bool layers = a.layer == b.layer || a.layer == CommLayer::kBoth || b.layer == CommLayer::kBoth;
        const bool pair = (a.i == b.i && a.j == b.j) || (!comm_b.directed() && a.i == b.j && a.j == b.i);
        conflict = layers && pair && a.weight != b.weight;
      } else {
        conflict = a.bus == b.bus;
      }
      require(!conflict, "events/" + std::to_string(k), "simultaneous events act on the same target");
    }
  }

  if (sweep) {
    const auto& s = *sweep;
    require(s.gain == "k" || s.gain == "kappa" || s.gain == "beta" || s.gain == "b", "analysis/sweep/gain",
            "must be one of k, kappa, beta, b");
    require(positive(s.from), "analysis/sweep/from", "must be > 0");
    require(std::isfinite(s.to) && s.to > s.from, "analysis/sweep/to", "must exceed from");
    require(s.points >= 2, "analysis/sweep/points", "must be >= 2");
  }
}

}  // namespace dapigrid
