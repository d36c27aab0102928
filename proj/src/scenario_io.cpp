#include "dapigrid/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "dapigrid/errors.hpp"

namespace dapigrid {

namespace {

using json = nlohmann::json;

/// A JSON node together with its path, for error messages.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return value_; }

  bool has(const char* key) const { return value_.contains(key); }

  Node at(const char* key) const {
    if (!value_.contains(key)) throw ValidationError(join(key), "required field is missing");
    return Node(value_.at(key), join(key));
  }
  Node at(std::size_t index) const { return Node(value_.at(index), path_ + "/" + std::to_string(index)); }

  /// Rejects keys outside `allowed`.
  const Node& object(std::initializer_list<const char*> allowed) const {
    if (!value_.is_object()) throw ValidationError(path_, "expected an object");
    for (const auto& [key, _] : value_.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) throw ValidationError(join(key.c_str()), "unknown key");
    }
    return *this;
  }

  std::size_t array_size() const {
    if (!value_.is_array()) throw ValidationError(path_, "expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) throw ValidationError(path_, "expected a number");
    return value_.get<double>();
  }
  int integer() const {
    if (!value_.is_number_integer()) throw ValidationError(path_, "expected an integer");
    return value_.get<int>();
  }
  bool boolean() const {
    if (!value_.is_boolean()) throw ValidationError(path_, "expected true or false");
    return value_.get<bool>();
  }
  std::string string() const {
    if (!value_.is_string()) throw ValidationError(path_, "expected a string");
    return value_.get<std::string>();
  }

  double number(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }

 private:
  std::string join(const char* key) const { return path_.empty() ? key : path_ + "/" + key; }

  const json& value_;
  std::string path_;
};

int bus_index(const NetworkModel& net, const Node& node) {
  const int index = net.index_of(node.integer());
  if (index < 0) throw ValidationError(node.path(), "unknown bus id " + std::to_string(node.integer()));
  return index;
}

NetworkModel parse_network(const Node& node, double& frequency_hz) {
  node.object({"nominal_frequency_hz", "buses", "lines"});
  frequency_hz = node.number("nominal_frequency_hz", 50.0);
  if (!(std::isfinite(frequency_hz) && frequency_hz > 0.0))
    throw ValidationError("network/nominal_frequency_hz", "must be > 0");

  const Node buses = node.at("buses");
  std::vector<Bus> bus_list;
  for (std::size_t b = 0; b < buses.array_size(); ++b) {
    const Node bn = buses.at(b);
    bn.object({"id", "name", "dg_online", "junction", "load"});
    Bus bus;
    bus.id = bn.at("id").integer();
    bus.name = bn.has("name") ? bn.at("name").string() : "DG" + std::to_string(bus.id);
    bus.junction = bn.has("junction") && bn.at("junction").boolean();
    bus.dg_online = bn.has("dg_online") ? bn.at("dg_online").boolean() : !bus.junction;
    if (bn.has("load")) {
      const Node ln = bn.at("load");
      ln.object({"susceptance", "conductance"});
      bus.load.susceptance = ln.number("susceptance", 0.0);
      bus.load.conductance = ln.number("conductance", 0.0);
      if (!(std::isfinite(bus.load.susceptance) && bus.load.susceptance >= 0.0))
        throw ValidationError(ln.path() + "/susceptance", "must be finite and >= 0");
      if (!(std::isfinite(bus.load.conductance) && bus.load.conductance >= 0.0))
        throw ValidationError(ln.path() + "/conductance", "must be finite and >= 0");
    }
    bus_list.push_back(bus);
  }

  // Resolve ids before the network exists.
  const auto index_of = [&](const Node& n) {
    const int id = n.integer();
    for (std::size_t b = 0; b < bus_list.size(); ++b)
      if (bus_list[b].id == id) return static_cast<int>(b);
    throw ValidationError(n.path(), "unknown bus id " + std::to_string(id));
  };

  const Node lines = node.at("lines");
  std::vector<Line> line_list;
  for (std::size_t l = 0; l < lines.array_size(); ++l) {
    const Node ln = lines.at(l);
    ln.object({"from", "to", "R", "L", "X", "connected"});
    Line line;
    line.from = index_of(ln.at("from"));
    line.to = index_of(ln.at("to"));
    line.resistance = ln.number("R", 0.0);
    if (ln.has("X") == ln.has("L")) throw ValidationError(ln.path(), "give exactly one of X (ohm) or L (H)");
    line.reactance = ln.has("X") ? ln.at("X").number() : reactance_from_inductance(ln.at("L").number(), frequency_hz);
    if (!(std::isfinite(line.reactance) && line.reactance > 0.0))
      throw ValidationError(ln.path() + (ln.has("X") ? "/X" : "/L"), "must be > 0");
    if (!(std::isfinite(line.resistance) && line.resistance >= 0.0))
      throw ValidationError(ln.path() + "/R", "must be finite and >= 0");
    if (ln.has("connected") && !ln.at("connected").boolean()) line.status = LineStatus::kDisconnected;
    line_list.push_back(line);
  }
  return NetworkModel(std::move(bus_list), std::move(line_list));
}

std::vector<DgController> parse_controllers(const Node& node, const NetworkModel& net) {
  std::vector<DgController> out(static_cast<std::size_t>(net.size()));
  std::vector<bool> seen(out.size(), false);
  for (std::size_t c = 0; c < node.array_size(); ++c) {
    const Node cn = node.at(c);
    cn.object({"bus", "m", "n", "k", "kappa", "beta", "f_ref", "omega_ref", "E_ref", "P_rated", "Q_rated"});
    const int i = bus_index(net, cn.at("bus"));
    if (net.bus(i).junction) throw ValidationError(cn.path() + "/bus", "junction buses take no controller");
    if (seen[i]) throw ValidationError(cn.path() + "/bus", "duplicate controller for this bus");
    seen[i] = true;
    DgController& d = out[i];
    d.m = cn.at("m").number();
    d.n = cn.at("n").number();
    d.k = cn.at("k").number();
    d.kappa = cn.at("kappa").number();
    d.beta = cn.number("beta", 0.0);
    if (cn.has("f_ref") == cn.has("omega_ref"))
      throw ValidationError(cn.path(), "give exactly one of f_ref (Hz) or omega_ref (rad/s)");
    d.omega_ref = cn.has("omega_ref") ? cn.at("omega_ref").number() : 2.0 * std::numbers::pi * cn.at("f_ref").number();
    d.E_ref = cn.at("E_ref").number();
    d.P_rated = cn.at("P_rated").number();
    d.Q_rated = cn.at("Q_rated").number();
    d.validate(cn.path());
  }
  for (int i = 0; i < net.size(); ++i)
    if (!seen[i] && !net.bus(i).junction) throw ValidationError("controllers", "no controller for bus id " + std::to_string(net.bus(i).id));
  return out;
}

CommGraph parse_layer(const Node& node, int n, bool directed) {
  if (node.has("matrix")) {
    node.object({"matrix"});
    const Node mn = node.at("matrix");
    if (mn.array_size() != static_cast<std::size_t>(n))
      throw ValidationError(mn.path(), "expected " + std::to_string(n) + " rows");
    Eigen::MatrixXd w(n, n);
    for (int i = 0; i < n; ++i) {
      const Node row = mn.at(static_cast<std::size_t>(i));
      if (row.array_size() != static_cast<std::size_t>(n))
        throw ValidationError(row.path(), "expected " + std::to_string(n) + " columns");
      for (int j = 0; j < n; ++j) {
        w(i, j) = row.at(static_cast<std::size_t>(j)).number();
        if (!(std::isfinite(w(i, j)) && w(i, j) >= 0.0))
          throw ValidationError(row.path() + "/" + std::to_string(j), "weights must be finite and >= 0");
      }
    }
    try {
      return CommGraph(w, directed);
    } catch (const ValidationError& e) {
      throw ValidationError(mn.path(), e.what());
    }
  }
  node.object({"topology", "weight"});
  const std::string topo = node.at("topology").string();
  const double weight = node.at("weight").number();
  if (!(std::isfinite(weight) && weight >= 0.0)) throw ValidationError(node.path() + "/weight", "must be >= 0");
  // Named topologies are symmetric; `directed` still governs later link edits.
  if (topo == "ring") return CommGraph(CommGraph::ring(n, weight).weights(), directed);
  if (topo == "chain") return CommGraph(CommGraph::chain(n, weight).weights(), directed);
  if (topo == "complete") return CommGraph(CommGraph::complete(n, weight).weights(), directed);
  if (topo == "none") return CommGraph(CommGraph::empty(n).weights(), directed);
  throw ValidationError(node.path() + "/topology", "expected ring, chain, complete or none");
}

ScenarioEvent parse_event(const Node& en, const NetworkModel& net) {
  ScenarioEvent ev;
  const Node kn = en.at("kind");
  const auto kind = event_kind_from_string(kn.string());
  if (!kind) throw ValidationError(kn.path(), "unknown event kind '" + kn.string() + "'");
  ev.kind = *kind;
  switch (ev.kind) {
    case EventKind::kEnableSecondary:
    case EventKind::kDisableSecondary:
      en.object({"t", "kind"});
      break;
    case EventKind::kLoadSet:
      en.object({"t", "kind", "bus", "susceptance", "conductance"});
      ev.bus = bus_index(net, en.at("bus"));
      ev.load.susceptance = en.at("susceptance").number();
      ev.load.conductance = en.number("conductance", 0.0);
      break;
    case EventKind::kCommLinkSet: {
      en.object({"t", "kind", "layer", "i", "j", "weight"});
      const std::string layer = en.has("layer") ? en.at("layer").string() : "AB";
      if (layer == "A") ev.layer = CommLayer::kA;
      else if (layer == "B") ev.layer = CommLayer::kB;
      else if (layer == "AB" || layer == "both") ev.layer = CommLayer::kBoth;
      else throw ValidationError(en.path() + "/layer", "expected A, B or AB");
      ev.i = bus_index(net, en.at("i"));
      ev.j = bus_index(net, en.at("j"));
      ev.weight = en.at("weight").number();
      break;
    }
    case EventKind::kDgPlugOut:
    case EventKind::kDgPlugIn:
      en.object({"t", "kind", "bus"});
      ev.bus = bus_index(net, en.at("bus"));
      break;
  }
  ev.time = en.at("t").number();
  return ev;
}

void parse_sim(const Node& node, SimSettings& sim) {
  node.object({"t_end", "rtol", "atol", "sample_rate", "tau_E", "max_step", "steady_tol", "steady_window",
               "steady_horizon"});
  sim.t_end = node.at("t_end").number();
  sim.rtol = node.number("rtol", sim.rtol);
  sim.atol = node.number("atol", sim.atol);
  sim.sample_rate = node.number("sample_rate", sim.sample_rate);
  sim.tau_E = node.number("tau_E", sim.tau_E);
  sim.max_step = node.number("max_step", sim.max_step);
  sim.steady_tol = node.number("steady_tol", sim.steady_tol);
  sim.steady_window = node.number("steady_window", sim.steady_window);
  sim.steady_horizon = node.number("steady_horizon", sim.steady_horizon);
}

Scenario parse_document(const json& doc) {
  const Node root(doc, "");
  root.object({"name", "network", "controllers", "comm", "events", "sim", "analysis"});
  Scenario s;
  s.name = root.has("name") ? root.at("name").string() : "scenario";
  s.network = parse_network(root.at("network"), s.nominal_frequency_hz);
  const int n = s.network.size();
  s.controllers = parse_controllers(root.at("controllers"), s.network);

  const Node comm = root.at("comm");
  comm.object({"A", "B", "directed"});
  const bool directed = comm.has("directed") && comm.at("directed").boolean();
  s.comm_a = parse_layer(comm.at("A"), n, directed);
  s.comm_b = parse_layer(comm.at("B"), n, directed);

  if (root.has("events")) {
    const Node events = root.at("events");
    for (std::size_t k = 0; k < events.array_size(); ++k) s.events.push_back(parse_event(events.at(k), s.network));
  }
  parse_sim(root.at("sim"), s.sim);

  if (root.has("analysis")) {
    const Node an = root.at("analysis");
    an.object({"sweep"});
    if (an.has("sweep")) {
      const Node sw = an.at("sweep");
      sw.object({"gain", "from", "to", "points"});
      s.sweep = SweepSpec{sw.at("gain").string(), sw.at("from").number(), sw.at("to").number(),
                          sw.at("points").integer()};
    }
  }
  s.validate();
  return s;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // The reported byte is one past the offending character.
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": malformed JSON";
    throw ParseError(os.str());
  }
  try {
    return parse_document(doc);
  } catch (const json::exception& e) {
    throw ValidationError("<document>", e.what());
  }
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string());
}

nlohmann::ordered_json to_json(const Scenario& s) {
  using oj = nlohmann::ordered_json;
  const NetworkModel& net = s.network;
  const auto id = [&](int index) { return net.bus(index).id; };

  oj buses = oj::array();
  for (const Bus& b : net.buses()) {
    buses.push_back(oj{{"id", b.id},
                       {"name", b.name},
                       {"dg_online", b.dg_online},
                       {"junction", b.junction},
                       {"load", {{"susceptance", b.load.susceptance}, {"conductance", b.load.conductance}}}});
  }
  oj lines = oj::array();
  for (const Line& l : net.lines()) {
    lines.push_back(oj{{"from", id(l.from)},
                       {"to", id(l.to)},
                       {"R", l.resistance},
                       {"X", l.reactance},
                       {"connected", l.connected()}});
  }
  oj controllers = oj::array();
  for (int i = 0; i < net.size(); ++i) {
    if (net.bus(i).junction) continue;
    const DgController& c = s.controllers[i];
    controllers.push_back(oj{{"bus", id(i)},
                             {"m", c.m},
                             {"n", c.n},
                             {"k", c.k},
                             {"kappa", c.kappa},
                             {"beta", c.beta},
                             {"omega_ref", c.omega_ref},
                             {"E_ref", c.E_ref},
                             {"P_rated", c.P_rated},
                             {"Q_rated", c.Q_rated}});
  }
  oj events = oj::array();
  for (const ScenarioEvent& ev : s.events) {
    oj e{{"t", ev.time}, {"kind", to_string(ev.kind)}};
    switch (ev.kind) {
      case EventKind::kEnableSecondary:
      case EventKind::kDisableSecondary:
        break;
      case EventKind::kLoadSet:
        e["bus"] = id(ev.bus);
        e["susceptance"] = ev.load.susceptance;
        e["conductance"] = ev.load.conductance;
        break;
      case EventKind::kCommLinkSet:
        e["layer"] = to_string(ev.layer);
        e["i"] = id(ev.i);
        e["j"] = id(ev.j);
        e["weight"] = ev.weight;
        break;
      case EventKind::kDgPlugOut:
      case EventKind::kDgPlugIn:
        e["bus"] = id(ev.bus);
        break;
    }
    events.push_back(e);
  }
  const SimSettings& sim = s.sim;
  oj doc{{"name", s.name},
         {"network", {{"nominal_frequency_hz", s.nominal_frequency_hz}, {"buses", buses}, {"lines", lines}}},
         {"controllers", controllers},
         {"comm",
          {{"A", {{"matrix", matrix_json(s.comm_a.weights())}}},
           {"B", {{"matrix", matrix_json(s.comm_b.weights())}}},
           {"directed", s.comm_a.directed() || s.comm_b.directed()}}},
         {"events", events},
         {"sim",
          {{"t_end", sim.t_end},
           {"rtol", sim.rtol},
           {"atol", sim.atol},
           {"sample_rate", sim.sample_rate},
           {"tau_E", sim.tau_E},
           {"max_step", sim.max_step},
           {"steady_tol", sim.steady_tol},
           {"steady_window", sim.steady_window},
           {"steady_horizon", sim.steady_horizon}}}};
  if (s.sweep) {
    doc["analysis"] = {{"sweep", {{"gain", s.sweep->gain}, {"from", s.sweep->from}, {"to", s.sweep->to},
                                  {"points", s.sweep->points}}}};
  }
  return doc;
}

std::string serialize_scenario(const Scenario& scenario) { return to_json(scenario).dump(2) + "\n"; }

}  // namespace dapigrid
