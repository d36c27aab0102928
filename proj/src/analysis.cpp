#include "dapigrid/analysis.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "dapigrid/errors.hpp"

namespace dapigrid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_real(std::complex<double> z) { return std::abs(z.imag()) <= 1e-6 * std::max(1.0, std::abs(z)); }

}  // namespace

LinearVoltageSystem build_linear_voltage_system(const Eigen::MatrixXd& Y, const GainVectors& g,
                                                const Eigen::MatrixXd& laplacian_b) {
  const int n = g.size();
  for (int a = 0; a < n; ++a) {
    const std::string where = "controllers/" + std::to_string(a);
    if (!(g.kappa(a) > 0.0)) throw ValidationError(where + "/kappa", "must be > 0");
    if (!(g.Q_rated(a) > 0.0)) throw ValidationError(where + "/Q_rated", "must be > 0");
    if (!(g.n(a) > 0.0)) throw ValidationError(where + "/n", "must be > 0");
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  LinearVoltageSystem sys;
  sys.W1 = I + (g.n.array() * g.E_ref.array()).matrix().asDiagonal() * Y;
  const Eigen::MatrixXd sharing = laplacian_b * (g.E_ref.array() / g.Q_rated.array()).matrix().asDiagonal() * Y;
  sys.W2 = g.kappa.cwiseInverse().asDiagonal() * (Eigen::MatrixXd(g.beta.asDiagonal()) + sharing);

  sys.W.setZero(2 * n, 2 * n);
  sys.W.topLeftCorner(n, n) = -sys.W1;
  sys.W.topRightCorner(n, n) = I;
  sys.W.bottomLeftCorner(n, n) = -sys.W2;
  sys.u.resize(2 * n);
  sys.u.head(n) = g.E_ref;
  sys.u.tail(n) = (g.beta.array() * g.E_ref.array() / g.kappa.array()).matrix();

  // D^-1/2 W1 D^1/2 with D = N [E*] must be symmetric.
  const Eigen::VectorXd d = (g.n.array() * g.E_ref.array()).sqrt().matrix();
  const Eigen::MatrixXd sym = d.cwiseInverse().asDiagonal() * sys.W1 * d.asDiagonal();
  if ((sym - sym.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, sym.cwiseAbs().maxCoeff()))
    throw NumericError("W1 is not similar to a symmetric matrix");
  return sys;
}

LinearVoltageSystem build_linear_voltage_system(const NetworkModel& net, const std::vector<DgController>& controllers,
                                                const CommGraph& graph_b) {
  const ReducedNetwork red = reduce(net);
  return build_linear_voltage_system(build_susceptance_matrices(red).stiffness(),
                                     GainVectors::gather(controllers, red.buses),
                                     graph_b.subgraph(red.buses).laplacian());
}

LinearVoltageSystem build_linear_voltage_system(const Configuration& config) {
  return build_linear_voltage_system(config.network, config.controllers, config.comm_b);
}

StabilityReport check_stability_conditions(const LinearVoltageSystem& sys) {
  StabilityReport r;
  r.lambda_min_w1 = linalg::lambda_min_symmetric<double>(sys.W1 + sys.W1.transpose());
  r.lambda_min_w2 = linalg::lambda_min_symmetric<double>(sys.W2 + sys.W2.transpose());
  r.condition_w1 = r.lambda_min_w1 > 0.0;
  r.condition_w2 = r.lambda_min_w2 > 0.0;
  const double norm = std::max(sys.W.norm(), std::numeric_limits<double>::min());
  r.max_real = -std::numeric_limits<double>::infinity();
  for (const auto& pair : linalg::eigenpairs<double>(sys.W)) {
    r.eigenvalues.push_back(pair.value);
    r.max_real = std::max(r.max_real, pair.value.real());
    r.max_residual = std::max(r.max_residual, pair.residual / norm);
  }
  r.sufficiency_consistent = !(r.condition_w1 && r.condition_w2) || r.max_real < 0.0;
  return r;
}

ComplexList characteristic_roots(const LinearVoltageSystem& sys) {
  return linalg::quadratic_pencil_roots<double>(sys.W1, sys.W2);
}

Eigen::VectorXd ground(const ClosedLoop& loop, const Eigen::VectorXd& x) {
  const int n = loop.size();
  Eigen::VectorXd y(4 * n - 1);
  for (int a = 1; a < n; ++a) y(a - 1) = x(a) - x(0);
  y.tail(3 * n) = x.tail(3 * n);
  return y;
}

Eigen::MatrixXd jacobian_ungrounded(const ClosedLoop& loop, const Eigen::VectorXd& x, double h) {
  const Eigen::Index m = x.size();
  Eigen::MatrixXd J(m, m);
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < m; ++j) {
    xp(j) = x(j) + h;
    const Eigen::VectorXd fp = loop.rhs(xp);
    xp(j) = x(j) - h;
    const Eigen::VectorXd fm = loop.rhs(xp);
    xp(j) = x(j);
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

Eigen::MatrixXd jacobian_full(const ClosedLoop& loop, const Eigen::VectorXd& x, double h, double max_residual) {
  const double residual = loop.grounded_residual(loop.rhs(x));
  if (!(residual <= max_residual)) {
    std::ostringstream os;
    os << "operating point not converged (grounded residual " << residual << " > " << max_residual << ")";
    throw DomainError(os.str());
  }
  const int n = loop.size();
  const int m = 4 * n - 1;
  // x(y): theta_1 stays at its operating value.
  const auto lift = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd z(4 * n);
    z(0) = x(0);
    for (int a = 1; a < n; ++a) z(a) = x(0) + y(a - 1);
    z.tail(3 * n) = y.tail(3 * n);
    return z;
  };
  const auto field = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd d = loop.rhs(lift(y));
    Eigen::VectorXd g(m);
    for (int a = 1; a < n; ++a) g(a - 1) = d(a) - d(0);
    g.tail(3 * n) = d.tail(3 * n);
    return g;
  };
  const Eigen::VectorXd y0 = ground(loop, x);
  Eigen::MatrixXd J(m, m);
  Eigen::VectorXd yp = y0;
  for (int j = 0; j < m; ++j) {
    yp(j) = y0(j) + h;
    const Eigen::VectorXd fp = field(yp);
    yp(j) = y0(j) - h;
    const Eigen::VectorXd fm = field(yp);
    yp(j) = y0(j);
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

Configuration final_configuration(const Scenario& scenario) {
  Configuration config = Configuration::initial(scenario);
  SystemState scratch = default_initial_state(scenario);
  for (const ScenarioEvent& ev : scenario.events) apply_event(ev, config, scratch);
  config.secondary_enabled = true;
  return config;
}

SteadyState operating_point(const Scenario& scenario, double tol, const SystemState* start) {
  const Configuration config = final_configuration(scenario);
  SystemState state = start ? *start : default_initial_state(scenario);
  state.t = 0.0;
  for (int i = 0; i < state.size(); ++i) state.active[i] = config.network.bus(i).dg_online;
  return settle(config, state, scenario.sim, scenario.sim.steady_window, tol, scenario.sim.steady_horizon);
}

Scenario with_gain(const Scenario& scenario, const std::string& gain, double value) {
  Scenario s = scenario;
  if (gain == "b") {
    const auto scale = [&](const CommGraph& g) {
      Eigen::MatrixXd w = g.weights();
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          if (w(i, j) > 0.0) w(i, j) = value;
      return CommGraph(w, g.directed());
    };
    s.comm_b = scale(s.comm_b);
    for (ScenarioEvent& ev : s.events)
      if (ev.kind == EventKind::kCommLinkSet && ev.layer != CommLayer::kA && ev.weight > 0.0) ev.weight = value;
    return s;
  }
  for (std::size_t i = 0; i < s.controllers.size(); ++i) {
    if (s.network.bus(static_cast<int>(i)).junction) continue;
    DgController& c = s.controllers[i];
    if (gain == "k") c.k = value;
    else if (gain == "kappa") c.kappa = value;
    else if (gain == "beta") c.beta = value;
    else throw ValidationError("gain", "expected one of k, kappa, beta, b");
  }
  return s;
}

double nominal_gain(const Scenario& scenario, const std::string& gain) {
  if (gain == "b") return scenario.comm_b.weights().maxCoeff();
  for (std::size_t i = 0; i < scenario.controllers.size(); ++i) {
    if (scenario.network.bus(static_cast<int>(i)).junction) continue;
    const DgController& c = scenario.controllers[i];
    if (gain == "k") return c.k;
    if (gain == "kappa") return c.kappa;
    if (gain == "beta") return c.beta;
    break;
  }
  throw ValidationError("gain", "expected one of k, kappa, beta, b");
}

std::vector<double> geometric_grid(double from, double to, int points) {
  if (!(from > 0.0 && to > from && points >= 2)) throw ValidationError("sweep", "need 0 < from < to and points >= 2");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double ratio = std::log(to / from) / (points - 1);
  for (int k = 0; k < points; ++k) grid[k] = from * std::exp(ratio * k);
  grid.front() = from;
  grid.back() = to;
  return grid;
}

ModeSet analyze_modes(const Eigen::MatrixXd& jacobian, int n_active) {
  ModeSet modes;
  modes.pairs = linalg::eigenpairs<double>(jacobian);
  const int n = n_active;
  for (const auto& p : modes.pairs) {
    const double w = p.participation.segment(0, n - 1).sum() + p.participation.segment(2 * n - 1, n).sum();
    modes.frequency_weight.push_back(w);
  }
  return modes;
}

EigenTrace eigen_trace(const Scenario& base, const std::string& gain, const std::vector<double>& grid) {
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw ValidationError("sweep", "grid must be strictly increasing");
  EigenTrace trace;
  trace.gain = gain;

  const SystemState nominal = operating_point(base).state;
  std::vector<std::future<TracePoint>> jobs;
  for (double value : grid) {
    const Scenario s = with_gain(base, gain, value);
    jobs.push_back(std::async(std::launch::async, [s, value, &nominal] {
      const SteadyState op = operating_point(s, 1e-10, &nominal);
      const ClosedLoop loop(op.config);
      const Eigen::VectorXd x = loop.pack(op.state);
      TracePoint point;
      point.gain_value = value;
      point.modes = analyze_modes(jacobian_full(loop, x), loop.size());
      for (const auto& p : point.modes.pairs) point.eigenvalues.push_back(p.value);
      return point;
    }));
  }
  bool failed = false;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    try {
      TracePoint point = jobs[k].get();
      if (!failed) trace.points.push_back(std::move(point));
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << gain << "=" << grid[k] << ": " << e.what();
      trace.warnings.push_back(os.str());
      failed = true;
    }
  }
  return trace;
}

double slowest_real_frequency_mode(const ModeSet& modes) {
  double best = kNaN;
  for (std::size_t k = 0; k < modes.pairs.size(); ++k) {
    const auto z = modes.pairs[k].value;
    if (!is_real(z) || modes.frequency_weight[k] <= 0.5) continue;
    if (std::isnan(best) || z.real() > best) best = z.real();
  }
  return best;
}

std::complex<double> least_damped_voltage_pair(const ModeSet& modes) {
  std::complex<double> best(kNaN, kNaN);
  double best_zeta = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < modes.pairs.size(); ++k) {
    const auto z = modes.pairs[k].value;
    if (is_real(z) || z.imag() < 0.0 || modes.frequency_weight[k] >= 0.5) continue;
    const double zeta = damping_ratio(z);
    if (zeta < best_zeta) {
      best_zeta = zeta;
      best = z;
    }
  }
  return best;
}

std::complex<double> slowest_voltage_pair(const ModeSet& modes) {
  // pairs are sorted by descending real part
  for (std::size_t k = 0; k < modes.pairs.size(); ++k) {
    const auto z = modes.pairs[k].value;
    if (!is_real(z) && z.imag() > 0.0 && modes.frequency_weight[k] < 0.5) return z;
  }
  return {kNaN, kNaN};
}

ComplexList follow_eigenvalue(const EigenTrace& trace, std::size_t from, std::complex<double> start) {
  ComplexList path(trace.points.size());
  const auto nearest = [](const ComplexList& values, std::complex<double> z) {
    std::complex<double> best = values.front();
    for (const auto& v : values)
      if (std::abs(v - z) < std::abs(best - z)) best = v;
    return best;
  };
  path[from] = nearest(trace.points[from].eigenvalues, start);
  for (std::size_t k = from + 1; k < path.size(); ++k) path[k] = nearest(trace.points[k].eigenvalues, path[k - 1]);
  for (std::size_t k = from; k-- > 0;) path[k] = nearest(trace.points[k].eigenvalues, path[k + 1]);
  return path;
}

std::vector<double> default_grid(const Scenario& scenario, const std::string& gain, int points) {
  const double nominal = nominal_gain(scenario, gain);
  if (!(nominal > 0.0)) throw ValidationError("gain", "nominal " + gain + " is zero; give --from and --to");
  return geometric_grid(nominal / 4.0, nominal * (gain == "kappa" ? 8.0 : 4.0), points);
}

SufficiencyCheck random_sufficiency_check(std::uint64_t seed, int draws, int max_n) {
  std::mt19937_64 rng(seed);
  const auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  SufficiencyCheck out;
  out.worst_max_real = -std::numeric_limits<double>::infinity();
  for (int d = 0; d < draws; ++d) {
    const int n = std::uniform_int_distribution<int>(1, max_n)(rng);
    // Random tree plus optional extra lines keeps the network connected.
    Eigen::MatrixXd bus = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      const int j = std::uniform_int_distribution<int>(0, i - 1)(rng);
      bus(i, j) = bus(j, i) = 1.0 / uniform(0.2, 2.0);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (bus(i, j) == 0.0 && uniform(0.0, 1.0) < 0.3) bus(i, j) = bus(j, i) = 1.0 / uniform(0.2, 2.0);
    Eigen::MatrixXd Y = -bus;
    for (int i = 0; i < n; ++i) Y(i, i) = bus.row(i).sum() + uniform(0.0, 0.01);

    GainVectors g;
    g.m = Eigen::VectorXd::Constant(n, 5e-3);
    g.k = Eigen::VectorXd::Constant(n, 1.0);
    g.P_rated = Eigen::VectorXd::Constant(n, 1000.0);
    g.n.resize(n);
    g.kappa.resize(n);
    g.beta.resize(n);
    g.E_ref.resize(n);
    g.Q_rated.resize(n);
    for (int i = 0; i < n; ++i) {
      g.n(i) = uniform(5e-4, 5e-3);
      g.kappa(i) = uniform(0.2, 5.0);
      g.beta(i) = uniform(0.0, 5.0);
      g.E_ref(i) = uniform(300.0, 350.0);
      g.Q_rated(i) = uniform(200.0, 1000.0);
    }
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (uniform(0.0, 1.0) < 0.7) b(i, j) = b(j, i) = uniform(0.0, 300.0);
    const Eigen::MatrixXd lap = Eigen::MatrixXd(b.rowwise().sum().asDiagonal()) - b;

    const StabilityReport r = check_stability_conditions(build_linear_voltage_system(Y, g, lap));
    ++out.draws;
    if (r.condition_w1 && r.condition_w2) {
      ++out.both_conditions;
      out.worst_max_real = std::max(out.worst_max_real, r.max_real);
      if (!(r.max_real < 0.0)) ++out.counterexamples;
    }
  }
  return out;
}

double damping_ratio(std::complex<double> lambda) { return -lambda.real() / std::abs(lambda); }

}  // namespace dapigrid
