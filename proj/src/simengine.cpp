#include "dapigrid/simengine.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "dapigrid/errors.hpp"
#include "dapigrid/linalg.hpp"
#include "dapigrid/ode.hpp"

namespace dapigrid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

/// Spectral radius of the central-difference Jacobian at x.
double spectral_radius(const ClosedLoop& loop, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd jac(n, n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + h;
    const Eigen::VectorXd fp = loop.rhs(xp);
    xp(j) = x(j) - h;
    const Eigen::VectorXd fm = loop.rhs(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  double rho = 0.0;
  for (const auto& z : linalg::eigenvalues<double>(jac)) rho = std::max(rho, std::abs(z));
  return rho;
}

}  // namespace

Configuration Configuration::initial(const Scenario& scenario) {
  Configuration c;
  c.network = scenario.network;
  c.controllers = scenario.controllers;
  c.comm_a = scenario.comm_a;
  c.comm_b = scenario.comm_b;
  c.secondary_enabled = false;
  c.tau_E = scenario.sim.tau_E;
  return c;
}

SystemState default_initial_state(const Scenario& scenario) {
  const int n = scenario.size();
  SystemState s;
  s.t = 0.0;
  s.theta = Eigen::VectorXd::Zero(n);
  s.E.resize(n);
  for (int i = 0; i < n; ++i) s.E(i) = scenario.controllers[i].E_ref;
  s.Omega = Eigen::VectorXd::Zero(n);
  s.e = Eigen::VectorXd::Zero(n);
  s.active.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s.active[i] = scenario.network.bus(i).dg_online;
  return s;
}

ClosedLoop::ClosedLoop(const Configuration& config)
    : active_(config.network.online_buses()),
      net_(reduce(config.network)),
      gains_(GainVectors::gather(config.controllers, active_)),
      comm_a_(config.comm_a.subgraph(active_)),
      comm_b_(config.comm_b.subgraph(active_)),
      secondary_(config.secondary_enabled),
      tau_E_(config.tau_E) {}

Eigen::VectorXd ClosedLoop::pack(const SystemState& state) const {
  const int n = size();
  Eigen::VectorXd x(4 * n);
  for (int a = 0; a < n; ++a) {
    const int i = active_[a];
    x(a) = state.theta(i);
    x(n + a) = state.E(i);
    x(2 * n + a) = state.Omega(i);
    x(3 * n + a) = state.e(i);
  }
  return x;
}

void ClosedLoop::unpack(const Eigen::VectorXd& x, SystemState& state) const {
  const int n = size();
  for (int a = 0; a < n; ++a) {
    const int i = active_[a];
    state.theta(i) = x(a);
    state.E(i) = x(n + a);
    state.Omega(i) = x(2 * n + a);
    state.e(i) = x(3 * n + a);
  }
}

InjectionVector ClosedLoop::injections(const Eigen::VectorXd& x) const {
  const int n = size();
  return injections_nonlinear(net_, x.segment(0, n), x.segment(n, n));
}

Eigen::VectorXd ClosedLoop::frequencies(const Eigen::VectorXd& x, const InjectionVector& inj) const {
  const int n = size();
  return (gains_.omega_ref - gains_.m.array() * inj.P.array() + x.segment(2 * n, n).array()).matrix();
}

Eigen::VectorXd ClosedLoop::rhs(const Eigen::VectorXd& x) const {
  const int n = size();
  const auto E = x.segment(n, n);
  const auto Omega = x.segment(2 * n, n);
  const auto e = x.segment(3 * n, n);
  const InjectionVector inj = injections(x);
  const Eigen::VectorXd omega = frequencies(x, inj);

  Eigen::VectorXd dx(4 * n);
  dx.segment(0, n) = omega.array() - gains_.omega_ref;
  dx.segment(n, n) = ((-(E - gains_.E_ref)).array() - gains_.n.array() * inj.Q.array() + e.array()) / tau_E_;
  if (secondary_) {
    dx.segment(2 * n, n) = dapi_frequency_rhs(gains_, comm_a_, omega, Omega);
    dx.segment(3 * n, n) = dapi_voltage_rhs(gains_, comm_b_, E, inj.Q, e);
  } else {
    dx.segment(2 * n, 2 * n).setZero();
  }
  return dx;
}

double ClosedLoop::grounded_residual(const Eigen::VectorXd& d) const {
  const int n = size();
  double r = 0.0;
  for (int a = 1; a < n; ++a) r = std::max(r, std::abs(d(a) - d(0)));
  for (int k = n; k < 4 * n; ++k) r = std::max(r, std::abs(d(k)));
  return r;
}

SystemState closed_loop_rhs(const Configuration& config, const SystemState& state) {
  const ClosedLoop loop(config);
  const Eigen::VectorXd d = loop.rhs(loop.pack(state));
  SystemState out = state;
  out.theta.setZero();
  out.E.setZero();
  out.Omega.setZero();
  out.e.setZero();
  loop.unpack(d, out);
  return out;
}

SystemState closed_loop_rhs(const NetworkModel& net, const std::vector<DgController>& controllers,
                            const CommGraph& comm_a, const CommGraph& comm_b, const SystemState& state,
                            bool secondary_enabled, double tau_E) {
  Configuration c{net, controllers, comm_a, comm_b, secondary_enabled, tau_E};
  return closed_loop_rhs(c, state);
}

Sample make_sample(const ClosedLoop& loop, const SystemState& state) {
  const int n = state.size();
  Sample s;
  s.t = state.t;
  s.f_hz = Eigen::VectorXd::Constant(n, kNaN);
  s.E = s.f_hz;
  s.P = s.f_hz;
  s.Q = s.f_hz;
  s.Omega = s.f_hz;
  s.e = s.f_hz;
  const Eigen::VectorXd x = loop.pack(state);
  const InjectionVector inj = loop.injections(x);
  const Eigen::VectorXd omega = loop.frequencies(x, inj);
  const auto& active = loop.active();
  const int na = loop.size();
  for (int a = 0; a < na; ++a) {
    const int i = active[a];
    s.f_hz(i) = omega(a) / (2.0 * std::numbers::pi);
    s.E(i) = x(na + a);
    s.P(i) = inj.P(a);
    s.Q(i) = inj.Q(a);
    s.Omega(i) = x(2 * na + a);
    s.e(i) = x(3 * na + a);
  }
  return s;
}

EventRecord apply_event(const ScenarioEvent& ev, Configuration& config, SystemState& state) {
  EventRecord rec;
  rec.time = ev.time;
  rec.kind = to_string(ev.kind);
  const auto bus_id = [&](int index) { return std::to_string(config.network.bus(index).id); };
  switch (ev.kind) {
    case EventKind::kEnableSecondary:
      config.secondary_enabled = true;
      break;
    case EventKind::kDisableSecondary:
      config.secondary_enabled = false;
      break;
    case EventKind::kLoadSet:
      config.network = config.network.with_load(ev.bus, ev.load);
      rec.args = "bus=" + bus_id(ev.bus) + " susceptance=" + format_double(ev.load.susceptance) +
                 " conductance=" + format_double(ev.load.conductance);
      break;
    case EventKind::kCommLinkSet:
      if (ev.layer != CommLayer::kB) config.comm_a = config.comm_a.with_link(ev.i, ev.j, ev.weight);
      if (ev.layer != CommLayer::kA) config.comm_b = config.comm_b.with_link(ev.i, ev.j, ev.weight);
      rec.args = "layer=" + to_string(ev.layer) + " i=" + bus_id(ev.i) + " j=" + bus_id(ev.j) +
                 " weight=" + format_double(ev.weight);
      break;
    case EventKind::kDgPlugOut:
      if (!config.network.bus(ev.bus).dg_online)
        throw ValidationError("dg-plug-out", "DG at bus " + bus_id(ev.bus) + " is already offline");
      config.network = config.network.with_dg_online(ev.bus, false);
      state.active[ev.bus] = false;
      rec.args = "bus=" + bus_id(ev.bus);
      break;
    case EventKind::kDgPlugIn: {
      if (config.network.bus(ev.bus).dg_online)
        throw ValidationError("dg-plug-in", "DG at bus " + bus_id(ev.bus) + " is already online");
      const std::vector<int> before = config.network.online_buses();
      config.network = config.network.with_dg_online(ev.bus, true);
      state.active[ev.bus] = true;
      // Synchronize to the susceptance-weighted mean angle of the DG's
      // (Kron-reduced) electrical neighbours.
      const ReducedNetwork red = reduce(config.network);
      int pos = 0;
      while (red.buses[pos] != ev.bus) ++pos;
      double wsum = 0.0;
      double acc = 0.0;
      for (int a = 0; a < red.size(); ++a) {
        if (a == pos) continue;
        const double w = red.line_susceptance(pos, a);
        wsum += w;
        acc += w * state.theta(red.buses[a]);
      }
      if (wsum > 0.0) {
        state.theta(ev.bus) = acc / wsum;
      } else {
        double mean = 0.0;
        for (int i : before) mean += state.theta(i);
        state.theta(ev.bus) = before.empty() ? 0.0 : mean / static_cast<double>(before.size());
      }
      state.E(ev.bus) = config.controllers[ev.bus].E_ref;
      state.Omega(ev.bus) = 0.0;
      state.e(ev.bus) = 0.0;
      rec.args = "bus=" + bus_id(ev.bus);
      break;
    }
  }
  // Validates the electrical topology of the new configuration.
  (void)reduce(config.network);
  return rec;
}

RunResult integrate(const Scenario& scenario) {
  scenario.validate();
  RunResult result;
  Configuration config = Configuration::initial(scenario);
  SystemState state = default_initial_state(scenario);
  const SimSettings& sim = scenario.sim;
  result.trajectory.n = scenario.size();
  auto& samples = result.trajectory.samples;

  auto loop = std::make_unique<ClosedLoop>(config);
  samples.push_back(make_sample(*loop, state));
  long next_k = 1;
  const auto grid_time = [&](long k) { return static_cast<double>(k) / sim.sample_rate; };
  constexpr double kTimeEps = 1e-9;

  ode::Options opt;
  opt.rtol = sim.rtol;
  opt.atol = sim.atol;
  opt.h_max = sim.max_step;
  double h = 0.0;

  std::size_t ev = 0;
  double t = 0.0;
  while (true) {
    const double t_stop = ev < scenario.events.size() ? scenario.events[ev].time : sim.t_end;
    if (t_stop > t) {
      Eigen::VectorXd x = loop->pack(state);
      SystemState scratch = state;
      const ClosedLoop& field = *loop;
      ode::dopri5([&](double, const Eigen::VectorXd& y) { return field.rhs(y); }, x, t, t_stop, h, opt,
                  [&](const ode::DenseStep& step, const Eigen::VectorXd& x_end) {
                    const double t_end_step = step.t0 + step.h;
                    while (grid_time(next_k) <= t_end_step + kTimeEps) {
                      const double tk = grid_time(next_k);
                      const bool at_end = std::abs(tk - t_end_step) <= kTimeEps;
                      field.unpack(at_end ? x_end : step(tk), scratch);
                      scratch.t = at_end ? t_end_step : tk;
                      samples.push_back(make_sample(field, scratch));
                      ++next_k;
                    }
                    return true;
                  });
      loop->unpack(x, state);
      t = t_stop;
      state.t = t;
    }
    if (ev < scenario.events.size() && scenario.events[ev].time == t) {
      if (std::abs(samples.back().t - t) > kTimeEps) samples.push_back(make_sample(*loop, state));
      while (ev < scenario.events.size() && scenario.events[ev].time == t) {
        result.events.push_back(apply_event(scenario.events[ev], config, state));
        ++ev;
      }
      loop = std::make_unique<ClosedLoop>(config);
      samples.push_back(make_sample(*loop, state));
      continue;
    }
    break;
  }
  if (std::abs(samples.back().t - sim.t_end) > kTimeEps) {
    state.t = sim.t_end;
    samples.push_back(make_sample(*loop, state));
  }
  result.final_state = state;
  result.final_config = config;
  return result;
}

SteadyState settle(const Configuration& config, SystemState state, const SimSettings& sim, double window, double tol,
                   double horizon) {
  const ClosedLoop loop(config);
  Eigen::VectorXd x = loop.pack(state);
  ode::Options opt;
  opt.rtol = sim.rtol;
  opt.atol = sim.atol;
  // Stay inside the explicit stability region so that fast modes decay to
  // round-off instead of hovering at the error tolerance.
  opt.h_max = std::min(sim.max_step, 2.5 / std::max(spectral_radius(loop, x), 1e-12));

  const double t0 = state.t;
  double since = std::numeric_limits<double>::quiet_NaN();
  double residual = loop.grounded_residual(loop.rhs(x));
  if (residual < tol) since = t0;
  bool done = false;
  double h = 0.0;
  double t = t0;
  if (!(residual < tol && window <= 0.0)) {
    try {
      t = ode::dopri5([&](double, const Eigen::VectorXd& y) { return loop.rhs(y); }, x, t0, t0 + horizon, h, opt,
                      [&](const ode::DenseStep& step, const Eigen::VectorXd& x_end) {
                        const double tn = step.t0 + step.h;
                        residual = loop.grounded_residual(loop.rhs(x_end));
                        if (residual < tol) {
                          if (std::isnan(since)) since = tn;
                          if (tn - since >= window) {
                            done = true;
                            return false;
                          }
                        } else {
                          since = std::numeric_limits<double>::quiet_NaN();
                        }
                        return true;
                      });
    } catch (const Error& e) {
      // A trajectory that leaves the model's domain has no steady state.
      if (e.code() != ExitCode::kNumeric) throw;
      throw ConvergenceError("no steady state: trajectory diverged after t = " + format_double(t0) + " s (" +
                             e.what() + ")");
    }
  } else {
    done = true;
  }
  if (!done) {
    std::ostringstream os;
    os << "no steady state within " << horizon << " s (t = " << t << " s, residual = " << residual
       << ", |x| = " << x.norm() << ")";
    throw ConvergenceError(os.str());
  }
  loop.unpack(x, state);
  state.t = t;
  return SteadyState{state, config, residual};
}

SteadyState steady_state(const Scenario& scenario, double window, double tol) {
  RunResult run = integrate(scenario);
  return settle(run.final_config, run.final_state, scenario.sim, window, tol, scenario.sim.steady_horizon);
}

SteadyState steady_state(const Scenario& scenario) {
  return steady_state(scenario, scenario.sim.steady_window, scenario.sim.steady_tol);
}

OperatingMetrics compute_metrics(const Sample& s, const std::vector<DgController>& controllers,
                                 double nominal_frequency_hz) {
  (void)nominal_frequency_hz;
  OperatingMetrics m;
  std::vector<double> mp, qr;
  for (int i = 0; i < static_cast<int>(controllers.size()); ++i) {
    if (!std::isfinite(s.f_hz(i))) continue;
    const DgController& c = controllers[i];
    const double f_ref = c.omega_ref / (2.0 * std::numbers::pi);
    m.max_freq_dev_hz = std::max(m.max_freq_dev_hz, std::abs(s.f_hz(i) - f_ref));
    m.max_voltage_dev = std::max(m.max_voltage_dev, std::abs(s.E(i) - c.E_ref));
    mp.push_back(c.m * s.P(i));
    qr.push_back(s.Q(i) / c.Q_rated);
  }
  if (mp.empty()) return m;
  const auto [mp_lo, mp_hi] = std::minmax_element(mp.begin(), mp.end());
  const auto [qr_lo, qr_hi] = std::minmax_element(qr.begin(), qr.end());
  m.p_share_spread = *mp_hi - *mp_lo;
  double mean = 0.0;
  for (double v : mp) mean += v;
  mean /= static_cast<double>(mp.size());
  m.p_share_relative = mean != 0.0 ? m.p_share_spread / std::abs(mean) : 0.0;
  m.q_share_spread = *qr_hi - *qr_lo;
  return m;
}

OperatingMetrics compute_metrics(const SteadyState& steady, double nominal_frequency_hz) {
  const ClosedLoop loop(steady.config);
  return compute_metrics(make_sample(loop, steady.state), steady.config.controllers, nominal_frequency_hz);
}

}  // namespace dapigrid
