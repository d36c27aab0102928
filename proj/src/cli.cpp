#include "dapigrid/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>

#include "dapigrid/analysis.hpp"
#include "dapigrid/errors.hpp"
#include "dapigrid/output.hpp"
#include "dapigrid/plots.hpp"
#include "dapigrid/scenario_io.hpp"

namespace dapigrid {

namespace {

using ojson = nlohmann::ordered_json;

ojson complex_list(const ComplexList& values) {
  ojson out = ojson::array();
  for (const auto& z : values) out.push_back({{"re", z.real()}, {"im", z.imag()}});
  return out;
}

Scenario load(const RunOptions& options) {
  Scenario s = parse_scenario(options.scenario);
  apply_tolerance_override(s, std::getenv("DAPIGRID_TOL"));
  return s;
}

StabilityReport final_report(const Scenario& s) {
  return check_stability_conditions(build_linear_voltage_system(final_configuration(s)));
}

void simulate(const RunOptions& options, std::ostream& log) {
  const Scenario s = load(options);
  const RunResult run = integrate(s);
  write_trajectory_csv(options.out / "trajectory.csv", run.trajectory);
  write_events_log(options.out / "events.log", run.events);
  const Summary summary = summarize(s, run.trajectory, final_report(s));
  write_text(options.out / "summary.json", summary_json(summary).dump(2) + "\n");
  log << "scenario " << s.name << ": " << run.trajectory.samples.size() << " samples, " << run.events.size()
      << " events\n"
      << summary_table(summary);
}

void analyze(const RunOptions& options, std::ostream& log) {
  const Scenario s = load(options);
  const LinearVoltageSystem sys = build_linear_voltage_system(final_configuration(s));
  const StabilityReport report = check_stability_conditions(sys);
  const ComplexList roots = characteristic_roots(sys);

  const SteadyState op = operating_point(s);
  const ClosedLoop loop(op.config);
  const Eigen::MatrixXd J = jacobian_full(loop, loop.pack(op.state));
  const ModeSet modes = analyze_modes(J, loop.size());
  ComplexList jac_eigs;
  double jac_max_real = -std::numeric_limits<double>::infinity();
  double jac_residual = 0.0;
  for (const auto& p : modes.pairs) {
    jac_eigs.push_back(p.value);
    jac_max_real = std::max(jac_max_real, p.value.real());
    jac_residual = std::max(jac_residual, p.residual / J.norm());
  }

  ojson doc{{"scenario", s.name},
            {"linear_voltage_system", stability_json(report)},
            {"characteristic_roots", complex_list(roots)},
            {"root_match_distance", linalg::multiset_distance(report.eigenvalues, roots)},
            {"operating_point",
             {{"residual", op.residual},
              {"grounded_dimension", J.rows()},
              {"jacobian_max_real", jac_max_real},
              {"jacobian_max_relative_residual", jac_residual},
              {"jacobian_eigenvalues", complex_list(jac_eigs)}}}};
  if (options.seed) {
    const SufficiencyCheck check = random_sufficiency_check(*options.seed);
    doc["randomized_check"] = {{"seed", *options.seed},
                               {"draws", check.draws},
                               {"both_conditions", check.both_conditions},
                               {"counterexamples", check.counterexamples},
                               {"worst_max_real", check.worst_max_real}};
    log << "randomized check: " << check.both_conditions << " of " << check.draws << " draws satisfy both conditions, "
        << check.counterexamples << " counterexamples\n";
  }
  write_text(options.out / "stability.json", doc.dump(2) + "\n");
  log << std::setprecision(6) << "scenario " << s.name << "\n"
      << "lambda_min(W1 + W1^T) = " << report.lambda_min_w1 << (report.condition_w1 ? "  (holds)" : "  (fails)")
      << "\n"
      << "lambda_min(W2 + W2^T) = " << report.lambda_min_w2 << (report.condition_w2 ? "  (holds)" : "  (fails)")
      << "\n"
      << "max Re eig(W) = " << report.max_real << "\n"
      << "max Re eig(J) = " << jac_max_real << " (grounded, " << J.rows() << " states)\n";
}

void trace(const RunOptions& options, std::ostream& log) {
  const Scenario s = load(options);
  const std::string gain = options.gain.value_or(s.sweep ? s.sweep->gain : "k");
  if (gain != "k" && gain != "kappa" && gain != "beta" && gain != "b")
    throw ValidationError("--gain", "expected one of k, kappa, beta, b");
  const bool from_file = s.sweep && s.sweep->gain == gain;
  const int points = options.points.value_or(from_file ? s.sweep->points : 9);
  std::vector<double> grid;
  if (options.from || options.to || from_file) {
    const std::vector<double> fallback = default_grid(s, gain, points);
    const double from = options.from.value_or(from_file ? s.sweep->from : fallback.front());
    const double to = options.to.value_or(from_file ? s.sweep->to : fallback.back());
    grid = geometric_grid(from, to, points);
  } else {
    grid = default_grid(s, gain, points);
  }
  const EigenTrace tr = eigen_trace(s, gain, grid);
  write_trace_csv(options.out / "trace.csv", tr);
  std::ostringstream meta;
  meta << "gain " << gain << "\n";
  for (const auto& w : tr.warnings) meta << "warning " << w << "\n";
  write_text(options.out / "trace.log", meta.str());
  log << "trace of " << gain << " over " << grid.size() << " points: " << tr.points.size() << " linearized\n";
  for (const auto& w : tr.warnings) log << "warning: " << w << "\n";
  if (tr.points.empty()) throw ConvergenceError("no grid point reached an operating point");
}

void plot(const RunOptions& options, std::ostream& log) {
  for (const auto& path : emit_plots(options.out)) log << "wrote " << path.string() << "\n";
}

}  // namespace

void apply_tolerance_override(Scenario& scenario, const char* value) {
  if (value == nullptr) return;
  const std::string text(value);
  double tol = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), tol);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("DAPIGRID_TOL: not a number: '" + text + "'");
  if (!(std::isfinite(tol) && tol > 0.0)) throw ValidationError("DAPIGRID_TOL", "must be > 0");
  scenario.sim.rtol = tol;
  scenario.sim.atol = tol;
}

void run(const RunOptions& options, std::ostream& log) {
  if (options.mode != Mode::kPlot || !options.out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options.out, ec);
    if (ec) throw ParseError("cannot create output directory " + options.out.string() + ": " + ec.message());
  }
  switch (options.mode) {
    case Mode::kSimulate:
      simulate(options, log);
      break;
    case Mode::kAnalyze:
      analyze(options, log);
      break;
    case Mode::kTrace:
      trace(options, log);
      break;
    case Mode::kPlot:
      plot(options, log);
      break;
  }
}

int main_entry(int argc, char** argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Droop and distributed-averaging secondary control simulator for islanded microgrids"};
  RunOptions options;
  std::string mode;
  const std::map<std::string, Mode> modes{
      {"simulate", Mode::kSimulate}, {"analyze", Mode::kAnalyze}, {"trace", Mode::kTrace}, {"plot", Mode::kPlot}};
  app.add_option("mode", mode, "simulate | analyze | trace | plot")->required()->check(
      CLI::IsMember({"simulate", "analyze", "trace", "plot"}));
  app.add_option("--scenario", options.scenario, "scenario JSON file");
  app.add_option("--out", options.out, "output directory")->required();
  app.add_option("--gain", options.gain, "trace gain: k, kappa, beta or b");
  app.add_option("--from", options.from, "first grid value");
  app.add_option("--to", options.to, "last grid value");
  app.add_option("--points", options.points, "grid points")->check(CLI::PositiveNumber);
  app.add_option("--seed", options.seed, "seed for the randomized stability check (analyze)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kParse);
  }
  options.mode = modes.at(mode);
  try {
    if (options.mode != Mode::kPlot && options.scenario.empty())
      throw ParseError("--scenario is required for mode " + mode);
    run(options, log);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kNumeric);
  }
  return 0;
}

}  // namespace dapigrid
