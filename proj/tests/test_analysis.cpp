#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "dapigrid/analysis.hpp"
#include "dapigrid/errors.hpp"
#include "support.hpp"

using namespace dapigrid;

namespace {

const char* const kStudies[] = {"study1a", "study1b", "study1c", "study1d", "study2", "study3", "study4", "parallel2"};

ComplexList reference_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  ComplexList out(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
  linalg::sort_descending(out);
  return out;
}

Scenario with_lines(Scenario s, std::initializer_list<double> x) {
  std::vector<Line> lines = s.network.lines();
  auto it = x.begin();
  for (auto& l : lines) l.reactance = *it++;
  s.network = NetworkModel(s.network.buses(), lines);
  return s;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("block structure and definitions") {
    const Scenario s = testing::bundled("study1c");
    const Configuration c = final_configuration(s);
    const LinearVoltageSystem sys = build_linear_voltage_system(c);
    const int n = sys.size();
    REQUIRE(n == 4);
    CHECK(sys.W.topLeftCorner(n, n) == -sys.W1);
    CHECK(sys.W.topRightCorner(n, n) == Eigen::MatrixXd::Identity(n, n));
    CHECK(sys.W.bottomLeftCorner(n, n) == -sys.W2);
    CHECK(sys.W.bottomRightCorner(n, n).isZero(0.0));

    // Independent assembly from the stiffness matrix.
    const Eigen::MatrixXd Y = build_susceptance_matrices(c.network).stiffness();
    const GainVectors g = GainVectors::gather(c.controllers);
    const Eigen::MatrixXd w1 = Eigen::MatrixXd::Identity(n, n) + g.n.cwiseProduct(g.E_ref).asDiagonal() * Y;
    const Eigen::MatrixXd w2 =
        g.kappa.cwiseInverse().asDiagonal() *
        (Eigen::MatrixXd(g.beta.asDiagonal()) +
         c.comm_b.laplacian() * g.E_ref.cwiseQuotient(g.Q_rated).asDiagonal() * Y);
    CHECK((sys.W1 - w1).norm() < 1e-14 * w1.norm());
    CHECK((sys.W2 - w2).norm() < 1e-14 * w2.norm());
  }

  TEST_CASE("uniform gains without loads give a symmetric W1") {
    const Eigen::MatrixXd Y = [] {
      Eigen::MatrixXd y(3, 3);
      y << 3, -1, -2, -1, 1.5, -0.5, -2, -0.5, 2.5;
      return y;
    }();
    GainVectors g;
    g.n = Eigen::VectorXd::Constant(3, 2e-3);
    g.E_ref = Eigen::VectorXd::Constant(3, 325.3);
    g.kappa = Eigen::VectorXd::Ones(3);
    g.beta = Eigen::VectorXd::Constant(3, 0.5);
    g.Q_rated = Eigen::VectorXd::Constant(3, 400.0);
    g.m = g.k = g.P_rated = Eigen::VectorXd::Ones(3);
    const auto sys = build_linear_voltage_system(Y, g, Eigen::MatrixXd::Zero(3, 3));
    CHECK((sys.W1 - sys.W1.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    // No communication: W2 = beta / kappa, diagonal and positive.
    CHECK(sys.W2.isApprox(Eigen::MatrixXd(Eigen::VectorXd::Constant(3, 0.5).asDiagonal())));
    CHECK(check_stability_conditions(sys).condition_w2);
  }

  TEST_CASE("single DG with regulation") {
    GainVectors g;
    g.n = g.E_ref = g.kappa = g.Q_rated = g.m = g.k = g.P_rated = Eigen::VectorXd::Ones(1);
    g.beta = Eigen::VectorXd::Constant(1, 2.0);
    const auto sys = build_linear_voltage_system(Eigen::MatrixXd::Constant(1, 1, 0.3), g, Eigen::MatrixXd::Zero(1, 1));
    const auto r = check_stability_conditions(sys);
    CHECK(sys.W2(0, 0) == 2.0);
    CHECK(r.condition_w1);
    CHECK(r.condition_w2);
    CHECK(r.max_real < 0.0);
  }

  TEST_CASE("study1c satisfies both conditions and is Hurwitz") {
    const auto r = check_stability_conditions(build_linear_voltage_system(final_configuration(testing::bundled("study1c"))));
    CHECK(r.condition_w1);
    CHECK(r.condition_w2);
    CHECK(r.lambda_min_w1 > 0.0);
    CHECK(r.max_real < 0.0);
    CHECK(r.sufficiency_consistent);
    CHECK(r.max_residual < 1e-8);
  }

  TEST_CASE("large b on mismatched lines breaks the second condition") {
    const Scenario s = with_gain(with_lines(testing::bundled("study1c"), {0.1, 5.0, 0.1}), "b", 180e3);
    const auto r = check_stability_conditions(build_linear_voltage_system(final_configuration(s)));
    CHECK(r.lambda_min_w2 < 0.0);
    CHECK_FALSE(r.condition_w2);
    CHECK(r.sufficiency_consistent);
  }

  TEST_CASE("W1 has a real spectrum and both routes to eig(W) agree") {
    for (const char* name : kStudies) {
      CAPTURE(std::string(name));
      const auto sys = build_linear_voltage_system(final_configuration(testing::bundled(name)));
      for (const auto& z : linalg::eigenvalues<double>(sys.W1)) CHECK(std::abs(z.imag()) < 1e-9);
      const auto r = check_stability_conditions(sys);
      CHECK(linalg::multiset_distance(r.eigenvalues, characteristic_roots(sys)) < 1e-6);
      CHECK(linalg::multiset_distance(r.eigenvalues, reference_eigenvalues(sys.W)) < 1e-9);
    }
  }

  TEST_CASE("zero rating is a parameter error") {
    Configuration c = final_configuration(testing::bundled("study1c"));
    c.controllers[1].Q_rated = 0.0;
    CHECK_THROWS_AS(build_linear_voltage_system(c), ValidationError);
  }

  TEST_CASE("Jacobian of an unloaded network decouples the channels") {
    Scenario s = testing::bundled("study1c");
    std::vector<Bus> buses = s.network.buses();
    for (auto& b : buses) b.load = Load{};
    s.network = NetworkModel(buses, s.network.lines());
    Configuration c = Configuration::initial(s);
    c.secondary_enabled = true;
    const ClosedLoop loop(c);
    const Eigen::VectorXd x = loop.pack(default_initial_state(s));
    const Eigen::MatrixXd J = jacobian_full(loop, x);
    const int n = loop.size();
    // Grounded order: angles (n-1), E (n), Omega (n), e (n).
    const std::vector<int> freq = [&] {
      std::vector<int> v;
      for (int i = 0; i < n - 1; ++i) v.push_back(i);
      for (int i = 0; i < n; ++i) v.push_back(2 * n - 1 + i);
      return v;
    }();
    const std::vector<int> volt = [&] {
      std::vector<int> v;
      for (int i = 0; i < n; ++i) v.push_back(n - 1 + i);
      for (int i = 0; i < n; ++i) v.push_back(3 * n - 1 + i);
      return v;
    }();
    double cross = 0.0;
    for (int r : volt)
      for (int col : freq) cross = std::max(cross, std::abs(J(r, col)));
    CHECK(cross < 1e-6 * J.cwiseAbs().maxCoeff());
    Eigen::MatrixXd jf(freq.size(), freq.size());
    for (std::size_t a = 0; a < freq.size(); ++a)
      for (std::size_t b = 0; b < freq.size(); ++b) jf(a, b) = J(freq[a], freq[b]);
    for (const auto& z : reference_eigenvalues(jf)) CHECK(std::abs(z.imag()) < 1e-6 * std::max(1.0, std::abs(z)));
  }

  TEST_CASE("grounding removes exactly the rotational zero mode") {
    const SteadyState op = operating_point(testing::bundled("study1c"));
    const ClosedLoop loop(op.config);
    const Eigen::VectorXd x = loop.pack(op.state);
    const auto full = linalg::eigenvalues<double>(jacobian_ungrounded(loop, x));
    const auto grounded = linalg::eigenvalues<double>(jacobian_full(loop, x));
    CHECK(full.size() == grounded.size() + 1);
    const auto small = [](const ComplexList& v) {
      return std::count_if(v.begin(), v.end(), [](auto z) { return std::abs(z) < 1e-6; });
    };
    CHECK(small(full) == 1);
    CHECK(small(grounded) == 0);
    for (const auto& z : grounded) CHECK(z.real() < 0.0);
  }

  TEST_CASE("finite-difference step barely moves the spectrum") {
    const SteadyState op = operating_point(testing::bundled("study1c"));
    const ClosedLoop loop(op.config);
    const Eigen::VectorXd x = loop.pack(op.state);
    const auto a = linalg::eigenvalues<double>(jacobian_full(loop, x, 1e-6));
    const auto b = linalg::eigenvalues<double>(jacobian_full(loop, x, 2e-6));
    CHECK(linalg::multiset_distance(a, b) < 1e-4);
  }

  TEST_CASE("Jacobian needs an equilibrium") {
    const Scenario s = testing::bundled("study1c");
    const ClosedLoop loop(final_configuration(s));
    CHECK_THROWS_AS(jacobian_full(loop, loop.pack(default_initial_state(s))), DomainError);
  }

  TEST_CASE("trace over k slows the frequency mode") {
    const Scenario s = testing::bundled("study1c");
    const auto grid = geometric_grid(0.5, 5.0, 4);
    CHECK(grid.front() == doctest::Approx(0.5));
    CHECK(grid.back() == doctest::Approx(5.0));
    const EigenTrace tr = eigen_trace(s, "k", grid);
    REQUIRE(tr.points.size() == grid.size());
    CHECK(tr.warnings.empty());
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
      if (i > 0) CHECK(tr.points[i].gain_value > tr.points[i - 1].gain_value);
      const double mode = std::abs(slowest_real_frequency_mode(tr.points[i].modes));
      CHECK(mode < prev);
      prev = mode;
      for (const auto& p : tr.points[i].modes.pairs) CHECK(p.residual < 1e-8 * 1e4);
    }
  }

  TEST_CASE("gain substitution") {
    const Scenario s = testing::bundled("study1d");
    CHECK(nominal_gain(s, "b") == 100.0);
    const Scenario t = with_gain(s, "b", 7.0);
    CHECK(t.comm_b.weights().maxCoeff() == 7.0);
    CHECK(t.comm_b.weights().row(1).isZero(0.0));
    CHECK(with_gain(s, "kappa", 3.0).controllers[2].kappa == 3.0);
    CHECK_THROWS(with_gain(s, "gamma", 1.0));
  }

  TEST_CASE("damping ratio") {
    CHECK(damping_ratio({-1.0, 0.0}) == doctest::Approx(1.0));
    CHECK(damping_ratio({-3.0, 4.0}) == doctest::Approx(0.6));
  }

  TEST_CASE("randomized sufficiency check finds no counterexample") {
    const SufficiencyCheck c = random_sufficiency_check(2024, 200);
    CHECK(c.draws == 200);
    CHECK(c.both_conditions > 20);
    CHECK(c.counterexamples == 0);
    CHECK(c.worst_max_real < 0.0);
  }
}
