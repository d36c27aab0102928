#include <doctest.h>

#include <numbers>

#include "dapigrid/control.hpp"
#include "dapigrid/errors.hpp"
#include "dapigrid/ode.hpp"
#include "support.hpp"

using namespace dapigrid;
using testing::vec;

namespace {

DgController dg(double m, double n, double q_rated, double beta = 0.0) {
  DgController c;
  c.m = m;
  c.n = n;
  c.k = 1.0;
  c.kappa = 1.0;
  c.beta = beta;
  c.omega_ref = 2 * std::numbers::pi * 50;
  c.E_ref = 325.3;
  c.P_rated = 700;
  c.Q_rated = q_rated;
  return c;
}

std::vector<DgController> table2(double beta2 = 0.0) {
  return {dg(2.5e-3, 1.5e-3, 800), dg(5e-3, 3e-3, 400, beta2), dg(5e-3, 3e-3, 400), dg(2.5e-3, 1.5e-3, 800)};
}

}  // namespace

TEST_SUITE("control") {
  TEST_CASE("consensus fixed point and two-node solution") {
    const CommGraph g2 = CommGraph::complete(2, 1.0);
    CHECK(consensus_rhs(g2, vec({4.0, 4.0})).isZero(0.0));
    const auto r = consensus_rhs(g2, vec({1.0, 3.0}));
    CHECK(r(0) == 2.0);
    CHECK(r(1) == -2.0);

    // Closed form x(t) = 2 -+ exp(-2t); integrate and compare.
    Eigen::VectorXd x = vec({1.0, 3.0});
    double h = 0.0;
    ode::Options opt;
    opt.rtol = opt.atol = 1e-12;
    ode::dopri5([&](double, const Eigen::VectorXd& s) { return consensus_rhs(g2, s); }, x, 0.0, 3.0, h, opt,
                [](const ode::DenseStep&, const Eigen::VectorXd&) { return true; });
    CHECK(x(0) == doctest::Approx(2.0 - std::exp(-6.0)).epsilon(1e-10));
    CHECK(x(1) == doctest::Approx(2.0 + std::exp(-6.0)).epsilon(1e-10));
  }

  TEST_CASE("ring Laplacian") {
    const CommGraph ring = CommGraph::ring(4, 1.0);
    const Eigen::MatrixXd l = ring.laplacian();
    CHECK(l.diagonal() == vec({2, 2, 2, 2}));
    CHECK(l.rowwise().sum().isZero(0.0));
    CHECK(connectivity(ring));
  }

  TEST_CASE("ring with two links removed isolates DG 4") {
    const CommGraph cut = CommGraph::ring(4, 1.0).with_link(2, 3, 0.0).with_link(0, 3, 0.0);
    CHECK_FALSE(connectivity(cut));
    CHECK(connectivity(CommGraph::empty(1)));
  }

  TEST_CASE("droop laws") {
    const DgController c = dg(5e-3, 1.5e-3, 800);
    CHECK(droop_frequency(c, 0.0, 0.0) == c.omega_ref);
    CHECK(droop_frequency(c, 700.0, 0.0) - c.omega_ref == doctest::Approx(-3.5).epsilon(1e-14));
    CHECK(droop_frequency(c, 700.0, c.m * 700.0) == doctest::Approx(c.omega_ref).epsilon(1e-15));
    CHECK(droop_voltage(c, 0.0, 0.0) == c.E_ref);
    CHECK(droop_voltage(c, 800.0, 0.0) == doctest::Approx(c.E_ref - 1.2).epsilon(1e-14));
    CHECK(droop_voltage(c, 800.0, c.n * 800.0) == doctest::Approx(c.E_ref).epsilon(1e-15));
  }

  TEST_CASE("frequency integrator") {
    const std::vector<DgController> two{dg(5e-3, 3e-3, 400), dg(5e-3, 3e-3, 400)};
    const Eigen::VectorXd at_ref = Eigen::VectorXd::Constant(2, two[0].omega_ref);
    const CommGraph g = CommGraph::complete(2, 1.0);
    CHECK(dapi_frequency_rhs(two, g, at_ref, vec({0.7, 0.7})).isZero(0.0));
    const auto r = dapi_frequency_rhs(two, g, at_ref, vec({1.0, 0.0}));
    CHECK(r(0) == doctest::Approx(-1.0));
    CHECK(r(1) == doctest::Approx(1.0));
    // Decentralized integrator without communication.
    const auto d = dapi_frequency_rhs(two, CommGraph::empty(2), at_ref + vec({0.4, -0.2}), vec({3.0, -1.0}));
    CHECK(d(0) == doctest::Approx(-0.4));
    CHECK(d(1) == doctest::Approx(0.2));
  }

  TEST_CASE("voltage integrator") {
    auto ctrls = table2();
    const Eigen::VectorXd at_ref = Eigen::VectorXd::Constant(4, 325.3);
    const CommGraph ring = CommGraph::ring(4, 180.0);
    CHECK(dapi_voltage_rhs(ctrls, ring, at_ref, vec({800, 400, 400, 800}), Eigen::VectorXd::Zero(4)).isZero(1e-12));

    // Pure regulation with beta = 2.2 and no communication.
    for (auto& c : ctrls) c.beta = 2.2;
    const Eigen::VectorXd e_dev = vec({1.0, -0.5, 0.25, 2.0});
    const auto r = dapi_voltage_rhs(ctrls, CommGraph::empty(4), at_ref + e_dev, vec({1, 2, 3, 4}),
                                    Eigen::VectorXd::Zero(4));
    for (int i = 0; i < 4; ++i) CHECK(r(i) == doctest::Approx(-2.2 * e_dev(i)));
  }

  TEST_CASE("only the leader regulates under leader tuning") {
    const auto ctrls = table2(4.0);
    const Eigen::VectorXd q = vec({800, 400, 400, 800});  // equal ratios: consensus term vanishes
    const Eigen::VectorXd e = Eigen::VectorXd::Constant(4, 325.3 + 1.0);
    const auto r = dapi_voltage_rhs(ctrls, CommGraph::ring(4, 100.0), e, q, Eigen::VectorXd::Zero(4));
    CHECK(r(1) == doctest::Approx(-4.0));
    CHECK(r(0) == 0.0);
    CHECK(r(2) == 0.0);
    CHECK(r(3) == 0.0);
  }

  TEST_CASE("graph validation") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
    w(0, 1) = -1.0;
    CHECK_THROWS_AS(CommGraph{w}, ValidationError);
    w(0, 1) = 1.0;
    CHECK_THROWS_AS(CommGraph{w}, ValidationError);  // asymmetric but undirected
    CHECK_NOTHROW(CommGraph{w, true});
    CHECK_THROWS_AS(dg(0.0, 1e-3, 1).validate(), ValidationError);
    CHECK_THROWS_AS(dg(1e-3, 1e-3, 0.0).validate(), ValidationError);
  }
}
