#include <doctest.h>

#include <numbers>

#include "dapigrid/errors.hpp"
#include "dapigrid/graph.hpp"
#include "dapigrid/netmodel.hpp"

using namespace dapigrid;

namespace {

NetworkModel chain(int n, std::vector<double> x, std::vector<Load> loads = {}) {
  std::vector<Bus> buses;
  for (int i = 0; i < n; ++i) {
    Bus b;
    b.id = i + 1;
    if (i < static_cast<int>(loads.size())) b.load = loads[i];
    buses.push_back(b);
  }
  std::vector<Line> lines;
  for (int i = 0; i + 1 < n; ++i) lines.push_back(Line{i, i + 1, x[i], 0.0, LineStatus::kConnected});
  return NetworkModel(buses, lines);
}

NetworkModel table2_chain() {
  return chain(4, {reactance_from_inductance(3.6e-3), reactance_from_inductance(1.8e-3),
                   reactance_from_inductance(1.9e-3)},
               {{0.0033, 0.0066}, {}, {}, {0.0024, 0.0047}});
}

}  // namespace

TEST_SUITE("netmodel") {
  TEST_CASE("two-bus line gives a 2 S coupling") {
    const auto y = build_susceptance_matrices(chain(2, {0.5}));
    CHECK(std::abs(y.bus(0, 1)) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(y.bus(0, 1) == y.bus(1, 0));
    CHECK(y.load.isZero(0.0));
  }

  TEST_CASE("disconnecting the only line splits the network") {
    const auto net = chain(2, {0.5}).with_line_status(0, 1, LineStatus::kDisconnected);
    CHECK_FALSE(electrical_connectivity(net));
    CHECK_THROWS_AS(build_susceptance_matrices(net), TopologyError);
  }

  TEST_CASE("reactances from inductances at 50 Hz") {
    // Hand values of 2 pi 50 L.
    CHECK(reactance_from_inductance(3.6e-3) == doctest::Approx(1.1310).epsilon(1e-4));
    CHECK(reactance_from_inductance(1.8e-3) == doctest::Approx(0.5655).epsilon(1e-4));
    CHECK(reactance_from_inductance(1.9e-3) == doctest::Approx(0.5969).epsilon(1e-4));
  }

  TEST_CASE("four-bus chain is tridiagonal") {
    const auto y = build_susceptance_matrices(table2_chain());
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (std::abs(i - j) > 1) CHECK(y.bus(i, j) == 0.0);
        if (std::abs(i - j) == 1) CHECK(y.bus(i, j) > 0.0);
      }
    CHECK(y.bus(0, 1) == doctest::Approx(1.0 / (2 * std::numbers::pi * 50 * 3.6e-3)));
    CHECK(y.load(0, 0) == doctest::Approx(-0.0033));
  }

  TEST_CASE("connectivity cases") {
    const auto net = table2_chain();
    CHECK(electrical_connectivity(net));
    CHECK_FALSE(electrical_connectivity(net.with_line_status(1, 2, LineStatus::kDisconnected)));
    const auto lone = net.with_dg_online(1, false).with_dg_online(2, false).with_dg_online(3, false);
    CHECK(electrical_connectivity(lone));
  }

  TEST_CASE("Y_bus is exactly symmetric and the unloaded stiffness has zero row sums") {
    const auto net = chain(4, {0.3, 0.7, 1.3});
    const auto y = build_susceptance_matrices(net);
    CHECK(y.bus == y.bus.transpose());
    CHECK(y.stiffness().rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("rebuilding after a line removal equals a local edit") {
    std::vector<Bus> buses(3);
    for (int i = 0; i < 3; ++i) buses[i].id = i;
    const NetworkModel ring(buses, {Line{0, 1, 0.5}, Line{1, 2, 0.8}, Line{0, 2, 1.6}});
    const auto full = build_susceptance_matrices(ring).bus;
    const auto cut = build_susceptance_matrices(ring.with_line_status(0, 2, LineStatus::kDisconnected)).bus;
    Eigen::MatrixXd edited = full;
    const double b = 1.0 / 1.6;
    edited(0, 2) = edited(2, 0) = 0.0;
    edited(0, 0) += b;
    edited(2, 2) += b;
    CHECK((cut - edited).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("junction buses are eliminated") {
    // Star: junction 0 with lines of 1 and 0.5 ohm to two DGs, no load. The
    // series path gives 1 / 1.5 S between the DGs.
    std::vector<Bus> buses(3);
    buses[0].junction = true;
    buses[0].dg_online = false;
    buses[1].id = 1;
    buses[2].id = 2;
    const NetworkModel star(buses, {Line{0, 1, 1.0}, Line{0, 2, 0.5}});
    const auto red = reduce(star);
    REQUIRE(red.size() == 2);
    CHECK(red.line_susceptance(0, 1) == doctest::Approx(1.0 / 1.5));
    CHECK(red.load_susceptance.isZero(0.0));
  }

  TEST_CASE("invalid networks are rejected") {
    std::vector<Bus> one(1);
    CHECK_THROWS_AS(NetworkModel(one, {}), ValidationError);
    std::vector<Bus> two(2);
    two[1].id = 1;
    CHECK_THROWS_AS(NetworkModel(two, {Line{0, 1, 0.0}}), ValidationError);
    CHECK_THROWS_AS(NetworkModel(two, {Line{0, 1, 1.0}, Line{1, 0, 2.0}}), ValidationError);
    two[0].load.susceptance = -1.0;
    CHECK_THROWS_AS(NetworkModel(two, {Line{0, 1, 1.0}}), ValidationError);
  }

  TEST_CASE("graph components") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
    w(0, 1) = w(1, 0) = 1.0;
    w(2, 3) = 2.0;
    CHECK(connected_components(w).size() == 2);
    CHECK_FALSE(is_connected(w));
    w(1, 2) = w(2, 1) = 1.0;
    CHECK(is_connected(w));
  }
}
