#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "dapigrid/linalg.hpp"

namespace la = dapigrid::linalg;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = d(rng);
  return a;
}

std::vector<std::complex<double>> eigen_reference(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  std::vector<std::complex<double>> out(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
  la::sort_descending(out);
  return out;
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("jacobi matches a reference symmetric solver") {
    std::mt19937_64 rng(11);
    for (int n : {1, 2, 5, 9}) {
      Eigen::MatrixXd a = random_matrix(rng, n);
      a = (a + a.transpose()).eval();
      const auto ours = la::jacobi_eigen<double>(a);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
      CHECK((ours.values - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, a.norm()));
      const Eigen::MatrixXd recon = ours.vectors * ours.values.asDiagonal() * ours.vectors.transpose();
      CHECK((recon - a).norm() < 1e-12 * a.norm());
    }
  }

  TEST_CASE("jacobi works in single precision") {
    Eigen::MatrixXf a(2, 2);
    a << 2.0f, 1.0f, 1.0f, 2.0f;
    const auto r = la::jacobi_eigen<float>(a);
    CHECK(r.values(0) == doctest::Approx(1.0f).epsilon(1e-5));
    CHECK(r.values(1) == doctest::Approx(3.0f).epsilon(1e-5));
  }

  TEST_CASE("QR eigenvalues agree with a reference nonsymmetric solver") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 1 + trial % 12;
      const Eigen::MatrixXd a = random_matrix(rng, n, trial % 3 == 0 ? 100.0 : 1.0);
      const auto ours = la::eigenvalues<double>(a);
      const auto ref = eigen_reference(a);
      CHECK(la::multiset_distance(ours, ref) < 1e-9);
    }
  }

  TEST_CASE("companion matrix yields the polynomial roots") {
    // (s + 1)(s + 2)(s^2 + 2s + 5): roots -1, -2, -1 +- 2i
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 4);
    const double coeffs[] = {10, 19, 13, 5};  // s^4 + 5s^3 + 13s^2 + 19s + 10
    for (int i = 1; i < 4; ++i) c(i, i - 1) = 1.0;
    for (int i = 0; i < 4; ++i) c(i, 3) = -coeffs[i];
    const auto ev = la::eigenvalues<double>(c);
    const std::vector<std::complex<double>> expect{{-1, 2}, {-1, -2}, {-1, 0}, {-2, 0}};
    CHECK(la::multiset_distance(ev, expect) < 1e-12);
  }

  TEST_CASE("eigenpair residuals meet the contract") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd a = random_matrix(rng, 2 + trial % 14);
      for (const auto& p : la::eigenpairs<double>(a)) {
        CHECK(p.residual < 1e-8 * a.norm());
        CHECK(p.participation.sum() == doctest::Approx(1.0));
      }
    }
  }

  TEST_CASE("quadratic pencil roots equal the companion linearization") {
    std::mt19937_64 rng(3);
    for (int n = 1; n <= 4; ++n) {
      const Eigen::MatrixXd w1 = random_matrix(rng, n);
      const Eigen::MatrixXd w2 = random_matrix(rng, n);
      Eigen::MatrixXd w(2 * n, 2 * n);
      w << -w1, Eigen::MatrixXd::Identity(n, n), -w2, Eigen::MatrixXd::Zero(n, n);
      CHECK(la::multiset_distance(la::quadratic_pencil_roots<double>(w1, w2), eigen_reference(w)) < 1e-9);
    }
  }

  TEST_CASE("multiset distance") {
    const std::vector<std::complex<double>> a{{1, 0}, {2, 0}};
    const std::vector<std::complex<double>> b{{2, 0}, {1, 1e-3}};
    CHECK(la::multiset_distance(a, b) == doctest::Approx(1e-3));
    CHECK(std::isinf(la::multiset_distance(a, std::vector<std::complex<double>>{{1, 0}})));
  }

  TEST_CASE("non-finite input is rejected") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(la::eigenvalues<double>(a), dapigrid::NumericError);
  }
}
