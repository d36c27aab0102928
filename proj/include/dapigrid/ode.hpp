#pragma once

// Dormand-Prince 5(4) with step-size control and the standard fourth-order
// continuous extension.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dapigrid/errors.hpp"

namespace dapigrid::ode {

struct Options {
  double rtol = 1e-9;
  double atol = 1e-9;
  double h_max = std::numeric_limits<double>::infinity();
  double h_min = 1e-12;  // relative to max(1, |t|)
};

/// Interpolant over one accepted step [t0, t0 + h].
class DenseStep {
 public:
  double t0 = 0.0;
  double h = 0.0;
  Eigen::VectorXd r1, r2, r3, r4, r5;

  Eigen::VectorXd operator()(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
  }
};

/// Integrates x' = f(t, x) from t0 to exactly t1. `h` carries the step-size
/// guess in and the last proposed step out. `observer(step, x_end)` runs after
/// every accepted step; returning false stops the integration early and the
/// function returns the time reached.
template <typename Rhs, typename Observer>
double dopri5(Rhs&& f, Eigen::VectorXd& x, double t0, double t1, double& h, const Options& opt,
              Observer&& observer) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                   a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  double t = t0;
  if (t1 <= t0) return t0;
  Eigen::VectorXd k1 = f(t, x);
  if (!(h > 0.0) || !std::isfinite(h)) h = std::min(1e-4, t1 - t0);
  DenseStep step;
  Eigen::VectorXd y(x.size()), xn(x.size());

  while (t < t1) {
    h = std::min(h, opt.h_max);
    const double h_wanted = h;
    bool last = false;
    if (t + h >= t1 || t + 1.01 * h >= t1) {
      h = t1 - t;
      last = true;
    }
    if (h < opt.h_min * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "step size underflow at t = " << t << " s (h = " << h << ", |x| = " << x.norm() << ")";
      throw NumericError(os.str());
    }

    y = x + h * a21 * k1;
    const Eigen::VectorXd k2 = f(t + c2 * h, y);
    y = x + h * (a31 * k1 + a32 * k2);
    const Eigen::VectorXd k3 = f(t + c3 * h, y);
    y = x + h * (a41 * k1 + a42 * k2 + a43 * k3);
    const Eigen::VectorXd k4 = f(t + c4 * h, y);
    y = x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    const Eigen::VectorXd k5 = f(t + c5 * h, y);
    y = x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const Eigen::VectorXd k6 = f(t + h, y);
    xn = x + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double t_next = last ? t1 : t + h;
    const Eigen::VectorXd k7 = f(t_next, xn);

    const Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const Eigen::ArrayXd scale = opt.atol + opt.rtol * x.array().abs().max(xn.array().abs());
    const double err_norm = std::sqrt((err.array() / scale).square().mean());
    if (!std::isfinite(err_norm) || !xn.allFinite()) {
      std::ostringstream os;
      os << "non-finite state at t = " << t << " s (|x| = " << x.norm() << ")";
      throw NumericError(os.str());
    }

    if (err_norm <= 1.0) {
      step.t0 = t;
      step.h = t_next - t;
      step.r1 = x;
      step.r2 = xn - x;
      step.r3 = step.h * k1 - step.r2;
      step.r4 = step.r2 - step.h * k7 - step.r3;
      step.r5 = step.h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      t = t_next;
      x = xn;
      k1 = k7;
      const double grow = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      const double h_used = step.h;
      h = h_used * grow;
      if (last) h = std::max(h, h_wanted);
      if (!observer(step, x)) return t;
    } else {
      h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.9);
    }
  }
  return t;
}

}  // namespace dapigrid::ode
