#pragma once

// Dense eigensolvers for the small (n <= ~40) matrices produced by the
// small-signal analysis: Jacobi rotations for symmetric matrices, Householder
// Hessenberg reduction + Francis double-shift QR for general real matrices,
// inverse iteration for eigenvectors, and an Aberth iteration on
// det(s^2 I + s W1 + W2) for quadratic matrix pencils.
//
// Everything here is templated on the real scalar type and works on
// Eigen::Matrix<Scalar, Dynamic, Dynamic>.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dapigrid/errors.hpp"

namespace dapigrid::linalg {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using ComplexVectorX = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
struct SymmetricEigen {
  VectorX<Scalar> values;   // ascending
  MatrixX<Scalar> vectors;  // columns, orthonormal
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Only the upper
/// triangle of `a` is read.
template <typename Scalar>
SymmetricEigen<Scalar> jacobi_eigen(const MatrixX<Scalar>& a, int max_sweeps = 100) {
  using std::abs;
  using std::sqrt;
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw NumericError("jacobi_eigen: matrix is not square");

  MatrixX<Scalar> m = a.template selfadjointView<Eigen::Upper>();
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    Scalar off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    const Scalar diag = m.diagonal().squaredNorm();
    if (off <= eps * eps * diag || off == Scalar(0)) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = m(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (m(q, q) - m(p, p)) / (Scalar(2) * apq);
        const Scalar sgn = theta >= Scalar(0) ? Scalar(1) : Scalar(-1);
        const Scalar t = sgn / (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;

        // m <- J^T m J with J the (p, q) rotation
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar mkp = m(k, p);
          const Scalar mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar mpk = m(p, k);
          const Scalar mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = Scalar(0);
        m(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == max_sweeps)
    throw NumericError("jacobi_eigen: no convergence after " + std::to_string(sweep) + " sweeps");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return m(i, i) < m(j, j); });

  SymmetricEigen<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = m(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  return out;
}

template <typename Scalar>
Scalar lambda_min_symmetric(const MatrixX<Scalar>& a) {
  return jacobi_eigen<Scalar>(a).values(0);
}

/// Householder reduction to upper Hessenberg form (similarity transform).
template <typename Scalar>
MatrixX<Scalar> hessenberg(MatrixX<Scalar> a) {
  using std::sqrt;
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    VectorX<Scalar> x = a.block(k + 1, k, len, 1);
    const Scalar alpha = x.norm();
    if (alpha == Scalar(0)) continue;
    VectorX<Scalar> v = x;
    v(0) += x(0) >= Scalar(0) ? alpha : -alpha;
    const Scalar vnorm2 = v.squaredNorm();
    if (vnorm2 == Scalar(0)) continue;
    // H = I - 2 v v^T / (v^T v), applied on both sides
    const Scalar tau = Scalar(2) / vnorm2;
    auto rows = a.block(k + 1, 0, len, n);
    VectorX<Scalar> w = tau * (v.transpose() * rows).transpose();
    rows.noalias() -= v * w.transpose();
    auto cols = a.block(0, k + 1, n, len);
    VectorX<Scalar> u = tau * (cols * v);
    cols.noalias() -= u * v.transpose();
    a.block(k + 2, k, len - 1, 1).setZero();
  }
  return a;
}

/// Parlett-Reinsch balancing by powers of two. Returns the balanced matrix;
/// eigenvalues are unchanged.
template <typename Scalar>
MatrixX<Scalar> balance(MatrixX<Scalar> a) {
  using std::abs;
  const Eigen::Index n = a.rows();
  const Scalar radix = 2;
  const Scalar sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar r = 0, c = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += abs(a(j, i));
        r += abs(a(i, j));
      }
      if (c == Scalar(0) || r == Scalar(0)) continue;
      Scalar g = r / radix;
      Scalar f = 1;
      const Scalar s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < Scalar(0.95) * s) {
        done = false;
        g = Scalar(1) / f;
        a.row(i) *= g;
        a.col(i) *= f;
      }
    }
  }
  return a;
}

/// Eigenvalues of a real upper Hessenberg matrix by the Francis implicit
/// double-shift QR algorithm. `h` is destroyed.
template <typename Scalar>
std::vector<std::complex<Scalar>> hessenberg_qr_eigenvalues(MatrixX<Scalar> h, int max_its = 60) {
  using std::abs;
  using std::sqrt;
  using Complex = std::complex<Scalar>;
  const int n = static_cast<int>(h.rows());
  std::vector<Complex> w(static_cast<std::size_t>(n));
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  auto sign = [](Scalar a, Scalar b) { return b >= Scalar(0) ? abs(a) : -abs(a); };

  Scalar anorm = 0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += abs(h(i, j));

  int nn = n - 1;
  Scalar shift = 0;
  int total_its = 0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      // look for a negligible subdiagonal element
      for (l = nn; l > 0; --l) {
        Scalar s = abs(h(l - 1, l - 1)) + abs(h(l, l));
        if (s == Scalar(0)) s = anorm;
        if (abs(h(l, l - 1)) <= eps * s) {
          h(l, l - 1) = 0;
          break;
        }
      }
      Scalar x = h(nn, nn);
      if (l == nn) {
        w[nn] = Complex(x + shift, 0);
        --nn;
      } else {
        Scalar y = h(nn - 1, nn - 1);
        Scalar ww = h(nn, nn - 1) * h(nn - 1, nn);
        if (l == nn - 1) {
          // trailing 2x2 block
          const Scalar p = Scalar(0.5) * (y - x);
          const Scalar q = p * p + ww;
          Scalar z = sqrt(abs(q));
          x += shift;
          if (q >= Scalar(0)) {
            z = p + sign(z, p);
            w[nn - 1] = w[nn] = Complex(x + z, 0);
            if (z != Scalar(0)) w[nn] = Complex(x - ww / z, 0);
          } else {
            w[nn] = Complex(x + p, -z);
            w[nn - 1] = std::conj(w[nn]);
          }
          nn -= 2;
        } else {
          if (its == max_its)
            throw NumericError("hessenberg_qr: no convergence after " + std::to_string(total_its) +
                               " iterations");
          if (its == 10 || its == 20) {
            // exceptional shift
            shift += x;
            for (int i = 0; i <= nn; ++i) h(i, i) -= x;
            const Scalar s = abs(h(nn, nn - 1)) + abs(h(nn - 1, nn - 2));
            y = x = Scalar(0.75) * s;
            ww = Scalar(-0.4375) * s * s;
          }
          ++its;
          ++total_its;
          int m = nn - 2;
          Scalar p = 0, q = 0, r = 0, z = 0;
          for (; m >= l; --m) {
            z = h(m, m);
            r = x - z;
            Scalar s = y - z;
            p = (r * s - ww) / h(m + 1, m) + h(m, m + 1);
            q = h(m + 1, m + 1) - z - r - s;
            r = h(m + 2, m + 1);
            s = abs(p) + abs(q) + abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const Scalar u = abs(h(m, m - 1)) * (abs(q) + abs(r));
            const Scalar v = abs(p) * (abs(h(m - 1, m - 1)) + abs(z) + abs(h(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            h(i + 2, i) = 0;
            if (i != m) h(i + 2, i - 1) = 0;
          }
          // double QR step on rows l..nn, columns m..nn
          for (int k = m; k < nn; ++k) {
            if (k != m) {
              p = h(k, k - 1);
              q = h(k + 1, k - 1);
              r = 0;
              if (k + 1 != nn) r = h(k + 2, k - 1);
              x = abs(p) + abs(q) + abs(r);
              if (x != Scalar(0)) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const Scalar s = sign(sqrt(p * p + q * q + r * r), p);
            if (s == Scalar(0)) continue;
            if (k == m) {
              if (l != m) h(k, k - 1) = -h(k, k - 1);
            } else {
              h(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = h(k, j) + q * h(k + 1, j);
              if (k + 1 != nn) {
                p += r * h(k + 2, j);
                h(k + 2, j) -= p * z;
              }
              h(k + 1, j) -= p * y;
              h(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
              p = x * h(i, k) + y * h(i, k + 1);
              if (k + 1 != nn) {
                p += z * h(i, k + 2);
                h(i, k + 2) -= p * r;
              }
              h(i, k + 1) -= p * q;
              h(i, k) -= p;
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return w;
}

/// Sort by descending real part, ties by descending imaginary part.
template <typename Scalar>
void sort_descending(std::vector<std::complex<Scalar>>& values) {
  std::stable_sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

/// All eigenvalues of a general real matrix: balance, Hessenberg, Francis QR.
template <typename Scalar>
std::vector<std::complex<Scalar>> eigenvalues(const MatrixX<Scalar>& a) {
  if (a.rows() != a.cols()) throw NumericError("eigenvalues: matrix is not square");
  if (a.rows() == 0) return {};
  if (!a.allFinite()) throw NumericError("eigenvalues: matrix has non-finite entries");
  auto values = hessenberg_qr_eigenvalues<Scalar>(hessenberg<Scalar>(balance<Scalar>(a)));
  sort_descending(values);
  return values;
}

/// Right eigenvector for a computed eigenvalue by inverse iteration on the
/// original (unbalanced) matrix. Returned with unit 2-norm.
template <typename Scalar>
ComplexVectorX<Scalar> eigenvector(const MatrixX<Scalar>& a, std::complex<Scalar> lambda,
                                   int iterations = 3) {
  using Complex = std::complex<Scalar>;
  const Eigen::Index n = a.rows();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar scale = std::max(a.cwiseAbs().maxCoeff(), Scalar(1));
  // A tiny offset keeps the factorization finite when lambda is exact.
  const Complex shifted = lambda + Complex(scale * eps * Scalar(8), scale * eps * Scalar(4));
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> m = a.template cast<Complex>();
  m.diagonal().array() -= shifted;
  Eigen::PartialPivLU<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>> lu(m);
  ComplexVectorX<Scalar> v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = Complex(Scalar(1) + Scalar(i % 7) / Scalar(10), Scalar(i % 3) / Scalar(10));
  v.normalize();
  for (int it = 0; it < iterations; ++it) {
    v = lu.solve(v);
    const Scalar norm = v.norm();
    if (!(norm > Scalar(0)) || !std::isfinite(norm))
      throw NumericError("eigenvector: inverse iteration broke down");
    v /= norm;
  }
  return v;
}

template <typename Scalar>
Scalar eigen_residual(const MatrixX<Scalar>& a, std::complex<Scalar> lambda,
                      const ComplexVectorX<Scalar>& v) {
  using Complex = std::complex<Scalar>;
  ComplexVectorX<Scalar> r = a.template cast<Complex>() * v - lambda * v;
  return r.norm() / v.norm();
}

/// Eigenpair with residual and the left-vector-based participation weights.
template <typename Scalar>
struct EigenPair {
  std::complex<Scalar> value;
  ComplexVectorX<Scalar> right;
  Scalar residual = 0;           // ||A v - lambda v|| / ||v||
  VectorX<Scalar> participation; // |v_k w_k| normalized to sum 1
};

template <typename Scalar>
std::vector<EigenPair<Scalar>> eigenpairs(const MatrixX<Scalar>& a) {
  std::vector<EigenPair<Scalar>> out;
  const MatrixX<Scalar> at = a.transpose();
  for (const auto& lambda : eigenvalues<Scalar>(a)) {
    EigenPair<Scalar> pair;
    pair.value = lambda;
    pair.right = eigenvector<Scalar>(a, lambda);
    pair.residual = eigen_residual<Scalar>(a, lambda, pair.right);
    const ComplexVectorX<Scalar> left = eigenvector<Scalar>(at, std::conj(lambda));
    pair.participation = (pair.right.cwiseAbs().array() * left.cwiseAbs().array()).matrix();
    const Scalar total = pair.participation.sum();
    if (total > Scalar(0)) pair.participation /= total;
    out.push_back(std::move(pair));
  }
  return out;
}

/// Roots of det(s^2 I + s W1 + W2) by Aberth-Ehrlich iteration. The
/// determinant is evaluated by LU at each iterate and its logarithmic
/// derivative by Jacobi's formula, tr(P(s)^-1 P'(s)); no companion matrix or
/// eigensolver is involved.
template <typename Scalar>
std::vector<std::complex<Scalar>> quadratic_pencil_roots(const MatrixX<Scalar>& w1,
                                                         const MatrixX<Scalar>& w2,
                                                         int max_iterations = 2000) {
  using Complex = std::complex<Scalar>;
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = w1.rows();
  const int degree = static_cast<int>(2 * n);
  if (degree == 0) return {};
  const CMatrix c1 = w1.template cast<Complex>();
  const CMatrix c2 = w2.template cast<Complex>();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  // Newton correction f/f' at s, or 0 if s is (numerically) a root.
  auto newton = [&](Complex s, bool& exact) -> Complex {
    CMatrix p = c2 + s * c1;
    p.diagonal().array() += s * s;
    Eigen::PartialPivLU<CMatrix> lu(p);
    CMatrix dp = c1;
    dp.diagonal().array() += Scalar(2) * s;
    const CMatrix x = lu.solve(dp);
    const Complex logderiv = x.trace();
    exact = !std::isfinite(std::abs(logderiv));
    if (exact || logderiv == Complex(0)) {
      exact = true;
      return Complex(0);
    }
    return Complex(1) / logderiv;
  };

  const Scalar radius =
      std::max({Scalar(1), w1.cwiseAbs().rowwise().sum().maxCoeff(),
                std::sqrt(w2.cwiseAbs().rowwise().sum().maxCoeff())});
  std::vector<Complex> z(static_cast<std::size_t>(degree));
  const Scalar pi = std::acos(Scalar(-1));
  for (int k = 0; k < degree; ++k) {
    const Scalar angle = Scalar(2) * pi * (Scalar(k) + Scalar(0.25)) / Scalar(degree) + Scalar(0.4);
    z[k] = std::polar(radius * (Scalar(0.5) + Scalar(k) / Scalar(2 * degree)), angle);
  }

  std::vector<bool> converged(static_cast<std::size_t>(degree), false);
  std::vector<Scalar> last_step(static_cast<std::size_t>(degree), std::numeric_limits<Scalar>::infinity());
  for (int it = 0; it < max_iterations; ++it) {
    bool all = true;
    for (int k = 0; k < degree; ++k) {
      if (converged[k]) continue;
      bool exact = false;
      const Complex ratio = newton(z[k], exact);
      if (exact) {
        converged[k] = true;
        continue;
      }
      Complex repulsion(0);
      for (int j = 0; j < degree; ++j)
        if (j != k) repulsion += Complex(1) / (z[k] - z[j]);
      const Complex step = ratio / (Complex(1) - ratio * repulsion);
      z[k] -= step;
      const Scalar size = std::abs(step);
      const Scalar scale = std::max(Scalar(1), std::abs(z[k]));
      // Done at the tolerance, or once steps stop shrinking near round-off.
      const bool stalled = size <= std::sqrt(eps) * scale && size >= Scalar(0.5) * last_step[k];
      if (size <= Scalar(64) * eps * scale || stalled) {
        converged[k] = true;
      } else {
        all = false;
      }
      last_step[k] = size;
    }
    if (all) {
      sort_descending(z);
      return z;
    }
  }
  throw NumericError("quadratic_pencil_roots: no convergence after " +
                     std::to_string(max_iterations) + " iterations");
}

/// Greedy multiset match: the largest distance between paired entries after
/// pairing each element of `a` with its nearest unused element of `b`,
/// measured relative to max(1, |a_i|).
template <typename Scalar>
Scalar multiset_distance(const std::vector<std::complex<Scalar>>& a,
                         const std::vector<std::complex<Scalar>>& b) {
  if (a.size() != b.size()) return std::numeric_limits<Scalar>::infinity();
  std::vector<bool> used(b.size(), false);
  Scalar worst = 0;
  for (const auto& x : a) {
    std::size_t best = b.size();
    Scalar best_d = std::numeric_limits<Scalar>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const Scalar d = std::abs(x - b[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    used[best] = true;
    worst = std::max(worst, best_d / std::max(Scalar(1), std::abs(x)));
  }
  return worst;
}

}  // namespace dapigrid::linalg
