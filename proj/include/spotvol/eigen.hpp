#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "spotvol/error.hpp"
#include "spotvol/matrix.hpp"

namespace spotvol {

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

struct JacobiOptions {
  double symmetry_tol = 1e-10;  // relative to max |A_ij|
  double off_tol = 1e-12;       // relative to ||A||_F
  int max_sweeps = 50;
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace detail

// Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.
// Eigenvalues come back in descending order; each eigenvector is oriented
// so that its first non-negligible component is positive.
inline SymmetricEigen symm_eigen(const Matrix& input, const JacobiOptions& opt = {}) {
  if (!input.square()) throw Error("symm_eigen: matrix is not square");
  const std::size_t n = input.rows();
  const double scale = input.max_abs();
  const double asym = input.max_asymmetry();
  if (asym > opt.symmetry_tol * scale) {
    std::ostringstream msg;
    msg << "symm_eigen: matrix is not symmetric (max |A_ij - A_ji| = " << asym
        << ", max |A_ij| = " << scale << ")";
    throw Error(msg.str());
  }

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));
  Matrix v = Matrix::identity(n);

  const double target = opt.off_tol * a.frobenius();
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation zeroing a(p,q) (Golub & Van Loan, symmetric Schur 2x2).
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    out.values[i] = a(src, src);
    double sign = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (std::abs(v(k, src)) > 1e-14) {
        sign = v(k, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, i) = sign * v(k, src);
  }
  return out;
}

inline std::vector<double> symm_eigenvalues(const Matrix& a, const JacobiOptions& opt = {}) {
  return symm_eigen(a, opt).values;
}

}  // namespace spotvol
