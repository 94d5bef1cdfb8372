#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "htrip/errors.hpp"

namespace htrip {

/// Dense square matrix, row-major. Used for Gram matrices and covariance
/// differences, which are small.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t m, double fill = 0.0) : m_(m), a_(m * m, fill) {}

  static SquareMatrix identity(std::size_t m) {
    SquareMatrix out(m);
    for (std::size_t i = 0; i < m; ++i) out(i, i) = 1.0;
    return out;
  }

  static SquareMatrix from_rows(std::size_t m, std::vector<double> rows) {
    detail::require(rows.size() == m * m, "SquareMatrix: expected m*m entries");
    SquareMatrix out;
    out.m_ = m;
    out.a_ = std::move(rows);
    return out;
  }

  std::size_t size() const { return m_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * m_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * m_ + j]; }
  std::span<const double> data() const { return a_; }

  /// max |a_ij - a_ji|
  double asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = i + 1; j < m_; ++j) worst = std::max(worst, std::abs(a_[i * m_ + j] - a_[j * m_ + i]));
    return worst;
  }

  double frobenius() const {
    double s = 0.0;
    for (double x : a_) s += x * x;
    return std::sqrt(s);
  }

  /// <x, A x>
  double quadratic_form(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m_; ++j) row += a_[i * m_ + j] * x[j];
      s += x[i] * row;
    }
    return s;
  }

 private:
  std::size_t m_ = 0;
  std::vector<double> a_;
};

struct JacobiOptions {
  double tolerance = 1e-12;   // off-diagonal Frobenius norm, relative to ||G||_F
  int max_sweeps = 100;
  std::size_t max_order = 512;
  double symmetry_tolerance = 1e-12;
};

struct ExtremeEigs {
  double lambda_min;
  double lambda_max;
  /// max(|lambda_min|, |lambda_max|): the operator norm of a symmetric matrix.
  double abs_max() const { return std::max(std::abs(lambda_min), std::abs(lambda_max)); }
};

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// ascending.
inline std::vector<double> symmetric_eigenvalues(const SquareMatrix& g, const JacobiOptions& opt = {}) {
  const std::size_t m = g.size();
  if (m > opt.max_order)
    throw CapError("symmetric eigensolver: order " + std::to_string(m) + " exceeds cap " +
                   std::to_string(opt.max_order));
  const double scale = g.frobenius();
  detail::require(g.asymmetry() <= opt.symmetry_tolerance * std::max(1.0, scale),
                  "symmetric eigensolver: matrix is not symmetric");
  std::vector<double> a(g.data().begin(), g.data().end());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * m + j]; };

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) s += 2.0 * at(i, j) * at(i, j);
    return std::sqrt(s);
  };

  const double target = opt.tolerance * scale;
  int sweep = 0;
  while (off_norm() > target) {
    if (sweep++ >= opt.max_sweeps)
      throw ConvergenceError("symmetric eigensolver: no convergence after " + std::to_string(opt.max_sweeps) +
                             " sweeps");
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double app = at(p, p), aqq = at(q, q);
        // Rotation angle from the stable formula t = sgn(theta)/(|theta| + sqrt(theta^2+1)).
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        at(p, q) = 0.0;
        at(q, p) = 0.0;
      }
    }
  }
  std::vector<double> eig(m);
  for (std::size_t i = 0; i < m; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

inline ExtremeEigs symmetric_extreme_eigs(const SquareMatrix& g, const JacobiOptions& opt = {}) {
  detail::require(g.size() >= 1, "symmetric_extreme_eigs: empty matrix");
  if (g.size() == 1) return {g(0, 0), g(0, 0)};
  if (g.size() == 2 && g.asymmetry() <= opt.symmetry_tolerance * std::max(1.0, g.frobenius())) {
    // closed form, also the hot path for k = 2 enumerations
    const double mean = 0.5 * (g(0, 0) + g(1, 1));
    const double half = 0.5 * (g(0, 0) - g(1, 1));
    const double r = std::hypot(half, g(0, 1));
    return {mean - r, mean + r};
  }
  const auto eig = symmetric_eigenvalues(g, opt);
  return {eig.front(), eig.back()};
}

}  // namespace htrip
