#pragma once

// Independent reference evaluators used by the tests. Nothing here calls the
// library's formula code: bounds are re-derived in long double log space,
// moments by quadrature, and sparse extrema by random search.

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "htrip/sample_matrix.hpp"

namespace oracle {

using ld = long double;

inline ld lpow(ld b, ld e) { return std::exp(e * std::log(b)); }

// ---- constants of the submatrix-norm estimate

inline ld c1(ld s, ld l, ld p) {
  const ld e = std::numbers::e_v<ld>;
  ld lg = std::log(32.0L) + 4.0L + 0.5L * std::log((s + l) / (1.0L + l / 2.0L)) +
          (1.0L + 2.0L * s / p) * std::log(2.0L * p / (p - 2.0L * s)) +
          (2.0L * s / p) * std::log((s + l) / (s - 2.0L)) + (s / p) * std::log(20.0L * e);
  return std::exp(lg);
}
inline ld c2(ld s, ld l) {
  return std::exp(l * std::log(2.0L * (s + l) / (5.0L * std::numbers::e_v<ld> * (s - 2.0L)))) / (2.0L * l - 1.0L);
}
inline ld c3(ld s, ld l, ld p) { return std::exp(p * std::log((s + l) / (2.0L * (s - 2.0L)))) / 4.0L; }

struct Pair {
  ld first, second;
};

inline Pair m1beta1(ld p, ld s, ld l, ld th, ld t, ld k, ld N) {
  const ld M1 = c1(s, l, p) * std::sqrt(k) * lpow(N * th / k, s / p);
  const ld beta = c2(s, l) * lpow(th * N, -l) + c3(s, l, p) * N * N * th * lpow(t, -p);
  return {M1, beta};
}

inline Pair m1beta2(ld a, ld l, ld th, ld t, ld k, ld N, ld C) {
  const ld M1 = lpow(C * l, 1.0L / a) * std::sqrt(k) * lpow(std::log(2.0L * N * th / k) + 1.0L / a, 1.0L / a);
  const ld expo = -l * lpow(k, a / 2.0L) / lpow(3.5L * std::log(2.0L * k), 2.0L * a);
  const ld beta = std::exp(-l * std::log(10.0L * N * th) + expo) + N * N * th / (2.0L * std::exp(lpow(2.0L * t, a)));
  return {M1, beta};
}

// ---- restricted isometry sparsity level (value before the floor, and beta)

inline Pair rip_poly(ld th, ld eps, ld p, ld vt, ld n, ld N, ld c) {
  const ld g = p - 4.0L - 2.0L * eps;
  const ld C = c * lpow((p - 4.0L) / p, 2.0L * (p + 4.0L + 2.0L * eps) / g) * lpow(eps, 4.0L * (2.0L + eps) / g) *
               lpow(th, 2.0L * p / g);
  const ld m = C * n * lpow(N * vt / n, -2.0L * (2.0L + eps) / g);
  const ld beta = 4.0L / (3.0L * std::exp(2.0L) * eps * eps * N * N * vt * vt) +
                  lpow(5.0L, p) * N * N * vt / (4.0L * lpow(2.0L * c * eps * th, p) * lpow(n, p / 2.0L));
  return {m, beta};
}

inline Pair rip_exp(ld th, ld a, ld vt, ld n, ld N, ld c, ld C) {
  const ld m = th * th * n * lpow(C, -2.0L / a) * lpow(std::log(lpow(C, 2.0L / a) * N * vt / (th * th * n)), -2.0L / a);
  const ld mf = std::floor(m + 1e-9L);
  const ld expo = mf >= 1 ? -2.0L * lpow(mf, a / 2.0L) / lpow(3.5L * std::log(2.0L * mf), 2.0L * a) : 0.0L;
  const ld beta = std::exp(expo) / (100.0L * N * N * vt * vt) +
                  N * N * vt / 2.0L * std::exp(-c * lpow(th * std::sqrt(n), a));
  return {m, beta};
}

// ---- covariance approximation

inline Pair kls_mid(ld p, ld eps, ld n, ld N, ld M, ld C) {
  const ld g = p - 4.0L - 2.0L * eps;
  const ld Cpe = 1.0L / std::sqrt(p - 4.0L) * lpow(eps, -4.0L * (2.0L + eps) / p);
  const ld bound = C * M * M / N + C * Cpe * lpow(n / N, g / p);
  const ld floor = 1.0L - 8.0L * std::exp(-n) -
                   2.0L * lpow(eps, -p / 2.0L) * std::max(lpow(N, -1.5L), lpow(n, 1.0L - p / 4.0L));
  return {bound, floor};
}

inline Pair kls_high(ld p, ld n, ld N, ld M, ld C) {
  const ld bound = C * M * M / N + C * std::sqrt(n / N);
  const ld p0 = 8.0L * std::exp(-n) +
                2.0L * lpow((3.0L * p - 8.0L) / (6.0L * (p - 8.0L)), p / 2.0L) / lpow(N, (p - 8.0L) / 8.0L) /
                    lpow(n, p / 8.0L);
  return {bound, p0};
}

inline Pair kls_exp(ld a, ld n, ld N, ld M, ld C) {
  const ld cphi = lpow(C / a, 2.5L / a);
  const ld bound = C * M * M / N + cphi * std::sqrt(n / N);
  const ld p0 = 8.0L * std::exp(-n) +
                lpow(10.0L * N, -4.0L) * std::exp(4.0L * lpow(n, a / 2.0L) / lpow(3.5L * std::log(2.0L * n), 2.0L * a)) +
                N * N / (2.0L * std::exp(lpow(2.0L * n * N, a / 4.0L)));
  return {bound, p0};
}

inline ld rel(ld a, ld b) { return std::abs(a - b) / std::max<ld>(std::abs(b), 1e-300L); }

// ---- moments by quadrature

/// E|X|^r for the truncated Pareto law with density p / (2 (1 - l^-p) |x|^{p+1}) on 1 <= |x| <= l.
inline double trunc_pareto_abs_moment(double p, double l, double r) {
  boost::math::quadrature::tanh_sinh<double> q;
  const double z = 1.0 - std::pow(l, -p);
  return q.integrate([&](double x) { return std::pow(x, r) * p * std::pow(x, -p - 1.0) / z; }, 1.0, l);
}

/// E|X|^r for P(|X| > t) = exp(-t^a), integrated in u = t^a.
inline double weibull_abs_moment(double a, double r) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double u) { return u > 0 ? std::exp(r / a * std::log(u) - u) : 0.0; }, 0.0,
                     std::numeric_limits<double>::infinity());
}

// ---- distribution functions of the raw (unnormalized) symmetric laws

inline double cdf_from_tail(double x, double tail_abs) { return x >= 0 ? 1.0 - 0.5 * tail_abs : 0.5 * tail_abs; }

inline double trunc_pareto_cdf(double p, double l, double x) {
  const double s = std::abs(x);
  double tail = 1.0;
  if (s >= l) tail = 0.0;
  else if (s > 1.0) tail = (std::pow(s, -p) - std::pow(l, -p)) / (1.0 - std::pow(l, -p));
  return cdf_from_tail(x, tail);
}

inline double pareto_cdf(double q, double x) {
  const double s = std::abs(x);
  return cdf_from_tail(x, s > 1.0 ? std::pow(s, -q) : 1.0);
}

inline double weibull_cdf(double a, double x) { return cdf_from_tail(x, std::exp(-std::pow(std::abs(x), a))); }

/// sup |F_n - F| for a sample.
template <class Cdf>
double ks_distance(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
  }
  return d;
}

// ---- random search over sparse unit vectors

enum class Target { Ak, BkSq, DeltaM, Qk };

/// Value of the functional at coefficient vector a supported on `supp`.
inline double functional(const htrip::SampleMatrix& A, Target t, const std::vector<std::size_t>& supp,
                         const std::vector<double>& a, const std::vector<char>& in_i) {
  const std::size_t n = A.rows();
  std::vector<double> y(n, 0.0), u(n, 0.0), v(n, 0.0);
  double diag = 0.0;
  for (std::size_t r = 0; r < supp.size(); ++r) {
    const std::size_t j = supp[r];
    double nj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += a[r] * A(i, j);
      (in_i.empty() || in_i[j] ? u : v)[i] += a[r] * A(i, j);
      nj += A(i, j) * A(i, j);
    }
    diag += a[r] * a[r] * nj;
  }
  double yy = 0.0, uv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    yy += y[i] * y[i];
    uv += u[i] * v[i];
  }
  switch (t) {
    case Target::Ak: return std::sqrt(yy);
    case Target::BkSq: return std::abs(yy - diag);
    case Target::DeltaM: return std::abs(yy / static_cast<double>(n) - 1.0);
    case Target::Qk: return std::abs(uv);
  }
  return 0.0;
}

/// Best value over `samples` random k-sparse unit vectors: half drawn afresh,
/// half as perturbations (support swap or direction jitter) of the current best.
inline double random_search(const htrip::SampleMatrix& A, Target t, std::size_t k, std::size_t samples,
                            std::uint64_t seed, const std::vector<char>& in_i = {}) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss;
  const std::size_t N = A.cols();
  auto fresh_support = [&] {
    std::vector<std::size_t> idx(N);
    for (std::size_t i = 0; i < N; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), gen);
    idx.resize(k);
    return idx;
  };
  auto normalize = [](std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    s = std::sqrt(s);
    for (double& x : a) x /= s;
  };
  std::vector<std::size_t> best_s = fresh_support();
  std::vector<double> best_a(k, 1.0);
  normalize(best_a);
  double best = functional(A, t, best_s, best_a, in_i);
  for (std::size_t it = 0; it < samples; ++it) {
    std::vector<std::size_t> s;
    std::vector<double> a(k);
    if (it % 2 == 0) {
      s = fresh_support();
      for (double& x : a) x = gauss(gen);
    } else {
      s = best_s;
      a = best_a;
      if (gen() % 4 == 0) {
        const std::size_t pos = gen() % k;
        const std::size_t cand = gen() % N;
        if (std::find(s.begin(), s.end(), cand) == s.end()) s[pos] = cand;
      }
      const double scale = 0.3 * std::pow(0.999, static_cast<double>(it) / 2.0) + 0.01;
      for (double& x : a) x += scale * gauss(gen);
    }
    normalize(a);
    const double val = functional(A, t, s, a, in_i);
    if (val > best) {
      best = val;
      best_s = s;
      best_a = a;
    }
  }
  return best;
}

/// Sum over i != j of <x_i, x_j>, directly.
inline double offdiag_sum(const std::vector<std::vector<double>>& xs) {
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (i != j)
        for (std::size_t r = 0; r < xs[i].size(); ++r) s += xs[i][r] * xs[j][r];
  return s;
}

}  // namespace oracle
