#pragma once

// Closed-form bound calculators for sparse submatrix norms, restricted
// isometry, covariance approximation, order statistics and the explicit
// lower-bound constructions.
//
// Absolute constants whose values are not known (the c, C of the estimates)
// are explicit arguments defaulting to 1. The results are therefore the
// displayed formulas with those constants set, not claims about the true
// constants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "htrip/errors.hpp"
#include "htrip/special.hpp"
#include "htrip/tailmodels.hpp"

namespace htrip {

using detail::require;

/// C_phi in the polynomial case of the submatrix-norm estimate.
inline const double kCphiPolynomial = std::exp(4.0);

// ---------------------------------------------------------------------------
// Submatrix norm estimate, polynomial tails.

struct Case1Params {
  double p;
  double sigma;       // in (2, p/2)
  double lambda_par;  // in [1, p]
  double vartheta = 1.0;
  double t;
  double k;
  double N;

  void validate() const {
    require(p > 4.0, "Case1: p must be > 4");
    require(sigma > 2.0 && sigma < p / 2.0, "Case1: sigma must lie in (2, p/2)");
    require(lambda_par >= 1.0 && lambda_par <= p, "Case1: lambda must lie in [1, p]");
    require(vartheta >= 1.0, "Case1: vartheta must be >= 1");
    require(t > 0.0, "Case1: t must be > 0");
    require(k >= 1.0 && k <= N, "Case1: need 1 <= k <= N");
  }
};

/// sigma = p/4 (requires p > 8).
inline double sigma_preset_quarter(double p) {
  require(p > 8.0, "sigma preset p/4 needs p > 8");
  return p / 4.0;
}

/// sigma = 2 + eps with eps <= min{1, (p-4)/4}.
inline double sigma_preset_near_two(double p, double eps) {
  require(p > 4.0 && eps > 0.0 && eps <= std::min(1.0, (p - 4.0) / 4.0),
          "sigma preset 2+eps needs 0 < eps <= min{1,(p-4)/4}");
  return 2.0 + eps;
}

inline double c1_sigma_lambda_p(double sigma, double lambda_par, double p) {
  require(p > 4.0 && sigma > 2.0 && sigma < p / 2.0 && lambda_par >= 1.0 && lambda_par <= p,
          "c1: need p > 4, sigma in (2, p/2), lambda in [1, p]");
  const double e = std::numbers::e;
  const double r = sigma / p;
  return 32.0 * std::exp(4.0) * std::sqrt((sigma + lambda_par) / (1.0 + lambda_par / 2.0)) *
         std::pow(2.0 * p / (p - 2.0 * sigma), 1.0 + 2.0 * r) *
         std::pow((sigma + lambda_par) / (sigma - 2.0), 2.0 * r) * std::pow(20.0 * e, r);
}

inline double c2_sigma_lambda(double sigma, double lambda_par) {
  require(sigma > 2.0 && lambda_par >= 1.0, "c2: need sigma > 2, lambda >= 1");
  return std::pow(2.0 * (sigma + lambda_par) / (5.0 * std::numbers::e * (sigma - 2.0)), lambda_par) /
         (2.0 * lambda_par - 1.0);
}

inline double c3_sigma_lambda_p(double sigma, double lambda_par, double p) {
  require(sigma > 2.0 && lambda_par >= 1.0 && p > 0.0, "c3: need sigma > 2, lambda >= 1, p > 0");
  return std::pow((sigma + lambda_par) / (2.0 * (sigma - 2.0)), p) / 4.0;
}

struct M1Beta {
  double M1;
  double beta;
  /// beta < 1/32, the standing assumption of the estimate
  bool admissible;
};

inline M1Beta m1_beta_case1(const Case1Params& c) {
  c.validate();
  const double M1 = c1_sigma_lambda_p(c.sigma, c.lambda_par, c.p) * std::sqrt(c.k) *
                    std::pow(c.N * c.vartheta / c.k, c.sigma / c.p);
  const double beta = c2_sigma_lambda(c.sigma, c.lambda_par) * std::pow(c.vartheta * c.N, -c.lambda_par) +
                      c3_sigma_lambda_p(c.sigma, c.lambda_par, c.p) * c.N * c.N * c.vartheta / std::pow(c.t, c.p);
  return {M1, beta, beta < 1.0 / 32.0};
}

// ---------------------------------------------------------------------------
// Submatrix norm estimate, exponential tails.

struct Case2Params {
  double alpha;       // in (0, 2]
  double lambda_par;  // >= 2
  double vartheta = 1.0;
  double t;
  double k;
  double N;
  double c_abs = 1.0;

  void validate() const {
    require(alpha > 0.0 && alpha <= 2.0, "Case2: alpha must lie in (0, 2]");
    require(lambda_par >= 2.0, "Case2: lambda must be >= 2");
    require(vartheta >= 1.0, "Case2: vartheta must be >= 1");
    require(t > 0.0, "Case2: t must be > 0");
    require(k >= 1.0 && k <= N, "Case2: need 1 <= k <= N");
    require(c_abs > 0.0, "Case2: absolute constant must be > 0");
  }
};

/// C_phi = C^{1/alpha} in the exponential case.
inline double c_phi_case2(double alpha, double c_abs = 1.0) { return std::pow(c_abs, 1.0 / alpha); }

inline M1Beta m1_beta_case2(const Case2Params& c) {
  c.validate();
  const double ia = 1.0 / c.alpha;
  const double M1 = std::pow(c.c_abs * c.lambda_par, ia) * std::sqrt(c.k) *
                    std::pow(std::log(2.0 * c.N * c.vartheta / c.k) + ia, ia);
  const double first = std::pow(10.0 * c.N * c.vartheta, -c.lambda_par) *
                       std::exp(-c.lambda_par * std::pow(c.k, c.alpha / 2.0) /
                                std::pow(3.5 * std::log(2.0 * c.k), 2.0 * c.alpha));
  const double second = std::exp(2.0 * std::log(c.N) + std::log(c.vartheta) - std::log(2.0) -
                                 std::pow(2.0 * c.t, c.alpha));
  const double beta = first + second;
  return {M1, beta, beta < 1.0 / 32.0};
}

struct AkBkBound {
  double A_bound;
  double Bsq_bound;
};

/// A_k <= (1-4 sqrt(beta))^-1 (M + 2 sqrt(C_phi t M) + M_1),
/// B_k^2 <= (1-4 sqrt(beta))^-2 (4 sqrt(beta) M^2 + (8 C_phi t + M_1) M + 2 M_1^2).
inline AkBkBound ak_bk_upper(double M, double M1, double t, double beta, double c_phi) {
  require(M >= 0.0 && M1 >= 0.0 && t >= 0.0 && c_phi >= 0.0 && beta >= 0.0,
          "ak_bk_upper: inputs must be nonnegative");
  if (!(beta < 1.0 / 32.0))
    throw DomainError("ak_bk_upper: beta must be < 1/32 (the estimate assumes it; the conclusion is vacuous otherwise)");
  const double sb = std::sqrt(beta);
  const double g = 1.0 / (1.0 - 4.0 * sb);
  return {g * (M + 2.0 * std::sqrt(c_phi * t * M) + M1),
          g * g * (4.0 * sb * M * M + (8.0 * c_phi * t + M1) * M + 2.0 * M1 * M1)};
}

// ---------------------------------------------------------------------------
// Off-diagonal bilinear form Q_k(I).

struct QkBound {
  double bound;
  ProbabilityBound prob_floor;
};

/// The constant 8 sqrt((s+l)/(1+l/2)) (2p/(p-2s))^{1+2s/p} (2(s+l)/(s-2))^{2s/p}
/// of the polynomial Q_k(I) estimate.
inline double qk_constant_case1(double sigma, double lambda_par, double p) {
  require(p > 4.0 && sigma > 2.0 && sigma < p / 2.0 && lambda_par >= 1.0,
          "qk constant: need p > 4, sigma in (2, p/2), lambda >= 1");
  const double r = sigma / p;
  return 8.0 * std::sqrt((sigma + lambda_par) / (1.0 + lambda_par / 2.0)) *
         std::pow(2.0 * p / (p - 2.0 * sigma), 1.0 + 2.0 * r) *
         std::pow(2.0 * (sigma + lambda_par) / (sigma - 2.0), 2.0 * r);
}

/// Polynomial case: Q_k(I) <= e^4 (t M + C sqrt(k) (5 vartheta e N / k)^{sigma/p} A_k).
/// Accepts t = 0 (the bound degenerates; the probability floor is then 0).
inline QkBound qk_bound_case1(const Case1Params& c, double M, double Ak) {
  Case1Params probe = c;
  if (probe.t == 0.0) probe.t = 1.0;
  probe.validate();
  require(c.t >= 0.0 && M >= 0.0 && Ak >= 0.0, "qk_bound_case1: t, M, A_k must be nonnegative");
  const double e = std::numbers::e;
  const double bound = std::exp(4.0) * (c.t * M + qk_constant_case1(c.sigma, c.lambda_par, c.p) * std::sqrt(c.k) *
                                                      std::pow(5.0 * c.vartheta * e * c.N / c.k, c.sigma / c.p) * Ak);
  const double first = std::pow(2.0 * (c.sigma + c.lambda_par) / (5.0 * c.vartheta * e * c.N * (c.sigma - 2.0)),
                                c.lambda_par) /
                       (2.0 * c.lambda_par - 1.0);
  const double second = c.N * c.N * c.vartheta * std::pow(c.sigma + c.lambda_par, c.p) /
                        (4.0 * std::pow(2.0 * c.t * (c.sigma - 2.0), c.p));
  const double raw = 1.0 - first - second;
  return {bound, {raw, clip_probability(raw)}};
}

/// Exponential case: Q_k(I) <= C^{1/a} (t M + (C l)^{1/a} sqrt(k) ((ln 20 vartheta e N/k)^{1/a} + (1/a)^{1/a}) A_k).
inline QkBound qk_bound_case2(const Case2Params& c, double M, double Ak) {
  Case2Params probe = c;
  if (probe.t == 0.0) probe.t = 1.0;
  probe.validate();
  require(c.t >= 0.0 && M >= 0.0 && Ak >= 0.0, "qk_bound_case2: t, M, A_k must be nonnegative");
  const double ia = 1.0 / c.alpha;
  const double e = std::numbers::e;
  const double bound =
      std::pow(c.c_abs, ia) *
      (c.t * M + std::pow(c.c_abs * c.lambda_par, ia) * std::sqrt(c.k) *
                     (std::pow(std::log(20.0 * c.vartheta * e * c.N / c.k), ia) + std::pow(ia, ia)) * Ak);
  const double first = std::pow(10.0 * c.vartheta * c.N, -c.lambda_par) *
                       std::exp(-c.lambda_par * std::pow(c.k, c.alpha / 2.0) /
                                std::pow(3.5 * std::log(2.0 * c.k), 2.0 * c.alpha));
  const double second = std::exp(2.0 * std::log(c.N) + std::log(c.vartheta) - std::log(2.0) -
                                 std::pow(2.0 * c.t, c.alpha));
  const double raw = 1.0 - first - second;
  return {bound, {raw, clip_probability(raw)}};
}

// ---------------------------------------------------------------------------
// Restricted isometry sparsity level.

enum class TailRegime { Polynomial, Exponential };

struct RipParams {
  TailRegime regime = TailRegime::Polynomial;
  double theta;         // in (0,1)
  double eps = 0.0;     // polynomial only: 0 < eps <= min{1,(p-4)/4}
  double exponent;      // p (polynomial) or alpha (exponential)
  double vartheta = 1.0;
  double n;
  double N;
  double c_abs = 1.0;   // the small constant c
  double C_abs = 1.0;   // the large constant C (exponential case)

  void validate() const {
    require(theta > 0.0 && theta < 1.0, "rip: theta must lie in (0,1)");
    require(vartheta >= 1.0, "rip: vartheta must be >= 1");
    require(n >= 1.0 && N >= n, "rip: need 1 <= n <= N");
    require(c_abs > 0.0 && C_abs > 0.0, "rip: absolute constants must be > 0");
    if (regime == TailRegime::Polynomial) {
      require(exponent > 4.0, "rip: p must be > 4");
      require(eps > 0.0 && eps <= std::min(1.0, (exponent - 4.0) / 4.0), "rip: need 0 < eps <= min{1,(p-4)/4}");
    } else {
      require(exponent > 0.0 && exponent <= 2.0, "rip: alpha must lie in (0,2]");
    }
  }
};

struct RipSparsity {
  double m;             // floor of the displayed expression; 0 is a legal value
  double m_raw;         // before the floor
  double beta;
  double C_theta_eps_p; // polynomial only; NaN otherwise
  double N_lower;       // admissible N window
  double N_upper;
  bool in_window;
};

/// C(theta, eps, p) = c ((p-4)/p)^{2(p+4+2e)/g} eps^{4(2+e)/g} theta^{2p/g}, g = p-4-2 eps.
inline double c_theta_eps_p(double theta, double eps, double p, double c_abs = 1.0) {
  require(p > 4.0 && eps > 0.0 && theta > 0.0, "C(theta,eps,p): need p > 4, eps > 0, theta > 0");
  const double g = p - 4.0 - 2.0 * eps;
  require(g > 0.0, "C(theta,eps,p): need p - 4 - 2 eps > 0");
  return c_abs * std::pow((p - 4.0) / p, 2.0 * (p + 4.0 + 2.0 * eps) / g) * std::pow(eps, 4.0 * (2.0 + eps) / g) *
         std::pow(theta, 2.0 * p / g);
}

inline RipSparsity rip_sparsity(const RipParams& r) {
  r.validate();
  RipSparsity out{};
  const double n = r.n, N = r.N, vt = r.vartheta, th = r.theta;
  if (r.regime == TailRegime::Polynomial) {
    const double p = r.exponent, eps = r.eps;
    const double g = p - 4.0 - 2.0 * eps;
    out.C_theta_eps_p = c_theta_eps_p(th, eps, p, r.c_abs);
    out.m_raw = out.C_theta_eps_p * n * std::pow(N * vt / n, -2.0 * (2.0 + eps) / g);
    out.beta = 4.0 / (3.0 * std::exp(2.0) * eps * eps * N * N * vt * vt) +
               std::pow(5.0, p) * N * N * vt / (4.0 * std::pow(2.0 * r.c_abs * eps * th, p) * std::pow(n, p / 2.0));
    out.N_lower = 256.0 / (eps * th * vt);
    out.N_upper = r.c_abs * th * std::pow(r.c_abs * eps * th, p / 2.0) * std::pow(n, p / 4.0) * std::sqrt(vt);
  } else {
    const double a = r.exponent;
    const double c2a = std::pow(r.C_abs, 2.0 / a);
    const double log_arg = c2a * N * vt / (th * th * n);
    require(log_arg > 1.0, "rip: logarithm argument C^{2/alpha} N vartheta / (theta^2 n) must exceed 1");
    out.C_theta_eps_p = std::nan("");
    out.m_raw = th * th * n / c2a * std::pow(std::log(log_arg), -2.0 / a);
    const double m = floor_tolerant(out.m_raw);
    // at m = 0 the exponent -2 m^{a/2} / (3.5 ln 2m)^{2a} tends to 0
    const double expo = m >= 1.0 ? -2.0 * std::pow(m, a / 2.0) / std::pow(3.5 * std::log(2.0 * m), 2.0 * a) : 0.0;
    out.beta = std::exp(expo) / ((10.0 * N * vt) * (10.0 * N * vt)) +
               std::exp(2.0 * std::log(N) + std::log(vt) - std::log(2.0) - r.c_abs * std::pow(th * std::sqrt(n), a));
    out.N_lower = std::max(std::pow(2.0, 1.0 / a), 4.0 / th) / vt;
    out.N_upper = r.c_abs * th * std::sqrt(vt) * std::exp(0.5 * std::pow(r.c_abs * th * std::sqrt(n), a));
  }
  out.m = std::max(0.0, floor_tolerant(out.m_raw));
  out.in_window = out.N_lower <= N && N <= out.N_upper;
  return out;
}

// ---------------------------------------------------------------------------
// Covariance approximation.

struct KlsMidBound {
  double bound;
  double C_p_eps;   // (p-4)^{-1/2} eps^{-4(2+eps)/p}
  double gamma;     // p - 4 - 2 eps
  ProbabilityBound prob_floor;
};

/// 4 < p <= 8: S <= C (M^2/N + C(p,eps) (n/N)^{gamma/p}) with probability
/// at least 1 - 8 e^-n - 2 eps^{-p/2} max{N^{-3/2}, n^{-(p/4-1)}}.
inline KlsMidBound kls_bound_mid_p(double p, double eps, double n, double N, double M, double C_abs = 1.0) {
  require(p > 4.0 && p <= 8.0, "kls_bound_mid_p: p must lie in (4, 8]");
  require(eps > 0.0 && eps <= std::min(1.0, (p - 4.0) / 4.0), "kls_bound_mid_p: need 0 < eps <= min{1,(p-4)/4}");
  require(n >= 1.0 && N >= 1.0 && M >= 0.0 && C_abs > 0.0, "kls_bound_mid_p: need n, N >= 1, M >= 0, C > 0");
  KlsMidBound out{};
  out.gamma = p - 4.0 - 2.0 * eps;
  out.C_p_eps = std::pow(p - 4.0, -0.5) * std::pow(eps, -4.0 * (2.0 + eps) / p);
  out.bound = C_abs * ((M * M / n) * (n / N) + out.C_p_eps * std::pow(n / N, out.gamma / p));
  const double raw = 1.0 - 8.0 * std::exp(-n) -
                     2.0 * std::pow(eps, -p / 2.0) * std::max(std::pow(N, -1.5), std::pow(n, -(p / 4.0 - 1.0)));
  out.prob_floor = {raw, clip_probability(raw)};
  return out;
}

struct KlsHighBound {
  double bound;
  double C_phi;
  double p0;        // failure probability
  bool in_window;   // exponential case: N >= (4/alpha)^{8/alpha}
};

/// p > 8: S <= (C/N) M^2 + C sqrt(n/N) except with probability p0.
inline KlsHighBound kls_bound_high_p(double p, double n, double N, double M, double C_abs = 1.0) {
  require(p > 8.0, "kls_bound_high_p: p must be > 8");
  require(n >= 1.0 && N >= 1.0 && M >= 0.0 && C_abs > 0.0, "kls_bound_high_p: need n, N >= 1, M >= 0, C > 0");
  KlsHighBound out{};
  out.C_phi = C_abs;
  out.bound = C_abs / N * M * M + out.C_phi * std::sqrt(n / N);
  out.p0 = 8.0 * std::exp(-n) +
           2.0 * std::pow((3.0 * p - 8.0) / (6.0 * (p - 8.0)), p / 2.0) * std::pow(N, -(p - 8.0) / 8.0) *
               std::pow(n, -p / 8.0);
  out.in_window = true;
  return out;
}

/// Exponential tails: C_phi = (C/alpha)^{2.5/alpha}.
inline KlsHighBound kls_bound_exponential(double alpha, double n, double N, double M, double C_abs = 1.0) {
  require(alpha > 0.0 && alpha <= 2.0, "kls_bound_exponential: alpha must lie in (0, 2]");
  require(n >= 1.0 && N >= 1.0 && M >= 0.0 && C_abs > 0.0, "kls_bound_exponential: need n, N >= 1, M >= 0, C > 0");
  KlsHighBound out{};
  out.C_phi = std::pow(C_abs / alpha, 2.5 / alpha);
  out.bound = C_abs / N * M * M + out.C_phi * std::sqrt(n / N);
  const double mid = std::exp(-4.0 * std::log(10.0 * N) +
                              4.0 * std::pow(n, alpha / 2.0) / std::pow(3.5 * std::log(2.0 * n), 2.0 * alpha));
  const double last = std::exp(2.0 * std::log(N) - std::log(2.0) - std::pow(2.0 * n * N, alpha / 4.0));
  out.p0 = 8.0 * std::exp(-n) + mid + last;
  out.in_window = N >= std::pow(4.0 / alpha, 8.0 / alpha);
  return out;
}

/// 2 A^2 + 6 sqrt(n) Z + C_phi
inline double kls_decomposition_bound(double A, double Z, double n, double c_phi) {
  require(A >= 0.0 && Z >= 0.0 && n >= 0.0 && c_phi >= 0.0, "kls_decomposition_bound: inputs must be nonnegative");
  return 2.0 * A * A + 6.0 * std::sqrt(n) * Z + c_phi;
}

/// C_phi = 8 vartheta^{2/p} N^{2/min(p,4)} for p-th moment bounded marginals, p >= 2.
inline double decomposition_cphi_polynomial(double p, double vartheta, double N) {
  require(p >= 2.0 && vartheta >= 1.0 && N >= 1.0, "decomposition C_phi: need p >= 2, vartheta >= 1, N >= 1");
  return 8.0 * std::pow(vartheta, 2.0 / p) * std::pow(N, 2.0 / std::min(p, 4.0));
}

/// C_alpha = (8/alpha) Gamma(4/alpha).
inline double c_alpha(double alpha) {
  require(alpha > 0.0 && alpha <= 2.0, "C_alpha: alpha must lie in (0, 2]");
  return 8.0 / alpha * gamma_function(4.0 / alpha);
}

/// C_phi = 8 sqrt(C_alpha N vartheta) for exponential-type tails.
inline double decomposition_cphi_exponential(double alpha, double vartheta, double N) {
  require(vartheta >= 1.0 && N >= 1.0, "decomposition C_phi: need vartheta >= 1, N >= 1");
  return 8.0 * std::sqrt(c_alpha(alpha) * N * vartheta);
}

inline double decomposition_cphi(const TailHypothesis& h, double N) {
  return h.regime() == TailHypothesis::Regime::Polynomial
             ? decomposition_cphi_polynomial(h.exponent(), h.vartheta(), N)
             : decomposition_cphi_exponential(h.exponent(), h.vartheta(), N);
}

/// 4 N^{1/r}, r = min(q, 2).
inline double desymmetrization_threshold(double q, double N) {
  require(q >= 1.0 && N >= 1.0, "desymmetrization_threshold: need q >= 1, N >= 1");
  return 4.0 * std::pow(N, 1.0 / std::min(q, 2.0));
}

/// Bound on sum_{i>=k} Z_i^* holding with probability > 1 - s^{-k} when
/// P(Z_i >= t) <= t^{-q} for t >= 1. Branches on q < 1, q = 1 (within 1e-12), q > 1.
inline double order_stats_bound(double q, double s, double k, double N) {
  require(q > 0.0, "order_stats_bound: q must be > 0");
  require(s > 1.0, "order_stats_bound: s must be > 1");
  require(k >= 1.0 && k <= N, "order_stats_bound: need 1 <= k <= N");
  const double e = std::numbers::e;
  if (std::abs(q - 1.0) <= 1e-12) return 2.0 * e * s * N * std::log(e * N / k);
  if (q < 1.0) return std::pow(2.0 * e * s, 1.0 / q) / (1.0 - q) * std::pow(N, 1.0 / q) * std::pow(k, 1.0 - 1.0 / q);
  return 12.0 * q * std::pow(e * s, 1.0 / q) / (q - 1.0) * N;
}

// ---------------------------------------------------------------------------
// Lower-bound constructions.

/// Truncation level with lambda^p - 1 = N/(m+1).
inline double truncation_level_for(double p, double m, double N) {
  require(p > 0.0 && m >= 1.0 && N > m, "truncation level: need p > 0, 1 <= m < N");
  return std::pow(1.0 + N / (m + 1.0), 1.0 / p);
}

/// sqrt(m) (N / (2 (m+1) ln(2N/(m+1))))^{1/p}: P(A_m >= this) >= 1/2 for the
/// a_p-normalized truncated Pareto matrix with truncation_level_for(p, m, N).
inline double lower_threshold_trunc_pareto(double p, double m, double N) {
  require(p > 2.0, "lower_threshold_trunc_pareto: p must be > 2");
  require(m >= 1.0 && m < N, "lower_threshold_trunc_pareto: need 1 <= m < N");
  return std::sqrt(m) * std::pow(N / (2.0 * (m + 1.0) * std::log(2.0 * N / (m + 1.0))), 1.0 / p);
}

/// sqrt(m) sqrt((q-2)/q) (N/(m+1))^{1/q} for the unit-variance Pareto matrix.
inline double lower_threshold_pareto(double q, double m, double N) {
  require(q > 2.0, "lower_threshold_pareto: q must be > 2");
  require(m >= 1.0 && m <= N, "lower_threshold_pareto: need 1 <= m <= N");
  if (std::isinf(q)) return std::sqrt(m);
  return std::sqrt(m) * std::sqrt((q - 2.0) / q) * std::pow(N / (m + 1.0), 1.0 / q);
}

/// sqrt(m/2) (ln(N/(m+1)))^{1/alpha} for the unit-variance symmetric Weibull matrix.
inline double lower_threshold_weibull(double alpha, double m, double N) {
  require(alpha > 0.0 && alpha <= 2.0, "lower_threshold_weibull: alpha must lie in (0, 2]");
  require(m >= 1.0 && N >= m + 1.0, "lower_threshold_weibull: need 1 <= m and N >= m + 1");
  return std::sqrt(m / 2.0) * std::pow(std::log(N / (m + 1.0)), 1.0 / alpha);
}

/// Largest m with m t^2 <= 2n.
inline std::uint64_t rip_sharpness_cap(double t, double n) {
  require(t > 0.0 && n >= 1.0, "rip_sharpness_cap: need t > 0, n >= 1");
  return static_cast<std::uint64_t>(floor_tolerant(2.0 * n / (t * t)));
}

/// P(Y >= m) for Y ~ Binomial(N, v), summed term by term in log space.
inline double binomial_upper_tail(std::uint64_t N, double v, std::uint64_t m) {
  require(v >= 0.0 && v <= 1.0, "binomial tail: v must lie in [0,1]");
  if (m == 0) return 1.0;
  if (m > N) return 0.0;
  if (v == 0.0) return 0.0;
  if (v == 1.0) return 1.0;
  const double lv = std::log(v), lw = std::log1p(-v);
  const double lgN = std::lgamma(static_cast<double>(N) + 1.0);
  double sum = 0.0;
  for (std::uint64_t j = m; j <= N; ++j) {
    const double jd = static_cast<double>(j);
    sum += std::exp(lgN - std::lgamma(jd + 1.0) - std::lgamma(static_cast<double>(N - j) + 1.0) + jd * lv +
                    (static_cast<double>(N) - jd) * lw);
  }
  return std::min(sum, 1.0);
}

struct BinomialMedianCheck {
  bool triggered;  // m <= floor(N v)
  double tail;     // P(Y >= m), exact summation
  /// the median claim: triggered implies tail >= 1/2
  bool holds() const { return !triggered || tail >= 0.5; }
};

inline BinomialMedianCheck binomial_median_check(std::uint64_t N, double v, std::uint64_t m) {
  require(v >= 0.0 && v <= 1.0, "binomial_median_check: v must lie in [0,1]");
  const double fl = floor_tolerant(static_cast<double>(N) * v);
  return {static_cast<double>(m) <= fl, binomial_upper_tail(N, v, m)};
}

}  // namespace htrip
