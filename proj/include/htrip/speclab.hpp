#pragma once

// Exact extremal sparse quantities of a column matrix by support enumeration:
//
//   A_k     largest spectral norm among k-column submatrices
//   B_k^2   largest |eigenvalue| of G_I - D_I over |I| = k
//   delta_m restricted isometry constant of A (or A / sqrt(n))
//   Q_k(I)  largest bilinear form between the I and I^c parts of a k-sparse
//           unit combination
//
// plus M, the covariance deviation S, the epsilon-net estimate for quadratic
// forms and the subset decomposition identity for off-diagonal inner products.
//
// Suprema over |supp| <= k are attained on supports of size exactly k (a
// principal submatrix never has a larger norm), so only size-k supports are
// visited, in lexicographic order. The first maximizer wins ties within a
// relative 1e-12.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htrip/errors.hpp"
#include "htrip/linalg.hpp"
#include "htrip/rng.hpp"
#include "htrip/sample_matrix.hpp"

namespace htrip {

enum class ExtremumKind { Ak, BkSq, DeltaM, QkI };

struct SparseExtremum {
  double value = 0.0;
  std::vector<std::size_t> support;  // 0-based, sorted
  ExtremumKind kind = ExtremumKind::Ak;
  bool lower_estimate = false;  // produced by randomized support sampling
  bool rip_violated = false;    // DeltaM only: value >= 1
  std::uint64_t supports_visited = 0;
};

struct EnumerationOptions {
  std::uint64_t cap = 10'000'000;  // max C(N,k) for exact mode
  bool allow_fallback = false;     // sample supports instead of failing when over cap
  std::uint64_t fallback_supports = 100'000;
  std::uint64_t fallback_seed = 0;
  JacobiOptions jacobi{};
};

/// C(N,k), saturating at uint64 max.
inline std::uint64_t binomial_saturating(std::uint64_t N, std::uint64_t k) {
  if (k > N) return 0;
  k = std::min(k, N - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = N - k + i;
    // r * num / i is exact at each step; guard the multiplication
    if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    r = r * num / i;
  }
  return r;
}

namespace detail {

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

/// Inner products between columns, cached in full when N is moderate.
class GramCache {
 public:
  explicit GramCache(const SampleMatrix& a) : a_(a) {
    const std::size_t N = a.cols();
    if (N <= kFullLimit) {
      full_.assign(N * N, 0.0);
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i; j < N; ++j) full_[i * N + j] = full_[j * N + i] = dot(a.column(i), a.column(j));
    }
  }
  double operator()(std::size_t i, std::size_t j) const {
    if (!full_.empty()) return full_[i * a_.cols() + j];
    return dot(a_.column(i), a_.column(j));
  }
  SquareMatrix sub(std::span<const std::size_t> idx) const {
    SquareMatrix g(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = r; c < idx.size(); ++c) g(r, c) = g(c, r) = (*this)(idx[r], idx[c]);
    return g;
  }

 private:
  static constexpr std::size_t kFullLimit = 2000;
  const SampleMatrix& a_;
  std::vector<double> full_;
};

/// Advance a sorted k-subset of {0..N-1} to its lexicographic successor.
inline bool next_combination(std::vector<std::size_t>& c, std::size_t N) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < N - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

inline std::vector<std::size_t> random_support(std::size_t N, std::size_t k, RandomStream& rs) {
  std::vector<std::size_t> pool(N);
  for (std::size_t i = 0; i < N; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rs.uniform_index(N - i)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Max of eval(support) over all size-k supports (or a random sample of them).
template <class Eval>
SparseExtremum maximize_over_supports(std::size_t N, std::size_t k, ExtremumKind kind,
                                      const EnumerationOptions& opt, Eval&& eval) {
  SparseExtremum best;
  best.kind = kind;
  auto consider = [&](const std::vector<std::size_t>& s) {
    const double v = eval(std::span<const std::size_t>(s));
    ++best.supports_visited;
    if (best.support.empty() || v > best.value + 1e-12 * std::abs(best.value)) {
      best.value = v;
      best.support = s;
    }
  };
  const std::uint64_t total = binomial_saturating(N, k);
  if (total <= opt.cap) {
    std::vector<std::size_t> s(k);
    for (std::size_t i = 0; i < k; ++i) s[i] = i;
    do consider(s);
    while (next_combination(s, N));
    return best;
  }
  if (!opt.allow_fallback)
    throw CapError("support enumeration: C(" + std::to_string(N) + "," + std::to_string(k) + ") exceeds cap " +
                   std::to_string(opt.cap));
  RandomStream rs(opt.fallback_seed, 0);
  for (std::uint64_t t = 0; t < opt.fallback_supports; ++t) consider(random_support(N, k, rs));
  best.lower_estimate = true;
  // lexicographic order among sampled maximizers is not meaningful; keep the first found
  return best;
}

inline void check_sparsity(std::size_t k, std::size_t N, const char* who) {
  require(k >= 1 && k <= N, std::string(who) + ": sparsity must satisfy 1 <= k <= N");
}

}  // namespace detail

/// M = max_i |X_i|.
inline double column_norm_max(const SampleMatrix& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) best = std::max(best, std::sqrt(detail::dot(a.column(j), a.column(j))));
  return best;
}

/// max_i | |X_i|^2 / n - 1 |, i.e. delta_1(A / sqrt(n)).
inline double column_norm_deviation(const SampleMatrix& a) {
  const double n = static_cast<double>(a.rows());
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j)
    best = std::max(best, std::abs(detail::dot(a.column(j), a.column(j)) / n - 1.0));
  return best;
}

inline SparseExtremum exact_Ak(const SampleMatrix& a, std::size_t k, const EnumerationOptions& opt = {}) {
  detail::check_sparsity(k, a.cols(), "exact_Ak");
  const detail::GramCache gram(a);
  auto out = detail::maximize_over_supports(a.cols(), k, ExtremumKind::Ak, opt, [&](auto s) {
    return std::sqrt(std::max(0.0, symmetric_extreme_eigs(gram.sub(s), opt.jacobi).lambda_max));
  });
  return out;
}

inline SparseExtremum exact_Bk_sq(const SampleMatrix& a, std::size_t k, const EnumerationOptions& opt = {}) {
  detail::check_sparsity(k, a.cols(), "exact_Bk_sq");
  const detail::GramCache gram(a);
  return detail::maximize_over_supports(a.cols(), k, ExtremumKind::BkSq, opt, [&](auto s) {
    if (s.size() == 1) return 0.0;
    SquareMatrix g = gram.sub(s);
    for (std::size_t i = 0; i < s.size(); ++i) g(i, i) = 0.0;
    return symmetric_extreme_eigs(g, opt.jacobi).abs_max();
  });
}

/// delta_m of T = A / sqrt(n) (normalize) or T = A.
inline SparseExtremum exact_delta_m(const SampleMatrix& a, std::size_t m, bool normalize,
                                    const EnumerationOptions& opt = {}) {
  detail::check_sparsity(m, a.cols(), "exact_delta_m");
  const detail::GramCache gram(a);
  const double scale = normalize ? 1.0 / static_cast<double>(a.rows()) : 1.0;
  auto out = detail::maximize_over_supports(a.cols(), m, ExtremumKind::DeltaM, opt, [&](auto s) {
    SquareMatrix g = gram.sub(s);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j) g(i, j) *= scale;
    const auto e = symmetric_extreme_eigs(g, opt.jacobi);
    return std::max(e.lambda_max - 1.0, 1.0 - e.lambda_min);
  });
  out.rip_violated = out.value >= 1.0;
  return out;
}

/// Q(a, T, S) = |< sum_{i in T} a_i X_i , sum_{j in S} a_j X_j >|; 0 when either set is empty.
inline double bilinear_Q(const SampleMatrix& a, std::span<const double> coef, std::span<const std::size_t> t_set,
                         std::span<const std::size_t> s_set) {
  detail::require(coef.size() == a.cols(), "bilinear_Q: coefficient vector must have length N");
  for (std::size_t i : t_set) {
    detail::require(i < a.cols(), "bilinear_Q: index out of range");
    for (std::size_t j : s_set) detail::require(i != j, "bilinear_Q: T and S must be disjoint");
  }
  for (std::size_t j : s_set) detail::require(j < a.cols(), "bilinear_Q: index out of range");
  if (t_set.empty() || s_set.empty()) return 0.0;
  std::vector<double> u(a.rows(), 0.0), v(a.rows(), 0.0);
  for (std::size_t i : t_set)
    for (std::size_t r = 0; r < a.rows(); ++r) u[r] += coef[i] * a(r, i);
  for (std::size_t j : s_set)
    for (std::size_t r = 0; r < a.rows(); ++r) v[r] += coef[j] * a(r, j);
  return std::abs(detail::dot(u, v));
}

/// Q_k(I): sup over |E| <= k and a in the unit ball of R^E of Q(a, E cap I, E cap I^c).
/// Evaluated as the largest eigenvalue of the symmetric matrix holding half the
/// cross-Gram block, which equals sigma_max(C_E) / 2.
inline SparseExtremum exact_Qk(const SampleMatrix& a, std::span<const std::size_t> i_set, std::size_t k,
                               const EnumerationOptions& opt = {}) {
  const std::size_t N = a.cols();
  detail::require(k >= 1, "exact_Qk: k must be >= 1");
  std::vector<char> in_i(N, 0);
  for (std::size_t i : i_set) {
    detail::require(i < N, "exact_Qk: index out of range");
    in_i[i] = 1;
  }
  const std::size_t size = std::min(k, N);
  const detail::GramCache gram(a);
  return detail::maximize_over_supports(N, size, ExtremumKind::QkI, opt, [&](auto s) {
    SquareMatrix h(s.size());
    bool mixed = false;
    for (std::size_t r = 0; r < s.size(); ++r)
      for (std::size_t c = r + 1; c < s.size(); ++c)
        if (in_i[s[r]] != in_i[s[c]]) {
          h(r, c) = h(c, r) = 0.5 * gram(s[r], s[c]);
          mixed = true;
        }
    return mixed ? symmetric_extreme_eigs(h, opt.jacobi).abs_max() : 0.0;
  });
}

/// Complement of an index set within {0..N-1}.
inline std::vector<std::size_t> complement(std::span<const std::size_t> set, std::size_t N) {
  std::vector<char> in(N, 0);
  for (std::size_t i : set) in.at(i) = 1;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < N; ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

/// || (1/N) A A^T - Sigma ||.
inline double covariance_deviation_S(const SampleMatrix& a, const SquareMatrix& sigma, const JacobiOptions& opt = {}) {
  const std::size_t n = a.rows();
  if (sigma.size() != n)
    throw DomainError("covariance_deviation_S: Sigma is " + std::to_string(sigma.size()) + "x" +
                      std::to_string(sigma.size()) + " but A has " + std::to_string(n) + " rows");
  if (n > opt.max_order) throw CapError("covariance_deviation_S: n exceeds eigensolver cap");
  SquareMatrix d(n);
  const double inv_n = 1.0 / static_cast<double>(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const auto x = a.column(j);
    for (std::size_t r = 0; r < n; ++r) {
      if (x[r] == 0.0) continue;
      for (std::size_t c = r; c < n; ++c) d(r, c) += x[r] * x[c];
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r; c < n; ++c) d(r, c) = d(c, r) = d(r, c) * inv_n - sigma(r, c);
  return symmetric_extreme_eigs(d, opt).abs_max();
}

/// Identity covariance.
inline double covariance_deviation_S(const SampleMatrix& a, const JacobiOptions& opt = {}) {
  return covariance_deviation_S(a, SquareMatrix::identity(a.rows()), opt);
}

/// Bound delta_m(A/sqrt(n)) <= B_m^2 / n + max_i ||X_i|^2/n - 1|, evaluated exactly.
inline double delta_m_upper_from_Bm(const SampleMatrix& a, std::size_t m, const EnumerationOptions& opt = {}) {
  return exact_Bk_sq(a, m, opt).value / static_cast<double>(a.rows()) + column_norm_deviation(a);
}

// ---------------------------------------------------------------------------
// epsilon-nets for quadratic forms

/// Finite point set in R^dim, flat storage.
struct PointSet {
  std::size_t dim = 0;
  std::vector<double> coords;
  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

/// An eps-net of the unit ball B_2^dim contained in the ball: the cubic grid of
/// spacing 1.99 eps / sqrt(dim), restricted to points within 1 + eps of the
/// origin, each radially projected onto the ball. Projection onto a convex set
/// is 1-Lipschitz and fixes the ball, so every x in the ball stays within
/// (0.995 eps) of some net point.
inline PointSet make_grid_net(std::size_t dim, double eps, std::size_t max_points = 50'000'000) {
  detail::require(dim >= 1, "make_grid_net: dim must be >= 1");
  detail::require(eps > 0.0 && eps < 1.0, "make_grid_net: eps must lie in (0,1)");
  const double h = 1.99 * eps / std::sqrt(static_cast<double>(dim));
  const auto half = static_cast<long>(std::ceil((1.0 + eps) / h));
  const std::size_t side = static_cast<std::size_t>(2 * half + 1);
  double total = std::pow(static_cast<double>(side), static_cast<double>(dim));
  if (total > 1e10) throw CapError("make_grid_net: grid too large");
  PointSet net{dim, {}};
  std::vector<long> idx(dim, -half);
  std::vector<double> y(dim);
  const double r2max = (1.0 + eps) * (1.0 + eps);
  while (true) {
    double r2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      y[d] = static_cast<double>(idx[d]) * h;
      r2 += y[d] * y[d];
    }
    if (r2 <= r2max) {
      const double shrink = r2 > 1.0 ? 1.0 / std::sqrt(r2) : 1.0;
      for (double v : y) net.coords.push_back(v * shrink);
      if (net.size() > max_points) throw CapError("make_grid_net: more than max_points net points");
    }
    std::size_t d = 0;
    while (d < dim && ++idx[d] > half) idx[d++] = -half;
    if (d == dim) break;
  }
  return net;
}

/// (1 - 2 eps)^-1 max_{y in net} |<G y, y>|; an upper bound on ||G|| whenever
/// `net` is an eps-net of the unit ball.
inline double net_norm_estimate(const SquareMatrix& g, double eps, const PointSet& net) {
  detail::require(eps > 0.0 && eps < 0.5, "net_norm_estimate: eps must lie in (0, 1/2)");
  detail::require(net.dim == g.size(), "net_norm_estimate: net dimension must match G");
  double best = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) best = std::max(best, std::abs(g.quadratic_form(net.point(i))));
  return best / (1.0 - 2.0 * eps);
}

// ---------------------------------------------------------------------------

struct DecompositionSides {
  double lhs;  // sum_{i != j} <x_i, x_j>
  double rhs;  // 2^{2-N} sum_I sum_{i in I} sum_{j in I^c} <x_i, x_j>
};

inline DecompositionSides decomposition_identity_check(const std::vector<std::vector<double>>& xs) {
  const std::size_t N = xs.size();
  detail::require(N >= 2, "decomposition_identity_check: need at least 2 vectors");
  if (N > 20) throw CapError("decomposition_identity_check: N exceeds 20 (2^N subsets)");
  for (const auto& x : xs) detail::require(x.size() == xs[0].size(), "decomposition_identity_check: ragged input");
  std::vector<double> g(N * N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) g[i * N + j] = detail::dot(xs[i], xs[j]);
  DecompositionSides out{0.0, 0.0};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      if (i != j) out.lhs += g[i * N + j];
  double sum = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << N); ++mask) {
    for (std::size_t i = 0; i < N; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (std::size_t j = 0; j < N; ++j)
        if (!(mask >> j & 1u)) sum += g[i * N + j];
    }
  }
  out.rhs = std::ldexp(sum, 2 - static_cast<int>(N));
  return out;
}

}  // namespace htrip
