#pragma once

// Seeded Monte Carlo experiments over sample matrices.
//
// Trial i draws its matrix from master seed derive_seed(master_seed, i), so a
// summary depends only on the spec, never on the worker count or on the order
// in which trials finish.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <type_traits>
#include <variant>
#include <vector>

#include "htrip/bounds.hpp"
#include "htrip/errors.hpp"
#include "htrip/rng.hpp"
#include "htrip/sample_matrix.hpp"
#include "htrip/speclab.hpp"
#include "htrip/tailmodels.hpp"

namespace htrip {

namespace statistic {
struct Ak {
  std::size_t k;
};
struct BkSq {
  std::size_t k;
};
struct DeltaM {
  std::size_t m;
  bool normalize = true;
};
/// || (1/N) A A^T - Sigma ||; Sigma defaults to second_moment(model) * I.
struct S {
  std::optional<SquareMatrix> sigma;
};
struct M {};
/// Indicator that some column has | |X_i|^2 - n | > theta n; its mean estimates P(theta).
struct Ptheta {
  double theta;
};
/// Sum of the order statistics Z*_{k_start} + ... + Z*_N of the first-row magnitudes.
struct OrderStatSum {
  double q;
  std::size_t k_start;
};
/// | sum_i (Z_i - E Z_i) | of the first-row magnitudes.
struct DesymDeviation {
  double q;
};
}  // namespace statistic

using Statistic = std::variant<statistic::Ak, statistic::BkSq, statistic::DeltaM, statistic::S, statistic::M,
                               statistic::Ptheta, statistic::OrderStatSum, statistic::DesymDeviation>;

struct ExperimentSpec {
  ColumnModel model = ColumnModel::gaussian();
  std::size_t n = 1;
  std::size_t N = 1;
  Statistic stat = statistic::M{};
  std::size_t trials = 1;
  std::uint64_t master_seed = 0;
  std::optional<double> threshold;
  bool retain_values = true;
  EnumerationOptions enumeration{};
  GenerateOptions generation{};
};

struct Quantiles {
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
  bool operator==(const Quantiles&) const = default;
};

struct TrialSummary {
  std::size_t trials = 0;
  std::vector<double> values;  // empty unless retained
  Quantiles quantiles;
  std::optional<double> threshold;
  std::size_t exceed_count = 0;
  double frequency = 0.0;  // exceed_count / trials, 0 without a threshold
  double std_error = 0.0;  // sqrt(f (1-f) / trials)
  bool any_lower_estimate = false;
  std::string spec_text;
  std::uint64_t spec_hash = 0;
  std::uint64_t master_seed = 0;
  std::string generator_id;
  double wall_seconds = 0.0;

  /// Wall time is excluded.
  bool operator==(const TrialSummary& o) const {
    return trials == o.trials && values == o.values && quantiles == o.quantiles && threshold == o.threshold &&
           exceed_count == o.exceed_count && frequency == o.frequency && std_error == o.std_error &&
           any_lower_estimate == o.any_lower_estimate && spec_text == o.spec_text && spec_hash == o.spec_hash &&
           master_seed == o.master_seed && generator_id == o.generator_id;
  }
};

/// Nearest-rank quantile of sorted data: element ceil(p T), 1-based; p = 0 gives the minimum.
inline double nearest_rank(const std::vector<double>& sorted, double p) {
  detail::require(!sorted.empty(), "nearest_rank: empty data");
  detail::require(p >= 0.0 && p <= 1.0, "nearest_rank: p must lie in [0,1]");
  const auto T = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(T) - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, T);
  return sorted[rank - 1];
}

inline Quantiles quantiles_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {v.front(), nearest_rank(v, 0.25), nearest_rank(v, 0.5), nearest_rank(v, 0.75), v.back()};
}

inline double binomial_std_error(double f, std::size_t trials) {
  return std::sqrt(f * (1.0 - f) / static_cast<double>(trials));
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string describe(const Statistic& st) {
  using detail::format_double;
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, statistic::Ak>) return "ak(k=" + std::to_string(s.k) + ")";
        else if constexpr (std::is_same_v<T, statistic::BkSq>) return "bksq(k=" + std::to_string(s.k) + ")";
        else if constexpr (std::is_same_v<T, statistic::DeltaM>)
          return "deltam(m=" + std::to_string(s.m) + ",normalize=" + (s.normalize ? "1" : "0") + ")";
        else if constexpr (std::is_same_v<T, statistic::S>) {
          if (!s.sigma) return "s(sigma=default)";
          std::string out = "s(sigma=";
          for (double x : s.sigma->data()) out += format_double(x) + " ";
          out.back() = ')';
          return out;
        } else if constexpr (std::is_same_v<T, statistic::M>) return "m";
        else if constexpr (std::is_same_v<T, statistic::Ptheta>) return "ptheta(theta=" + format_double(s.theta) + ")";
        else if constexpr (std::is_same_v<T, statistic::OrderStatSum>)
          return "orderstatsum(q=" + format_double(s.q) + ",k=" + std::to_string(s.k_start) + ")";
        else return "desym(q=" + format_double(s.q) + ")";
      },
      st);
}

/// Canonical one-line form; hashed into the CSV spec_hash column.
inline std::string describe(const ExperimentSpec& s) {
  std::string out = "model=" + to_record(s.model) + "|n=" + std::to_string(s.n) + "|N=" + std::to_string(s.N) +
                    "|statistic=" + describe(s.stat) + "|trials=" + std::to_string(s.trials) +
                    "|master_seed=" + std::to_string(s.master_seed) +
                    "|threshold=" + (s.threshold ? detail::format_double(*s.threshold) : std::string("none")) +
                    "|enumeration_cap=" + std::to_string(s.enumeration.cap) +
                    "|fallback=" + (s.enumeration.allow_fallback ? "1" : "0");
  return out;
}

namespace detail {

/// Sparsity level of the enumerating statistics.
inline std::optional<std::size_t> sparsity_of(const Statistic& st) {
  if (auto* a = std::get_if<statistic::Ak>(&st)) return a->k;
  if (auto* b = std::get_if<statistic::BkSq>(&st)) return b->k;
  if (auto* d = std::get_if<statistic::DeltaM>(&st)) return d->m;
  return std::nullopt;
}

inline void validate(const ExperimentSpec& s) {
  require(s.trials >= 1, "experiment: trials must be >= 1");
  require(s.n >= 1 && s.N >= 1, "experiment: n and N must be >= 1");
  if (s.N > s.generation.element_cap / s.n)
    throw CapError("experiment: n*N exceeds element cap " + std::to_string(s.generation.element_cap));
  if (const auto sk = sparsity_of(s.stat)) {
    const std::size_t k = *sk;
    require(k >= 1 && k <= s.N, "experiment: sparsity must satisfy 1 <= k <= N");
    if (binomial_saturating(s.N, k) > s.enumeration.cap && !s.enumeration.allow_fallback)
      throw CapError("experiment: C(" + std::to_string(s.N) + "," + std::to_string(k) + ") exceeds enumeration cap " +
                     std::to_string(s.enumeration.cap));
    if (k > s.enumeration.jacobi.max_order) throw CapError("experiment: sparsity exceeds eigensolver order cap");
  }
  if (auto* st = std::get_if<statistic::S>(&s.stat)) {
    if (st->sigma) require(st->sigma->size() == s.n, "experiment: Sigma must be n x n");
    if (s.n > s.enumeration.jacobi.max_order) throw CapError("experiment: n exceeds eigensolver order cap");
  }
  if (auto* p = std::get_if<statistic::Ptheta>(&s.stat)) require(p->theta > 0.0, "experiment: theta must be > 0");
  if (auto* o = std::get_if<statistic::OrderStatSum>(&s.stat)) {
    require(s.model.entrywise(), "experiment: order statistics need an entrywise model");
    require(o->q > 0.0, "experiment: q must be > 0");
    require(o->k_start >= 1 && o->k_start <= s.N, "experiment: k_start must satisfy 1 <= k <= N");
  }
  if (auto* d = std::get_if<statistic::DesymDeviation>(&s.stat)) {
    require(s.model.entrywise(), "experiment: desymmetrization needs an entrywise model");
    require(d->q >= 1.0, "experiment: q must be >= 1");
  }
}

struct TrialResult {
  double value = 0.0;
  bool lower_estimate = false;
};

inline TrialResult evaluate_trial(const ExperimentSpec& s, const SampleMatrix& a) {
  return std::visit(
      [&](const auto& st) -> TrialResult {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, statistic::Ak>) {
          const auto r = exact_Ak(a, st.k, s.enumeration);
          return {r.value, r.lower_estimate};
        } else if constexpr (std::is_same_v<T, statistic::BkSq>) {
          const auto r = exact_Bk_sq(a, st.k, s.enumeration);
          return {r.value, r.lower_estimate};
        } else if constexpr (std::is_same_v<T, statistic::DeltaM>) {
          const auto r = exact_delta_m(a, st.m, st.normalize, s.enumeration);
          return {r.value, r.lower_estimate};
        } else if constexpr (std::is_same_v<T, statistic::S>) {
          if (st.sigma) return {covariance_deviation_S(a, *st.sigma, s.enumeration.jacobi), false};
          SquareMatrix sigma = SquareMatrix::identity(a.rows());
          const double v = second_moment(s.model);
          for (std::size_t i = 0; i < a.rows(); ++i) sigma(i, i) = v;
          return {covariance_deviation_S(a, sigma, s.enumeration.jacobi), false};
        } else if constexpr (std::is_same_v<T, statistic::M>) {
          return {column_norm_max(a), false};
        } else if constexpr (std::is_same_v<T, statistic::Ptheta>) {
          return {column_norm_deviation(a) > st.theta ? 1.0 : 0.0, false};
        } else if constexpr (std::is_same_v<T, statistic::OrderStatSum>) {
          std::vector<double> z(a.cols());
          for (std::size_t j = 0; j < a.cols(); ++j) z[j] = std::abs(a(0, j));
          std::sort(z.begin(), z.end(), std::greater<>());
          double sum = 0.0;
          for (std::size_t i = st.k_start - 1; i < z.size(); ++i) sum += z[i];
          return {sum, false};
        } else {
          const double mean = abs_moment(s.model, 1.0);
          double sum = 0.0;
          for (std::size_t j = 0; j < a.cols(); ++j) sum += std::abs(a(0, j)) - mean;
          return {std::abs(sum), false};
        }
      },
      s.stat);
}

/// Calls body(i) for i in [0, count) on `workers` threads; the exception of
/// the lowest failing index is rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <class E>
[[noreturn]] void rethrow_annotated(const E& e, std::size_t trial) {
  throw E("trial " + std::to_string(trial) + ": " + e.what());
}

}  // namespace detail

/// workers = 0 uses the hardware concurrency.
inline TrialSummary run_experiment(const ExperimentSpec& spec, unsigned workers = 0) {
  detail::validate(spec);
  const auto start = std::chrono::steady_clock::now();
  std::vector<detail::TrialResult> results(spec.trials);
  detail::parallel_for(spec.trials, workers, [&](std::size_t i) {
    try {
      const SampleMatrix a =
          generate_matrix(spec.model, spec.n, spec.N, derive_seed(spec.master_seed, i), spec.generation);
      results[i] = detail::evaluate_trial(spec, a);
    } catch (const CapError& e) {
      detail::rethrow_annotated(e, i);
    } catch (const ConvergenceError& e) {
      detail::rethrow_annotated(e, i);
    } catch (const DomainError& e) {
      detail::rethrow_annotated(e, i);
    }
  });

  TrialSummary out;
  out.trials = spec.trials;
  std::vector<double> values(spec.trials);
  for (std::size_t i = 0; i < spec.trials; ++i) {
    values[i] = results[i].value;
    out.any_lower_estimate = out.any_lower_estimate || results[i].lower_estimate;
  }
  out.quantiles = quantiles_of(values);
  out.threshold = spec.threshold;
  if (spec.threshold) {
    for (double v : values) out.exceed_count += v >= *spec.threshold ? 1 : 0;
    out.frequency = static_cast<double>(out.exceed_count) / static_cast<double>(spec.trials);
    out.std_error = binomial_std_error(out.frequency, spec.trials);
  }
  if (spec.retain_values) out.values = std::move(values);
  out.spec_text = describe(spec);
  out.spec_hash = fnv1a64(out.spec_text);
  out.master_seed = spec.master_seed;
  out.generator_id = std::string(kGeneratorId);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Lower-bound constructions.

enum class Construction { TruncPareto, Pareto, Weibull };

struct LowerBoundConstruction {
  Construction kind;
  double parameter;  // p, q or alpha

  /// Column model of the construction for given (m, N).
  ColumnModel model(std::size_t m, std::size_t N) const {
    switch (kind) {
      case Construction::TruncPareto:
        return ColumnModel::truncated_pareto(
            parameter, truncation_level_for(parameter, static_cast<double>(m), static_cast<double>(N)),
            Normalization::PthMoment);
      case Construction::Pareto:
        return ColumnModel::pareto(parameter, Normalization::UnitVariance);
      case Construction::Weibull:
        return ColumnModel::sym_weibull(parameter, Normalization::UnitVariance);
    }
    throw DomainError("unknown construction");
  }

  double threshold(std::size_t m, std::size_t N) const {
    const double md = static_cast<double>(m), Nd = static_cast<double>(N);
    switch (kind) {
      case Construction::TruncPareto:
        return lower_threshold_trunc_pareto(parameter, md, Nd);
      case Construction::Pareto:
        return lower_threshold_pareto(parameter, md, Nd);
      case Construction::Weibull:
        return lower_threshold_weibull(parameter, md, Nd);
    }
    throw DomainError("unknown construction");
  }
};

struct LowerBoundResult {
  double threshold;
  double frequency;
  double std_error;
  std::size_t exceed_count;
  std::size_t trials;
  bool lower_estimate;  // set only when fallback was explicitly allowed and used
  TrialSummary summary;
};

/// Frequency of {A_m >= threshold}; the claim is frequency >= 1/2.
inline LowerBoundResult verify_lower_bound(const LowerBoundConstruction& c, std::size_t m, std::size_t n,
                                           std::size_t N, std::size_t trials, std::uint64_t master_seed,
                                           const EnumerationOptions& opt = {}, unsigned workers = 0) {
  ExperimentSpec spec;
  spec.model = c.model(m, N);
  spec.n = n;
  spec.N = N;
  spec.stat = statistic::Ak{m};
  spec.trials = trials;
  spec.master_seed = master_seed;
  spec.threshold = c.threshold(m, N);
  spec.enumeration = opt;
  spec.retain_values = true;
  auto s = run_experiment(spec, workers);
  return {*spec.threshold, s.frequency, s.std_error, s.exceed_count, s.trials, s.any_lower_estimate, std::move(s)};
}

// ---------------------------------------------------------------------------
// Order statistics.

struct OrderStatsResult {
  double bound;
  std::size_t violations;
  std::size_t trials;
  double expected_violations;  // trials * s^{-k}
  double max_observed;
};

/// Z_i = u^{-1/q} so that P(Z_i >= t) = t^{-q} for t >= 1; a violation is
/// Z*_k + ... + Z*_N > order_stats_bound(q, s, k, N).
inline OrderStatsResult verify_order_stats(double q, double s, std::size_t k, std::size_t N, std::size_t trials,
                                           std::uint64_t master_seed) {
  detail::require(trials >= 1, "verify_order_stats: trials must be >= 1");
  const double bound = order_stats_bound(q, s, static_cast<double>(k), static_cast<double>(N));
  OrderStatsResult out{bound, 0, trials, static_cast<double>(trials) * std::pow(s, -static_cast<double>(k)), 0.0};
  std::vector<double> z(N);
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream rs(master_seed, t);
    for (auto& x : z) x = std::pow(rs.uniform_open(), -1.0 / q);
    std::sort(z.begin(), z.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t i = k - 1; i < N; ++i) sum += z[i];
    out.max_observed = std::max(out.max_observed, sum);
    out.violations += sum > bound ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Desymmetrization.

/// Nonnegative variables with E Z^q <= 1.
struct NonnegativeSource {
  enum class Kind { Uniform01, AbsColumnModel, Constant };
  Kind kind = Kind::Uniform01;
  std::optional<ColumnModel> model;  // AbsColumnModel: |X| / (E|X|^q)^{1/q}
  double constant = 0.0;             // Constant: value in [0, 1]

  static NonnegativeSource uniform01() { return {}; }
  static NonnegativeSource abs_of(const ColumnModel& m) { return {Kind::AbsColumnModel, m, 0.0}; }
  static NonnegativeSource constant_value(double c) {
    detail::require(c >= 0.0 && c <= 1.0, "constant source: value must lie in [0,1]");
    return {Kind::Constant, std::nullopt, c};
  }
};

struct DesymResult {
  double threshold;
  double frequency;
  double std_error;
  std::size_t trials;
  double max_deviation;
};

/// Frequency of { |sum (Z_i - E Z_i)| <= 4 N^{1/min(q,2)} }; the claim is >= 1/2.
inline DesymResult verify_desymmetrization(const NonnegativeSource& src, double q, std::size_t N,
                                           std::size_t trials, std::uint64_t master_seed) {
  detail::require(trials >= 1 && N >= 1, "verify_desymmetrization: trials and N must be >= 1");
  const double thr = desymmetrization_threshold(q, static_cast<double>(N));
  double mean = 0.0, factor = 1.0;
  switch (src.kind) {
    case NonnegativeSource::Kind::Uniform01:
      mean = 0.5;
      break;
    case NonnegativeSource::Kind::Constant:
      mean = src.constant;
      break;
    case NonnegativeSource::Kind::AbsColumnModel: {
      detail::require(src.model && src.model->entrywise(), "desymmetrization source: needs an entrywise model");
      factor = 1.0 / std::pow(abs_moment(*src.model, q), 1.0 / q);
      mean = abs_moment(*src.model, 1.0) * factor;
      break;
    }
  }
  std::size_t hits = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream rs(master_seed, t);
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double z = 0.0;
      switch (src.kind) {
        case NonnegativeSource::Kind::Uniform01:
          z = rs.uniform_open();
          break;
        case NonnegativeSource::Kind::Constant:
          z = src.constant;
          break;
        case NonnegativeSource::Kind::AbsColumnModel:
          z = std::abs(entry_from_uniform(*src.model, rs.uniform_open(), 1.0)) * factor;
          break;
      }
      sum += z - mean;
    }
    worst = std::max(worst, std::abs(sum));
    hits += std::abs(sum) <= thr ? 1 : 0;
  }
  const double f = static_cast<double>(hits) / static_cast<double>(trials);
  return {thr, f, binomial_std_error(f, trials), trials, worst};
}

// ---------------------------------------------------------------------------
// Binomial median.

struct BinomialCase {
  std::uint64_t N;
  double v;
  std::uint64_t m;
};

struct BinomialMedianRow {
  BinomialCase c;
  bool triggered;
  double tail;
  bool holds;
};

struct BinomialMedianReport {
  std::vector<BinomialMedianRow> rows;
  std::size_t triggered = 0;
  std::size_t exceptions = 0;  // triggered rows with tail < 1/2
};

/// N in [N_lo, N_hi], v in {0.1, ..., 0.9}, m in [0, N].
inline std::vector<BinomialCase> default_binomial_grid(std::uint64_t N_lo = 5, std::uint64_t N_hi = 50) {
  std::vector<BinomialCase> grid;
  for (std::uint64_t N = N_lo; N <= N_hi; ++N)
    for (int j = 1; j <= 9; ++j)
      for (std::uint64_t m = 0; m <= N; ++m) grid.push_back({N, j / 10.0, m});
  return grid;
}

inline BinomialMedianReport verify_binomial_median(const std::vector<BinomialCase>& grid) {
  BinomialMedianReport rep;
  rep.rows.reserve(grid.size());
  for (const auto& c : grid) {
    const auto r = binomial_median_check(c.N, c.v, c.m);
    rep.rows.push_back({c, r.triggered, r.tail, r.holds()});
    rep.triggered += r.triggered ? 1 : 0;
    rep.exceptions += r.holds() ? 0 : 1;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Covariance approximation scaling.

struct KlsScalingResult {
  std::vector<std::size_t> N_list;
  std::vector<double> medians;
  std::vector<double> residuals;  // ln median - fitted value
  double slope = 0.0;             // d ln(median S) / d ln(n/N)
  double intercept = 0.0;
  bool strictly_decreasing = false;
  std::vector<TrialSummary> summaries;
};

/// Ordinary least squares fit y = a + b x; returns {a, b}.
inline std::pair<double, double> ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "ols_fit: need at least two points");
  const double k = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  detail::require(sxx > 0.0, "ols_fit: x values must not all coincide");
  const double b = sxy / sxx;
  return {my - b * mx, b};
}

inline KlsScalingResult kls_scaling_experiment(const ColumnModel& model, std::size_t n,
                                               const std::vector<std::size_t>& N_list, std::size_t trials,
                                               std::uint64_t master_seed, unsigned workers = 0,
                                               const GenerateOptions& gen = {}) {
  detail::require(N_list.size() >= 2, "kls_scaling_experiment: need at least two values of N");
  for (std::size_t i = 1; i < N_list.size(); ++i)
    detail::require(N_list[i] > N_list[i - 1], "kls_scaling_experiment: N_list must be strictly increasing");
  KlsScalingResult out;
  out.N_list = N_list;
  std::vector<double> x, y;
  for (std::size_t N : N_list) {
    ExperimentSpec spec;
    spec.model = model;
    spec.n = n;
    spec.N = N;
    spec.stat = statistic::S{};
    spec.trials = trials;
    spec.master_seed = master_seed;
    spec.generation = gen;
    auto s = run_experiment(spec, workers);
    out.medians.push_back(s.quantiles.median);
    x.push_back(std::log(static_cast<double>(n) / static_cast<double>(N)));
    y.push_back(std::log(s.quantiles.median));
    out.summaries.push_back(std::move(s));
  }
  std::tie(out.intercept, out.slope) = ols_fit(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) out.residuals.push_back(y[i] - (out.intercept + out.slope * x[i]));
  out.strictly_decreasing = true;
  for (std::size_t i = 1; i < out.medians.size(); ++i)
    out.strictly_decreasing = out.strictly_decreasing && out.medians[i] < out.medians[i - 1];
  return out;
}

// ---------------------------------------------------------------------------
// Output.

inline constexpr std::string_view kCsvHeader = "spec_hash,trial,value,threshold,exceed,seed,generator_id";

/// One row per retained trial; otherwise one summary row with trial "summary",
/// value = median and exceed = frequency.
inline void write_csv(std::ostream& os, const TrialSummary& s) {
  using detail::format_double;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(s.spec_hash));
  const std::string thr = s.threshold ? format_double(*s.threshold) : "";
  os << kCsvHeader << "\n";
  if (!s.values.empty()) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const std::string ex = s.threshold ? (s.values[i] >= *s.threshold ? "1" : "0") : "";
      os << hash << "," << i << "," << format_double(s.values[i]) << "," << thr << "," << ex << ","
         << derive_seed(s.master_seed, i) << "," << s.generator_id << "\n";
    }
  } else {
    os << hash << ",summary," << format_double(s.quantiles.median) << "," << thr << ","
       << (s.threshold ? format_double(s.frequency) : "") << "," << s.master_seed << "," << s.generator_id << "\n";
  }
}

inline std::string format_sig(double x, int digits = 12) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline void write_report(std::ostream& os, const TrialSummary& s) {
  os << "spec: " << s.spec_text << "\n";
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(s.spec_hash));
  os << "spec_hash: " << hash << "\n";
  os << "generator_id: " << s.generator_id << "\n";
  os << "trials: " << s.trials << "\n";
  os << "min: " << format_sig(s.quantiles.min) << "\n";
  os << "q25: " << format_sig(s.quantiles.q25) << "\n";
  os << "median: " << format_sig(s.quantiles.median) << "\n";
  os << "q75: " << format_sig(s.quantiles.q75) << "\n";
  os << "max: " << format_sig(s.quantiles.max) << "\n";
  if (s.threshold) {
    os << "threshold: " << format_sig(*s.threshold) << "\n";
    os << "exceed_count: " << s.exceed_count << "\n";
    os << "frequency: " << format_sig(s.frequency) << " +- " << format_sig(s.std_error) << "\n";
  }
  if (s.any_lower_estimate) os << "note: some trials used randomized support sampling (lower estimates)\n";
  os << "wall_seconds: " << format_sig(s.wall_seconds, 4) << "\n";
}

}  // namespace htrip
