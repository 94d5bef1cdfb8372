#pragma once

// Column distributions used by the heavy-tail constructions: truncated
// Pareto, Pareto, symmetric Weibull, Gaussian, the coupon basis vector and a
// scaled wrapper around any of these. Entrywise models have i.i.d. symmetric
// entries sampled by inverse CDF of |xi| plus an independent sign.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "htrip/errors.hpp"
#include "htrip/rng.hpp"
#include "htrip/special.hpp"

namespace htrip {

enum class ModelKind { TruncatedPareto, Pareto, SymWeibull, Gaussian, CouponBasis, Scaled };

/// How the raw law is rescaled before use.
///   PthMoment    divide by a_p = (E|xi|^p)^{1/p}; truncated Pareto only.
///   UnitVariance divide by sqrt(E xi^2).
enum class Normalization { None, PthMoment, UnitVariance };

struct TruncatedParetoLaw {
  double p;
  double lambda_cut;
  bool operator==(const TruncatedParetoLaw&) const = default;
};
struct ParetoLaw {
  double q;
  bool operator==(const ParetoLaw&) const = default;
};
struct SymWeibullLaw {
  double alpha;
  bool operator==(const SymWeibullLaw&) const = default;
};
struct GaussianLaw {
  bool operator==(const GaussianLaw&) const = default;
};
struct CouponBasisLaw {
  bool operator==(const CouponBasisLaw&) const = default;
};

using BaseLaw = std::variant<TruncatedParetoLaw, ParetoLaw, SymWeibullLaw, GaussianLaw, CouponBasisLaw>;

// ---------------------------------------------------------------------------
// Closed forms on the raw (unnormalized) laws.

/// s with P(|xi| > s) = v for the truncated Pareto density
/// p / (2 (1 - lambda^-p) |x|^{p+1}) on 1 <= |x| <= lambda.
inline double inverse_tail_truncated_pareto(double p, double lambda_cut, double v) {
  detail::require(p > 0.0, "inverse_tail_truncated_pareto: p must be > 0");
  detail::require(lambda_cut >= 1.0, "inverse_tail_truncated_pareto: lambda must be >= 1");
  detail::require(v >= 0.0 && v <= 1.0, "inverse_tail_truncated_pareto: v must lie in [0,1]");
  const double lp = std::pow(lambda_cut, -p);
  const double s = std::pow(v * (1.0 - lp) + lp, -1.0 / p);
  return std::clamp(s, 1.0, lambda_cut);
}

/// a_p = (E|xi|^p)^{1/p} = (p ln(lambda) / (1 - lambda^-p))^{1/p}; equals 1 at lambda = 1.
inline double moment_p_truncated_pareto(double p, double lambda_cut) {
  detail::require(p > 0.0, "moment_p_truncated_pareto: p must be > 0");
  detail::require(lambda_cut >= 1.0, "moment_p_truncated_pareto: lambda must be >= 1");
  const double log_mass = p * std::log(lambda_cut);
  if (log_mass == 0.0) return 1.0;
  return std::pow(log_mass / -std::expm1(-log_mass), 1.0 / p);
}

namespace detail {

inline void validate(const TruncatedParetoLaw& l) {
  require(l.p > 2.0, "TruncatedPareto: p must be > 2");
  require(l.lambda_cut >= 1.0 && std::isfinite(l.lambda_cut), "TruncatedPareto: lambda must be >= 1");
}
inline void validate(const ParetoLaw& l) { require(l.q > 2.0, "Pareto: q must be > 2"); }
inline void validate(const SymWeibullLaw& l) {
  require(l.alpha > 0.0 && l.alpha <= 2.0, "SymWeibull: alpha must lie in (0,2]");
}
inline void validate(const GaussianLaw&) {}
inline void validate(const CouponBasisLaw&) {}

/// P(|xi| > s) for s >= 0.
inline double raw_tail(const BaseLaw& law, double s) {
  return std::visit(
      [s](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, TruncatedParetoLaw>) {
          if (s < 1.0) return 1.0;
          if (s >= l.lambda_cut) return 0.0;
          const double lp = std::pow(l.lambda_cut, -l.p);
          return (std::pow(s, -l.p) - lp) / (1.0 - lp);
        } else if constexpr (std::is_same_v<L, ParetoLaw>) {
          return s < 1.0 ? 1.0 : std::pow(s, -l.q);
        } else if constexpr (std::is_same_v<L, SymWeibullLaw>) {
          return std::exp(-std::pow(s, l.alpha));
        } else if constexpr (std::is_same_v<L, GaussianLaw>) {
          return std::erfc(s / std::numbers::sqrt2);
        } else {
          throw DomainError("tail: coupon basis is not an entrywise model");
        }
      },
      law);
}

/// Magnitude s with P(|xi| > s) = v, v in (0,1].
inline double raw_inverse_tail(const BaseLaw& law, double v) {
  return std::visit(
      [v](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, TruncatedParetoLaw>) {
          return inverse_tail_truncated_pareto(l.p, l.lambda_cut, v);
        } else if constexpr (std::is_same_v<L, ParetoLaw>) {
          return std::pow(v, -1.0 / l.q);
        } else if constexpr (std::is_same_v<L, SymWeibullLaw>) {
          return std::pow(-std::log(v), 1.0 / l.alpha);
        } else if constexpr (std::is_same_v<L, GaussianLaw>) {
          if (v >= 1.0) return 0.0;
          return std::numbers::sqrt2 * boost::math::erfc_inv(v);
        } else {
          throw DomainError("inverse tail: coupon basis is not an entrywise model");
        }
      },
      law);
}

/// E|xi|^r of the raw law; DomainError when infinite.
inline double raw_abs_moment(const BaseLaw& law, double r) {
  require(r > 0.0, "abs_moment: order must be > 0");
  return std::visit(
      [r](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, TruncatedParetoLaw>) {
          const double log_lambda = std::log(l.lambda_cut);
          if (log_lambda == 0.0) return 1.0;
          const double mass = -std::expm1(-l.p * log_lambda);  // 1 - lambda^-p
          const double d = r - l.p;
          if (std::abs(d) < 1e-12) return l.p * log_lambda / mass;
          return l.p / mass * std::expm1(d * log_lambda) / d;
        } else if constexpr (std::is_same_v<L, ParetoLaw>) {
          require(r < l.q, "abs_moment: Pareto moment of order >= q is infinite");
          return l.q / (l.q - r);
        } else if constexpr (std::is_same_v<L, SymWeibullLaw>) {
          return gamma_function(r / l.alpha + 1.0);
        } else if constexpr (std::is_same_v<L, GaussianLaw>) {
          return std::pow(2.0, r / 2.0) * gamma_function((r + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
        } else {
          throw DomainError("abs_moment: coupon basis is not an entrywise model");
        }
      },
      law);
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Immutable description of one column distribution. A Scaled model is stored
/// as its base law plus a scale factor, so wrapping twice multiplies the
/// factors instead of nesting.
class ColumnModel {
 public:
  static ColumnModel truncated_pareto(double p, double lambda_cut,
                                      Normalization norm = Normalization::None) {
    return ColumnModel(TruncatedParetoLaw{p, lambda_cut}, norm);
  }
  static ColumnModel pareto(double q, Normalization norm = Normalization::None) {
    return ColumnModel(ParetoLaw{q}, norm);
  }
  static ColumnModel sym_weibull(double alpha, Normalization norm = Normalization::None) {
    return ColumnModel(SymWeibullLaw{alpha}, norm);
  }
  static ColumnModel gaussian() { return ColumnModel(GaussianLaw{}, Normalization::None); }
  static ColumnModel coupon_basis() { return ColumnModel(CouponBasisLaw{}, Normalization::None); }

  static ColumnModel scaled(double scale, const ColumnModel& inner) {
    detail::require(scale >= 0.0 && std::isfinite(scale), "Scaled: scale must be finite and >= 0");
    ColumnModel out = inner;
    out.scale_ = scale * inner.scale_.value_or(1.0);
    return out;
  }

  ModelKind kind() const { return scale_ ? ModelKind::Scaled : base_kind(); }
  ModelKind base_kind() const { return static_cast<ModelKind>(law_.index()); }
  const BaseLaw& law() const { return law_; }
  Normalization normalization() const { return norm_; }
  std::optional<double> scale() const { return scale_; }
  bool entrywise() const { return !std::holds_alternative<CouponBasisLaw>(law_); }

  /// The model with any scale wrapper removed.
  ColumnModel unscaled() const {
    ColumnModel out = *this;
    out.scale_.reset();
    return out;
  }

  /// Raw magnitude is multiplied by this to obtain an entry (normalization and
  /// scale combined). Not meaningful for the coupon basis.
  double entry_factor() const { return scale_.value_or(1.0) / divisor_; }

  bool operator==(const ColumnModel& o) const {
    return law_ == o.law_ && norm_ == o.norm_ && scale_ == o.scale_;
  }

 private:
  ColumnModel(BaseLaw law, Normalization norm) : law_(law), norm_(norm) {
    std::visit([](const auto& l) { detail::validate(l); }, law_);
    const bool tp = std::holds_alternative<TruncatedParetoLaw>(law_);
    const bool fixed = std::holds_alternative<GaussianLaw>(law_) || std::holds_alternative<CouponBasisLaw>(law_);
    detail::require(!(fixed && norm != Normalization::None),
                    "Gaussian and coupon models are already isotropic; normalization must be none");
    detail::require(!(norm == Normalization::PthMoment && !tp),
                    "pth-moment normalization applies to the truncated Pareto model only");
    if (norm == Normalization::PthMoment) {
      const auto& l = std::get<TruncatedParetoLaw>(law_);
      divisor_ = moment_p_truncated_pareto(l.p, l.lambda_cut);
    } else if (norm == Normalization::UnitVariance) {
      divisor_ = std::sqrt(detail::raw_abs_moment(law_, 2.0));
    }
  }

  BaseLaw law_;
  Normalization norm_;
  std::optional<double> scale_;
  double divisor_ = 1.0;
};

// ---------------------------------------------------------------------------
// Moments and distribution functions of a full model.

/// E|X_ij|^r for an entrywise model, after normalization and scale.
inline double abs_moment(const ColumnModel& model, double r) {
  detail::require(model.entrywise(), "abs_moment: model is not entrywise");
  return detail::raw_abs_moment(model.law(), r) * std::pow(model.entry_factor(), r);
}

/// Entry variance E X_ij^2. The coupon vector sqrt(n) e_i has E Z_i^2 = 1 in
/// every coordinate.
inline double second_moment(const ColumnModel& model) {
  if (!model.entrywise()) {
    const double s = model.scale().value_or(1.0);
    return s * s;
  }
  return abs_moment(model, 2.0);
}

/// CDF of a single entry of an entrywise model.
inline double entry_cdf(const ColumnModel& model, double x) {
  detail::require(model.entrywise(), "entry_cdf: model is not entrywise");
  const double f = model.entry_factor();
  if (f == 0.0) return x >= 0.0 ? 1.0 : 0.0;
  const double half_tail = 0.5 * detail::raw_tail(model.law(), std::abs(x) / f);
  return x >= 0.0 ? 1.0 - half_tail : half_tail;
}

/// Entry produced from tail probability u in (0,1) and sign +-1.
inline double entry_from_uniform(const ColumnModel& model, double u, double sign) {
  return sign * detail::raw_inverse_tail(model.law(), u) * model.entry_factor();
}

/// One column of length n drawn from `stream`.
inline std::vector<double> sample_column(const ColumnModel& model, std::size_t n, RandomStream& stream) {
  detail::require(n >= 1, "sample_column: n must be >= 1");
  std::vector<double> out(n, 0.0);
  if (!model.entrywise()) {
    const std::size_t i = stream.uniform_index(n);
    out[i] = std::sqrt(static_cast<double>(n)) * model.scale().value_or(1.0);
    return out;
  }
  for (auto& x : out) {
    const double u = stream.uniform_open();
    x = entry_from_uniform(model, u, stream.sign());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rosenthal-type calculators.

/// M_q = max{ |a|_2 ||xi||_2 , |a|_q ||xi||_q }.
inline double rosenthal_mq(double q, std::span<const double> a, double norm2_xi, double normq_xi) {
  detail::require(q > 2.0, "rosenthal_mq: q must be > 2");
  detail::require(norm2_xi >= 0.0 && normq_xi >= 0.0, "rosenthal_mq: norms must be >= 0");
  double s2 = 0.0, sq = 0.0;
  for (double x : a) {
    s2 += x * x;
    sq += std::pow(std::abs(x), q);
  }
  return std::max(std::sqrt(s2) * norm2_xi, std::pow(sq, 1.0 / q) * normq_xi);
}

/// Two-sided bracket (M_q / 2, C q / ln q * M_q) on ||sum a_i xi_i||_q.
struct RosenthalBracket {
  double lower;
  double upper;
  double c_abs;
};

inline RosenthalBracket rosenthal_bracket(double q, std::span<const double> a, double norm2_xi,
                                          double normq_xi, double c_abs = 1.0) {
  detail::require(c_abs > 0.0, "rosenthal_bracket: constant must be > 0");
  const double mq = rosenthal_mq(q, a, norm2_xi, normq_xi);
  return {0.5 * mq, c_abs * q / std::log(q) * mq, c_abs};
}

struct ProbabilityBound {
  double raw;      // unclipped expression
  double clipped;  // raw clipped to [0,1]
};

inline double clip_probability(double x) {
  if (std::isnan(x)) return 1.0;
  return std::clamp(x, 0.0, 1.0);
}

/// Bound on P(max_j |n^-1 sum_i xi_ij^2 - 1| > t) for i.i.d. unit-variance
/// entries with finite p-th moment: (C p / (t ln p))^{p/2} E|xi|^p N / n^{p/4}.
inline ProbabilityBound concentration_tail_bound(double p, double t, double moment_p, double n, double N,
                                                 double c_abs = 1.0) {
  detail::require(p > 4.0, "concentration_tail_bound: p must be > 4");
  detail::require(t > 0.0, "concentration_tail_bound: t must be > 0");
  detail::require(n >= 1.0 && N >= 1.0, "concentration_tail_bound: n, N must be >= 1");
  detail::require(c_abs > 0.0 && moment_p >= 0.0, "concentration_tail_bound: constants must be positive");
  const double raw =
      std::pow(c_abs * p / (t * std::log(p)), p / 2.0) * moment_p * N / std::pow(n, p / 4.0);
  return {raw, clip_probability(raw)};
}

// ---------------------------------------------------------------------------

/// The (phi, vartheta) pair of the uniform marginal tail hypothesis:
/// P(|<X,a>| >= t) <= vartheta / phi(t), with phi(t) = t^p or (1/2) exp(t^alpha).
class TailHypothesis {
 public:
  enum class Regime { Polynomial, Exponential };

  static TailHypothesis polynomial(double p, double vartheta = 1.0) {
    detail::require(p > 4.0, "TailHypothesis: polynomial exponent must be > 4");
    detail::require(vartheta >= 1.0, "TailHypothesis: vartheta must be >= 1");
    return TailHypothesis(Regime::Polynomial, p, vartheta);
  }
  static TailHypothesis exponential(double alpha, double vartheta = 1.0) {
    detail::require(alpha > 0.0 && alpha <= 2.0, "TailHypothesis: alpha must lie in (0,2]");
    detail::require(vartheta >= 1.0, "TailHypothesis: vartheta must be >= 1");
    return TailHypothesis(Regime::Exponential, alpha, vartheta);
  }

  Regime regime() const { return regime_; }
  /// p (polynomial) or alpha (exponential).
  double exponent() const { return exponent_; }
  double vartheta() const { return vartheta_; }

  double phi(double t) const {
    return regime_ == Regime::Polynomial ? std::pow(t, exponent_) : 0.5 * std::exp(std::pow(t, exponent_));
  }
  /// vartheta / phi(t), clipped to 1.
  double tail_bound(double t) const { return clip_probability(vartheta_ / phi(t)); }

 private:
  TailHypothesis(Regime r, double e, double v) : regime_(r), exponent_(e), vartheta_(v) {}
  Regime regime_;
  double exponent_;
  double vartheta_;
};

// ---------------------------------------------------------------------------
// Plain-text record: kind=<name>;key=value;...

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::None: return "none";
    case Normalization::PthMoment: return "pth";
    case Normalization::UnitVariance: return "variance";
  }
  return "none";
}

inline double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw FormatError("model record: '" + key + "' is not a number: " + text);
  }
  if (used != text.size()) throw FormatError("model record: '" + key + "' is not a number: " + text);
  return v;
}

}  // namespace detail

inline std::string to_record(const ColumnModel& model) {
  std::string out = "kind=";
  std::visit(
      [&](const auto& l) {
        using L = std::decay_t<decltype(l)>;
        using detail::format_double;
        if constexpr (std::is_same_v<L, TruncatedParetoLaw>)
          out += "truncated_pareto;p=" + format_double(l.p) + ";lambda=" + format_double(l.lambda_cut);
        else if constexpr (std::is_same_v<L, ParetoLaw>)
          out += "pareto;q=" + format_double(l.q);
        else if constexpr (std::is_same_v<L, SymWeibullLaw>)
          out += "sym_weibull;alpha=" + format_double(l.alpha);
        else if constexpr (std::is_same_v<L, GaussianLaw>)
          out += "gaussian";
        else
          out += "coupon";
      },
      model.law());
  if (model.normalization() != Normalization::None)
    out += ";normalize=" + detail::to_string(model.normalization());
  if (model.scale()) out += ";scale=" + detail::format_double(*model.scale());
  return out;
}

inline ColumnModel parse_model_record(const std::string& record) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(record);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw FormatError("model record: expected key=value, got '" + item + "'");
    if (!kv.emplace(item.substr(0, eq), item.substr(eq + 1)).second)
      throw FormatError("model record: duplicate key '" + item.substr(0, eq) + "'");
  }
  auto take = [&](const std::string& key) -> double {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("model record: missing '" + key + "'");
    const double v = detail::parse_double(key, it->second);
    kv.erase(it);
    return v;
  };
  auto kind_it = kv.find("kind");
  if (kind_it == kv.end()) throw FormatError("model record: missing 'kind'");
  const std::string kind = kind_it->second;
  kv.erase(kind_it);

  Normalization norm = Normalization::None;
  if (auto it = kv.find("normalize"); it != kv.end()) {
    if (it->second == "none") norm = Normalization::None;
    else if (it->second == "pth") norm = Normalization::PthMoment;
    else if (it->second == "variance") norm = Normalization::UnitVariance;
    else throw FormatError("model record: normalize must be none|pth|variance");
    kv.erase(it);
  }
  std::optional<double> scale;
  if (kv.count("scale")) scale = take("scale");

  std::optional<ColumnModel> base;
  if (kind == "truncated_pareto") {
    const double p = take("p");
    base = ColumnModel::truncated_pareto(p, take("lambda"), norm);
  } else if (kind == "pareto") {
    base = ColumnModel::pareto(take("q"), norm);
  } else if (kind == "sym_weibull") {
    base = ColumnModel::sym_weibull(take("alpha"), norm);
  } else if (kind == "gaussian" && norm == Normalization::None) {
    base = ColumnModel::gaussian();
  } else if (kind == "coupon" && norm == Normalization::None) {
    base = ColumnModel::coupon_basis();
  } else if (kind == "gaussian" || kind == "coupon") {
    throw DomainError("model record: " + kind + " takes no normalization");
  } else {
    throw FormatError("model record: unknown kind '" + kind + "'");
  }
  if (!kv.empty()) throw FormatError("model record: unexpected key '" + kv.begin()->first + "'");
  return scale ? ColumnModel::scaled(*scale, *base) : *base;
}

}  // namespace htrip
