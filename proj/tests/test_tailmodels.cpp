#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "htrip/rng.hpp"
#include "htrip/special.hpp"
#include "htrip/tailmodels.hpp"
#include "oracles.hpp"

using namespace htrip;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_NE(x, d.next_u64());
}

TEST(Rng, UniformOpenExcludesEndpoints) {
  RandomStream s(1, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, UniformIndexCoversRange) {
  RandomStream s(5, 3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = s.uniform_index(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Gamma, ClassicalValues) {
  EXPECT_NEAR(gamma_function(1.0), 1.0, 1e-12);
  EXPECT_LT(rel(gamma_function(4.0), 6.0), 1e-12);
  EXPECT_LT(rel(gamma_function(0.5), std::sqrt(std::numbers::pi)), 1e-12);
  EXPECT_LT(rel(gamma_function(2.0), 1.0), 1e-12);
}

TEST(Gamma, AgreesWithStdTgammaAndReflects) {
  for (double x : {0.01, 0.1, 0.37, 1.5, 2.25, 3.3, 7.5, 12.0, 30.5, 150.0})
    EXPECT_LT(rel(gamma_function(x), std::tgamma(x)), 1e-10) << x;
  EXPECT_THROW(gamma_function(0.0), DomainError);
  EXPECT_THROW(gamma_function(-1.5), DomainError);
}

TEST(FloorTolerant, AbsorbsRoundingBelowAnInteger) {
  EXPECT_EQ(floor_tolerant(2.0 * 7.0 / (std::sqrt(2.0) * std::sqrt(2.0))), 7.0);
  EXPECT_EQ(floor_tolerant(12.02), 12.0);
  EXPECT_EQ(floor_tolerant(6.9999), 6.0);
}

TEST(TruncatedPareto, InverseTailEndpointsAndOracle) {
  EXPECT_DOUBLE_EQ(inverse_tail_truncated_pareto(1, 2, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(inverse_tail_truncated_pareto(1, 2, 0.0), 2.0);
  // 1/s^2 = 0.5 * 15/16 + 1/16
  EXPECT_LT(rel(inverse_tail_truncated_pareto(2, 4, 0.5), 1.37198868114007), 1e-12);
  const double s = inverse_tail_truncated_pareto(2, 4, 0.5);
  EXPECT_NEAR((1 / (s * s) - 1.0 / 16) / (1 - 1.0 / 16), 0.5, 1e-14);
}

TEST(TruncatedPareto, InverseTailDecreasingInV) {
  for (double p : {0.5, 2.0, 4.0, 9.0}) {
    double prev = inverse_tail_truncated_pareto(p, 3.0, 0.0);
    for (int i = 1; i <= 100; ++i) {
      const double cur = inverse_tail_truncated_pareto(p, 3.0, i / 100.0);
      ASSERT_LE(cur, prev);
      prev = cur;
    }
  }
}

TEST(TruncatedPareto, MomentAgainstQuadrature) {
  const double e = std::numbers::e;
  EXPECT_LT(rel(moment_p_truncated_pareto(1, e), 1.58197670686933), 1e-12);
  EXPECT_LT(rel(moment_p_truncated_pareto(2, e), 1.52086662317881), 1e-12);
  EXPECT_DOUBLE_EQ(moment_p_truncated_pareto(2, 1.0), 1.0);
  EXPECT_NEAR(moment_p_truncated_pareto(2, 1.0 + 1e-9), 1.0, 1e-8);
  for (double p : {1.0, 2.5, 4.0, 6.0})
    for (double l : {1.5, 2.0, 5.0}) {
      const double q = std::pow(oracle::trunc_pareto_abs_moment(p, l, p), 1.0 / p);
      EXPECT_LT(rel(moment_p_truncated_pareto(p, l), q), 1e-9) << p << " " << l;
    }
}

TEST(Models, SecondMoments) {
  EXPECT_LT(rel(second_moment(ColumnModel::pareto(4)), 2.0), 1e-12);
  EXPECT_LT(rel(second_moment(ColumnModel::sym_weibull(2)), 1.0), 1e-12);
  EXPECT_LT(rel(second_moment(ColumnModel::sym_weibull(1)), 2.0), 1e-12);
  EXPECT_DOUBLE_EQ(second_moment(ColumnModel::gaussian()), 1.0);
  EXPECT_DOUBLE_EQ(second_moment(ColumnModel::coupon_basis()), 1.0);
  EXPECT_DOUBLE_EQ(second_moment(ColumnModel::scaled(3.0, ColumnModel::coupon_basis())), 9.0);
  for (auto m : {ColumnModel::pareto(3, Normalization::UnitVariance), ColumnModel::sym_weibull(0.7, Normalization::UnitVariance),
                 ColumnModel::truncated_pareto(4, 2, Normalization::UnitVariance)})
    EXPECT_LT(rel(second_moment(m), 1.0), 1e-12);
}

TEST(Models, WeibullMomentsAgainstQuadrature) {
  for (double a : {0.5, 1.0, 1.5, 2.0})
    for (double r : {1.0, 2.0, 3.0})
      EXPECT_LT(rel(abs_moment(ColumnModel::sym_weibull(a), r), oracle::weibull_abs_moment(a, r)), 1e-9);
}

TEST(Models, PthMomentNormalizationDividesByAp) {
  const auto m = ColumnModel::truncated_pareto(4, 2, Normalization::PthMoment);
  EXPECT_LT(rel(abs_moment(m, 4.0), 1.0), 1e-12);
}

TEST(Models, ConstructionValidates) {
  EXPECT_THROW(ColumnModel::pareto(2.0), DomainError);
  EXPECT_THROW(ColumnModel::sym_weibull(0.0), DomainError);
  EXPECT_THROW(ColumnModel::sym_weibull(2.5), DomainError);
  EXPECT_THROW(ColumnModel::truncated_pareto(4, 0.5), DomainError);
  EXPECT_THROW(ColumnModel::pareto(4, Normalization::PthMoment), DomainError);
  EXPECT_THROW(ColumnModel::scaled(-1.0, ColumnModel::gaussian()), DomainError);
}

TEST(Models, ScaledIsFlattened) {
  const auto inner = ColumnModel::scaled(2.0, ColumnModel::gaussian());
  const auto outer = ColumnModel::scaled(3.0, inner);
  EXPECT_EQ(outer.kind(), ModelKind::Scaled);
  EXPECT_EQ(outer.base_kind(), ModelKind::Gaussian);
  EXPECT_DOUBLE_EQ(*outer.scale(), 6.0);
}

TEST(Sampling, CouponColumnHasOneEntryEqualToSqrtN) {
  RandomStream s(9, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto c = sample_column(ColumnModel::coupon_basis(), 4, s);
    int nonzero = 0;
    for (double x : c)
      if (x != 0.0) {
        ++nonzero;
        EXPECT_DOUBLE_EQ(x, 2.0);
      }
    EXPECT_EQ(nonzero, 1);
  }
}

TEST(Sampling, CouponOuterProductsAverageToIdentity) {
  const std::size_t n = 5;
  std::vector<double> sum(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(n, 0.0);
    z[i] = std::sqrt(static_cast<double>(n));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) sum[r * n + c] += z[r] * z[c] / static_cast<double>(n);
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) EXPECT_NEAR(sum[r * n + c], r == c ? 1.0 : 0.0, 1e-15);
}

TEST(Sampling, WeibullEntryFromUniform) {
  const auto m = ColumnModel::sym_weibull(1, Normalization::UnitVariance);
  EXPECT_NEAR(entry_from_uniform(m, std::exp(-1.0), 1.0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(entry_from_uniform(m, std::exp(-1.0), -1.0), -1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Sampling, ZeroScaleGivesZeroColumn) {
  RandomStream s(3, 1);
  for (double x : sample_column(ColumnModel::scaled(0.0, ColumnModel::gaussian()), 3, s)) EXPECT_EQ(x, 0.0);
}

TEST(Sampling, SupportBounds) {
  const auto tp = ColumnModel::truncated_pareto(4, 2, Normalization::PthMoment);
  const double ap = moment_p_truncated_pareto(4, 2);
  const auto pa = ColumnModel::pareto(3, Normalization::UnitVariance);
  const double a2 = std::sqrt(3.0);
  RandomStream s(11, 0);
  for (int i = 0; i < 20000; ++i) {
    const double x = std::abs(sample_column(tp, 1, s)[0]);
    ASSERT_GE(x, 1.0 / ap - 1e-15);
    ASSERT_LE(x, 2.0 / ap + 1e-15);
    ASSERT_GE(std::abs(sample_column(pa, 1, s)[0]), 1.0 / a2 - 1e-15);
  }
}

TEST(Sampling, KolmogorovSmirnovAgainstIndependentCdfs) {
  struct Case {
    ColumnModel model;
    std::function<double(double)> cdf;
  };
  std::vector<Case> cases = {
      {ColumnModel::truncated_pareto(4, 2), [](double x) { return oracle::trunc_pareto_cdf(4, 2, x); }},
      {ColumnModel::pareto(4), [](double x) { return oracle::pareto_cdf(4, x); }},
      {ColumnModel::sym_weibull(1), [](double x) { return oracle::weibull_cdf(1, x); }},
      {ColumnModel::sym_weibull(0.5), [](double x) { return oracle::weibull_cdf(0.5, x); }},
      {ColumnModel::gaussian(), [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }},
  };
  for (const auto& c : cases) {
    RandomStream s(2024, 0);
    const auto xs = sample_column(c.model, 10000, s);
    EXPECT_LE(oracle::ks_distance(xs, c.cdf), 0.02) << to_record(c.model);
    // the library CDF agrees with the oracle CDF
    for (double x : {-3.0, -1.2, -0.3, 0.0, 0.4, 1.1, 1.7, 2.5})
      EXPECT_NEAR(entry_cdf(c.model, x), c.cdf(x), 1e-12) << to_record(c.model) << " x=" << x;
  }
}

TEST(Rosenthal, Examples) {
  const std::vector<double> e1{1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(rosenthal_mq(3, e1, 1, 2), 2.0);
  const std::vector<double> h{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
  EXPECT_NEAR(rosenthal_mq(4, h, 1, 1), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(rosenthal_mq(4, e1, 1, 3), 3.0);
  EXPECT_THROW(rosenthal_mq(2, e1, 1, 1), DomainError);
  const auto b = rosenthal_bracket(4, h, 1, 1);
  EXPECT_LE(b.lower, b.upper);
}

TEST(Concentration, ArithmeticClipAndMonotone) {
  const auto r = concentration_tail_bound(6, 0.5, 2, 1e4, 100, 1.0);
  EXPECT_LT(rel(r.raw, 0.0600806480940282), 1e-12);
  EXPECT_EQ(r.raw, r.clipped);
  EXPECT_EQ(concentration_tail_bound(6, 0.01, 2, 10, 100, 1.0).clipped, 1.0);
  double prev = 2.0;
  for (double t = 0.1; t < 100; t *= 1.5) {
    const double v = concentration_tail_bound(6, t, 2, 1e4, 100, 1.0).clipped;
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-8);
}

TEST(TailHypothesis, Phi) {
  const auto p = TailHypothesis::polynomial(5, 2);
  EXPECT_DOUBLE_EQ(p.phi(2), 32.0);
  EXPECT_DOUBLE_EQ(p.tail_bound(2), 2.0 / 32.0);
  const auto e = TailHypothesis::exponential(1);
  EXPECT_DOUBLE_EQ(e.phi(0.0), 0.5);
  EXPECT_EQ(e.tail_bound(0.0), 1.0);
  EXPECT_THROW(TailHypothesis::polynomial(4), DomainError);
  EXPECT_THROW(TailHypothesis::exponential(1, 0.5), DomainError);
}

TEST(Records, RoundTripAndErrors) {
  for (const auto& m : {ColumnModel::truncated_pareto(4, 1.7, Normalization::PthMoment), ColumnModel::pareto(3.5),
                        ColumnModel::sym_weibull(0.3, Normalization::UnitVariance), ColumnModel::gaussian(),
                        ColumnModel::coupon_basis(), ColumnModel::scaled(0.1, ColumnModel::pareto(5))})
    EXPECT_EQ(parse_model_record(to_record(m)), m) << to_record(m);
  EXPECT_THROW(parse_model_record("kind=nope"), FormatError);
  EXPECT_THROW(parse_model_record("kind=pareto"), FormatError);
  EXPECT_THROW(parse_model_record("kind=pareto;q=abc"), FormatError);
  EXPECT_THROW(parse_model_record("kind=pareto;q=1"), DomainError);
}
