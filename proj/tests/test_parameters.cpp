#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "concmeter/concentration.hpp"
#include "concmeter/error.hpp"
#include "concmeter/measures.hpp"
#include "concmeter/parameters.hpp"

using namespace concmeter;

namespace {

// E‖x‖_1 / √n on the sphere is √n·E|x_1| with E|x_1| = Γ(n/2) / (√π Γ((n+1)/2)).
double cone_l2_l1_beta_tilde(std::size_t n) {
  const double a = static_cast<double>(n);
  const double e_abs = std::exp(std::lgamma(a / 2.0) - std::lgamma((a + 1.0) / 2.0)) / std::sqrt(M_PI);
  return std::sqrt(a) / (a * e_abs);
}

std::optional<ErrorCode> code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(Beta, EqualNormsGiveOne) {
  const NormSpec k = NormSpec::lp(8, 1.5);
  const auto mu = MeasureSpec::uniform_ball(k);
  const auto b = beta(mu, k, k, 20000, 1);
  EXPECT_NEAR(b.value, 1.0, 1e-12);
  EXPECT_NEAR(b.lambda, 1.0, 1e-12);
  const auto t = beta_tilde(mu, k, k, 20000, 1);
  EXPECT_NEAR(t.value, 1.0, 1e-12);
  EXPECT_EQ(t.variant, BetaVariant::kMean);
}

TEST(Beta, ScaledEuclideanIsAbsorbed) {
  const NormSpec k = NormSpec::lp(6, 2.0);
  const auto b = beta(MeasureSpec::uniform_ball(k), k, NormSpec::lp(6, 2.0, 2.0), 20000, 2);
  EXPECT_NEAR(b.value, 1.0, 1e-12);
  ASSERT_EQ(b.transform.size(), 1u);
  EXPECT_NEAR(b.transform[0], 0.5, 1e-12);
}

TEST(Beta, ConeL2ToL1MatchesIntegralOracle) {
  for (std::size_t n : {32, 64, 128}) {
    const NormSpec k = NormSpec::lp(n, 2.0);
    const auto mu = MeasureSpec::cone_surface(k);
    const auto t = beta_tilde(mu, k, NormSpec::lp(n, 1.0), 20000, 3);
    EXPECT_NEAR(t.value, cone_l2_l1_beta_tilde(n), 0.01) << "n=" << n;
    EXPECT_NEAR(t.value, std::sqrt(M_PI / 2.0), 0.05 * std::sqrt(M_PI / 2.0));
    EXPECT_NEAR(t.numerator, 1.0, 1e-12);
    const auto m = beta(mu, k, NormSpec::lp(n, 1.0), 20000, 3);
    EXPECT_NEAR(m.value, std::sqrt(M_PI / 2.0), 0.05 * std::sqrt(M_PI / 2.0));
  }
  EXPECT_NEAR(cone_l2_l1_beta_tilde(100000), std::sqrt(M_PI / 2.0), 1e-5);
}

TEST(Beta, ScalarInvarianceIsExact) {
  const std::size_t n = 12;
  const NormSpec k = NormSpec::lp(n, 2.0);
  const auto mu = MeasureSpec::cone_surface(k);
  for (double q : {1.0, 4.0, kInfinity}) {
    const auto base = beta_tilde(mu, k, NormSpec::lp(n, q), 5000, 4);
    for (double s : {0.25, 3.0, 17.0}) {
      const auto scaled = beta_tilde(mu, k, NormSpec::lp(n, q, s), 5000, 4);
      EXPECT_NEAR(scaled.value, base.value, 1e-12 * base.value) << q << " " << s;
      const auto med = beta(mu, k, NormSpec::lp(n, q, s), 5000, 4);
      EXPECT_NEAR(med.value, beta(mu, k, NormSpec::lp(n, q), 5000, 4).value, 1e-12 * med.value);
    }
  }
}

TEST(Beta, AtMostLambda) {
  for (std::size_t n : {4, 16}) {
    const NormSpec k = NormSpec::lp(n, 2.0);
    for (double q : {1.0, 3.0, kInfinity}) {
      for (const auto& mu : {MeasureSpec::uniform_ball(k), MeasureSpec::cone_surface(k)}) {
        const auto b = beta(mu, k, NormSpec::lp(n, q), 5000, 5);
        EXPECT_LE(b.value, b.lambda * (1.0 + 1e-12));
        const auto t = beta_tilde(mu, k, NormSpec::lp(n, q), 5000, 5);
        EXPECT_LE(t.value, t.lambda * (1.0 + 1e-12));
      }
    }
  }
}

TEST(Beta, ShrinkingTheFamilyNeverDecreases) {
  const std::size_t n = 8;
  const NormSpec k = NormSpec::lp(n, 1.5);
  const NormSpec l = NormSpec::lp(n, kInfinity);
  const auto mu = MeasureSpec::uniform_ball(k);
  TransformFamily full;
  full.kind = TransformFamily::Kind::kDiagonal;
  for (double a : {4.0, 5.0, 8.0}) {
    std::vector<double> d(n, a);
    d[0] = 1.7 * a;
    full.diagonals.push_back(std::vector<double>(n, a));
    full.diagonals.push_back(d);
  }
  const auto whole = beta(mu, k, l, 5000, 6, full);
  EXPECT_EQ(whole.candidates, full.diagonals.size());
  TransformFamily part = full;
  for (std::size_t drop = 0; drop < full.diagonals.size(); ++drop) {
    part.diagonals = full.diagonals;
    part.diagonals.erase(part.diagonals.begin() + static_cast<long>(drop));
    try {
      EXPECT_GE(beta(mu, k, l, 5000, 6, part).value, whole.value - 1e-15);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
    }
  }
}

TEST(Beta, Errors) {
  const NormSpec k = NormSpec::lp(4, 2.0);
  const auto mu = MeasureSpec::uniform_ball(k);
  TransformFamily tiny;
  tiny.scalars = {0.1, 0.2};
  EXPECT_EQ(code_of([&] { beta(mu, k, NormSpec::lp(4, 1.0), 1000, 1, tiny); }), ErrorCode::kInfeasible);
  tiny.scalars = {-1.0};
  EXPECT_EQ(code_of([&] { beta(mu, k, k, 1000, 1, tiny); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { beta(mu, k, NormSpec::lp(5, 1.0), 1000, 1); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { beta(mu, k, k, 50, 1); }), ErrorCode::kInsufficientData);
}

TEST(Beta, Deterministic) {
  const NormSpec k = NormSpec::lp(10, 2.0);
  const auto mu = MeasureSpec::cone_surface(k);
  const auto a = beta_tilde(mu, k, NormSpec::lp(10, 1.0), 3000, 42);
  const auto b = beta_tilde(mu, k, NormSpec::lp(10, 1.0), 3000, 42);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.denominator, b.denominator);
}

TEST(Embedding, Examples) {
  EXPECT_DOUBLE_EQ(embedding_lower_bound_N(0.01, 0.5).value, 25.0);
  EXPECT_DOUBLE_EQ(embedding_lower_bound_N(0.3, 1.0).value, 0.0);
  const auto inf = embedding_lower_bound_N(0.0, 0.5);
  EXPECT_TRUE(inf.infinite);
  EXPECT_TRUE(std::isinf(inf.value));
  EXPECT_EQ(code_of([] { embedding_lower_bound_N(0.1, 1.5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { embedding_lower_bound_N(-0.1, 0.5); }), ErrorCode::kInvalidArgument);
}

TEST(CubeFloor, ExamplesAndRange) {
  EXPECT_DOUBLE_EQ(cube_concentration_floor(0.25, 2), 0.1875);
  EXPECT_DOUBLE_EQ(cube_concentration_floor(1.0, 7), 0.0);
  // n = 1: the coordinate half-space witness (1 - ε)/2 is attained.
  EXPECT_DOUBLE_EQ(cube_concentration_floor(0.3, 1), 0.35);
  for (std::size_t n : {1, 2, 5, 100}) {
    for (double m = 0.0; m <= 1.0; m += 0.05) {
      const double f = cube_concentration_floor(m, n);
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 0.5 / static_cast<double>(n));
    }
  }
  EXPECT_EQ(code_of([] { cube_concentration_floor(-0.1, 2); }), ErrorCode::kInvalidArgument);
}

TEST(CubeBeta, FormulaAndMonotonicity) {
  const auto b = cube_beta_lower_bound(1.0, 1.0, 100);
  const double expected = std::sqrt(std::log(16.0)) / 28.0 * 10.0 / std::log(6400.0);
  EXPECT_NEAR(b.value, expected, 1e-15);
  EXPECT_NEAR(b.value, 0.0679, 5e-4);
  EXPECT_NEAR(b.median_threshold, 0.5 * std::sqrt(std::log(16.0) / std::log(6400.0)), 1e-15);
  double prev = 0.0;
  for (std::size_t n = 8; n <= 4096; n *= 2) {
    const double v = cube_beta_lower_bound(1.0, 0.25, n).value;
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_DOUBLE_EQ(cube_beta_lower_bound(1.0 / 16.0, 1.0, 10).value, 0.0);
  EXPECT_EQ(code_of([] { cube_beta_lower_bound(0.05, 1.0, 10); }), ErrorCode::kInvalidArgument);
}

TEST(CubeBeta, BelowMeasuredBetaTildeOfSphereInLinf) {
  const auto profile = analytic_profile("sphere", 64);
  for (std::size_t n : {64, 256, 1024}) {
    const NormSpec k = NormSpec::lp(n, 2.0);
    const auto t = beta_tilde(MeasureSpec::cone_surface(k), k, NormSpec::lp(n, kInfinity), 2000, 8);
    const auto bound = cube_beta_lower_bound(profile.C, profile.c, n);
    EXPECT_GE(t.value, bound.value) << "n=" << n;
  }
}
