#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "concmeter/error.hpp"
#include "concmeter/measures.hpp"
#include "concmeter/parallel.hpp"
#include "concmeter/stats.hpp"

using namespace concmeter;

namespace {

constexpr std::size_t kN = 100000;

std::vector<double> column(const SampleBatch& b, std::size_t j) {
  std::vector<double> out(b.count());
  for (std::size_t i = 0; i < b.count(); ++i) out[i] = b.row(i)[j];
  return out;
}

std::vector<double> radii(const SampleBatch& b, const NormSpec& norm) {
  std::vector<double> out(b.count());
  for (std::size_t i = 0; i < b.count(); ++i) out[i] = norm(b.row(i));
  return out;
}

double ks_bound(std::size_t n) { return 1.36 / std::sqrt(static_cast<double>(n)) + 0.005; }

}  // namespace

TEST(Sample, CubeMarginalsAreUniform) {
  const auto b = sample(MeasureSpec::uniform_ball(NormSpec::lp(4, kInfinity)), kN, 1);
  for (std::size_t j = 0; j < 4; ++j) {
    const auto c = column(b, j);
    EXPECT_LE(ks_statistic(c, [](double x) { return std::clamp((x + 1.0) / 2.0, 0.0, 1.0); }), 0.01);
  }
}

TEST(Sample, ConeSurfaceLiesOnTheSphere) {
  for (double p : {1.0, 1.5, 2.0, 4.0, kInfinity}) {
    const NormSpec norm = NormSpec::lp(16, p);
    const auto b = sample(MeasureSpec::cone_surface(norm), 20000, 2);
    for (double r : radii(b, norm)) ASSERT_NEAR(r, 1.0, 1e-12) << "p=" << p;
  }
}

TEST(Sample, UniformBallStaysInside) {
  for (double p : {1.0, 1.5, 2.0, 3.0, kInfinity}) {
    const NormSpec norm = NormSpec::lp(8, p, 2.0);
    const auto b = sample(MeasureSpec::uniform_ball(norm), 20000, 3);
    for (double r : radii(b, norm)) ASSERT_LE(r, 1.0 + 1e-12);
  }
}

TEST(Sample, UniformBallRadialLaw) {
  for (std::size_t n : {1, 2, 8, 32}) {
    for (double p : {1.0, 1.5, 2.0, kInfinity}) {
      const NormSpec norm = NormSpec::lp(n, p);
      const auto b = sample(MeasureSpec::uniform_ball(norm), kN, 4);
      const auto r = radii(b, norm);
      const double nd = static_cast<double>(n);
      EXPECT_LE(ks_statistic(r, [&](double x) { return std::pow(std::clamp(x, 0.0, 1.0), nd); }), ks_bound(kN))
          << "n=" << n << " p=" << p;
    }
  }
}

TEST(Sample, L1DiscMatchesRejectionOracle) {
  // Independent oracle: rejection sampling from the square [-1, 1]^2.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> oracle;
  while (oracle.size() < kN) {
    const double a = u(rng), c = u(rng);
    if (std::abs(a) + std::abs(c) <= 1.0) oracle.push_back(std::abs(a) + std::abs(c));
  }
  const auto b = sample(MeasureSpec::uniform_ball(NormSpec::lp(2, 1.0)), kN, 6);
  const auto r = radii(b, NormSpec::lp(2, 1.0));
  EXPECT_LE(ks_statistic(r, [](double x) { return std::clamp(x * x, 0.0, 1.0); }), 0.01);
  EXPECT_LE(ks_two_sample(r, oracle), 1.36 * std::sqrt(2.0 / kN) + 0.002);
  // The joint law matters too: the first coordinate of the ℓ_1 disc has density 1 - |t|.
  const auto c0 = column(b, 0);
  EXPECT_LE(ks_statistic(c0, [](double t) {
              t = std::clamp(t, -1.0, 1.0);
              return t < 0 ? 0.5 * (1 + t) * (1 + t) : 1.0 - 0.5 * (1 - t) * (1 - t);
            }),
            0.01);
}

TEST(Sample, HaarSphereArchimedes) {
  // On S^2 every coordinate is uniform on [-1, 1].
  const auto b = sample(MeasureSpec::haar_sphere(3), kN, 7);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_LE(ks_statistic(column(b, j), [](double x) { return std::clamp((x + 1.0) / 2.0, 0.0, 1.0); }), 0.01);
  }
  for (double r : radii(b, NormSpec::lp(3, 2.0))) ASSERT_NEAR(r, 1.0, 1e-12);
}

TEST(Sample, GeneralizedGaussianMarginals) {
  for (double p : {1.0, 1.5, 2.0}) {
    const auto b = sample(MeasureSpec::generalized_gaussian(3, p), kN, 8);
    // |t|^p / p ~ Gamma(1/p, 1)
    std::vector<double> w;
    for (double t : column(b, 1)) w.push_back(std::pow(std::abs(t), p) / p);
    EXPECT_LE(ks_statistic(w, [&](double x) { return x <= 0 ? 0.0 : boost::math::gamma_p(1.0 / p, x); }), 0.01);
  }
  const auto g = sample(MeasureSpec::standard_gaussian(2), kN, 9);
  EXPECT_LE(ks_statistic(column(g, 0), [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }), 0.01);
}

TEST(Sample, NormalizerIntegratesToOne) {
  boost::math::quadrature::exp_sinh<double> integrator;
  for (double p : {1.0, 1.25, 1.5, 1.75, 2.0}) {
    const double cp = generalized_gaussian_normalizer(p);
    EXPECT_NEAR(cp, 2.0 * std::tgamma(1.0 + 1.0 / p) * std::pow(p, 1.0 / p), 1e-14);
    const double half = integrator.integrate([&](double t) { return std::exp(-std::pow(t, p) / p); });
    EXPECT_NEAR(2.0 * half / cp, 1.0, 1e-9) << "p=" << p;
  }
}

TEST(Sample, SymmetricMeans) {
  const std::size_t n = 6, count = 50000;
  const std::vector<MeasureSpec> catalog = {
      MeasureSpec::uniform_ball(NormSpec::lp(n, 1.0)), MeasureSpec::uniform_ball(NormSpec::lp(n, kInfinity)),
      MeasureSpec::cone_surface(NormSpec::lp(n, 1.5)), MeasureSpec::generalized_gaussian(n, 1.0),
      MeasureSpec::standard_gaussian(n),           MeasureSpec::haar_sphere(n)};
  for (const auto& m : catalog) {
    const auto b = sample(m, count, 10);
    for (std::size_t j = 0; j < n; ++j) {
      const auto c = column(b, j);
      const double mu = mean(c);
      double ss = 0.0;
      for (double v : c) ss += (v - mu) * (v - mu);
      const double sd = std::sqrt(ss / static_cast<double>(count - 1));
      EXPECT_LE(std::abs(mu), 5.0 * sd / std::sqrt(static_cast<double>(count))) << m.label();
    }
  }
}

TEST(Sample, BitIdenticalAcrossWorkerCounts) {
  const auto m = MeasureSpec::cone_surface(NormSpec::lp(9, 1.5));
  std::vector<std::vector<double>> runs;
  for (unsigned w : {1u, 3u, 8u}) {
    ScopedWorkerCount scoped(w);
    const auto b = sample(m, 5000, 42);
    runs.emplace_back(b.view().data.begin(), b.view().data.end());
  }
  EXPECT_EQ(runs[0], runs[1]);
  EXPECT_EQ(runs[0], runs[2]);
  // Row i does not depend on how many rows were requested.
  const auto small = sample(m, 10, 42);
  for (std::size_t i = 0; i < 10 * 9; ++i) EXPECT_EQ(small.view().data[i], runs[0][i]);
  const auto other = sample(m, 10, 43);
  EXPECT_NE(other.view().data[0], runs[0][0]);
}

TEST(Sample, Errors) {
  EXPECT_THROW(MeasureSpec::generalized_gaussian(3, 2.5), Error);
  EXPECT_THROW(MeasureSpec::generalized_gaussian(3, 0.5), Error);
  EXPECT_THROW(sample(MeasureSpec::haar_sphere(3), 0, 1), Error);
  EXPECT_THROW(MeasureSpec::haar_sphere(0), Error);
}

TEST(Sample, CsvExport) {
  const auto b = sample(MeasureSpec::haar_sphere(2), 3, 1);
  std::ostringstream out;
  write_rows_csv(out, b.view());
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x0,x1");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream cells(line);
    double a = 0, c = 0;
    char comma = 0;
    cells >> a >> comma >> c;
    EXPECT_EQ(a, b.row(rows - 1)[0]);
    EXPECT_EQ(c, b.row(rows - 1)[1]);
  }
  EXPECT_EQ(rows, 3);
}

TEST(RadialCdf, AnalyticEntries) {
  const auto ball = radial_cdf(MeasureSpec::uniform_ball(NormSpec::lp(3, 1.0)), NormSpec::lp(3, 1.0));
  EXPECT_EQ(ball.source(), RadialCdf::Source::kAnalytic);
  for (double r : {0.0, 0.2, 0.5, 0.9, 1.0, 1.5}) EXPECT_NEAR(ball.eval(r), std::pow(std::min(r, 1.0), 3), 1e-15);

  const auto exp5 = radial_cdf(MeasureSpec::generalized_gaussian(5, 1.0), NormSpec::lp(5, 1.0));
  EXPECT_EQ(exp5.source(), RadialCdf::Source::kAnalytic);
  for (double r : {0.5, 2.0, 5.0, 9.0}) EXPECT_NEAR(exp5.eval(r), boost::math::gamma_p(5.0, r), 1e-12);
  const auto b5 = sample(MeasureSpec::generalized_gaussian(5, 1.0), kN, 11);
  EXPECT_LE(ks_statistic(radii(b5, NormSpec::lp(5, 1.0)), [&](double r) { return exp5.eval(r); }), 0.01);

  const auto chi = radial_cdf(MeasureSpec::generalized_gaussian(4, 2.0), NormSpec::lp(4, 2.0));
  for (double r : {0.5, 1.5, 3.0}) EXPECT_NEAR(chi.eval(r), boost::math::gamma_p(2.0, r * r / 2.0), 1e-12);
  const auto b2 = sample(MeasureSpec::generalized_gaussian(4, 2.0), kN, 12);
  EXPECT_LE(ks_statistic(radii(b2, NormSpec::lp(4, 2.0)), [&](double r) { return chi.eval(r); }), 0.01);

  const auto g15 = radial_cdf(MeasureSpec::generalized_gaussian(6, 1.5), NormSpec::lp(6, 1.5));
  const auto b15 = sample(MeasureSpec::generalized_gaussian(6, 1.5), kN, 13);
  EXPECT_LE(ks_statistic(radii(b15, NormSpec::lp(6, 1.5)), [&](double r) { return g15.eval(r); }), 0.01);
}

TEST(RadialCdf, EmpiricalFallback) {
  const auto f = radial_cdf(MeasureSpec::haar_sphere(4), NormSpec::lp(4, 1.0), 20000, 3);
  EXPECT_EQ(f.source(), RadialCdf::Source::kEmpirical);
  EXPECT_EQ(f.radii().size(), 20000u);
  EXPECT_NE(f.description().find("empirical"), std::string::npos);
}

TEST(RadialCdf, QuantileRoundTripAndMonotone) {
  const std::vector<RadialCdf> laws = {
      RadialCdf::uniform_ball(7, 2.0), RadialCdf::gamma_power(16, 1.0), RadialCdf::gamma_power(64, 1.5),
      radial_cdf(MeasureSpec::haar_sphere(5), NormSpec::lp(5, kInfinity), 50000, 4)};
  for (const auto& f : laws) {
    for (double u = 0.001; u <= 0.999; u += 0.001) EXPECT_NEAR(f.eval(f.quantile(u)), u, 1e-9) << f.description();
    double prev = 0.0;
    for (double r = 0.0; r < 40.0; r += 0.01) {
      const double v = f.eval(r);
      ASSERT_GE(v, prev);
      ASSERT_LE(v, 1.0);
      prev = v;
    }
  }
}
