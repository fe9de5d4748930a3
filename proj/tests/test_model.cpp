#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pcrp/error.hpp"
#include "pcrp/model.hpp"
#include "pcrp/rng.hpp"
#include "support/oracles.hpp"

using namespace pcrp;

namespace {

GridPartition grid20() { return GridPartition(Region{0, 20, 0, 20}, 20, 20); }

CovariateField random_field(std::size_t cols, std::size_t rows, std::size_t p, Rng& rng) {
  std::vector<double> v(cols * rows * p);
  for (auto& x : v) x = rng.normal();
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return CovariateField(cols, rows, names, v);
}

}  // namespace

TEST(Region, RejectsDegenerateBounds) {
  EXPECT_THROW(GridPartition(Region{0, 0, 0, 1}, 1, 1), ConfigError);
  EXPECT_THROW(GridPartition(Region{0, 1, 2, 1}, 1, 1), ConfigError);
  EXPECT_THROW(GridPartition(Region{0, 1, 0, 1}, 0, 1), ConfigError);
}

TEST(GridPartition, IndexingIsXFastest) {
  const auto g = grid20();
  EXPECT_EQ(g.size(), 400u);
  EXPECT_EQ(g.index(3, 2), 43u);
  EXPECT_EQ(g.ix(43), 3u);
  EXPECT_EQ(g.iy(43), 2u);
  const auto b = g.bounds(43);
  EXPECT_DOUBLE_EQ(b.x0, 3.0);
  EXPECT_DOUBLE_EQ(b.x1, 4.0);
  EXPECT_DOUBLE_EQ(b.y0, 2.0);
  EXPECT_DOUBLE_EQ(b.y1, 3.0);
}

TEST(GridPartition, LocateEdgesAndOutside) {
  const auto g = grid20();
  EXPECT_EQ(*g.locate({0.0, 0.0}), 0u);
  EXPECT_EQ(*g.locate({1.0, 0.5}), 1u);       // interior edge goes right
  EXPECT_EQ(*g.locate({20.0, 20.0}), 399u);   // outer max edge stays inside
  EXPECT_FALSE(g.locate({20.0001, 3.0}).has_value());
  EXPECT_FALSE(g.locate({-1e-9, 3.0}).has_value());
}

TEST(GridPartition, UnitAreaRescaling) {
  const auto g = GridPartition::unit_box_area(Region{0, 1000, 0, 500}, 50, 25);
  EXPECT_DOUBLE_EQ(g.physical_box_area(), 400.0);
  EXPECT_DOUBLE_EQ(g.box_area(), 1.0);
  EXPECT_DOUBLE_EQ(g.total_area(), 1250.0);
}

TEST(AssignPoints, EmptyPattern) {
  const auto g = grid20();
  const auto a = assign_points(PointPattern{}, g);
  EXPECT_EQ(std::accumulate(a.m.begin(), a.m.end(), std::int64_t{0}), 0);
  EXPECT_EQ(a.m.size(), 400u);
}

TEST(AssignPoints, SinglePointAtCentroid) {
  const auto g = grid20();
  PointPattern p;
  p.points.push_back(g.centroid(7));
  const auto a = assign_points(p, g);
  EXPECT_EQ(a.m[7], 1);
  EXPECT_EQ(std::accumulate(a.m.begin(), a.m.end(), std::int64_t{0}), 1);
}

TEST(AssignPoints, OutsidePointNamesIndex) {
  const auto g = grid20();
  PointPattern p;
  p.points = {{1, 1}, {2, 2}, {25, 1}};
  try {
    assign_points(p, g);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(AssignPoints, UniformPointsPassChiSquare) {
  const auto g = grid20();
  Rng rng(60, 0);
  PointPattern p;
  for (int k = 0; k < 1000; ++k) p.points.push_back({rng.uniform(0, 20), rng.uniform(0, 20)});
  const auto a = assign_points(p, g);
  EXPECT_EQ(std::accumulate(a.m.begin(), a.m.end(), std::int64_t{0}), 1000);
  double chi2 = 0.0;
  for (auto m : a.m) chi2 += (m - 2.5) * (m - 2.5) / 2.5;
  // Upper 0.001 point of chi-square with 399 df.
  EXPECT_LT(chi2, 494.0);
}

TEST(IntegratedIntensity, Examples) {
  const GridPartition unit(Region{0, 1, 0, 1}, 1, 1);
  EXPECT_DOUBLE_EQ(integrated_intensity(unit, CovariateField::none(unit), {}, 0), 1.0);

  const CovariateField one(1, 1, {"x"}, {1.0});
  const std::vector<double> ln2{std::log(2.0)};
  EXPECT_NEAR(integrated_intensity(unit, one, ln2, 0), 2.0, 1e-15);

  const GridPartition four(Region{0, 2, 0, 2}, 1, 1);
  const CovariateField two(1, 1, {"a", "b"}, {0.3, -0.2});
  const std::vector<double> beta{0.5, 0.5};
  EXPECT_NEAR(integrated_intensity(four, two, beta, 0), 4.0 * std::exp(0.05), 1e-14);
}

TEST(IntegratedIntensity, RefinedRasterSumsCells) {
  const GridPartition g(Region{0, 2, 0, 1}, 2, 1);
  // 4 x 2 raster: each box holds 2 x 2 cells of area 1/4.
  std::vector<double> v{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const CovariateField cov(4, 2, {"x"}, v);
  const std::vector<double> beta{1.5};
  const double box0 =
      0.25 * (std::exp(1.5 * 0.1) + std::exp(1.5 * 0.2) + std::exp(1.5 * 0.5) + std::exp(1.5 * 0.6));
  EXPECT_NEAR(integrated_intensity(g, cov, beta, 0), box0, 1e-14);
}

TEST(IntegratedIntensity, MisalignedRasterRejected) {
  const GridPartition g(Region{0, 3, 0, 3}, 3, 3);
  const CovariateField cov(2, 3, {"x"}, std::vector<double>(6, 0.0));
  EXPECT_THROW(cov.check_aligned(g), ConfigError);
  EXPECT_THROW(integrated_intensity(g, cov, std::vector<double>{0.0}, 0), ConfigError);
}

TEST(IntegratedIntensity, LogLinearInBeta) {
  // Log-linearity holds exactly when each box is a single raster cell.
  Rng rng(61, 0);
  const GridPartition g(Region{0, 4, 0, 4}, 8, 8);
  const auto cov = random_field(8, 8, 3, rng);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> b1(3), b2(3), sum(3), zero(3, 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      b1[j] = rng.normal(0, 0.5);
      b2[j] = rng.normal(0, 0.5);
      sum[j] = b1[j] + b2[j];
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = std::log(integrated_intensity(g, cov, sum, i)) -
                       std::log(integrated_intensity(g, cov, b1, i)) -
                       std::log(integrated_intensity(g, cov, b2, i)) +
                       std::log(integrated_intensity(g, cov, zero, i));
      EXPECT_NEAR(v, 0.0, 1e-10);
    }
  }
}

TEST(CovariateField, StandardizeIsIdempotent) {
  Rng rng(62, 0);
  auto cov = random_field(10, 10, 3, rng);
  const auto s1 = cov.standardized();
  const auto s2 = s1.standardized();
  for (std::size_t k = 0; k < s1.values().size(); ++k)
    EXPECT_NEAR(s1.values()[k], s2.values()[k], 1e-12);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0.0, ss = 0.0;
    for (std::size_t c = 0; c < 100; ++c) m += s1(c, j);
    m /= 100.0;
    for (std::size_t c = 0; c < 100; ++c) ss += (s1(c, j) - m) * (s1(c, j) - m);
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(ss / 99.0, 1.0, 1e-9);
  }
  EXPECT_TRUE(s1.is_standardized());
}

TEST(CovariateField, ConstantColumnRejected) {
  const CovariateField cov(2, 2, {"flat"}, {0, 0, 0, 0});
  EXPECT_THROW(cov.standardized(), DataError);
}

TEST(LogLikelihood, EmptyPatternUnitArea) {
  const GridPartition g(Region{0, 1, 0, 1}, 1, 1);
  const auto cov = CovariateField::none(g);
  const auto stats = compute_stats(PointPattern{}, g, cov);
  ModelState s{{0}, {1.0}, {}, {}};
  EXPECT_DOUBLE_EQ(log_likelihood(s, stats, g, cov), -1.0);
}

TEST(LogLikelihood, HomogeneousMaximizedAtMle) {
  const auto g = grid20();
  const auto cov = CovariateField::none(g);
  Rng rng(63, 0);
  PointPattern p;
  for (int k = 0; k < 321; ++k) p.points.push_back({rng.uniform(0, 20), rng.uniform(0, 20)});
  const auto stats = compute_stats(p, g, cov);
  auto ll = [&](double lam) {
    ModelState s{std::vector<int>(400, 0), {lam}, {}, {}};
    return log_likelihood(s, stats, g, cov);
  };
  const double mle = 321.0 / 400.0;
  EXPECT_NEAR(ll(mle), 321.0 * std::log(mle) - mle * 400.0, 1e-9);
  EXPECT_GT(ll(mle), ll(mle * 1.01));
  EXPECT_GT(ll(mle), ll(mle * 0.99));
}

TEST(LogLikelihood, MatchesPointByPointEvaluator) {
  const GridPartition g(Region{0, 2, 0, 2}, 2, 2);
  const CovariateField cov(2, 2, {"a", "b"}, {0.1, -0.3, 0.7, 0.2, -0.5, 0.4, 0.0, 1.1});
  PointPattern p;
  p.points = {{0.2, 0.3}, {0.8, 0.1}, {1.5, 0.5}, {1.2, 1.9}, {1.9, 1.9}, {0.5, 1.5}};
  const auto stats = compute_stats(p, g, cov);
  ModelState s{{0, 1, 1, 0}, {0.7, 2.3}, {0.4, -0.8}, {1, 1}};
  EXPECT_NEAR(log_likelihood(s, stats, g, cov), oracle::point_log_likelihood(s, p, g, cov), 1e-12);
}

TEST(LogLikelihood, AdditiveOverComponents) {
  Rng rng(64, 0);
  const auto g = grid20();
  const auto cov = random_field(20, 20, 2, rng);
  PointPattern p;
  for (int k = 0; k < 800; ++k) p.points.push_back({rng.uniform(0, 20), rng.uniform(0, 20)});
  const auto stats = compute_stats(p, g, cov);
  ModelState s;
  for (std::size_t i = 0; i < 400; ++i) s.z.push_back(static_cast<int>(i % 3));
  s.lambda0 = {0.5, 2.0, 4.0};
  s.beta = {0.3, -0.2};
  s.gamma = {1, 1};
  const auto terms = box_log_likelihood(s, stats, g, cov);
  std::vector<double> per(3, 0.0);
  for (std::size_t i = 0; i < 400; ++i) per[static_cast<std::size_t>(s.z[i])] += terms[i];
  EXPECT_NEAR(per[0] + per[1] + per[2], log_likelihood(s, stats, g, cov), 1e-10);
}

TEST(LogLikelihood, NonPositiveBaselineIsDomainError) {
  const GridPartition g(Region{0, 1, 0, 1}, 1, 1);
  const auto cov = CovariateField::none(g);
  const auto stats = compute_stats(PointPattern{}, g, cov);
  ModelState s{{0}, {0.0}, {}, {}};
  EXPECT_THROW(log_likelihood(s, stats, g, cov), DomainError);
}

TEST(SufficientStats, CountsSumToN) {
  Rng rng(65, 0);
  const auto g = grid20();
  const auto cov = random_field(40, 40, 2, rng);
  PointPattern p;
  for (int k = 0; k < 500; ++k) p.points.push_back({rng.uniform(0, 20), rng.uniform(0, 20)});
  const auto stats = compute_stats(p, g, cov);
  EXPECT_EQ(stats.N, 500u);
  EXPECT_EQ(std::accumulate(stats.m.begin(), stats.m.end(), std::int64_t{0}), 500);
}

TEST(ModelState, ValidateCatchesGaps) {
  ModelState s{{0, 2, 2}, {1.0, 1.0, 1.0}, {}, {}};
  EXPECT_THROW(s.validate(3, 0), DomainError);
  s.z = {0, 1, 2};
  EXPECT_NO_THROW(s.validate(3, 0));
  EXPECT_TRUE(labels_contiguous(s.z, 3));
  EXPECT_FALSE(labels_contiguous(std::vector<int>{0, 0, 2}, 3));
}

TEST(Hyperparams, Defaults) {
  const Hyperparams h;
  EXPECT_EQ(h.a, 1.0);
  EXPECT_EQ(h.b, 1.0);
  EXPECT_EQ(h.alpha, 1.0);
  EXPECT_EQ(h.v_spike, 0.01);
  EXPECT_EQ(h.v_slab, 100.0);
  EXPECT_EQ(h.pi_gamma, 0.5);
  EXPECT_EQ(h.proposal_sd, 0.05);
  Hyperparams bad;
  bad.v_spike = 200.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = Hyperparams{};
  bad.r = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}
