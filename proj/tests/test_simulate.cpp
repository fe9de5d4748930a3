#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "pcrp/simulate.hpp"
#include "support/oracles.hpp"

using namespace pcrp;
namespace fs = std::filesystem;

TEST(SampleNhpp, ZeroIntensityIsEmpty) {
  const GridPartition g(Region{0, 20, 0, 20}, 20, 20);
  Rng rng(50, 0);
  EXPECT_TRUE(sample_nhpp(g, std::vector<double>(400, 0.0), rng).empty());
}

TEST(SampleNhpp, PoissonMomentsForSingleBox) {
  const GridPartition g(Region{0, 1, 0, 1}, 1, 1);
  Rng rng(51, 0);
  const std::size_t runs = 100000;
  std::vector<double> counts(runs);
  for (auto& c : counts) {
    const auto p = sample_nhpp(g, std::vector<double>{4.0}, rng);
    for (const auto& pt : p.points) ASSERT_TRUE(g.region().contains(pt.x, pt.y));
    c = static_cast<double>(p.size());
  }
  const auto m = oracle::iid_mean(counts);
  EXPECT_LT(std::abs(m.mean - 4.0), 3.0 * std::sqrt(4.0 / runs));
  // Variance / mean of a Poisson count is 1; SE of the sample variance is about
  // sqrt((mu + 2 mu^2) / n) for mu = 4.
  const double var = m.se * m.se * static_cast<double>(runs);
  EXPECT_LT(std::abs(var / 4.0 - 1.0), 3.0 * std::sqrt((4.0 + 2.0 * 16.0) / runs) / 4.0);
}

TEST(SampleNhpp, PointsLandInTheirBox) {
  const GridPartition g(Region{0, 6, 0, 4}, 3, 2);
  Rng rng(52, 0);
  const std::vector<double> lam{0.0, 3.0, 0.0, 0.0, 0.0, 0.0};
  const auto p = sample_nhpp(g, lam, rng);
  EXPECT_GT(p.size(), 0u);
  for (const auto& pt : p.points) EXPECT_EQ(*g.locate(pt), 1u);
}

TEST(Settings, ComponentSizes) {
  const auto s1 = simulation_setting(1);
  EXPECT_EQ(component_sizes(s1.z_true, s1.K()), (std::vector<int>{309, 91}));
  EXPECT_EQ(s1.lambda0, (std::vector<double>{0.2, 10.0}));
  EXPECT_EQ(s1.beta, (std::vector<double>{0.5, 0.5, 0.0, 0.0}));
  const auto s2 = simulation_setting(2);
  EXPECT_EQ(component_sizes(s2.z_true, s2.K()), (std::vector<int>{232, 91, 77}));
  EXPECT_EQ(s2.lambda0, (std::vector<double>{0.2, 5.0, 20.0}));
  const auto s3 = simulation_setting(3);
  EXPECT_EQ(s3.grid().size(), 1250u);
  EXPECT_EQ(s3.p(), 15u);
  EXPECT_EQ(s3.K(), 4u);
  EXPECT_DOUBLE_EQ(s3.grid().box_area(), 1.0);
  EXPECT_TRUE(labels_contiguous(s3.z_true, s3.K()));
}

TEST(Settings, PointCountRanges) {
  // With iid N(0,1) covariates E[exp(X'beta)] = exp(|beta|^2 / 2) = exp(0.25).
  const double lift = std::exp(0.25);
  const double mean2 = (232 * 0.2 + 91 * 5.0 + 77 * 20.0) * lift;
  std::vector<double> n2;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng r1(seed, 1), r2(seed, 2);
    const auto a = make_setting(1, r1), b = make_setting(2, r2);
    EXPECT_GE(a.data.pattern.size(), 1000u);
    EXPECT_LE(a.data.pattern.size(), 1500u);
    EXPECT_EQ(a.data.stats.N, a.data.pattern.size());
    n2.push_back(static_cast<double>(b.data.pattern.size()));
  }
  const auto m = oracle::iid_mean(n2);
  EXPECT_LT(std::abs(m.mean - mean2), 3.0 * m.se);
}

TEST(Settings, Deterministic) {
  Rng r1(53, 0), r2(53, 0);
  const auto a = make_setting(2, r1), b = make_setting(2, r2);
  EXPECT_EQ(a.data.covariates.values(), b.data.covariates.values());
  ASSERT_EQ(a.data.pattern.size(), b.data.pattern.size());
  for (std::size_t l = 0; l < a.data.pattern.size(); ++l) {
    EXPECT_EQ(a.data.pattern.points[l].x, b.data.pattern.points[l].x);
    EXPECT_EQ(a.data.pattern.points[l].y, b.data.pattern.points[l].y);
  }
  EXPECT_EQ(a.truth.gamma, (std::vector<int>{1, 1, 0, 0}));
}

TEST(Settings, CovariateLaw) {
  SimSetting s = simulation_setting(1);
  s.nx = 500;
  s.ny = 200;
  s.region = Region{0, 500, 0, 200};
  s.z_true.assign(100000, 0);
  s.lambda0 = {0.01};
  Rng rng(54, 0);
  const auto sim = make_setting(s, rng);
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> col;
    for (std::size_t i = 0; i < 100000; ++i) col.push_back(sim.data.covariates(i, j));
    const auto m = oracle::iid_mean(col);
    const double var = m.se * m.se * 100000.0;
    EXPECT_LT(std::abs(m.mean), 3.0 * std::sqrt(1.0 / 100000.0));
    EXPECT_LT(std::abs(var - 1.0), 3.0 * std::sqrt(2.0 / 100000.0));
  }
}

TEST(Settings, HomogeneousDegenerateCase) {
  SimSetting s = simulation_setting(1);
  s.beta.assign(4, 0.0);
  s.lambda0 = {3.0, 3.0};
  const double c = 3.0;
  std::vector<double> n;
  for (std::uint64_t k = 0; k < 400; ++k) {
    Rng rng(55, k);
    n.push_back(static_cast<double>(make_setting(s, rng).data.pattern.size()));
  }
  const auto m = oracle::iid_mean(n);
  EXPECT_LT(std::abs(m.mean - 400.0 * c), 3.0 * std::sqrt(400.0 * c / 400.0));
}

TEST(Study, SmokeRunWritesReports) {
  StudyOptions opt;
  opt.replicates = 1;
  opt.r_grid = {1.0, 1.5};
  opt.config.n_iter = 300;
  opt.config.burn_in = 100;
  opt.threads = 1;
  const auto rep = run_replicates(1, opt);
  ASSERT_EQ(rep.replicates.size(), 1u);
  const auto& r = rep.replicates[0];
  EXPECT_EQ(r.per_r.size(), 2u);
  EXPECT_TRUE(r.has_r1);
  EXPECT_EQ(r.ri_trace_r1.size(), 200u);
  EXPECT_EQ(r.beta_mean.size(), 4u);
  EXPECT_GT(r.mse_const, 0.0);
  EXPECT_EQ(rep.coefficient_table().size(), 4u);

  const auto dir = fs::temp_directory_path() / "pcrp_study_smoke";
  fs::remove_all(dir);
  rep.write_csv(dir);
  for (const char* f : {"study_replicates.csv", "study_criteria.csv", "study_table1.csv",
                        "study_khist.csv", "study_ri_trace.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
    EXPECT_GT(fs::file_size(dir / f), 0u) << f;
  }
  fs::remove_all(dir);
}
