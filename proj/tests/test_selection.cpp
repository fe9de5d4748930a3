#include <gtest/gtest.h>

#include <cmath>

#include "pcrp/error.hpp"
#include "pcrp/selection.hpp"
#include "pcrp/simulate.hpp"

using namespace pcrp;

namespace {

// Single-draw-repeated chain on a small dataset.
struct Frozen {
  Dataset data;
  ChainSample chain;

  Frozen()
      : data(Dataset::build(GridPartition(Region{0, 3, 0, 2}, 3, 2),
                            CovariateField(3, 2, {"x"}, {0.3, -0.2, 1.0, 0.0, -0.7, 0.5}),
                            PointPattern{{{0.5, 0.5}, {0.6, 0.4}, {1.5, 0.2}, {2.2, 1.7},
                                          {2.9, 1.9}, {2.5, 1.5}, {0.1, 1.1}}})) {
    ModelState s{{0, 0, 1, 0, 1, 1}, {1.2, 2.5}, {0.4}, {1}};
    for (int t = 0; t < 120; ++t) {
      chain.draws.push_back(s);
      chain.log_lik.push_back(log_likelihood(s, data.stats, data.grid, data.covariates));
      chain.K_trace.push_back(2);
    }
  }
};

}  // namespace

TEST(Bitc, Arithmetic) {
  EXPECT_NEAR(bitc(-100.0, 3, 1000), 220.723, 5e-4);
  EXPECT_DOUBLE_EQ(bitc(-100.0, 3, 1000), 200.0 + 3.0 * std::log(1000.0));
  EXPECT_NEAR(bitc(-42.0, 2, 77) - bitc(-42.0, 1, 77), std::log(77.0), 1e-12);
  EXPECT_THROW(bitc(-1.0, 1, 0), DataError);
}

TEST(Bitc, PenaltyLinearityAcrossK) {
  for (std::size_t N : {10u, 1000u, 123456u})
    for (std::size_t K = 1; K < 8; ++K)
      EXPECT_NEAR(bitc(-500.0, K + 1, N) - bitc(-500.0, K, N), std::log(double(N)), 1e-9);
}

TEST(Criteria, IdenticalDraws) {
  Frozen f;
  const auto dahl = dahl_estimate(f.chain);
  const auto d = dic(f.chain, dahl, f.data);
  EXPECT_NEAR(d.p_D, 0.0, 1e-10);
  EXPECT_NEAR(d.dic, d.deviance_at_estimate, 1e-10);
  const auto boxes = box_log_likelihood(f.chain.draws[0], f.data.stats, f.data.grid, f.data.covariates);
  double total = 0.0;
  for (double v : boxes) total += v;
  EXPECT_NEAR(lpml(f.chain, f.data), total, 1e-10);
  EXPECT_NEAR(bitc(f.chain, dahl, f.data), -2.0 * total + 2.0 * std::log(7.0), 1e-10);
}

TEST(Criteria, Deterministic) {
  Frozen f;
  Rng rng(40, 0);
  for (auto& s : f.chain.draws) {
    s.beta[0] += rng.normal(0.0, 0.05);
    s.lambda0[0] *= std::exp(rng.normal(0.0, 0.1));
  }
  const auto dahl = dahl_estimate(f.chain);
  EXPECT_EQ(lpml(f.chain, f.data), lpml(f.chain, f.data));
  EXPECT_EQ(dic(f.chain, dahl, f.data).dic, dic(f.chain, dahl, f.data).dic);
  EXPECT_EQ(bitc(f.chain, dahl, f.data), bitc(f.chain, dahl, f.data));
}

TEST(Mse, Examples) {
  EXPECT_DOUBLE_EQ(mse(std::vector<double>{2.0}, std::vector<std::int64_t>{3}), 1.0);
  EXPECT_DOUBLE_EQ(mse(std::vector<double>{4.0, 0.0, 7.0}, std::vector<std::int64_t>{4, 0, 7}), 0.0);
  EXPECT_THROW(mse(std::vector<double>{1.0}, std::vector<std::int64_t>{1, 2}), ConfigError);
}

TEST(Mse, RelabelInvariant) {
  Frozen f;
  auto swapped = f.chain;
  for (auto& s : swapped.draws) {
    for (auto& z : s.z) z = 1 - z;
    std::swap(s.lambda0[0], s.lambda0[1]);
  }
  const auto a = fitted_box_counts(f.chain, f.data), b = fitted_box_counts(swapped, f.data);
  EXPECT_EQ(a, b);
  EXPECT_EQ(mse(a, f.data.stats.m), mse(b, f.data.stats.m));
}

TEST(RGrid, Parse) {
  EXPECT_EQ(parse_r_grid("1,1.5,2"), (std::vector<double>{1.0, 1.5, 2.0}));
  const auto g = parse_r_grid("1:2:0.1");
  ASSERT_EQ(g.size(), 11u);
  EXPECT_DOUBLE_EQ(g.front(), 1.0);
  EXPECT_DOUBLE_EQ(g[3], 1.3);
  EXPECT_DOUBLE_EQ(g.back(), 2.0);
  EXPECT_THROW(parse_r_grid("1:2"), ConfigError);
  EXPECT_THROW(parse_r_grid("a,b"), ConfigError);
  EXPECT_THROW(parse_r_grid("2:1:0.1"), ConfigError);
}

TEST(SelectR, SingleElementGridIsOptimal) {
  Rng rng(41, 0);
  const auto sim = make_setting(1, rng);
  SamplerConfig cfg;
  cfg.n_iter = 400;
  cfg.burn_in = 100;
  SelectOptions opt;
  opt.threads = 1;
  const auto res = select_r(sim.data, {1.3}, Hyperparams{}, cfg, opt);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.opt_bitc, 0u);
  EXPECT_EQ(res.opt_lpml, 0u);
  EXPECT_EQ(res.opt_dic, 0u);
  EXPECT_DOUBLE_EQ(res.best().r, 1.3);
}

TEST(SelectR, IndependentOfThreadCount) {
  Rng rng(42, 0);
  const auto sim = make_setting(1, rng);
  SamplerConfig cfg;
  cfg.n_iter = 300;
  cfg.burn_in = 100;
  SelectOptions one, three;
  one.threads = 1;
  three.threads = 3;
  const auto a = select_r(sim.data, {1.0, 1.5, 2.0}, Hyperparams{}, cfg, one);
  const auto b = select_r(sim.data, {1.0, 1.5, 2.0}, Hyperparams{}, cfg, three);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.records[k].bitc, b.records[k].bitc);
    EXPECT_EQ(a.records[k].lpml, b.records[k].lpml);
    EXPECT_EQ(a.records[k].K_hat, b.records[k].K_hat);
  }
}

TEST(SelectR, AutoExtendReachesSingleComponent) {
  Rng rng(43, 0);
  const auto sim = make_setting(1, rng);
  SamplerConfig cfg;
  cfg.n_iter = 400;
  cfg.burn_in = 100;
  SelectOptions opt;
  opt.threads = 1;
  opt.auto_extend = true;
  opt.extend_step = 2.0;
  opt.max_r = 40.0;
  const auto res = select_r(sim.data, {1.0}, Hyperparams{}, cfg, opt);
  EXPECT_GT(res.records.size(), 1u);
  EXPECT_EQ(res.records.back().K_hat, 1u);
  for (std::size_t k = 1; k < res.records.size(); ++k)
    EXPECT_GT(res.records[k].r, res.records[k - 1].r);
}
