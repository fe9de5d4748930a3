#include "support/geweke.hpp"

#include <algorithm>
#include <cmath>

#include "pcrp/rng.hpp"
#include "pcrp/sampler.hpp"
#include "support/oracles.hpp"

namespace pcrp::testing {

GewekeOptions default_geweke_options() {
  GewekeOptions o;
  o.hyper.a = 2.0;
  o.hyper.b = 2.0;
  o.hyper.alpha = 1.0;
  o.hyper.r = 1.0;
  o.hyper.v_spike = 0.01;
  o.hyper.v_slab = 1.0;
  o.hyper.pi_gamma = 0.5;
  o.hyper.proposal_sd = 0.3;
  return o;
}

namespace {

struct Setup {
  GridPartition grid{Region{0.0, 3.0, 0.0, 3.0}, 3, 3};
  CovariateField cov;

  Setup() {
    std::vector<double> x(9);
    for (std::size_t i = 0; i < 9; ++i) x[i] = -1.0 + 0.25 * static_cast<double>(i);
    cov = CovariateField(3, 3, {"x"}, x);
  }
};

ModelState draw_prior(const Hyperparams& h, Rng& rng) {
  ModelState s;
  s.z = sample_pcrp_prior(9, h.alpha, h.r, rng);
  const int K = *std::max_element(s.z.begin(), s.z.end()) + 1;
  for (int k = 0; k < K; ++k) s.lambda0.push_back(rng.gamma(h.a, h.b));
  const int g = rng.bernoulli(h.pi_gamma) ? 1 : 0;
  s.gamma = {g};
  s.beta = {rng.normal(0.0, std::sqrt(g ? h.v_slab : h.v_spike))};
  return s;
}

SufficientStats draw_data(const ModelState& s, const Setup& setup, Rng& rng) {
  std::vector<std::int64_t> m(9);
  for (std::size_t i = 0; i < 9; ++i) {
    const double mean = s.lambda0[static_cast<std::size_t>(s.z[i])] * setup.grid.box_area() *
                        std::exp(setup.cov(i, 0) * s.beta[0]);
    m[i] = static_cast<std::int64_t>(rng.poisson(mean));
  }
  return stats_from_counts(std::move(m), setup.grid, setup.cov);
}

std::vector<double> features(const ModelState& s) {
  double mean_lambda = 0.0;
  for (int z : s.z) mean_lambda += s.lambda0[static_cast<std::size_t>(z)];
  mean_lambda /= static_cast<double>(s.z.size());
  return {s.beta[0], s.beta[0] * s.beta[0], static_cast<double>(s.gamma[0]), mean_lambda,
          static_cast<double>(s.K())};
}

const char* const kNames[] = {"beta", "beta^2", "gamma", "mean lambda0", "K"};

}  // namespace

std::vector<GewekeMoment> geweke_test(const GewekeOptions& options) {
  const Setup setup;
  const std::size_t F = std::size(kNames);
  std::vector<std::vector<double>> prior(F), chain(F);

  Rng prior_rng(options.seed, 1);
  for (std::size_t t = 0; t < options.samples; ++t) {
    const auto f = features(draw_prior(options.hyper, prior_rng));
    for (std::size_t k = 0; k < F; ++k) prior[k].push_back(f[k]);
  }

  Rng rng(options.seed, 2);
  SamplerConfig cfg;
  auto state = draw_prior(options.hyper, rng);
  GibbsSampler sampler(setup.grid, setup.cov, draw_data(state, setup, rng), options.hyper, cfg);
  sampler.set_state(state);
  for (std::size_t t = 0; t < options.burn_in + options.samples; ++t) {
    sampler.set_data(draw_data(sampler.state(), setup, rng));
    for (std::size_t s = 0; s < options.sweeps; ++s) sampler.iterate(rng);
    if (t < options.burn_in) continue;
    const auto f = features(sampler.state());
    for (std::size_t k = 0; k < F; ++k) chain[k].push_back(f[k]);
  }

  std::vector<GewekeMoment> out;
  for (std::size_t k = 0; k < F; ++k) {
    const auto a = oracle::iid_mean(prior[k]);
    const auto b = oracle::batch_means(chain[k]);
    GewekeMoment m;
    m.name = kNames[k];
    m.prior_mean = a.mean;
    m.prior_se = a.se;
    m.chain_mean = b.mean;
    m.chain_se = b.se;
    m.z = (a.mean - b.mean) / std::sqrt(a.se * a.se + b.se * b.se);
    out.push_back(m);
  }
  return out;
}

}  // namespace pcrp::testing
