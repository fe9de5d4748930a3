#pragma once

// Model-selection criteria and the search over the PCRP power r.
//
// Every criterion uses the same dropped-constant point-process log-likelihood
// as log_likelihood(), so values are comparable across r on one dataset only.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcrp/model.hpp"
#include "pcrp/postproc.hpp"
#include "pcrp/sampler.hpp"

namespace pcrp {

// -2 log L(theta_hat) + K_hat log N. Throws DataError when N == 0.
double bitc(double log_lik_hat, std::size_t K_hat, std::size_t N);

// BITC at the Dahl draw.
double bitc(const ChainSample& chain, const DahlEstimate& dahl, const Dataset& data);

// Log pseudo-marginal likelihood with boxes as the predictive units:
// sum_i log CPO_i, CPO_i the harmonic mean over draws of the box likelihood
// term exp(l_i), evaluated in log space.
double lpml(const ChainSample& chain, const Dataset& data);

struct DicResult {
  double dic = 0.0;
  double mean_deviance = 0.0;
  double deviance_at_estimate = 0.0;
  double p_D = 0.0;
};

// Point estimate: beta posterior mean with the Dahl draw's z and lambda0.
DicResult dic(const ChainSample& chain, const DahlEstimate& dahl, const Dataset& data);

// (1/n) sum_i (expected_i - m_i)^2.
double mse(std::span<const double> expected_counts, std::span<const std::int64_t> m);

// Posterior mean over draws of lambda0[z_i] * Lambda_i(beta) for every box.
std::vector<double> fitted_box_counts(const ChainSample& chain, const Dataset& data);

struct RGridRecord {
  double r = 1.0;
  std::uint64_t seed = 0;    // master seed of the chain's generator
  std::uint64_t stream = 0;  // stream id under that seed
  double bitc = 0.0;
  double lpml = 0.0;
  DicResult dic;
  double mse = 0.0;
  std::size_t K_hat = 0;
  double mean_RI = 0.0;
  PosteriorSummary summary;
  std::vector<double> accept_rate;
  ChainSample chain;  // left empty unless SelectOptions::keep_chains
};

struct RGridResult {
  std::vector<RGridRecord> records;  // ascending r
  std::size_t opt_bitc = 0;
  std::size_t opt_lpml = 0;
  std::size_t opt_dic = 0;

  const RGridRecord& best() const { return records.at(opt_bitc); }
};

struct SelectOptions {
  bool auto_extend = false;     // keep adding r + extend_step until K_hat == 1
  double extend_step = 0.1;
  double max_r = 10.0;
  std::size_t threads = 0;      // 0: hardware concurrency
  bool keep_chains = false;
  std::size_t dahl_thin = 1;
};

// One chain per r. Chain k uses seed stream k of config.seed, so results do
// not depend on the thread count.
RGridResult select_r(const Dataset& data, const std::vector<double>& r_grid,
                     const Hyperparams& hyper, const SamplerConfig& config,
                     const SelectOptions& options = {});

// Fits one chain and evaluates every criterion at power hyper.r.
RGridRecord fit_at_r(const Dataset& data, const Hyperparams& hyper, const SamplerConfig& config,
                     Rng& rng, std::size_t dahl_thin = 1, bool keep_chain = false);

// Parses "1,1.5,2" or "start:stop:step" (inclusive stop).
std::vector<double> parse_r_grid(const std::string& text);

}  // namespace pcrp
