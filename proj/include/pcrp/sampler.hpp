#pragma once

// Gibbs / Metropolis-Hastings sampler for the PCRP-NHPP model.
//
// One iteration refreshes the cached Lambda_i(beta), sweeps the box labels z
// (collapsed over the new component's baseline), redraws every lambda0 from
// its conjugate gamma conditional, redraws the spike-slab indicators gamma and
// finally takes one random-walk Metropolis step per coefficient beta_j.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcrp/model.hpp"
#include "pcrp/rng.hpp"

namespace pcrp {

struct SamplerConfig {
  std::size_t n_iter = 5000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  std::size_t initial_K = 5;
  bool fixed_K1 = false;          // constant-baseline model: z sweep skipped, K = 1
  bool adapt_proposal = false;    // tune proposal_sd during burn-in only
  double target_accept_low = 0.30;
  double target_accept_high = 0.40;
  std::size_t adapt_window = 50;
  // Draw a new component's baseline from the Gamma(a, b) prior instead of its
  // conditional Gamma(m_i + a, b + Lambda_i). The prior draw is not an exact
  // Gibbs move; kept for comparison only.
  bool prior_draw_new_component = false;
  bool random_scan = false;
  std::uint64_t seed = 20200701;

  void validate() const;
  std::size_t retained() const { return (n_iter - burn_in) / thin; }
};

struct ChainSample {
  std::vector<ModelState> draws;
  std::vector<double> log_lik;
  std::vector<int> K_trace;
  std::vector<double> accept_rate;  // per coefficient, over post burn-in iterations
  std::vector<double> proposal_sd;  // per coefficient, as used after burn-in

  std::size_t size() const { return draws.size(); }
  bool empty() const { return draws.empty(); }
};

double log_sum_exp(std::span<const double> x);

// Unnormalized log weights of the full conditional of z_i. Entries 0..K-1 are
// the existing components (sizes exclude box i and must all be positive),
// entry K is a new component:
//   existing c: r log n_c + m_i log lambda0_c - lambda0_c Lambda_i
//   new:        log alpha + a log b + lgamma(m_i + a) - (m_i + a) log(b + Lambda_i) - lgamma(a)
// The factor exp(S_i' beta) is common to all labels and omitted.
std::vector<double> z_conditional_log_weights(std::span<const int> sizes_without_i,
                                              std::span<const double> lambda0,
                                              std::int64_t m_i, double Lambda_i,
                                              const Hyperparams& hyper);

std::vector<double> z_conditional_probabilities(std::span<const int> sizes_without_i,
                                                std::span<const double> lambda0,
                                                std::int64_t m_i, double Lambda_i,
                                                const Hyperparams& hyper);

struct GammaParams {
  double shape;
  double rate;
  double mean() const { return shape / rate; }
};

GammaParams lambda0_conditional(double N_k, double Lambda_sum, const Hyperparams& hyper);

// P(gamma_j = 1 | beta_j).
double inclusion_probability(double beta_j, const Hyperparams& hyper);

// log N(beta_j | 0, v) with v the spike or slab variance selected by gamma_j.
double spike_slab_log_prior(double beta_j, int gamma_j, const Hyperparams& hyper);

// Robbins-Monro step on log(sd) towards `target`; window_index counts the
// adaptation windows seen so far (step size 1 / sqrt(window_index + 1)).
double tune_proposal(double sd, double window_accept_rate, std::size_t window_index,
                     double target = 0.35);

// Forward simulation of PCRP(alpha, r) labels for n boxes.
std::vector<int> sample_pcrp_prior(std::size_t n, double alpha, double r, Rng& rng);

// Holds the mutable chain state plus the caches needed by the updates. The
// grid and covariate field must outlive the sampler.
class GibbsSampler {
 public:
  GibbsSampler(const GridPartition& grid, const CovariateField& covariates,
               const SufficientStats& stats, Hyperparams hyper, SamplerConfig config);

  // Random start: z uniform on K0 labels (compacted), lambda0 from the prior,
  // beta = gamma = 0.
  void initialize(Rng& rng);
  void set_state(ModelState state);
  // Replaces the data (counts and covariate sums), keeping the state.
  void set_data(const SufficientStats& stats);

  const ModelState& state() const { return state_; }
  const Hyperparams& hyper() const { return hyper_; }
  const std::vector<int>& sizes() const { return sizes_; }
  std::span<const double> Lambda() const { return Lambda_; }

  void iterate(Rng& rng);

  void refresh_intensity();
  void sweep_z(Rng& rng);
  void sweep_lambda0(Rng& rng);
  void sweep_gamma(Rng& rng);
  void sweep_beta(Rng& rng);

  int update_z(std::size_t i, Rng& rng);
  double update_lambda0(std::size_t k, Rng& rng);
  int update_gamma(std::size_t j, Rng& rng);
  bool update_beta(std::size_t j, Rng& rng);
  // Metropolis step with an explicit proposal value.
  bool update_beta_to(std::size_t j, double proposal, Rng& rng);

  // log of the full conditional density of beta_j (up to a constant) at `value`.
  double beta_log_target(std::size_t j, double value) const;
  double beta_acceptance_probability(std::size_t j, double proposal) const;

  double proposal_sd(std::size_t j) const { return proposal_sd_[j]; }
  void set_proposal_sd(std::size_t j, double sd) { proposal_sd_[j] = sd; }

  double log_likelihood() const;

 private:
  void remove_component(int label);
  void compute_box_intensity(std::span<const double> cell_weight, std::vector<double>& out) const;
  double shifted_intensity_total(std::size_t j, double delta, std::vector<double>* cell_out,
                                 std::vector<double>* box_out) const;

  const GridPartition* grid_;
  const CovariateField* covariates_;
  CellLayout layout_;
  Hyperparams hyper_;
  SamplerConfig config_;

  std::vector<std::int64_t> m_;
  std::vector<double> covariate_total_;  // sum of X(s) over all points
  ModelState state_;
  std::vector<int> sizes_;
  std::vector<double> cell_weight_;  // cell area * exp(X_c' beta)
  std::vector<double> Lambda_;
  std::vector<double> proposal_sd_;
  std::vector<double> scratch_cells_;
  std::vector<double> scratch_boxes_;
  std::vector<double> scratch_weights_;
};

ChainSample run_chain(const Dataset& data, const Hyperparams& hyper, const SamplerConfig& config,
                      Rng& rng);

}  // namespace pcrp
