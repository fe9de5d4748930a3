#include "pcrp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "pcrp/error.hpp"

namespace pcrp {

namespace {

double log_normal_density(double x, double variance) {
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * x * x / variance;
}

// Index drawn proportionally to exp(log_w).
std::size_t sample_log_weights(std::span<const double> log_w, Rng& rng) {
  const double mx = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(mx)) throw Error("all label weights underflowed");
  double total = 0.0;
  for (double lw : log_w) total += std::exp(lw - mx);
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    u -= std::exp(log_w[k] - mx);
    if (u < 0.0) return k;
  }
  // Rounding left a sliver of mass: take the last positive-weight label.
  for (std::size_t k = log_w.size(); k-- > 0;)
    if (std::isfinite(log_w[k])) return k;
  return log_w.size() - 1;
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_iter == 0) throw ConfigError("n_iter must be positive");
  if (!(burn_in < n_iter)) throw ConfigError("burn_in must be smaller than n_iter");
  if (thin == 0) throw ConfigError("thin must be at least 1");
  if (initial_K == 0) throw ConfigError("initial_K must be at least 1");
  if (adapt_window == 0) throw ConfigError("adapt_window must be at least 1");
  if (!(target_accept_low > 0.0 && target_accept_low < target_accept_high &&
        target_accept_high < 1.0))
    throw ConfigError("target acceptance range must satisfy 0 < low < high < 1");
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

std::vector<double> z_conditional_log_weights(std::span<const int> sizes_without_i,
                                              std::span<const double> lambda0,
                                              std::int64_t m_i, double Lambda_i,
                                              const Hyperparams& hyper) {
  const std::size_t K = lambda0.size();
  if (sizes_without_i.size() != K) throw ConfigError("sizes and lambda0 lengths differ");
  const double m = static_cast<double>(m_i);
  std::vector<double> out(K + 1);
  for (std::size_t c = 0; c < K; ++c) {
    out[c] = hyper.r * std::log(static_cast<double>(sizes_without_i[c])) +
             m * std::log(lambda0[c]) - lambda0[c] * Lambda_i;
  }
  out[K] = std::log(hyper.alpha) + hyper.a * std::log(hyper.b) + std::lgamma(m + hyper.a) -
           (m + hyper.a) * std::log(hyper.b + Lambda_i) - std::lgamma(hyper.a);
  return out;
}

std::vector<double> z_conditional_probabilities(std::span<const int> sizes_without_i,
                                                std::span<const double> lambda0,
                                                std::int64_t m_i, double Lambda_i,
                                                const Hyperparams& hyper) {
  auto w = z_conditional_log_weights(sizes_without_i, lambda0, m_i, Lambda_i, hyper);
  const double norm = log_sum_exp(w);
  for (double& v : w) v = std::exp(v - norm);
  return w;
}

GammaParams lambda0_conditional(double N_k, double Lambda_sum, const Hyperparams& hyper) {
  return {N_k + hyper.a, hyper.b + Lambda_sum};
}

double inclusion_probability(double beta_j, const Hyperparams& hyper) {
  const double log_slab = std::log(hyper.pi_gamma) + log_normal_density(beta_j, hyper.v_slab);
  const double log_spike =
      std::log1p(-hyper.pi_gamma) + log_normal_density(beta_j, hyper.v_spike);
  return 1.0 / (1.0 + std::exp(log_spike - log_slab));
}

double spike_slab_log_prior(double beta_j, int gamma_j, const Hyperparams& hyper) {
  return log_normal_density(beta_j, gamma_j != 0 ? hyper.v_slab : hyper.v_spike);
}

double tune_proposal(double sd, double window_accept_rate, std::size_t window_index,
                     double target) {
  const double step = 1.0 / std::sqrt(static_cast<double>(window_index) + 1.0);
  return sd * std::exp(step * (window_accept_rate - target));
}

std::vector<int> sample_pcrp_prior(std::size_t n, double alpha, double r, Rng& rng) {
  std::vector<int> z;
  z.reserve(n);
  std::vector<int> sizes;
  std::vector<double> log_w;
  for (std::size_t i = 0; i < n; ++i) {
    log_w.clear();
    for (int s : sizes) log_w.push_back(r * std::log(static_cast<double>(s)));
    log_w.push_back(std::log(alpha));
    const auto k = sample_log_weights(log_w, rng);
    if (k == sizes.size()) sizes.push_back(0);
    ++sizes[k];
    z.push_back(static_cast<int>(k));
  }
  return z;
}

GibbsSampler::GibbsSampler(const GridPartition& grid, const CovariateField& covariates,
                           const SufficientStats& stats, Hyperparams hyper, SamplerConfig config)
    : grid_(&grid),
      covariates_(&covariates),
      layout_(grid, covariates),
      hyper_(hyper),
      config_(config),
      proposal_sd_(covariates.p(), hyper.proposal_sd) {
  hyper_.validate();
  config_.validate();
  set_data(stats);
  cell_weight_.assign(covariates.cells(), layout_.cell_area);
  Lambda_.assign(grid.size(), 0.0);
  compute_box_intensity(cell_weight_, Lambda_);
}

void GibbsSampler::set_data(const SufficientStats& stats) {
  const std::size_t p = covariates_->p();
  if (stats.m.size() != grid_->size() || stats.covariate_sum.size() != grid_->size() * p)
    throw ConfigError("sufficient statistics do not match the grid");
  m_ = stats.m;
  covariate_total_.assign(p, 0.0);
  for (std::size_t i = 0; i < grid_->size(); ++i)
    for (std::size_t j = 0; j < p; ++j) covariate_total_[j] += stats.covariate_sum[i * p + j];
}

void GibbsSampler::initialize(Rng& rng) {
  const std::size_t n = grid_->size();
  const std::size_t p = covariates_->p();
  ModelState s;
  s.z.resize(n);
  if (config_.fixed_K1) {
    std::fill(s.z.begin(), s.z.end(), 0);
  } else {
    for (auto& label : s.z) label = static_cast<int>(rng.index(config_.initial_K));
    // Compact to 0..K-1 in case some initial labels went unused.
    std::vector<int> remap(config_.initial_K, -1);
    int next = 0;
    for (auto& label : s.z) {
      auto& slot = remap[static_cast<std::size_t>(label)];
      if (slot < 0) slot = next++;
      label = slot;
    }
  }
  const std::size_t K = static_cast<std::size_t>(*std::max_element(s.z.begin(), s.z.end())) + 1;
  s.lambda0.resize(K);
  for (auto& l : s.lambda0) l = rng.gamma(hyper_.a, hyper_.b);
  s.beta.assign(p, 0.0);
  s.gamma.assign(p, 0);
  set_state(std::move(s));
}

void GibbsSampler::set_state(ModelState state) {
  state.validate(grid_->size(), covariates_->p());
  state_ = std::move(state);
  sizes_ = component_sizes(state_.z, state_.K());
  refresh_intensity();
}

void GibbsSampler::compute_box_intensity(std::span<const double> cell_weight,
                                         std::vector<double>& out) const {
  if (layout_.aligned()) {
    out.assign(cell_weight.begin(), cell_weight.end());
    return;
  }
  out.assign(grid_->size(), 0.0);
  for (std::size_t c = 0; c < cell_weight.size(); ++c)
    out[layout_.box_of_cell[c]] += cell_weight[c];
}

void GibbsSampler::refresh_intensity() {
  for (std::size_t c = 0; c < covariates_->cells(); ++c) {
    const auto row = covariates_->row(c);
    const double eta = std::inner_product(row.begin(), row.end(), state_.beta.begin(), 0.0);
    cell_weight_[c] = layout_.cell_area * std::exp(eta);
  }
  compute_box_intensity(cell_weight_, Lambda_);
}

void GibbsSampler::remove_component(int label) {
  const auto k = static_cast<std::size_t>(label);
  state_.lambda0.erase(state_.lambda0.begin() + static_cast<std::ptrdiff_t>(k));
  sizes_.erase(sizes_.begin() + static_cast<std::ptrdiff_t>(k));
  for (auto& z : state_.z)
    if (z > label) --z;
}

int GibbsSampler::update_z(std::size_t i, Rng& rng) {
  const int old = state_.z[i];
  --sizes_[static_cast<std::size_t>(old)];
  if (sizes_[static_cast<std::size_t>(old)] == 0) {
    state_.z[i] = -1;
    remove_component(old);
  }
  const std::size_t K = state_.K();
  scratch_weights_ = z_conditional_log_weights(sizes_, state_.lambda0, m_[i], Lambda_[i], hyper_);
  const auto pick = sample_log_weights(scratch_weights_, rng);
  if (pick == K) {
    const double m = static_cast<double>(m_[i]);
    const double lam = config_.prior_draw_new_component
                           ? rng.gamma(hyper_.a, hyper_.b)
                           : rng.gamma(m + hyper_.a, hyper_.b + Lambda_[i]);
    // Guard against a gamma draw rounding to zero for tiny shapes.
    state_.lambda0.push_back(std::max(lam, std::numeric_limits<double>::min()));
    sizes_.push_back(0);
  }
  state_.z[i] = static_cast<int>(pick);
  ++sizes_[pick];
  return state_.z[i];
}

void GibbsSampler::sweep_z(Rng& rng) {
  const std::size_t n = grid_->size();
  if (config_.random_scan) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (auto i : order) update_z(i, rng);
  } else {
    for (std::size_t i = 0; i < n; ++i) update_z(i, rng);
  }
}

double GibbsSampler::update_lambda0(std::size_t k, Rng& rng) {
  double N_k = 0.0;
  double Lambda_sum = 0.0;
  for (std::size_t i = 0; i < state_.z.size(); ++i) {
    if (static_cast<std::size_t>(state_.z[i]) != k) continue;
    N_k += static_cast<double>(m_[i]);
    Lambda_sum += Lambda_[i];
  }
  const auto g = lambda0_conditional(N_k, Lambda_sum, hyper_);
  state_.lambda0[k] = std::max(rng.gamma(g.shape, g.rate), std::numeric_limits<double>::min());
  return state_.lambda0[k];
}

void GibbsSampler::sweep_lambda0(Rng& rng) {
  const std::size_t K = state_.K();
  std::vector<double> N_k(K, 0.0);
  std::vector<double> Lambda_sum(K, 0.0);
  for (std::size_t i = 0; i < state_.z.size(); ++i) {
    const auto k = static_cast<std::size_t>(state_.z[i]);
    N_k[k] += static_cast<double>(m_[i]);
    Lambda_sum[k] += Lambda_[i];
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto g = lambda0_conditional(N_k[k], Lambda_sum[k], hyper_);
    state_.lambda0[k] = std::max(rng.gamma(g.shape, g.rate), std::numeric_limits<double>::min());
  }
}

int GibbsSampler::update_gamma(std::size_t j, Rng& rng) {
  state_.gamma[j] = rng.bernoulli(inclusion_probability(state_.beta[j], hyper_)) ? 1 : 0;
  return state_.gamma[j];
}

void GibbsSampler::sweep_gamma(Rng& rng) {
  for (std::size_t j = 0; j < state_.gamma.size(); ++j) update_gamma(j, rng);
}

double GibbsSampler::shifted_intensity_total(std::size_t j, double delta,
                                             std::vector<double>* cell_out,
                                             std::vector<double>* box_out) const {
  const std::size_t cells = cell_weight_.size();
  std::vector<double> local_cells;
  std::vector<double>& shifted = cell_out ? *cell_out : local_cells;
  shifted.resize(cells);
  for (std::size_t c = 0; c < cells; ++c)
    shifted[c] = cell_weight_[c] * std::exp((*covariates_)(c, j) * delta);
  std::vector<double> local_boxes;
  std::vector<double>& boxes = box_out ? *box_out : local_boxes;
  compute_box_intensity(shifted, boxes);
  double total = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i)
    total += state_.lambda0[static_cast<std::size_t>(state_.z[i])] * boxes[i];
  return total;
}

double GibbsSampler::beta_log_target(std::size_t j, double value) const {
  const double delta = value - state_.beta[j];
  return spike_slab_log_prior(value, state_.gamma[j], hyper_) + covariate_total_[j] * value -
         shifted_intensity_total(j, delta, nullptr, nullptr);
}

double GibbsSampler::beta_acceptance_probability(std::size_t j, double proposal) const {
  const double diff = beta_log_target(j, proposal) - beta_log_target(j, state_.beta[j]);
  return diff >= 0.0 ? 1.0 : std::exp(diff);
}

bool GibbsSampler::update_beta_to(std::size_t j, double proposal, Rng& rng) {
  const double current = state_.beta[j];
  const double delta = proposal - current;
  double current_total = 0.0;
  for (std::size_t i = 0; i < Lambda_.size(); ++i)
    current_total += state_.lambda0[static_cast<std::size_t>(state_.z[i])] * Lambda_[i];
  const double proposed_total = shifted_intensity_total(j, delta, &scratch_cells_, &scratch_boxes_);
  const double log_ratio =
      spike_slab_log_prior(proposal, state_.gamma[j], hyper_) -
      spike_slab_log_prior(current, state_.gamma[j], hyper_) + covariate_total_[j] * delta -
      (proposed_total - current_total);
  const double u = rng.uniform();
  if (!(log_ratio >= 0.0 || std::log(u) < log_ratio)) return false;
  state_.beta[j] = proposal;
  cell_weight_.swap(scratch_cells_);
  Lambda_.swap(scratch_boxes_);
  return true;
}

bool GibbsSampler::update_beta(std::size_t j, Rng& rng) {
  const double proposal = state_.beta[j] + rng.normal(0.0, proposal_sd_[j]);
  return update_beta_to(j, proposal, rng);
}

void GibbsSampler::sweep_beta(Rng& rng) {
  for (std::size_t j = 0; j < state_.beta.size(); ++j) update_beta(j, rng);
}

void GibbsSampler::iterate(Rng& rng) {
  refresh_intensity();
  if (!config_.fixed_K1) sweep_z(rng);
  sweep_lambda0(rng);
  sweep_gamma(rng);
  sweep_beta(rng);
}

double GibbsSampler::log_likelihood() const {
  double ll = std::inner_product(covariate_total_.begin(), covariate_total_.end(),
                                 state_.beta.begin(), 0.0);
  for (std::size_t i = 0; i < Lambda_.size(); ++i) {
    const double lam = state_.lambda0[static_cast<std::size_t>(state_.z[i])];
    if (m_[i] > 0) ll += static_cast<double>(m_[i]) * std::log(lam);
    ll -= lam * Lambda_[i];
  }
  return ll;
}

ChainSample run_chain(const Dataset& data, const Hyperparams& hyper, const SamplerConfig& config,
                      Rng& rng) {
  config.validate();
  GibbsSampler sampler(data.grid, data.covariates, data.stats, hyper, config);
  sampler.initialize(rng);

  const std::size_t p = data.covariates.p();
  const double target = 0.5 * (config.target_accept_low + config.target_accept_high);
  std::vector<std::size_t> window_accepts(p, 0);
  std::vector<std::size_t> kept_accepts(p, 0);
  std::size_t windows_done = 0;

  ChainSample out;
  out.draws.reserve(config.retained());
  out.log_lik.reserve(config.retained());
  out.K_trace.reserve(config.retained());

  for (std::size_t t = 0; t < config.n_iter; ++t) {
    sampler.refresh_intensity();
    if (!config.fixed_K1) sampler.sweep_z(rng);
    sampler.sweep_lambda0(rng);
    sampler.sweep_gamma(rng);
    const bool in_burn_in = t < config.burn_in;
    for (std::size_t j = 0; j < p; ++j) {
      const bool accepted = sampler.update_beta(j, rng);
      if (!accepted) continue;
      if (in_burn_in)
        ++window_accepts[j];
      else
        ++kept_accepts[j];
    }
    if (in_burn_in && config.adapt_proposal && (t + 1) % config.adapt_window == 0) {
      for (std::size_t j = 0; j < p; ++j) {
        const double rate =
            static_cast<double>(window_accepts[j]) / static_cast<double>(config.adapt_window);
        sampler.set_proposal_sd(j, tune_proposal(sampler.proposal_sd(j), rate, windows_done, target));
      }
      ++windows_done;
    }
    if (in_burn_in && (t + 1) % config.adapt_window == 0)
      std::fill(window_accepts.begin(), window_accepts.end(), 0);

    if (!in_burn_in && (t + 1 - config.burn_in) % config.thin == 0) {
      out.draws.push_back(sampler.state());
      out.log_lik.push_back(sampler.log_likelihood());
      out.K_trace.push_back(static_cast<int>(sampler.state().K()));
    }
  }

  const double post = static_cast<double>(config.n_iter - config.burn_in);
  for (std::size_t j = 0; j < p; ++j) {
    out.accept_rate.push_back(static_cast<double>(kept_accepts[j]) / post);
    out.proposal_sd.push_back(sampler.proposal_sd(j));
  }
  return out;
}

}  // namespace pcrp
