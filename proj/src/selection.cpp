#include "pcrp/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pcrp/error.hpp"
#include "pcrp/parallel.hpp"

namespace pcrp {

double bitc(double log_lik_hat, std::size_t K_hat, std::size_t N) {
  if (N == 0) throw DataError("BITC is undefined for an empty point pattern");
  return -2.0 * log_lik_hat + static_cast<double>(K_hat) * std::log(static_cast<double>(N));
}

double bitc(const ChainSample& chain, const DahlEstimate& dahl, const Dataset& data) {
  const auto& theta = chain.draws.at(dahl.t_star);
  const double ll = log_likelihood(theta, data.stats, data.grid, data.covariates);
  return bitc(ll, dahl.K_hat, data.stats.N);
}

double lpml(const ChainSample& chain, const Dataset& data) {
  if (chain.empty()) throw Error("LPML needs a non-empty chain");
  const std::size_t n = data.grid.size();
  // Streaming log-sum-exp of -l_i over draws, per box.
  std::vector<double> mx(n, -std::numeric_limits<double>::infinity());
  std::vector<double> acc(n, 0.0);
  for (const auto& draw : chain.draws) {
    const auto terms = box_log_likelihood(draw, data.stats, data.grid, data.covariates);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = -terms[i];
      if (v > mx[i]) {
        acc[i] = acc[i] * std::exp(mx[i] - v) + 1.0;
        mx[i] = v;
      } else {
        acc[i] += std::exp(v - mx[i]);
      }
    }
  }
  const double log_M = std::log(static_cast<double>(chain.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += log_M - (mx[i] + std::log(acc[i]));
  return total;
}

DicResult dic(const ChainSample& chain, const DahlEstimate& dahl, const Dataset& data) {
  if (chain.empty()) throw Error("DIC needs a non-empty chain");
  DicResult out;
  double sum = 0.0;
  for (const auto& draw : chain.draws)
    sum += -2.0 * log_likelihood(draw, data.stats, data.grid, data.covariates);
  out.mean_deviance = sum / static_cast<double>(chain.size());

  ModelState estimate = chain.draws.at(dahl.t_star);
  const std::size_t p = estimate.beta.size();
  std::fill(estimate.beta.begin(), estimate.beta.end(), 0.0);
  for (const auto& draw : chain.draws)
    for (std::size_t j = 0; j < p; ++j) estimate.beta[j] += draw.beta[j];
  for (auto& b : estimate.beta) b /= static_cast<double>(chain.size());
  out.deviance_at_estimate =
      -2.0 * log_likelihood(estimate, data.stats, data.grid, data.covariates);
  out.p_D = out.mean_deviance - out.deviance_at_estimate;
  out.dic = out.mean_deviance + out.p_D;
  return out;
}

double mse(std::span<const double> expected_counts, std::span<const std::int64_t> m) {
  if (expected_counts.size() != m.size()) throw ConfigError("MSE inputs differ in length");
  if (m.empty()) throw ConfigError("MSE needs at least one box");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = expected_counts[i] - static_cast<double>(m[i]);
    s += d * d;
  }
  return s / static_cast<double>(m.size());
}

std::vector<double> fitted_box_counts(const ChainSample& chain, const Dataset& data) {
  if (chain.empty()) throw Error("fitted counts need a non-empty chain");
  std::vector<double> out(data.grid.size(), 0.0);
  for (const auto& draw : chain.draws) {
    const auto counts = expected_box_counts(draw, data.grid, data.covariates);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += counts[i];
  }
  for (auto& v : out) v /= static_cast<double>(chain.size());
  return out;
}

RGridRecord fit_at_r(const Dataset& data, const Hyperparams& hyper, const SamplerConfig& config,
                     Rng& rng, std::size_t dahl_thin, bool keep_chain) {
  auto chain = run_chain(data, hyper, config, rng);
  RGridRecord rec;
  rec.r = hyper.r;
  rec.seed = rng.seed();
  rec.stream = rng.stream();
  rec.summary = summarize(chain, dahl_thin);
  rec.K_hat = rec.summary.dahl.K_hat;
  rec.mean_RI = rec.summary.mean_RI;
  rec.bitc = bitc(chain, rec.summary.dahl, data);
  rec.lpml = lpml(chain, data);
  rec.dic = dic(chain, rec.summary.dahl, data);
  rec.mse = mse(fitted_box_counts(chain, data), data.stats.m);
  rec.accept_rate = chain.accept_rate;
  if (keep_chain) rec.chain = std::move(chain);
  return rec;
}

namespace {

void pick_optima(RGridResult& res) {
  auto argbest = [&](auto key, bool minimize) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < res.records.size(); ++k) {
      const double a = key(res.records[k]);
      const double b = key(res.records[best]);
      if (minimize ? a < b : a > b) best = k;
    }
    return best;
  };
  res.opt_bitc = argbest([](const RGridRecord& r) { return r.bitc; }, true);
  res.opt_lpml = argbest([](const RGridRecord& r) { return r.lpml; }, false);
  res.opt_dic = argbest([](const RGridRecord& r) { return r.dic.dic; }, true);
}

}  // namespace

RGridResult select_r(const Dataset& data, const std::vector<double>& r_grid,
                     const Hyperparams& hyper, const SamplerConfig& config,
                     const SelectOptions& options) {
  if (r_grid.empty()) throw ConfigError("r grid must not be empty");
  for (std::size_t k = 0; k < r_grid.size(); ++k) {
    if (!(r_grid[k] >= 1.0)) throw ConfigError("r values must be >= 1");
    if (k > 0 && !(r_grid[k] > r_grid[k - 1]))
      throw ConfigError("r grid must be strictly increasing");
  }
  RGridResult res;
  res.records.resize(r_grid.size());
  parallel_for(r_grid.size(), options.threads, [&](std::size_t k) {
    Hyperparams h = hyper;
    h.r = r_grid[k];
    Rng rng(config.seed, k);
    res.records[k] = fit_at_r(data, h, config, rng, options.dahl_thin, options.keep_chains);
  });
  if (options.auto_extend) {
    while (res.records.back().K_hat > 1) {
      const double next = std::round((res.records.back().r + options.extend_step) * 1e10) / 1e10;
      if (next > options.max_r) break;
      Hyperparams h = hyper;
      h.r = next;
      Rng rng(config.seed, res.records.size());
      res.records.push_back(fit_at_r(data, h, config, rng, options.dahl_thin, options.keep_chains));
    }
  }
  pick_optima(res);
  return res;
}

std::vector<double> parse_r_grid(const std::string& text) {
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse r grid '" + text + "'");
    }
    if (used != s.size()) throw ConfigError("cannot parse r grid '" + text + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("r grid range must be start:stop:step");
    const double start = to_double(parts[0]), stop = to_double(parts[1]), step = to_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw ConfigError("r grid range needs step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k)
      out.push_back(std::round((start + static_cast<double>(k) * step) * 1e10) / 1e10);
  } else {
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(to_double(item));
  }
  if (out.empty()) throw ConfigError("r grid is empty");
  return out;
}

}  // namespace pcrp
