#include "pcrp/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "pcrp/error.hpp"

namespace pcrp {

MembershipAccumulator::MembershipAccumulator(std::size_t n) : n_(n), counts_(n * n, 0) {}

void MembershipAccumulator::add(std::span<const int> z) {
  if (z.size() != n_) throw ConfigError("label vector length differs from accumulator size");
  for (std::size_t i = 0; i + 1 < n_; ++i) {
    const int zi = z[i];
    std::uint32_t* row = counts_.data() + i * n_;
    for (std::size_t j = i + 1; j < n_; ++j) row[j] += static_cast<std::uint32_t>(z[j] == zi);
  }
  ++draws_;
  dirty_ = true;
}

void MembershipAccumulator::merge(const MembershipAccumulator& other) {
  if (other.n_ != n_) throw ConfigError("cannot merge accumulators of different sizes");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  draws_ += other.draws_;
  dirty_ = true;
}

double MembershipAccumulator::mean(std::size_t i, std::size_t j) const {
  if (i == j) return 1.0;
  if (i > j) std::swap(i, j);
  return static_cast<double>(counts_[i * n_ + j]) / static_cast<double>(draws_);
}

std::int64_t MembershipAccumulator::scaled_loss(std::span<const int> z) const {
  if (draws_ == 0) throw Error("membership accumulator is empty");
  if (z.size() != n_) throw ConfigError("label vector length differs from accumulator size");
  const auto M = static_cast<std::int64_t>(draws_);
  if (dirty_) {
    std::int64_t s = 0;
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      const std::uint32_t* row = counts_.data() + i * n_;
      for (std::size_t j = i + 1; j < n_; ++j) s += static_cast<std::int64_t>(row[j]) * row[j];
    }
    upper_sum_sq_ = s;
    dirty_ = false;
  }
  // Off-diagonal pairs in the same component contribute (M - c)^2 = c^2 + M^2 - 2Mc.
  std::int64_t same = 0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i + 1 < n_; ++i) {
    const int zi = z[i];
    const std::uint32_t* row = counts_.data() + i * n_;
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (z[j] != zi) continue;
      ++pairs;
      same += row[j];
    }
  }
  return upper_sum_sq_ + pairs * M * M - 2 * M * same;
}

double MembershipAccumulator::loss(std::span<const int> z) const {
  const double M = static_cast<double>(draws_ == 0 ? 1 : draws_);
  return 2.0 * static_cast<double>(scaled_loss(z)) / (M * M);
}

DahlEstimate dahl_estimate(const ChainSample& chain, std::size_t thin) {
  if (chain.empty()) throw Error("Dahl estimate needs at least one draw");
  if (thin == 0) throw ConfigError("Dahl thinning must be at least 1");
  const std::size_t n = chain.draws.front().z.size();
  MembershipAccumulator acc(n);
  for (std::size_t t = 0; t < chain.size(); t += thin) acc.add(chain.draws[t].z);

  DahlEstimate best;
  std::int64_t best_scaled = std::numeric_limits<std::int64_t>::max();
  for (std::size_t t = 0; t < chain.size(); t += thin) {
    const std::int64_t l = acc.scaled_loss(chain.draws[t].z);
    if (l < best_scaled) {
      best_scaled = l;
      best.t_star = t;
    }
  }
  best.loss = acc.loss(chain.draws[best.t_star].z);
  const auto& draw = chain.draws[best.t_star];
  best.z_hat = draw.z;
  best.lambda0_hat = draw.lambda0;
  best.K_hat = draw.K();
  return best;
}

namespace {

std::vector<std::size_t> compact_labels(std::span<const int> z, std::size_t& count) {
  std::map<int, std::size_t> ids;
  std::vector<std::size_t> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto it = ids.try_emplace(z[i], ids.size()).first;
    out[i] = it->second;
  }
  count = ids.size();
  return out;
}

double pairs(double k) { return 0.5 * k * (k - 1.0); }

}  // namespace

double rand_index(std::span<const int> z1, std::span<const int> z2) {
  if (z1.size() != z2.size()) throw ConfigError("Rand index needs equal-length labelings");
  if (z1.size() < 2) throw ConfigError("Rand index needs at least two items");
  std::size_t k1 = 0, k2 = 0;
  const auto c1 = compact_labels(z1, k1);
  const auto c2 = compact_labels(z2, k2);
  std::vector<double> table(k1 * k2, 0.0), rows(k1, 0.0), cols(k2, 0.0);
  for (std::size_t i = 0; i < c1.size(); ++i) {
    table[c1[i] * k2 + c2[i]] += 1.0;
    rows[c1[i]] += 1.0;
    cols[c2[i]] += 1.0;
  }
  double both = 0.0, same1 = 0.0, same2 = 0.0;
  for (double v : table) both += pairs(v);
  for (double v : rows) same1 += pairs(v);
  for (double v : cols) same2 += pairs(v);
  const double total = pairs(static_cast<double>(z1.size()));
  const double apart = total - same1 - same2 + both;
  return (both + apart) / total;
}

RiTrace ri_trace(const ChainSample& chain, std::span<const int> reference) {
  RiTrace out;
  out.values.reserve(chain.size());
  for (const auto& d : chain.draws) out.values.push_back(rand_index(d.z, reference));
  if (!out.values.empty())
    out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) /
               static_cast<double>(out.values.size());
  return out;
}

namespace {

std::size_t window_gap(std::size_t M, double level) {
  if (M < 50) throw ConfigError("credible intervals need at least 50 samples");
  if (!(level > 0.0 && level <= 1.0)) throw ConfigError("interval level must lie in (0, 1]");
  const auto g = static_cast<std::size_t>(std::llround(level * static_cast<double>(M)));
  return std::clamp<std::size_t>(g, 1, M - 1);
}

}  // namespace

Interval hpd_interval(std::vector<double> samples, double level) {
  const std::size_t M = samples.size();
  const std::size_t gap = window_gap(M, level);
  std::sort(samples.begin(), samples.end());
  std::size_t best = 0;
  double best_width = samples[gap] - samples[0];
  for (std::size_t i = 1; i + gap < M; ++i) {
    const double w = samples[i + gap] - samples[i];
    if (w < best_width) {
      best_width = w;
      best = i;
    }
  }
  return {samples[best], samples[best + gap]};
}

Interval equal_tailed_interval(std::vector<double> samples, double level) {
  const std::size_t M = samples.size();
  const std::size_t gap = window_gap(M, level);
  std::sort(samples.begin(), samples.end());
  const std::size_t lo = (M - 1 - gap) / 2;
  return {samples[lo], samples[lo + gap]};
}

double sorted_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw ConfigError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

PosteriorSummary summarize(const ChainSample& chain, std::size_t dahl_thin) {
  if (chain.empty()) throw Error("cannot summarize an empty chain");
  const std::size_t M = chain.size();
  const std::size_t p = chain.draws.front().beta.size();
  PosteriorSummary s;
  s.beta_mean.assign(p, 0.0);
  s.beta_sd.assign(p, 0.0);
  s.gamma_prob.assign(p, 0.0);
  std::vector<double> column(M);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0, gsum = 0.0;
    for (std::size_t t = 0; t < M; ++t) {
      column[t] = chain.draws[t].beta[j];
      sum += column[t];
      gsum += chain.draws[t].gamma[j];
    }
    const double mean = sum / static_cast<double>(M);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    s.beta_mean[j] = mean;
    s.beta_sd[j] = M > 1 ? std::sqrt(ss / static_cast<double>(M - 1)) : 0.0;
    s.gamma_prob[j] = gsum / static_cast<double>(M);
    s.selected.push_back(s.gamma_prob[j] > 0.5);
    if (M >= 50) {
      s.hpd_intervals.push_back(hpd_interval(column, 0.95));
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      s.hpd_intervals.push_back({nan, nan});
    }
  }

  std::map<int, std::size_t> freq;
  double ksum = 0.0;
  for (int k : chain.K_trace) {
    ++freq[k];
    ksum += k;
  }
  s.K_mean = ksum / static_cast<double>(M);
  double kss = 0.0;
  for (int k : chain.K_trace) kss += (k - s.K_mean) * (k - s.K_mean);
  s.K_sd = M > 1 ? std::sqrt(kss / static_cast<double>(M - 1)) : 0.0;
  for (const auto& [k, f] : freq) {
    if (f > s.K_mode_freq) {
      s.K_mode = k;
      s.K_mode_freq = f;
    }
  }

  s.dahl = dahl_estimate(chain, dahl_thin);
  s.ri = ri_trace(chain, s.dahl.z_hat);
  s.mean_RI = s.ri.mean;
  return s;
}

BaselineQuantiles baseline_percentiles(const ChainSample& chain) {
  if (chain.empty()) throw Error("baseline percentiles need a non-empty chain");
  const std::size_t n = chain.draws.front().z.size();
  BaselineQuantiles q;
  q.q025.resize(n);
  q.q50.resize(n);
  q.q975.resize(n);
  std::vector<double> values(chain.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < chain.size(); ++t) {
      const auto& d = chain.draws[t];
      values[t] = d.lambda0[static_cast<std::size_t>(d.z[i])];
    }
    std::sort(values.begin(), values.end());
    q.q025[i] = sorted_quantile(values, 0.025);
    q.q50[i] = sorted_quantile(values, 0.5);
    q.q975[i] = sorted_quantile(values, 0.975);
  }
  return q;
}

std::vector<double> baseline_posterior_mean(const ChainSample& chain) {
  if (chain.empty()) throw Error("baseline mean needs a non-empty chain");
  const std::size_t n = chain.draws.front().z.size();
  std::vector<double> out(n, 0.0);
  for (const auto& d : chain.draws)
    for (std::size_t i = 0; i < n; ++i) out[i] += d.lambda0[static_cast<std::size_t>(d.z[i])];
  for (auto& v : out) v /= static_cast<double>(chain.size());
  return out;
}

}  // namespace pcrp
