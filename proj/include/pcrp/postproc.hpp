#pragma once

// Posterior summaries of a retained chain: Dahl's least-squares partition
// estimate, Rand-index diagnostics, HPD intervals and coefficient summaries.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcrp/sampler.hpp"

namespace pcrp {

// Running sum of membership matrices B(i,j) = 1(z_i == z_j) over draws, kept
// as strict-upper-triangle counts. Memory is O(n^2) in the number of boxes.
class MembershipAccumulator {
 public:
  explicit MembershipAccumulator(std::size_t n);

  void add(std::span<const int> z);
  void merge(const MembershipAccumulator& other);

  std::size_t n() const { return n_; }
  std::size_t draws() const { return draws_; }
  // Mean membership Bbar(i, j); 1 on the diagonal.
  double mean(std::size_t i, std::size_t j) const;

  // sum_{i,j} (B(z)(i,j) - Bbar(i,j))^2 over the full n x n matrix, via
  // sum B - 2 sum B*Bbar + sum Bbar^2.
  double loss(std::span<const int> z) const;
  // draws^2 / 2 times loss(z), computed exactly in integers so ties compare equal.
  std::int64_t scaled_loss(std::span<const int> z) const;

 private:
  std::size_t n_;
  std::size_t draws_ = 0;
  std::vector<std::uint32_t> counts_;  // entry i*n + j used for i < j only
  mutable bool dirty_ = true;
  mutable std::int64_t upper_sum_sq_ = 0;  // sum over i<j of count^2
};

struct DahlEstimate {
  std::size_t t_star = 0;         // index into the chain's draws
  std::vector<int> z_hat;
  std::vector<double> lambda0_hat;
  std::size_t K_hat = 0;
  double loss = 0.0;
};

// Draw minimizing the squared distance of its membership matrix to the mean
// membership matrix; ties go to the earliest draw. `thin` > 1 uses every
// thin-th draw in both passes.
DahlEstimate dahl_estimate(const ChainSample& chain, std::size_t thin = 1);

// Fraction of the n(n-1)/2 pairs on which two labelings agree. Labels may be
// arbitrary integers. Throws ConfigError when lengths differ or n < 2.
double rand_index(std::span<const int> z1, std::span<const int> z2);

struct RiTrace {
  std::vector<double> values;
  double mean = 0.0;
};

RiTrace ri_trace(const ChainSample& chain, std::span<const int> reference);

struct Interval {
  double lower;
  double upper;
  double width() const { return upper - lower; }
};

// Shortest window x[i], x[i + g] over the sorted sample with
// g = round(level * M) clamped to [1, M - 1]. Needs at least 50 samples.
Interval hpd_interval(std::vector<double> samples, double level = 0.95);

// Centered window with the same order-statistic span as hpd_interval.
Interval equal_tailed_interval(std::vector<double> samples, double level = 0.95);

// Linear-interpolation sample quantile (R type 7) of a sorted sample.
double sorted_quantile(std::span<const double> sorted, double prob);

struct PosteriorSummary {
  std::vector<double> beta_mean;
  std::vector<double> beta_sd;
  std::vector<Interval> hpd_intervals;  // NaN bounds when the chain has < 50 draws
  std::vector<double> gamma_prob;
  std::vector<bool> selected;           // gamma_prob > 0.5
  int K_mode = 0;
  std::size_t K_mode_freq = 0;
  double K_mean = 0.0;
  double K_sd = 0.0;
  DahlEstimate dahl;
  RiTrace ri;
  double mean_RI = 0.0;
};

PosteriorSummary summarize(const ChainSample& chain, std::size_t dahl_thin = 1);

struct BaselineQuantiles {
  std::vector<double> q025;
  std::vector<double> q50;
  std::vector<double> q975;
};

// Per-box posterior percentiles of the baseline lambda0[z_i].
BaselineQuantiles baseline_percentiles(const ChainSample& chain);

// Per-box posterior mean of lambda0[z_i].
std::vector<double> baseline_posterior_mean(const ChainSample& chain);

}  // namespace pcrp
