#pragma once

// Data generation for piecewise-constant intensities and the replicate study
// harness.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pcrp/model.hpp"
#include "pcrp/rng.hpp"
#include "pcrp/sampler.hpp"
#include "pcrp/selection.hpp"

namespace pcrp {

// Per box: count ~ Poisson(intensity_i * mu(A_i)), then that many points
// uniform in the box. Exact for a piecewise-constant intensity.
PointPattern sample_nhpp(const GridPartition& grid, std::span<const double> intensity, Rng& rng);

// Simulation configurations:
//   1: [0,20]^2, 400 unit boxes, lambda0 = (0.2, 10) on (309, 91) boxes,
//      beta = (0.5, 0.5, 0, 0).
//   2: as 1 with lambda0 = (0.2, 5, 20) on (232, 91, 77) boxes.
//   3: synthetic fixture shaped like a forest census plot: [0,1000]x[0,500],
//      50x25 boxes rescaled to unit area, 15 covariates, 4 components.
// High-intensity components are axis-aligned rectangular blocks.
struct SimSetting {
  int id = 1;
  Region region;
  std::size_t nx = 20;
  std::size_t ny = 20;
  bool unit_area = false;
  std::vector<int> z_true;
  std::vector<double> lambda0;
  std::vector<double> beta;
  std::vector<std::string> covariate_names;

  GridPartition grid() const;
  std::size_t K() const { return lambda0.size(); }
  std::size_t p() const { return beta.size(); }
};

SimSetting simulation_setting(int id);

struct SimulatedData {
  SimSetting setting;
  Dataset data;
  ModelState truth;
};

// Draws iid N(0,1) covariates per box and a point pattern from
// lambda_i = lambda0[z_true_i] * exp(X_i' beta).
SimulatedData make_setting(int id, Rng& rng);
SimulatedData make_setting(const SimSetting& setting, Rng& rng);

struct StudyOptions {
  std::size_t replicates = 100;
  std::vector<double> r_grid;
  Hyperparams hyper;
  SamplerConfig config;  // config.seed is the master seed of the study
  std::size_t threads = 0;
  std::size_t dahl_thin = 1;
  bool run_const = true;  // also fit the constant-baseline model for MSE
};

struct RCriteria {
  double r = 1.0;
  double bitc = 0.0;
  double lpml = 0.0;
  double dic = 0.0;
  std::size_t K_hat = 0;
  double mean_RI = 0.0;
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::size_t N = 0;
  std::vector<RCriteria> per_r;
  std::size_t opt_bitc = 0;
  std::size_t opt_lpml = 0;
  std::size_t opt_dic = 0;
  // At the BITC-optimal r:
  std::vector<double> beta_mean;
  std::vector<double> beta_sd;
  std::vector<bool> selected;
  std::vector<double> accept_rate;
  std::vector<double> ri_trace_opt;
  double ri_truth_opt = 0.0;  // RI of the Dahl labels against the true labels
  double mse_pcrp = 0.0;
  double mse_const = 0.0;
  // At r = 1 when the grid contains it:
  std::vector<double> ri_trace_r1;
  std::size_t K_hat_r1 = 0;
  double mean_RI_r1 = 0.0;
  bool has_r1 = false;
};

struct CoefficientRow {
  double truth = 0.0;
  double accuracy = 0.0;  // fraction of replicates with the correct selection decision
  double bias = 0.0;
  double sd = 0.0;        // empirical SD of posterior means across replicates
  double sd_hat = 0.0;    // average posterior SD
};

struct StudyReport {
  SimSetting setting;
  std::vector<double> r_grid;
  std::vector<ReplicateRecord> replicates;

  std::vector<CoefficientRow> coefficient_table() const;
  // Fraction of replicates whose K_hat equals the true K at the BITC optimum / at r = 1.
  double hit_rate_opt() const;
  double hit_rate_r1() const;
  void write_csv(const std::filesystem::path& dir) const;
};

// Each replicate uses stream `replicate` of config.seed for data and derived
// streams for its chains; replicates run in parallel.
StudyReport run_replicates(int setting, const StudyOptions& options);

}  // namespace pcrp
