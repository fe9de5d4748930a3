#include "pcrp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "pcrp/error.hpp"
#include "pcrp/parallel.hpp"
#include "pcrp/postproc.hpp"

namespace pcrp {

PointPattern sample_nhpp(const GridPartition& grid, std::span<const double> intensity, Rng& rng) {
  if (intensity.size() != grid.size()) throw ConfigError("intensity length differs from grid size");
  PointPattern out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(intensity[i] >= 0.0) || !std::isfinite(intensity[i]))
      throw DomainError("box intensities must be finite and non-negative");
    const auto count = rng.poisson(intensity[i] * grid.box_area());
    const auto b = grid.bounds(i);
    for (std::uint64_t k = 0; k < count; ++k)
      out.points.push_back({rng.uniform(b.x0, b.x1), rng.uniform(b.y0, b.y1)});
  }
  return out;
}

GridPartition SimSetting::grid() const {
  return unit_area ? GridPartition::unit_box_area(region, nx, ny) : GridPartition(region, nx, ny);
}

namespace {

// Marks the block [x0, x1) x [y0, y1) of box indices with `label`.
void paint(std::vector<int>& z, std::size_t nx, std::size_t x0, std::size_t x1, std::size_t y0,
           std::size_t y1, int label) {
  for (std::size_t iy = y0; iy < y1; ++iy)
    for (std::size_t ix = x0; ix < x1; ++ix) z[iy * nx + ix] = label;
}

}  // namespace

SimSetting simulation_setting(int id) {
  SimSetting s;
  s.id = id;
  switch (id) {
    case 1:
    case 2:
      s.region = {0.0, 20.0, 0.0, 20.0};
      s.nx = 20;
      s.ny = 20;
      s.z_true.assign(400, 0);
      paint(s.z_true, 20, 2, 9, 3, 16, 1);  // 7 x 13 = 91 boxes
      if (id == 1) {
        s.lambda0 = {0.2, 10.0};
      } else {
        paint(s.z_true, 20, 11, 18, 5, 16, 2);  // 7 x 11 = 77 boxes
        s.lambda0 = {0.2, 5.0, 20.0};
      }
      s.beta = {0.5, 0.5, 0.0, 0.0};
      s.covariate_names = {"x1", "x2", "x3", "x4"};
      break;
    case 3:
      s.region = {0.0, 1000.0, 0.0, 500.0};
      s.nx = 50;
      s.ny = 25;
      s.unit_area = true;
      s.z_true.assign(1250, 0);
      paint(s.z_true, 50, 4, 24, 2, 17, 1);    // 300 boxes
      paint(s.z_true, 50, 30, 42, 5, 15, 2);   // 120 boxes
      paint(s.z_true, 50, 44, 50, 18, 23, 3);  // 30 boxes
      s.lambda0 = {0.88, 4.98, 13.18, 28.06};
      s.beta = {0.6, 0.5, 0.0, 0.4, 0.0, 0.6, 0.0, -0.4, -0.4, 0.0, 0.0, -0.4, -0.35, 0.0, 0.0};
      s.covariate_names = {"elevation", "slope", "pH", "Al", "B",  "Ca", "Cu",   "Fe",
                           "K",         "Mg",    "Mn", "P",  "Zn", "N",  "N.min"};
      break;
    default:
      throw ConfigError("unknown simulation setting " + std::to_string(id));
  }
  return s;
}

SimulatedData make_setting(int id, Rng& rng) { return make_setting(simulation_setting(id), rng); }

SimulatedData make_setting(const SimSetting& setting, Rng& rng) {
  auto grid = setting.grid();
  const std::size_t n = grid.size();
  const std::size_t p = setting.p();
  if (setting.z_true.size() != n) throw ConfigError("component map does not cover the grid");

  std::vector<double> values(n * p);
  for (auto& v : values) v = rng.normal();
  CovariateField covariates(setting.nx, setting.ny, setting.covariate_names, std::move(values));

  ModelState truth;
  truth.z = setting.z_true;
  truth.lambda0 = setting.lambda0;
  truth.beta = setting.beta;
  for (double b : setting.beta) truth.gamma.push_back(b != 0.0 ? 1 : 0);
  truth.validate(n, p);

  std::vector<double> intensity(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = covariates.row(i);
    const double eta = std::inner_product(row.begin(), row.end(), setting.beta.begin(), 0.0);
    intensity[i] = setting.lambda0[static_cast<std::size_t>(setting.z_true[i])] * std::exp(eta);
  }
  auto pattern = sample_nhpp(grid, intensity, rng);
  auto data = Dataset::build(std::move(grid), std::move(covariates), std::move(pattern));
  return SimulatedData{setting, std::move(data), std::move(truth)};
}

namespace {

constexpr std::uint64_t kChainStreamOffset = 1'000'003;
constexpr std::uint64_t kConstStream = 999'983;

ReplicateRecord run_one(const SimSetting& setting, std::size_t rep, const StudyOptions& opt) {
  Rng data_rng(opt.config.seed, rep);
  const auto sim = make_setting(setting, data_rng);

  SamplerConfig cfg = opt.config;
  cfg.seed = derive_seed(opt.config.seed, kChainStreamOffset + rep);
  SelectOptions sel;
  sel.threads = 1;
  sel.dahl_thin = opt.dahl_thin;
  const auto grid_result = select_r(sim.data, opt.r_grid, opt.hyper, cfg, sel);

  ReplicateRecord rec;
  rec.replicate = rep;
  rec.N = sim.data.stats.N;
  rec.opt_bitc = grid_result.opt_bitc;
  rec.opt_lpml = grid_result.opt_lpml;
  rec.opt_dic = grid_result.opt_dic;
  for (const auto& r : grid_result.records) {
    rec.per_r.push_back({r.r, r.bitc, r.lpml, r.dic.dic, r.K_hat, r.mean_RI});
    if (std::abs(r.r - 1.0) < 1e-12) {
      rec.has_r1 = true;
      rec.K_hat_r1 = r.K_hat;
      rec.mean_RI_r1 = r.mean_RI;
      rec.ri_trace_r1 = r.summary.ri.values;
    }
  }
  const auto& best = grid_result.best();
  rec.beta_mean = best.summary.beta_mean;
  rec.beta_sd = best.summary.beta_sd;
  rec.selected = best.summary.selected;
  rec.accept_rate = best.accept_rate;
  rec.ri_trace_opt = best.summary.ri.values;
  rec.ri_truth_opt = rand_index(best.summary.dahl.z_hat, sim.truth.z);
  rec.mse_pcrp = best.mse;

  if (opt.run_const) {
    SamplerConfig const_cfg = cfg;
    const_cfg.fixed_K1 = true;
    Rng rng(cfg.seed, kConstStream);
    const auto chain = run_chain(sim.data, opt.hyper, const_cfg, rng);
    rec.mse_const = mse(fitted_box_counts(chain, sim.data), sim.data.stats.m);
  }
  return rec;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

StudyReport run_replicates(int setting_id, const StudyOptions& options) {
  if (options.replicates == 0) throw ConfigError("study needs at least one replicate");
  if (options.r_grid.empty()) throw ConfigError("study needs a non-empty r grid");
  options.hyper.validate();
  options.config.validate();
  StudyReport report;
  report.setting = simulation_setting(setting_id);
  report.r_grid = options.r_grid;
  report.replicates.resize(options.replicates);
  parallel_for(options.replicates, options.threads, [&](std::size_t rep) {
    report.replicates[rep] = run_one(report.setting, rep, options);
  });
  return report;
}

std::vector<CoefficientRow> StudyReport::coefficient_table() const {
  std::vector<CoefficientRow> rows;
  const double R = static_cast<double>(replicates.size());
  for (std::size_t j = 0; j < setting.p(); ++j) {
    CoefficientRow row;
    row.truth = setting.beta[j];
    std::vector<double> means;
    double correct = 0.0, sd_hat = 0.0;
    for (const auto& rep : replicates) {
      means.push_back(rep.beta_mean[j]);
      sd_hat += rep.beta_sd[j];
      if (rep.selected[j] == (row.truth != 0.0)) correct += 1.0;
    }
    const double m = mean_of(means);
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    row.accuracy = correct / R;
    row.bias = m - row.truth;
    row.sd = replicates.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
    row.sd_hat = sd_hat / R;
    rows.push_back(row);
  }
  return rows;
}

double StudyReport::hit_rate_opt() const {
  double hits = 0.0;
  for (const auto& rep : replicates)
    if (rep.per_r[rep.opt_bitc].K_hat == setting.K()) hits += 1.0;
  return hits / static_cast<double>(replicates.size());
}

double StudyReport::hit_rate_r1() const {
  double hits = 0.0;
  for (const auto& rep : replicates)
    if (rep.has_r1 && rep.K_hat_r1 == setting.K()) hits += 1.0;
  return hits / static_cast<double>(replicates.size());
}

void StudyReport::write_csv(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) throw Error("cannot write " + (dir / name).string());
    os.precision(17);
    return os;
  };
  const std::size_t p = setting.p();

  {
    auto os = open("study_replicates.csv");
    os << "replicate,N,r_opt_bitc,K_hat_bitc,mean_RI_bitc,r_opt_lpml,K_hat_lpml,r_opt_dic,"
          "K_hat_dic,K_hat_r1,mean_RI_r1,RI_truth_bitc,mse_pcrp,mse_const";
    for (std::size_t j = 0; j < p; ++j) os << ",beta_mean_" << j + 1;
    for (std::size_t j = 0; j < p; ++j) os << ",beta_sd_" << j + 1;
    for (std::size_t j = 0; j < p; ++j) os << ",selected_" << j + 1;
    for (std::size_t j = 0; j < p; ++j) os << ",accept_" << j + 1;
    os << '\n';
    for (const auto& rep : replicates) {
      const auto& b = rep.per_r[rep.opt_bitc];
      const auto& l = rep.per_r[rep.opt_lpml];
      const auto& d = rep.per_r[rep.opt_dic];
      os << rep.replicate + 1 << ',' << rep.N << ',' << b.r << ',' << b.K_hat << ',' << b.mean_RI
         << ',' << l.r << ',' << l.K_hat << ',' << d.r << ',' << d.K_hat << ',';
      if (rep.has_r1)
        os << rep.K_hat_r1 << ',' << rep.mean_RI_r1;
      else
        os << "NA,NA";
      os << ',' << rep.ri_truth_opt << ',' << rep.mse_pcrp << ',' << rep.mse_const;
      for (double v : rep.beta_mean) os << ',' << v;
      for (double v : rep.beta_sd) os << ',' << v;
      for (bool v : rep.selected) os << ',' << (v ? 1 : 0);
      for (double v : rep.accept_rate) os << ',' << v;
      os << '\n';
    }
  }
  {
    auto os = open("study_criteria.csv");
    os << "replicate,r,BITC,LPML,DIC,K_hat,mean_RI\n";
    for (const auto& rep : replicates)
      for (const auto& c : rep.per_r)
        os << rep.replicate + 1 << ',' << c.r << ',' << c.bitc << ',' << c.lpml << ',' << c.dic
           << ',' << c.K_hat << ',' << c.mean_RI << '\n';
  }
  {
    auto os = open("study_table1.csv");
    os << "coefficient,truth,AR,bias,SD,SD_hat\n";
    const auto rows = coefficient_table();
    for (std::size_t j = 0; j < rows.size(); ++j)
      os << setting.covariate_names[j] << ',' << rows[j].truth << ',' << rows[j].accuracy << ','
         << rows[j].bias << ',' << rows[j].sd << ',' << rows[j].sd_hat << '\n';
  }
  {
    auto os = open("study_khist.csv");
    os << "criterion,K_hat,count\n";
    std::map<std::string, std::map<std::size_t, std::size_t>> hist;
    for (const auto& rep : replicates) {
      ++hist["bitc"][rep.per_r[rep.opt_bitc].K_hat];
      ++hist["lpml"][rep.per_r[rep.opt_lpml].K_hat];
      ++hist["dic"][rep.per_r[rep.opt_dic].K_hat];
      if (rep.has_r1) ++hist["r1"][rep.K_hat_r1];
    }
    for (const auto& [name, counts] : hist)
      for (const auto& [k, c] : counts) os << name << ',' << k << ',' << c << '\n';
  }
  {
    auto os = open("study_ri_trace.csv");
    os << "iteration,mean_RI_r1,mean_RI_opt\n";
    std::size_t len = 0;
    for (const auto& rep : replicates) len = std::max(len, rep.ri_trace_opt.size());
    for (std::size_t t = 0; t < len; ++t) {
      double s1 = 0.0, so = 0.0;
      std::size_t c1 = 0, co = 0;
      for (const auto& rep : replicates) {
        if (t < rep.ri_trace_r1.size()) {
          s1 += rep.ri_trace_r1[t];
          ++c1;
        }
        if (t < rep.ri_trace_opt.size()) {
          so += rep.ri_trace_opt[t];
          ++co;
        }
      }
      os << t + 1 << ',';
      if (c1 > 0)
        os << s1 / static_cast<double>(c1);
      else
        os << "NA";
      os << ',' << (co > 0 ? so / static_cast<double>(co) : 0.0) << '\n';
    }
  }
}

}  // namespace pcrp
