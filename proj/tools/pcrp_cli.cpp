// Command-line front end: fit, simulate, select-r and study subcommands.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "pcrp/error.hpp"
#include "pcrp/io.hpp"
#include "pcrp/selection.hpp"
#include "pcrp/simulate.hpp"

namespace fs = std::filesystem;
using namespace pcrp;

namespace {

struct Overrides {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

const std::vector<std::pair<std::string, std::string>> kValueKeys = {
    {"points", "points CSV (header x,y)"},
    {"covariates", "covariate CSV (header box_ix,box_iy,<names>)"},
    {"output_dir", "output directory (default $PCRP_OUTPUT_DIR or ./pcrp_out)"},
    {"region", "study region x_min,x_max,y_min,y_max"},
    {"nx", "boxes along x"},
    {"ny", "boxes along y"},
    {"a", "gamma prior shape for lambda0"},
    {"b", "gamma prior rate for lambda0"},
    {"alpha", "PCRP concentration"},
    {"r", "PCRP power"},
    {"v_spike", "spike variance"},
    {"v_slab", "slab variance"},
    {"pi_gamma", "prior inclusion probability"},
    {"proposal_sd", "random-walk proposal SD for beta"},
    {"n_iter", "total iterations"},
    {"burn_in", "burn-in iterations"},
    {"thin", "thinning interval"},
    {"initial_K", "number of components at initialization"},
    {"target_accept_low", "lower end of the adaptation target"},
    {"target_accept_high", "upper end of the adaptation target"},
    {"adapt_window", "iterations per adaptation window"},
    {"seed", "master seed"},
    {"r_grid", "r values, 'a,b,c' or 'start:stop:step'"},
    {"setting", "simulation setting: 1, 2 or 3 (synthetic forest plot)"},
    {"replicates", "replicates in a study"},
    {"threads", "worker threads (0: all cores)"},
    {"dahl_thin", "use every k-th draw in the Dahl estimate"},
};

const std::vector<std::pair<std::string, std::string>> kFlagKeys = {
    {"unit_area", "rescale boxes to unit area"},
    {"standardize", "standardize covariate columns"},
    {"fixed_K1", "constant baseline (K = 1)"},
    {"adapt_proposal", "tune proposal SD during burn-in"},
    {"prior_draw_new_component", "draw a new component's baseline from the prior"},
    {"random_scan", "visit boxes in random order"},
    {"auto_extend", "extend the r grid until K_hat = 1"},
};

std::string flag_name(const std::string& key) {
  std::string s = "--" + key;
  for (auto& c : s)
    if (c == '_') c = '-';
  return s;
}

void add_config_options(CLI::App* app, Overrides& ov) {
  app->add_option("-c,--config", ov.config_file,
                  "key=value config file or run_meta.json; flags override it");
  for (const auto& [key, help] : kValueKeys) {
    std::string names = flag_name(key);
    if (key == "output_dir") names = "-o,--out," + names;
    ov.options[key] = app->add_option(names, ov.values[key], help);
  }
  for (const auto& [key, help] : kFlagKeys)
    ov.options[key] = app->add_flag(flag_name(key) + "{true}", ov.values[key], help);
}

RunConfig resolve(Mode mode, const Overrides& ov) {
  RunConfig cfg;
  if (!ov.config_file.empty()) cfg = RunConfig::from_map(read_config_file(ov.config_file));
  cfg.mode = mode;
  for (const auto& [key, opt] : ov.options)
    if (opt->count() > 0) cfg.set(key, ov.values.at(key));
  cfg.output_dir = resolve_output_dir(cfg.output_dir).string();
  cfg.validate();
  return cfg;
}

Dataset load_dataset(const RunConfig& cfg) {
  auto grid = cfg.grid();
  auto pattern = load_points(cfg.points_path, cfg.region);
  auto covariates = cfg.covariates_path.empty()
                        ? CovariateField::none(grid)
                        : load_covariates(cfg.covariates_path, grid, cfg.standardize);
  return Dataset::build(std::move(grid), std::move(covariates), std::move(pattern));
}

void print_record(const RGridRecord& rec, const Dataset& data) {
  std::printf("r = %g  K_hat = %zu  BITC = %.4f  LPML = %.4f  DIC = %.4f  MSE = %.4f  mean RI = %.4f\n",
              rec.r, rec.K_hat, rec.bitc, rec.lpml, rec.dic.dic, rec.mse, rec.mean_RI);
  std::printf("lambda0_hat:");
  for (double l : rec.summary.dahl.lambda0_hat) std::printf(" %.4f", l);
  std::printf("\n");
  const auto& names = data.covariates.names();
  for (std::size_t j = 0; j < names.size(); ++j)
    std::printf("  %-12s mean %8.4f  sd %7.4f  P(gamma=1) %.3f  accept %.3f%s\n", names[j].c_str(),
                rec.summary.beta_mean[j], rec.summary.beta_sd[j], rec.summary.gamma_prob[j],
                rec.accept_rate[j], rec.summary.selected[j] ? "  *" : "");
}

int run_fit(const RunConfig& cfg) {
  const auto data = load_dataset(cfg);
  Rng rng(cfg.sampler.seed, 0);
  const auto rec = fit_at_r(data, cfg.hyper, cfg.sampler, rng, cfg.dahl_thin, true);
  export_results(rec, rec.chain, data, cfg, cfg.output_dir);
  std::printf("N = %zu points in %zu boxes\n", data.stats.N, data.grid.size());
  print_record(rec, data);
  std::printf("results written to %s\n", cfg.output_dir.c_str());
  return 0;
}

int run_select(const RunConfig& cfg) {
  const auto data = load_dataset(cfg);
  SelectOptions opt;
  opt.auto_extend = cfg.auto_extend;
  opt.threads = cfg.threads;
  opt.dahl_thin = cfg.dahl_thin;
  const auto res = select_r(data, cfg.r_grid, cfg.hyper, cfg.sampler, opt);
  fs::create_directories(cfg.output_dir);
  write_r_grid(fs::path(cfg.output_dir) / "r_grid.csv", res);
  for (const auto& rec : res.records)
    std::printf("r = %-6g K_hat = %-3zu BITC = %.4f  LPML = %.4f  DIC = %.4f\n", rec.r, rec.K_hat,
                rec.bitc, rec.lpml, rec.dic.dic);

  // Re-run the BITC-optimal chain on its own stream to keep its draws for export.
  Hyperparams h = cfg.hyper;
  h.r = res.best().r;
  Rng rng(cfg.sampler.seed, res.opt_bitc);
  const auto rec = fit_at_r(data, h, cfg.sampler, rng, cfg.dahl_thin, true);
  export_results(rec, rec.chain, data, cfg, cfg.output_dir);
  std::printf("BITC-optimal:\n");
  print_record(rec, data);
  std::printf("results written to %s\n", cfg.output_dir.c_str());
  return 0;
}

int run_simulate(const RunConfig& cfg) {
  Rng rng(cfg.sampler.seed, 0);
  const auto sim = make_setting(cfg.setting, rng);
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  write_points(out / "points.csv", sim.data.pattern);
  write_covariates(out / "covariates.csv", sim.data.covariates);
  {
    std::ofstream os(out / "truth.csv");
    if (!os) throw Error("cannot write " + (out / "truth.csv").string());
    os << "box_ix,box_iy,z,lambda0\n";
    const auto& g = sim.data.grid;
    for (std::size_t i = 0; i < g.size(); ++i)
      os << g.ix(i) + 1 << ',' << g.iy(i) + 1 << ',' << sim.truth.z[i] + 1 << ','
         << format_double(sim.truth.lambda0[static_cast<std::size_t>(sim.truth.z[i])]) << '\n';
  }
  {
    const auto& s = sim.setting;
    std::ofstream os(out / "grid.cfg");
    if (!os) throw Error("cannot write " + (out / "grid.cfg").string());
    os << "# grid of simulation setting " << s.id << ", seed " << cfg.sampler.seed << '\n';
    os << "region = " << format_double(s.region.x_min) << ',' << format_double(s.region.x_max)
       << ',' << format_double(s.region.y_min) << ',' << format_double(s.region.y_max) << '\n';
    os << "nx = " << s.nx << "\nny = " << s.ny << "\nunit_area = " << (s.unit_area ? "true" : "false")
       << '\n';
  }
  {
    nlohmann::json j;
    j["setting"] = sim.setting.id;
    j["seed"] = cfg.sampler.seed;
    j["N"] = sim.data.stats.N;
    j["lambda0"] = sim.truth.lambda0;
    j["beta"] = sim.truth.beta;
    j["component_sizes"] = component_sizes(sim.truth.z, sim.truth.K());
    j["covariates"] = sim.setting.covariate_names;
    std::ofstream os(out / "truth.json");
    os << j.dump(2) << '\n';
  }
  std::printf("setting %d: N = %zu points, %zu boxes, K = %zu, p = %zu -> %s\n", cfg.setting,
              sim.data.stats.N, sim.data.grid.size(), sim.truth.K(), sim.setting.p(),
              out.string().c_str());
  return 0;
}

int run_study(const RunConfig& cfg) {
  StudyOptions opt;
  opt.replicates = cfg.replicates;
  opt.r_grid = cfg.r_grid;
  opt.hyper = cfg.hyper;
  opt.config = cfg.sampler;
  opt.threads = cfg.threads;
  opt.dahl_thin = cfg.dahl_thin;
  const auto report = run_replicates(cfg.setting, opt);
  report.write_csv(cfg.output_dir);
  std::printf("setting %d, %zu replicates\n", cfg.setting, report.replicates.size());
  std::printf("K_hat = K at BITC-optimal r: %.2f   at r = 1: %.2f\n", report.hit_rate_opt(),
              report.hit_rate_r1());
  const auto rows = report.coefficient_table();
  std::printf("%-10s %7s %6s %8s %7s %7s\n", "coef", "truth", "AR", "bias", "SD", "SD_hat");
  for (std::size_t j = 0; j < rows.size(); ++j)
    std::printf("%-10s %7.3f %6.2f %8.4f %7.4f %7.4f\n", report.setting.covariate_names[j].c_str(),
                rows[j].truth, rows[j].accuracy, rows[j].bias, rows[j].sd, rows[j].sd_hat);
  std::printf("results written to %s\n", cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-constant baseline Poisson process model with a powered CRP prior"};
  app.require_subcommand(1);

  struct Sub {
    Mode mode;
    const char* name;
    const char* help;
    Overrides ov;
    CLI::App* app = nullptr;
  };
  std::vector<Sub> subs;
  subs.push_back({Mode::fit, "fit", "fit the model at a single r", {}});
  subs.push_back({Mode::simulate, "simulate", "generate a simulation setting", {}});
  subs.push_back({Mode::select_r, "select-r", "fit over an r grid and pick r by BITC", {}});
  subs.push_back({Mode::study, "study", "replicate simulation study", {}});
  for (auto& s : subs) {
    s.app = app.add_subcommand(s.name, s.help);
    add_config_options(s.app, s.ov);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (auto& s : subs) {
      if (!s.app->parsed()) continue;
      const auto cfg = resolve(s.mode, s.ov);
      switch (s.mode) {
        case Mode::fit: return run_fit(cfg);
        case Mode::simulate: return run_simulate(cfg);
        case Mode::select_r: return run_select(cfg);
        case Mode::study: return run_study(cfg);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
