#pragma once

// CSV/JSON ingestion and export, plus the flat run configuration shared by
// the command-line tool.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcrp/model.hpp"
#include "pcrp/postproc.hpp"
#include "pcrp/sampler.hpp"
#include "pcrp/selection.hpp"

namespace pcrp {

// %.17g, enough to round-trip any double.
std::string format_double(double v);

// CSV with header `x,y`. When `region` is given, points outside it are
// rejected with a DataError listing the offending lines.
PointPattern load_points(const std::filesystem::path& path,
                         const std::optional<Region>& region = std::nullopt);
void write_points(const std::filesystem::path& path, const PointPattern& pattern);

// CSV with header `box_ix,box_iy,<name1>,...,<namep>`, 1-based box keys, one
// row per grid box in any order.
CovariateField load_covariates(const std::filesystem::path& path, const GridPartition& grid,
                               bool standardize = false);
void write_covariates(const std::filesystem::path& path, const CovariateField& covariates);

enum class Mode { fit, simulate, select_r, study };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct RunConfig {
  Mode mode = Mode::fit;
  std::string points_path;
  std::string covariates_path;
  std::string output_dir;
  Region region{0.0, 20.0, 0.0, 20.0};
  std::size_t nx = 20;
  std::size_t ny = 20;
  bool unit_area = false;
  bool standardize = false;
  Hyperparams hyper;
  SamplerConfig sampler;
  std::vector<double> r_grid{1.0};
  bool auto_extend = false;
  int setting = 1;
  std::size_t replicates = 20;
  std::size_t threads = 0;
  std::size_t dahl_thin = 1;

  GridPartition grid() const;
  void validate() const;

  // Flat key=value form; every value is formatted to round-trip exactly.
  std::map<std::string, std::string> to_map() const;
  // Applies one key; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  static RunConfig from_map(const std::map<std::string, std::string>& entries);
  static RunConfig from_map(const std::map<std::string, std::string>& entries, RunConfig base);
};

// Reads either a flat `key = value` file (# comments allowed) or a JSON file.
// JSON input may be a flat object or a run_meta.json with a "config" member.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Env var holding the default output directory.
inline constexpr const char* kOutputDirEnv = "PCRP_OUTPUT_DIR";

// Output directory precedence: explicit value, then the env var, then ./pcrp_out.
std::filesystem::path resolve_output_dir(const std::string& requested);

// Writes summary.csv, zhat.csv, baseline_{q025,q50,q975}.csv, trace_K.csv,
// trace_RI.csv, criteria.csv and run_meta.json into `outdir`.
void export_results(const RGridRecord& record, const ChainSample& chain, const Dataset& data,
                    const RunConfig& config, const std::filesystem::path& outdir);

// One row per r: r,BITC,LPML,DIC,p_D,MSE,K_hat,mean_RI plus an `optimal` flag column.
void write_r_grid(const std::filesystem::path& path, const RGridResult& result);

// Parses "x_min,x_max,y_min,y_max".
Region parse_region(const std::string& text);

}  // namespace pcrp
