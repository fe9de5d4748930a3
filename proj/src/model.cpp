#include "pcrp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pcrp/error.hpp"

namespace pcrp {

namespace {

std::size_t bin_of(double v, double lo, double width, std::size_t count) {
  const double u = (v - lo) / width * static_cast<double>(count);
  if (u <= 0.0) return 0;
  const auto k = static_cast<std::size_t>(u);
  return std::min(k, count - 1);
}

}  // namespace

void Region::validate() const {
  if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
        std::isfinite(y_max)))
    throw ConfigError("region bounds must be finite");
  if (!(x_min < x_max) || !(y_min < y_max))
    throw ConfigError("region requires x_min < x_max and y_min < y_max");
}

GridPartition::GridPartition(Region region, std::size_t nx, std::size_t ny, double area_scale)
    : region_(region), nx_(nx), ny_(ny), area_scale_(area_scale) {
  region_.validate();
  if (nx_ == 0 || ny_ == 0) throw ConfigError("grid needs at least one box per axis");
  if (!(area_scale_ > 0.0) || !std::isfinite(area_scale_))
    throw ConfigError("area_scale must be positive and finite");
}

GridPartition GridPartition::unit_box_area(Region region, std::size_t nx, std::size_t ny) {
  GridPartition g(region, nx, ny);
  g.area_scale_ = 1.0 / g.physical_box_area();
  return g;
}

double GridPartition::physical_box_area() const {
  return region_.area() / static_cast<double>(nx_ * ny_);
}

std::optional<std::size_t> GridPartition::locate(const Point& p) const {
  if (!region_.contains(p.x, p.y)) return std::nullopt;
  const auto ix = bin_of(p.x, region_.x_min, region_.width(), nx_);
  const auto iy = bin_of(p.y, region_.y_min, region_.height(), ny_);
  return index(ix, iy);
}

BoxBounds GridPartition::bounds(std::size_t i) const {
  const double w = region_.width() / static_cast<double>(nx_);
  const double h = region_.height() / static_cast<double>(ny_);
  const double x0 = region_.x_min + w * static_cast<double>(ix(i));
  const double y0 = region_.y_min + h * static_cast<double>(iy(i));
  const double x1 = ix(i) + 1 == nx_ ? region_.x_max : x0 + w;
  const double y1 = iy(i) + 1 == ny_ ? region_.y_max : y0 + h;
  return {x0, x1, y0, y1};
}

Point GridPartition::centroid(std::size_t i) const {
  const auto b = bounds(i);
  return {0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1)};
}

CovariateField::CovariateField(std::size_t cols, std::size_t rows,
                               std::vector<std::string> names, std::vector<double> values)
    : cols_(cols), rows_(rows), names_(std::move(names)), values_(std::move(values)) {
  if (cols_ == 0 || rows_ == 0) throw ConfigError("covariate raster must be non-empty");
  if (values_.size() != cols_ * rows_ * names_.size())
    throw ConfigError("covariate values do not match raster size times p");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      std::ostringstream os;
      os << "non-finite covariate value in cell " << k / std::max<std::size_t>(1, p())
         << ", column " << names_[k % p()];
      throw DataError(os.str());
    }
  }
}

CovariateField CovariateField::none(const GridPartition& grid) {
  return CovariateField(grid.nx(), grid.ny(), {}, {});
}

CovariateField CovariateField::standardized() const {
  CovariateField out = *this;
  const std::size_t n = cells();
  if (n < 2 && p() > 0) throw DataError("cannot standardize a single-cell raster");
  for (std::size_t j = 0; j < p(); ++j) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += (*this)(c, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = (*this)(c, j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw DataError("covariate '" + names_[j] + "' has zero variance");
    for (std::size_t c = 0; c < n; ++c)
      out.values_[c * p() + j] = ((*this)(c, j) - mean) / sd;
  }
  out.standardized_ = true;
  return out;
}

void CovariateField::check_aligned(const GridPartition& grid) const {
  if (cols_ % grid.nx() != 0 || rows_ % grid.ny() != 0) {
    std::ostringstream os;
    os << "covariate raster " << cols_ << "x" << rows_ << " is not an integer refinement of the "
       << grid.nx() << "x" << grid.ny() << " grid";
    throw ConfigError(os.str());
  }
}

std::size_t CovariateField::cell_of(const Region& region, const Point& pt) const {
  const auto cx = bin_of(pt.x, region.x_min, region.width(), cols_);
  const auto cy = bin_of(pt.y, region.y_min, region.height(), rows_);
  return cy * cols_ + cx;
}

CellLayout::CellLayout(const GridPartition& grid, const CovariateField& covariates) {
  covariates.check_aligned(grid);
  refine_x = covariates.cols() / grid.nx();
  refine_y = covariates.rows() / grid.ny();
  cell_area = grid.box_area() / static_cast<double>(refine_x * refine_y);
  box_of_cell.resize(covariates.cells());
  for (std::size_t cy = 0; cy < covariates.rows(); ++cy)
    for (std::size_t cx = 0; cx < covariates.cols(); ++cx)
      box_of_cell[cy * covariates.cols() + cx] = grid.index(cx / refine_x, cy / refine_y);
}

void Hyperparams::validate() const {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("gamma prior needs a > 0 and b > 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(r >= 1.0) || !std::isfinite(r)) throw ConfigError("PCRP power r must be >= 1");
  if (!(v_spike > 0.0) || !(v_slab > v_spike))
    throw ConfigError("spike-slab variances need 0 < v_spike < v_slab");
  if (!(pi_gamma > 0.0 && pi_gamma < 1.0)) throw ConfigError("pi_gamma must lie in (0, 1)");
  if (!(proposal_sd > 0.0)) throw ConfigError("proposal_sd must be positive");
}

bool labels_contiguous(std::span<const int> z, std::size_t K) {
  std::vector<char> seen(K, 0);
  for (int label : z) {
    if (label < 0 || static_cast<std::size_t>(label) >= K) return false;
    seen[static_cast<std::size_t>(label)] = 1;
  }
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

std::vector<int> component_sizes(std::span<const int> z, std::size_t K) {
  std::vector<int> sizes(K, 0);
  for (int label : z) ++sizes[static_cast<std::size_t>(label)];
  return sizes;
}

void ModelState::validate(std::size_t n, std::size_t p) const {
  if (z.size() != n) throw DomainError("state z has wrong length");
  if (beta.size() != p || gamma.size() != p) throw DomainError("state beta/gamma has wrong length");
  if (lambda0.empty()) throw DomainError("state has no components");
  if (!labels_contiguous(z, K())) throw DomainError("component labels are not contiguous");
  for (double l : lambda0)
    if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("baseline intensity must be positive");
  for (int g : gamma)
    if (g != 0 && g != 1) throw DomainError("gamma entries must be 0 or 1");
}

BoxAssignment assign_points(const PointPattern& pattern, const GridPartition& grid) {
  BoxAssignment out;
  out.box_of_point.reserve(pattern.size());
  out.m.assign(grid.size(), 0);
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    const auto box = grid.locate(pattern.points[k]);
    if (!box) {
      std::ostringstream os;
      os << "point " << k << " (" << pattern.points[k].x << ", " << pattern.points[k].y
         << ") lies outside the study region";
      throw DataError(os.str());
    }
    out.box_of_point.push_back(*box);
    ++out.m[*box];
  }
  return out;
}

void SufficientStats::refresh_intensity(const GridPartition& grid,
                                        const CovariateField& covariates,
                                        std::span<const double> beta) {
  LambdaI = integrated_intensities(grid, covariates, beta);
}

void SufficientStats::refresh_components(std::span<const int> z, std::size_t K) {
  N_per_component.assign(K, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i)
    N_per_component[static_cast<std::size_t>(z[i])] += static_cast<double>(m[i]);
}

SufficientStats compute_stats(const PointPattern& pattern, const GridPartition& grid,
                              const CovariateField& covariates) {
  covariates.check_aligned(grid);
  const auto assignment = assign_points(pattern, grid);
  const std::size_t p = covariates.p();
  SufficientStats s;
  s.m = assignment.m;
  s.N = pattern.size();
  s.covariate_sum.assign(grid.size() * p, 0.0);
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    const auto cell = covariates.cell_of(grid.region(), pattern.points[k]);
    const auto box = assignment.box_of_point[k];
    for (std::size_t j = 0; j < p; ++j) s.covariate_sum[box * p + j] += covariates(cell, j);
  }
  s.LambdaI.assign(grid.size(), grid.box_area());
  return s;
}

SufficientStats stats_from_counts(std::vector<std::int64_t> m, const GridPartition& grid,
                                  const CovariateField& covariates) {
  if (covariates.cols() != grid.nx() || covariates.rows() != grid.ny())
    throw ConfigError("count-only statistics need a raster equal to the grid");
  if (m.size() != grid.size()) throw ConfigError("count vector length differs from grid size");
  const std::size_t p = covariates.p();
  SufficientStats s;
  s.covariate_sum.assign(grid.size() * p, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] < 0) throw DataError("negative box count");
    s.N += static_cast<std::size_t>(m[i]);
    for (std::size_t j = 0; j < p; ++j)
      s.covariate_sum[i * p + j] = static_cast<double>(m[i]) * covariates(i, j);
  }
  s.m = std::move(m);
  s.LambdaI.assign(grid.size(), grid.box_area());
  return s;
}

Dataset Dataset::build(GridPartition grid, CovariateField covariates, PointPattern pattern) {
  auto stats = compute_stats(pattern, grid, covariates);
  return Dataset{std::move(grid), std::move(covariates), std::move(pattern), std::move(stats)};
}

double integrated_intensity(const GridPartition& grid, const CovariateField& covariates,
                            std::span<const double> beta, std::size_t i) {
  covariates.check_aligned(grid);
  if (beta.size() != covariates.p()) throw ConfigError("beta length differs from p");
  const std::size_t rx = covariates.cols() / grid.nx();
  const std::size_t ry = covariates.rows() / grid.ny();
  const double cell_area = grid.box_area() / static_cast<double>(rx * ry);
  double total = 0.0;
  for (std::size_t cy = grid.iy(i) * ry; cy < (grid.iy(i) + 1) * ry; ++cy) {
    for (std::size_t cx = grid.ix(i) * rx; cx < (grid.ix(i) + 1) * rx; ++cx) {
      const auto row = covariates.row(cy * covariates.cols() + cx);
      const double eta = std::inner_product(row.begin(), row.end(), beta.begin(), 0.0);
      total += cell_area * std::exp(eta);
    }
  }
  return total;
}

std::vector<double> integrated_intensities(const GridPartition& grid,
                                           const CovariateField& covariates,
                                           std::span<const double> beta) {
  if (beta.size() != covariates.p()) throw ConfigError("beta length differs from p");
  const CellLayout layout(grid, covariates);
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t c = 0; c < covariates.cells(); ++c) {
    const auto row = covariates.row(c);
    const double eta = std::inner_product(row.begin(), row.end(), beta.begin(), 0.0);
    out[layout.box_of_cell[c]] += layout.cell_area * std::exp(eta);
  }
  return out;
}

std::vector<double> box_log_likelihood(const ModelState& state, const SufficientStats& stats,
                                       const GridPartition& grid,
                                       const CovariateField& covariates) {
  for (double l : state.lambda0)
    if (!(l > 0.0)) throw DomainError("log-likelihood needs positive baseline intensities");
  const std::size_t p = covariates.p();
  const auto Lambda = integrated_intensities(grid, covariates, state.beta);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lam = state.lambda0[static_cast<std::size_t>(state.z[i])];
    const auto s = stats.covariate_sum_of(i, p);
    const double linear = std::inner_product(s.begin(), s.end(), state.beta.begin(), 0.0);
    out[i] = static_cast<double>(stats.m[i]) * std::log(lam) + linear - lam * Lambda[i];
  }
  return out;
}

double log_likelihood(const ModelState& state, const SufficientStats& stats,
                      const GridPartition& grid, const CovariateField& covariates) {
  const auto terms = box_log_likelihood(state, stats, grid, covariates);
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

std::vector<double> expected_box_counts(const ModelState& state, const GridPartition& grid,
                                        const CovariateField& covariates) {
  auto out = integrated_intensities(grid, covariates, state.beta);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= state.lambda0[static_cast<std::size_t>(state.z[i])];
  return out;
}

}  // namespace pcrp
