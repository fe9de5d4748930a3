#pragma once

// Domain types and likelihood evaluation for the piecewise-constant baseline
// Poisson process model
//
//   lambda(s) = lambda0[z_i] * exp(X(s)' beta),   s in box A_i.
//
// Component labels are 0-based in memory (0..K-1) and 1-based in files.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pcrp {

struct Region {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  // Closed rectangle.
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  void validate() const;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct PointPattern {
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct BoxBounds {
  double x0, x1, y0, y1;
};

// nx * ny equal rectangular boxes covering a region. Box i = iy * nx + ix,
// x index fastest. Points on an interior edge belong to the box above/right;
// points on the outer max edge belong to the last box of that row/column.
//
// area_scale multiplies the physical box area to give the nominal area
// mu(A_i) used by the model (1 keeps physical units).
class GridPartition {
 public:
  GridPartition(Region region, std::size_t nx, std::size_t ny, double area_scale = 1.0);

  // Nominal box area rescaled to 1.
  static GridPartition unit_box_area(Region region, std::size_t nx, std::size_t ny);

  const Region& region() const { return region_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  double area_scale() const { return area_scale_; }
  double physical_box_area() const;
  double box_area() const { return physical_box_area() * area_scale_; }
  double total_area() const { return box_area() * static_cast<double>(size()); }

  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx_ + ix; }
  std::size_t ix(std::size_t i) const { return i % nx_; }
  std::size_t iy(std::size_t i) const { return i / nx_; }

  std::optional<std::size_t> locate(const Point& p) const;
  BoxBounds bounds(std::size_t i) const;
  Point centroid(std::size_t i) const;

 private:
  Region region_;
  std::size_t nx_;
  std::size_t ny_;
  double area_scale_;
};

// p piecewise-constant covariates on a raster of cols x rows cells over the
// study region (cell-major storage, p values per cell). The raster must equal
// the partition or refine it by an integer factor along each axis.
class CovariateField {
 public:
  CovariateField() = default;
  CovariateField(std::size_t cols, std::size_t rows, std::vector<std::string> names,
                 std::vector<double> values);

  // p = 0 field aligned with the grid.
  static CovariateField none(const GridPartition& grid);

  std::size_t p() const { return names_.size(); }
  std::size_t cols() const { return cols_; }
  std::size_t rows() const { return rows_; }
  std::size_t cells() const { return cols_ * rows_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  bool is_standardized() const { return standardized_; }

  double operator()(std::size_t cell, std::size_t j) const { return values_[cell * p() + j]; }
  std::span<const double> row(std::size_t cell) const {
    return {values_.data() + cell * p(), p()};
  }

  // Columns centered to mean 0 and scaled to sample variance 1.
  // Throws DataError on a constant column.
  CovariateField standardized() const;

  // Throws ConfigError unless the raster equals or integer-refines the grid.
  void check_aligned(const GridPartition& grid) const;

  // Cell of an in-region point given the region the raster covers.
  std::size_t cell_of(const Region& region, const Point& pt) const;

 private:
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<double> values_;
  bool standardized_ = false;
};

// Cell -> box map and per-cell nominal area for an aligned raster.
struct CellLayout {
  std::size_t refine_x = 1;
  std::size_t refine_y = 1;
  double cell_area = 1.0;
  std::vector<std::size_t> box_of_cell;

  CellLayout(const GridPartition& grid, const CovariateField& covariates);
  bool aligned() const { return refine_x == 1 && refine_y == 1; }
};

struct Hyperparams {
  double a = 1.0;          // gamma shape for lambda0
  double b = 1.0;          // gamma rate for lambda0
  double alpha = 1.0;      // PCRP concentration
  double r = 1.0;          // PCRP power
  double v_spike = 0.01;   // spike variance
  double v_slab = 100.0;   // slab variance
  double pi_gamma = 0.5;   // prior inclusion probability
  double proposal_sd = 0.05;

  void validate() const;
};

struct ModelState {
  std::vector<int> z;            // length n, labels 0..K-1
  std::vector<double> lambda0;   // length K
  std::vector<double> beta;      // length p
  std::vector<int> gamma;        // length p, 0/1

  std::size_t K() const { return lambda0.size(); }
  // Throws DomainError on gaps in labels, length mismatch or lambda0 <= 0.
  void validate(std::size_t n, std::size_t p) const;
};

// True when the labels are exactly {0, ..., K-1}.
bool labels_contiguous(std::span<const int> z, std::size_t K);

std::vector<int> component_sizes(std::span<const int> z, std::size_t K);

struct BoxAssignment {
  std::vector<std::size_t> box_of_point;
  std::vector<std::int64_t> m;
};

// Throws DataError naming the first offending point index.
BoxAssignment assign_points(const PointPattern& pattern, const GridPartition& grid);

struct SufficientStats {
  std::vector<std::int64_t> m;          // points per box
  std::vector<double> covariate_sum;    // n x p, sum of X(s_l) over points in box
  std::vector<double> N_per_component;  // length K
  std::vector<double> LambdaI;          // Lambda_i(beta) for the current beta
  std::size_t N = 0;

  std::span<const double> covariate_sum_of(std::size_t i, std::size_t p) const {
    return {covariate_sum.data() + i * p, p};
  }
  void refresh_intensity(const GridPartition& grid, const CovariateField& covariates,
                         std::span<const double> beta);
  void refresh_components(std::span<const int> z, std::size_t K);
};

SufficientStats compute_stats(const PointPattern& pattern, const GridPartition& grid,
                              const CovariateField& covariates);

// Counts-only statistics: covariate sums m_i * X_i. Requires an aligned raster.
SufficientStats stats_from_counts(std::vector<std::int64_t> m, const GridPartition& grid,
                                  const CovariateField& covariates);

// Grid, covariates, points and their sufficient statistics.
struct Dataset {
  GridPartition grid;
  CovariateField covariates;
  PointPattern pattern;
  SufficientStats stats;

  static Dataset build(GridPartition grid, CovariateField covariates, PointPattern pattern);
};

// Lambda_i(beta) = integral over A_i of exp(X(s)' beta) ds, in nominal area units.
double integrated_intensity(const GridPartition& grid, const CovariateField& covariates,
                            std::span<const double> beta, std::size_t i);

std::vector<double> integrated_intensities(const GridPartition& grid,
                                           const CovariateField& covariates,
                                           std::span<const double> beta);

// Per-box log-likelihood terms m_i log lambda0[z_i] + S_i' beta - lambda0[z_i] Lambda_i,
// with S_i the covariate sum over points in A_i. Terms constant in the
// parameters are dropped.
std::vector<double> box_log_likelihood(const ModelState& state, const SufficientStats& stats,
                                       const GridPartition& grid,
                                       const CovariateField& covariates);

double log_likelihood(const ModelState& state, const SufficientStats& stats,
                      const GridPartition& grid, const CovariateField& covariates);

// Expected count lambda0[z_i] * Lambda_i(beta) for every box.
std::vector<double> expected_box_counts(const ModelState& state, const GridPartition& grid,
                                        const CovariateField& covariates);

}  // namespace pcrp
