#pragma once

#include <vector>

#include "nrmpp/geometry.hpp"
#include "nrmpp/measure.hpp"

namespace nrmpp {

/// Observations Z_1..Z_n in R^q.
struct Dataset {
  PointConfig points;

  Dataset() = default;
  explicit Dataset(PointConfig pts);
  int dim() const { return points.dim(); }
  std::size_t size() const { return points.size(); }
};

/// Isotropic Gaussian log-density N(z; y, v I).
double log_kernel(const double* z, const double* y, double v, int q);

struct DensityEstimate {
  std::vector<double> values;
  long skipped_empty = 0;
};

/// Posterior-mean mixture density on a grid of points.
DensityEstimate density_estimate(const std::vector<DiscreteMeasure>& draws, const PointConfig& grid);

}  // namespace nrmpp
