#include "nrmpp/mixture.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nrmpp {

Dataset::Dataset(PointConfig pts) : points(std::move(pts)) {
  if (points.empty()) throw std::invalid_argument("Dataset: no observations");
  for (double v : points.data())
    if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite value");
}

double log_kernel(const double* z, const double* y, double v, int q) {
  if (!(v > 0.0)) throw std::invalid_argument("log_kernel: variance must be positive");
  return -0.5 * q * std::log(2.0 * std::numbers::pi * v) - 0.5 * sqdist(z, y, q) / v;
}

DensityEstimate density_estimate(const std::vector<DiscreteMeasure>& draws, const PointConfig& grid) {
  DensityEstimate out;
  out.values.assign(grid.size(), 0.0);
  long used = 0;
  for (const auto& mu : draws) {
    if (mu.empty() || !(mu.total_mass() > 0.0)) {
      ++out.skipped_empty;
      continue;
    }
    const std::vector<double> w = mu.normalized();
    const int q = mu.locations.dim();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double f = 0.0;
      for (std::size_t h = 0; h < mu.size(); ++h)
        f += w[h] * std::exp(log_kernel(grid[g], mu.locations[h], mu.variances[h], q));
      out.values[g] += f;
    }
    ++used;
  }
  if (used > 0)
    for (double& v : out.values) v /= static_cast<double>(used);
  return out;
}

}  // namespace nrmpp
