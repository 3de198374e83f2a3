#pragma once

#include <vector>

#include "nrmpp/geometry.hpp"
#include "nrmpp/rng.hpp"

namespace nrmpp {

/// Inverse-Gamma(shape, scale) law of the component variances.
struct InvGamma {
  double shape = 2.0;
  double scale = 2.0;

  InvGamma() = default;
  InvGamma(double shape_, double scale_);

  double sample(Rng& rng) const;
  double log_pdf(double v) const;
  double mean() const;  // infinite for shape <= 1
};

/// Atoms (location, variance mark, jump) of an unnormalized random measure.
struct DiscreteMeasure {
  PointConfig locations;
  std::vector<double> variances;
  std::vector<double> jumps;

  explicit DiscreteMeasure(int q = 1) : locations(q) {}
  std::size_t size() const { return jumps.size(); }
  bool empty() const { return jumps.empty(); }
  double total_mass() const;
  /// Jumps divided by the total mass; empty for the zero measure.
  std::vector<double> normalized() const;
  void add(const double* x, double v, double s);
};

}  // namespace nrmpp
