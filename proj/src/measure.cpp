#include "nrmpp/measure.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nrmpp {

InvGamma::InvGamma(double shape_, double scale_) : shape(shape_), scale(scale_) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw std::invalid_argument("InvGamma: shape, scale > 0");
}

double InvGamma::sample(Rng& rng) const { return scale / rgamma(rng, shape, 1.0); }

double InvGamma::log_pdf(double v) const {
  if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - scale / v;
}

double InvGamma::mean() const {
  return shape > 1.0 ? scale / (shape - 1.0) : std::numeric_limits<double>::infinity();
}

double DiscreteMeasure::total_mass() const {
  return std::accumulate(jumps.begin(), jumps.end(), 0.0);
}

std::vector<double> DiscreteMeasure::normalized() const {
  const double t = total_mass();
  std::vector<double> w(jumps);
  if (t > 0.0)
    for (double& x : w) x /= t;
  return w;
}

void DiscreteMeasure::add(const double* x, double v, double s) {
  locations.push_back(x);
  variances.push_back(v);
  jumps.push_back(s);
}

}  // namespace nrmpp
