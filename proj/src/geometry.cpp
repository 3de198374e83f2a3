#include "nrmpp/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace nrmpp {

Region::Region(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.empty() || lower.size() != upper.size())
    throw std::invalid_argument("Region: bounds must be non-empty and of equal length");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(upper[i] > lower[i])) throw std::invalid_argument("Region: upper must exceed lower");
}

double Region::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= std::max(0.0, side(i));
  return v;
}

bool Region::contains(const double* x) const {
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  return true;
}

bool Region::contains(const Region& inner) const {
  if (inner.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (inner.lower[i] < lower[i] || inner.upper[i] > upper[i]) return false;
  return true;
}

void Region::sample_uniform(Rng& rng, double* out) const {
  for (int i = 0; i < dim(); ++i) out[i] = lower[i] + side(i) * runif(rng);
}

Region Region::intersect(const Region& other) const {
  Region r;
  r.lower.resize(dim());
  r.upper.resize(dim());
  for (int i = 0; i < dim(); ++i) {
    r.lower[i] = std::max(lower[i], other.lower[i]);
    r.upper[i] = std::max(r.lower[i], std::min(upper[i], other.upper[i]));
  }
  return r;
}

PointConfig::PointConfig(int q, std::vector<double> coords) : q_(q), coords_(std::move(coords)) {
  if (q < 1 || coords_.size() % q != 0)
    throw std::invalid_argument("PointConfig: coordinate count not a multiple of dimension");
}

void PointConfig::erase(std::size_t i) {
  coords_.erase(coords_.begin() + i * q_, coords_.begin() + (i + 1) * q_);
}

void PointConfig::append(const PointConfig& other) {
  if (other.q_ != q_) throw std::invalid_argument("PointConfig: dimension mismatch");
  coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
}

PointConfig PointConfig::subset(const std::vector<int>& idx) const {
  PointConfig out(q_);
  for (int i : idx) out.push_back((*this)[i]);
  return out;
}

}  // namespace nrmpp
