#pragma once

#include <cstddef>
#include <vector>

#include "nrmpp/rng.hpp"

namespace nrmpp {

/// Axis-aligned box in R^q.
struct Region {
  std::vector<double> lower, upper;

  Region() = default;
  Region(std::vector<double> lo, std::vector<double> hi);
  static Region interval(double a, double b) { return Region({a}, {b}); }

  int dim() const { return static_cast<int>(lower.size()); }
  double side(int i) const { return upper[i] - lower[i]; }
  double volume() const;
  bool contains(const double* x) const;
  bool contains(const Region& inner) const;
  void sample_uniform(Rng& rng, double* out) const;
  Region intersect(const Region& other) const;  // may be empty (volume 0)
};

/// A finite set of points in R^q, stored row-major.
class PointConfig {
 public:
  explicit PointConfig(int q = 1) : q_(q) {}
  PointConfig(int q, std::vector<double> coords);

  int dim() const { return q_; }
  std::size_t size() const { return coords_.size() / q_; }
  bool empty() const { return coords_.empty(); }
  const double* operator[](std::size_t i) const { return coords_.data() + i * q_; }
  double* operator[](std::size_t i) { return coords_.data() + i * q_; }
  void push_back(const double* x) { coords_.insert(coords_.end(), x, x + q_); }
  void push_back(double x) { push_back(&x); }
  void erase(std::size_t i);
  void clear() { coords_.clear(); }
  void append(const PointConfig& other);
  PointConfig subset(const std::vector<int>& idx) const;
  const std::vector<double>& data() const { return coords_; }
  std::vector<double>& data() { return coords_; }

 private:
  int q_;
  std::vector<double> coords_;
};

inline double sqdist(const double* a, const double* b, int q) {
  double s = 0.0;
  for (int i = 0; i < q; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace nrmpp
