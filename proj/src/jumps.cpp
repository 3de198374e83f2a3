#include "nrmpp/jumps.hpp"

#include <cmath>
#include <stdexcept>

#include "nrmpp/specfun.hpp"

namespace nrmpp {

namespace {
void check_u(double u) {
  if (!(u >= 0.0)) throw std::invalid_argument("jump transform: u must be non-negative");
}
}  // namespace

JumpModel::JumpModel(double shape_, double rate_) : shape(shape_), rate(rate_) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("JumpModel: shape and rate must be positive");
}

double JumpModel::log_psi(double u) const {
  check_u(u);
  return -shape * std::log1p(u / rate);
}

double JumpModel::psi(double u) const { return std::exp(log_psi(u)); }

double JumpModel::log_kappa(double u, long n) const {
  check_u(u);
  if (n < 0) throw std::invalid_argument("kappa: negative n");
  return log_pochhammer(shape, n) + shape * std::log(rate) - (shape + n) * std::log(rate + u);
}

double JumpModel::kappa(double u, long n) const { return std::exp(log_kappa(u, n)); }

double JumpModel::kappa_ratio(double u, long n) const {
  check_u(u);
  return (shape + n) / (rate + u);
}

double JumpModel::sample(double u, long n, Rng& rng) const {
  check_u(u);
  return rgamma(rng, shape + n, rate + u);
}

double psi(const JumpModel& jm, double u) { return jm.psi(u); }
double kappa(const JumpModel& jm, double u, long n) { return jm.kappa(u, n); }
double sample_jump(const JumpModel& jm, double u, long n, Rng& rng) { return jm.sample(u, n, rng); }

}  // namespace nrmpp
