#pragma once

#include "nrmpp/rng.hpp"

namespace nrmpp {

/// Gamma(shape, rate) law H of the unnormalized jumps.
struct JumpModel {
  double shape = 1.0;
  double rate = 1.0;

  JumpModel() = default;
  JumpModel(double shape_, double rate_);

  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }

  /// Laplace transform E[exp(-uS)].
  double psi(double u) const;
  double log_psi(double u) const;
  /// kappa(u, n) = int exp(-us) s^n H(ds)
  double kappa(double u, long n) const;
  double log_kappa(double u, long n) const;
  /// kappa(u, n+1) / kappa(u, n)
  double kappa_ratio(double u, long n) const;
  /// Draw from the tilted law exp(-us) s^n H(ds), i.e. Gamma(shape+n, rate+u).
  double sample(double u, long n, Rng& rng) const;
};

double psi(const JumpModel& jm, double u);
double kappa(const JumpModel& jm, double u, long n);
double sample_jump(const JumpModel& jm, double u, long n, Rng& rng);

}  // namespace nrmpp
