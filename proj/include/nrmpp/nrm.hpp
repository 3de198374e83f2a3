#pragma once

#include <cstdint>
#include <vector>

#include "nrmpp/jumps.hpp"
#include "nrmpp/measure.hpp"
#include "nrmpp/pointproc.hpp"

namespace nrmpp {

/// Atoms from simulate(pp), i.i.d. jumps from H and i.i.d. variance marks.
DiscreteMeasure sample_nrm(const ProcessModel& pp, const JumpModel& jm, const InvGamma& vprior,
                           Rng& rng);

struct PriorMoments {
  double mean_mu_a = 0.0;
  double cov_mu_ab = 0.0;
  double mean_p_a = 0.0;
  // Monte-Carlo standard errors; zero for analytic or quadrature values
  double se_mean_mu_a = 0.0;
  double se_cov_mu_ab = 0.0;
  double se_mean_p_a = 0.0;
  bool monte_carlo = false;
};

/// E[mu(A)], Cov(mu(A), mu(B)) and E[p(A)]. Analytic/quadrature for Poisson,
/// DPP and SNCP; Monte Carlo (mc_samples draws) for Strauss.
PriorMoments prior_moments(const ProcessModel& pp, const JumpModel& jm, const Region& a,
                           const Region& b, int mc_samples = 20000, std::uint64_t seed = 11);

/// The same three functionals estimated from n_sim prior draws.
PriorMoments prior_moments_mc(const ProcessModel& pp, const JumpModel& jm, const Region& a,
                              const Region& b, int n_sim, Rng& rng);

/// First moment measure M(A) and factorial second moment measure M^[2](A x B).
double moment_measure(const ProcessModel& pp, const Region& a);
double factorial_moment_measure2(const ProcessModel& pp, const Region& a, const Region& b);

struct KnJoint {
  double value = 0.0;       // density of (K_n = k, Y* = anchors) w.r.t. Lebesgue^k
  double log_value = 0.0;
  double tail_bound = 0.0;  // bound on the truncated part of the sum over r
};

/// Joint law of the number and locations of distinct values under Gamma jumps.
KnJoint joint_kn_law(const ProcessModel& pp, const JumpModel& jm, int n, const PointConfig& anchors,
                     int r_max = 200);

struct SncpKnPmf {
  std::vector<double> pmf;   // index k = 0..n, pmf[0] = 0
  double normalizer = 0.0;   // total mass before renormalization
  double tail_bound = 0.0;
};

/// P(K_n = k) for an SNCP prior with Gamma jumps.
SncpKnPmf sncp_kn_pmf(const Sncp& s, const JumpModel& jm, int n, int r_max = 200);

}  // namespace nrmpp
