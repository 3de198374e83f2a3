#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "nrmpp/geometry.hpp"
#include "nrmpp/jumps.hpp"
#include "nrmpp/rng.hpp"
#include "nrmpp/spectral.hpp"

namespace nrmpp {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct Poisson {
  double rate = 1.0;
  Region region;
};

/// Strauss density g(nu) = beta^n gamma_s^{s_r(nu)} w.r.t. the unit-rate Poisson process on R.
struct Strauss {
  double beta = 1.0;
  double gamma_s = 1.0;
  double radius = 0.1;
  Region region;
  int bd_sweeps = 0;      // 0: automatic, max(50, 10 beta |R|)
  int mc_samples = 2000;  // reference Poisson batch for moment densities
  std::uint64_t mc_seed = 7;
};

struct Dpp {
  double rho = 1.0;
  double alpha = 0.1;
  Region region;
  std::shared_ptr<const SpectralBasis> spectrum;
};

struct SncpBase {
  enum class Kind { gaussian, uniform };
  Kind kind = Kind::gaussian;
  double lambda = 1.0;        // total mass of the base intensity
  std::vector<double> mean;   // gaussian
  double sd = 1.0;            // gaussian
  Region region;              // uniform
};

/// Shot-noise Cox process: Lambda ~ PP(omega), Phi | Lambda ~ PP(gamma sum_m k(x - lambda_m)).
struct Sncp {
  double gamma = 1.0;
  double kernel_sd = 1.0;
  SncpBase base;
  int dim() const;
};

using ProcessModel = std::variant<Poisson, Strauss, Dpp, Sncp>;

enum class DppBasis { fourier, nystrom };

/// Gaussian-kernel DPP. The Fourier basis is validated (all eigenvalues < 1).
/// A Nystrom basis of the exact kernel is validated only when `validate` is set.
Dpp make_dpp(double rho, double alpha, const Region& region, DppBasis basis = DppBasis::fourier,
             double cutoff_tol = 1e-6, int nystrom_m = 200, bool validate = true);

int dim(const ProcessModel& pp);
/// Region that carries the atoms, or nullptr for the unbounded SNCP.
const Region* support(const ProcessModel& pp);
const char* family_name(const ProcessModel& pp);

// --- Palm descriptors ---------------------------------------------------

struct PalmSamePoisson {};

struct PalmGibbs {
  PointConfig anchors;
};

/// Reduced Palm of a finite-rank DPP in eigen-coordinates: K'(x,y) = e(x)^T M e(y).
struct PalmDpp {
  std::shared_ptr<const SpectralBasis> basis;
  PointConfig anchors;
  Eigen::MatrixXd m;        // r x r, Schur complement of the kernel at the anchors
  Eigen::VectorXd lambda;   // eigenvalues of m (Palm kernel eigenvalues)
  Eigen::MatrixXd vectors;  // eigenvectors of m, columns

  double kernel(const double* x, const double* y) const;
};

/// Reduced Palm of an SNCP: mixture over set partitions of the anchors, one
/// shared parent per block, plus an independent copy of the process.
struct PalmSncp {
  PointConfig anchors;
  // exact mixture (anchors <= 12): log-normalizer table over subsets
  std::vector<double> log_eta;     // indexed by subset bitmask
  std::vector<double> log_f;       // sum over partitions of the subset
  std::vector<double> block_prob;  // P(|pi| = j), j = 0..k
  // fixed partition, used by samplers that carry group labels
  std::vector<std::vector<int>> fixed_blocks;

  bool is_fixed() const { return !fixed_blocks.empty() || anchors.empty(); }
  /// Enumerates (blocks, probability) for the mixture; small k only.
  std::vector<std::pair<std::vector<std::vector<int>>, double>> partition_terms() const;
  std::vector<std::vector<int>> sample_partition(Rng& rng) const;
};

using PalmDescriptor = std::variant<PalmSamePoisson, PalmGibbs, PalmDpp, PalmSncp>;

// --- Gibbs reference batch ---------------------------------------------

/// Poisson(beta) configurations on R with uniform marks, reused across
/// evaluations so that Monte-Carlo ratios are smooth (common random numbers).
struct GibbsBatch {
  std::vector<PointConfig> configs;
  std::vector<std::vector<double>> marks;
};

GibbsBatch make_gibbs_batch(const Strauss& st, int m, Rng& rng);
/// Batch drawn from the model's own seed and sample count.
GibbsBatch default_gibbs_batch(const Strauss& st);

/// log E_{PP(1)}[psi^{N} g(N + Y)] estimated on the batch.
Estimate gibbs_log_expectation(const Strauss& st, const GibbsBatch& batch, const PointConfig& y,
                               double psi);

/// Number of Strauss close pairs within the configuration and across two configurations.
long strauss_pairs(const Strauss& st, const PointConfig& a);
long strauss_pairs(const Strauss& st, const PointConfig& a, const PointConfig& b);

// --- operations ---------------------------------------------------------

PointConfig simulate(const ProcessModel& pp, Rng& rng);

struct SncpDraw {
  PointConfig points;
  PointConfig centers;
  std::vector<int> labels;  // center index of each point
};
SncpDraw simulate_sncp(const Sncp& s, Rng& rng);

/// Birth-death Metropolis-Hastings for the density activity^n gamma_s^{s(nu)+s(nu,anchors)}.
PointConfig strauss_birth_death(const Strauss& st, const PointConfig& anchors, double activity,
                                PointConfig init, long steps, Rng& rng);
long strauss_default_steps(const Strauss& st);

/// Projection-DPP sampling with rejection from the uniform envelope.
/// Row i of coeffs gives the i-th orthonormal function as coeffs.row(i) * e(x).
PointConfig sample_projection_dpp(const SpectralBasis& basis, const Eigen::MatrixXd& coeffs,
                                  double envelope, Rng& rng);

double log_papangelou(const ProcessModel& pp, const PointConfig& nu, const PointConfig& xs);

Estimate log_moment_density(const ProcessModel& pp, const PointConfig& pts);
Estimate log_moment_density(const ProcessModel& pp, const PointConfig& pts, const GibbsBatch& batch);

PalmDescriptor reduced_palm(const ProcessModel& pp, const PointConfig& anchors);
/// SNCP Palm with the anchors' partition into shared-parent blocks given.
PalmSncp sncp_palm_fixed(const Sncp& s, const PointConfig& anchors,
                         std::vector<std::vector<int>> blocks);

Estimate log_tilted_laplace(const ProcessModel& pp, const PointConfig& anchors, double u,
                            const JumpModel& jm, int mc_samples = 2000);
Estimate log_tilted_laplace(const ProcessModel& pp, const PalmDescriptor& palm, double u,
                            const JumpModel& jm, const GibbsBatch* batch = nullptr);

/// Law of the Palm count Phi^!(X): pmf on 0..r_max, plus the tail mass beyond r_max.
struct CountLaw {
  std::vector<double> pmf;
  double tail = 0.0;
};
CountLaw palm_count_law(const ProcessModel& pp, const PalmDescriptor& palm, int r_max);

/// E[Phi^!(X)] for the descriptor.
double palm_mean_count(const ProcessModel& pp, const PalmDescriptor& palm);

// --- DPP helpers ----------------------------------------------------------

/// log det [C(x_i, x_j)] with C = K (I - K)^{-1}.
double dpp_log_cdet(const SpectralBasis& basis, const PointConfig& pts);
/// C-form Palm matrix G = Gamma - Gamma E (E^T Gamma E)^{-1} E^T Gamma in eigen-coordinates.
Eigen::MatrixXd dpp_cform_palm(const SpectralBasis& basis, const PointConfig& anchors);

// --- SNCP helpers ---------------------------------------------------------

/// log eta(x_C) = log int prod_{i in C} k(x_i - v) omega(dv).
double sncp_log_eta(const Sncp& s, const PointConfig& pts);
/// Draw a parent for the given block of points from prod k(x_i - v) omega(dv).
void sncp_sample_parent(const Sncp& s, const PointConfig& block, Rng& rng, double* out);
double sncp_log_kernel(const Sncp& s, const double* x, const double* center);
/// Probability that the base measure charges the box A around x: int_A eta(x) dx / lambda.
double sncp_box_mass(const Sncp& s, const Region& a);

}  // namespace nrmpp
