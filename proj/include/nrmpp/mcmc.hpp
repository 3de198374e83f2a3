#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nrmpp/jumps.hpp"
#include "nrmpp/measure.hpp"
#include "nrmpp/mixture.hpp"
#include "nrmpp/pointproc.hpp"

namespace nrmpp {

/// Full sampler state. Atoms 0..k_active-1 carry the observations.
/// The marginal sampler keeps jumps empty and only the active atoms.
struct MixtureState {
  std::vector<int> c;
  PointConfig x;
  std::vector<double> v;
  std::vector<double> s;
  int k_active = 0;
  double u = 1.0;
  // SNCP latents: centers and the center label of every atom
  PointConfig centers;
  std::vector<int> t;

  explicit MixtureState(int q = 1) : x(q), centers(q) {}
  std::size_t n_atoms() const { return v.size(); }
  double total_mass() const;
  std::vector<int> counts() const;  // n_h for active atoms
  /// Number of distinct center labels among active atoms (SNCP).
  int n_groups() const;
  /// Group label of each observation, canonically relabelled 0,1,...
  std::vector<int> group_of_observations() const;
};

/// Throws std::logic_error on any violated state invariant.
void check_invariants(const MixtureState& st, std::size_t n, bool marginal);

enum class Algorithm { conditional, marginal };

struct ChainConfig {
  long n_iter = 2000;
  long burn_in = 500;
  long thin = 1;
  std::uint64_t seed = 1;
  Algorithm algorithm = Algorithm::conditional;
  int neal_l = 3;
  double atom_step = 0.25;    // random-walk sd for atom coordinates
  double log_u_step = 0.5;    // random-walk sd for log u (marginal)
  int atom_mh_steps = 1;      // MH updates per coordinate per sweep
  int gibbs_bd_sweeps = 5;    // birth-death sweeps per non-active Strauss update
  bool store_measures = false;
  int init_clusters = 1;
};

void validate(const ChainConfig& cfg);

/// Everything the samplers need besides the state.
struct Model {
  ProcessModel pp;
  JumpModel jm;
  InvGamma vprior;
};

MixtureState initial_state(const Dataset& data, const Model& m, const ChainConfig& cfg, Rng& rng);

/// Non-active atoms given the active ones and u: Palm process tilted by psi(u),
/// tilted jumps, prior variances. `current` seeds the Strauss birth-death chain.
DiscreteMeasure sample_nonactive(const ProcessModel& pp, const PointConfig& anchors, double u,
                                 const JumpModel& jm, const InvGamma& vprior, Rng& rng,
                                 const PointConfig* current = nullptr, int bd_sweeps = 5);

void conditional_step(MixtureState& st, const Dataset& data, const Model& m, const ChainConfig& cfg,
                      Rng& rng);
void marginal_step(MixtureState& st, const Dataset& data, const Model& m, const ChainConfig& cfg,
                   Rng& rng);
void sncp_conditional_step(MixtureState& st, const Dataset& data, const Sncp& s, const JumpModel& jm,
                           const InvGamma& vprior, const ChainConfig& cfg, Rng& rng);

/// Predictive structure given distinct values y* and u: an observation joins
/// cluster j with weight (alpha+n_j)/(theta+u), or a new value at y with
/// density kappa(u,1) * m_{k+1}(y*, y)/m_k(y*) * L(u; y*, y)/L(u; y*).
class Predictive {
 public:
  Predictive(const ProcessModel& pp, const JumpModel& jm, double u, const PointConfig& anchors,
             const GibbsBatch* batch = nullptr);
  double log_existing_weight(long n_j) const;
  double log_new_density(const double* y) const;
  double log_laplace() const { return log_laplace_; }

 private:
  const ProcessModel* pp_;
  const JumpModel* jm_;
  const GibbsBatch* batch_;
  double u_, psi_, log_kappa1_;
  PointConfig anchors_;
  double log_laplace_ = 0.0;
  PalmDescriptor palm_;
  double gibbs_den_ = 0.0;
};

/// Log joint of u, the distinct values and the partition, up to data terms.
double marginal_log_target(const ProcessModel& pp, const JumpModel& jm, double u,
                           const PointConfig& ystar, const std::vector<int>& counts,
                           const GibbsBatch* batch = nullptr);

struct TraceRecord {
  long iteration = 0;
  int k = 0;
  int n_groups = 0;
  int n_atoms = 0;
  double u = 0.0;
  double total_mass = 0.0;
  std::vector<int> allocations;
  std::vector<int> groups;  // SNCP only
};

struct Trace {
  std::string algorithm;
  std::string family;
  std::vector<TraceRecord> records;
  std::vector<DiscreteMeasure> measures;
  bool has_groups = false;
};

/// Runs one chain; burn-in discarded, thinned. `on_record` (optional) is called
/// for every kept record. Deterministic given cfg.seed and chain index.
Trace run_chain(const ChainConfig& cfg, const Dataset& data, const Model& m, int chain = 0,
                const std::function<void(const TraceRecord&)>& on_record = {});

/// Newline-delimited JSON, one record per line; atoms included when given.
std::string trace_record_json(const TraceRecord& r, const DiscreteMeasure* atoms = nullptr);
void write_trace_ndjson(const Trace& tr, const std::string& path);
void write_trace_csv(const Trace& tr, const std::string& path);

}  // namespace nrmpp
