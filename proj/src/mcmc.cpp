#include "nrmpp/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "nrmpp/specfun.hpp"

namespace nrmpp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int categorical_log(const std::vector<double>& logw, Rng& rng) {
  const double mx = *std::max_element(logw.begin(), logw.end());
  if (mx == kNegInf) throw std::runtime_error("categorical draw: all weights vanish");
  double tot = 0.0;
  for (double lw : logw) tot += std::exp(lw - mx);
  double r = runif(rng) * tot;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    r -= std::exp(logw[i] - mx);
    if (r <= 0.0) return static_cast<int>(i);
  }
  for (std::size_t i = logw.size(); i-- > 0;)
    if (logw[i] > kNegInf) return static_cast<int>(i);
  return 0;
}

// Reorders atoms so that the active ones come first, in order of first use.
void relabel(MixtureState& st) {
  const std::size_t na = st.n_atoms();
  std::vector<int> order, newidx(na, -1);
  for (int ci : st.c)
    if (newidx[ci] < 0) {
      newidx[ci] = static_cast<int>(order.size());
      order.push_back(ci);
    }
  st.k_active = static_cast<int>(order.size());
  for (std::size_t h = 0; h < na; ++h)
    if (newidx[h] < 0) {
      newidx[h] = static_cast<int>(order.size());
      order.push_back(static_cast<int>(h));
    }
  PointConfig x(st.x.dim());
  std::vector<double> v, s;
  std::vector<int> t;
  for (int h : order) {
    x.push_back(st.x[h]);
    v.push_back(st.v[h]);
    if (!st.s.empty()) s.push_back(st.s[h]);
    if (!st.t.empty()) t.push_back(st.t[h]);
  }
  st.x = std::move(x);
  st.v = std::move(v);
  st.s = std::move(s);
  st.t = std::move(t);
  for (int& ci : st.c) ci = newidx[ci];
}

void truncate_to_active(MixtureState& st) {
  const int k = st.k_active;
  PointConfig x(st.x.dim());
  for (int h = 0; h < k; ++h) x.push_back(st.x[h]);
  st.x = std::move(x);
  st.v.resize(k);
  if (!st.s.empty()) st.s.resize(k);
  if (!st.t.empty()) st.t.resize(k);
}

std::vector<std::vector<int>> members(const MixtureState& st) {
  std::vector<std::vector<int>> m(st.k_active);
  for (std::size_t i = 0; i < st.c.size(); ++i) m[st.c[i]].push_back(static_cast<int>(i));
  return m;
}

void allocate(MixtureState& st, const Dataset& data, Rng& rng) {
  const int q = data.dim();
  const std::size_t na = st.n_atoms();
  std::vector<double> logw(na), logs(na);
  for (std::size_t h = 0; h < na; ++h) logs[h] = std::log(st.s[h]);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t h = 0; h < na; ++h) logw[h] = logs[h] + log_kernel(data.points[i], st.x[h], st.v[h], q);
    st.c[i] = categorical_log(logw, rng);
  }
}

void update_variances(MixtureState& st, const Dataset& data, const InvGamma& vp, Rng& rng) {
  const int q = data.dim();
  const auto mem = members(st);
  for (int h = 0; h < st.k_active; ++h) {
    double ss = 0.0;
    for (int i : mem[h]) ss += sqdist(data.points[i], st.x[h], q);
    const double a = vp.shape + 0.5 * q * mem[h].size();
    const double b = vp.scale + 0.5 * ss;
    st.v[h] = b / rgamma(rng, a, 1.0);
  }
}

double cluster_loglik(const Dataset& data, const std::vector<int>& mem, const double* x, double v) {
  double ll = 0.0;
  for (int i : mem) ll += log_kernel(data.points[i], x, v, data.dim());
  return ll;
}

// log f_Phi of the atom configuration, up to a constant, for the conditional sampler
double log_process_density(const ProcessModel& pp, const PointConfig& pts) {
  if (const Region* r = support(pp))
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (!r->contains(pts[i])) return kNegInf;
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    const long s = strauss_pairs(*st, pts);
    if (s == 0) return 0.0;
    return st->gamma_s > 0.0 ? s * std::log(st->gamma_s) : kNegInf;
  }
  if (const auto* d = std::get_if<Dpp>(&pp)) return dpp_log_cdet(*d->spectrum, pts);
  return 0.0;
}

// change in log f_Phi when atom h moves, for the cheap families
double log_density_local(const ProcessModel& pp, const PointConfig& pts, std::size_t h, const double* y) {
  const Region* r = support(pp);
  if (r && !r->contains(y)) return kNegInf;
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    const double r2 = st->radius * st->radius;
    long c = 0;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != h && sqdist(pts[j], y, pts.dim()) <= r2) ++c;
    if (c == 0) return 0.0;
    return st->gamma_s > 0.0 ? c * std::log(st->gamma_s) : kNegInf;
  }
  return 0.0;
}

double log_joint_unique(const ProcessModel& pp, const JumpModel& jm, double u, const PointConfig& ystar,
                        const GibbsBatch* batch) {
  // log [m_k(y*) L(u; y*)]
  if (const auto* p = std::get_if<Poisson>(&pp)) {
    for (std::size_t i = 0; i < ystar.size(); ++i)
      if (!p->region.contains(ystar[i])) return kNegInf;
    return ystar.size() * std::log(p->rate) + p->rate * p->region.volume() * (jm.psi(u) - 1.0);
  }
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    for (std::size_t i = 0; i < ystar.size(); ++i)
      if (!st->region.contains(ystar[i])) return kNegInf;
    return gibbs_log_expectation(*st, *batch, ystar, jm.psi(u)).value -
           gibbs_log_expectation(*st, *batch, PointConfig(ystar.dim()), 1.0).value;
  }
  if (std::holds_alternative<Dpp>(pp)) {
    try {
      const Estimate lm = log_moment_density(pp, ystar);
      if (lm.value == kNegInf) return kNegInf;
      const PalmDescriptor palm = reduced_palm(pp, ystar);
      return lm.value + log_tilted_laplace(pp, palm, u, jm).value;
    } catch (const std::domain_error&) {
      return kNegInf;
    }
  }
  throw std::invalid_argument("marginal sampler: the SNCP prior uses the conditional sampler");
}

}  // namespace

// --- state -------------------------------------------------------------------

double MixtureState::total_mass() const { return std::accumulate(s.begin(), s.end(), 0.0); }

std::vector<int> MixtureState::counts() const {
  std::vector<int> n(k_active, 0);
  for (int ci : c) ++n[ci];
  return n;
}

int MixtureState::n_groups() const {
  if (t.empty()) return k_active;
  std::vector<int> g(t.begin(), t.begin() + k_active);
  std::sort(g.begin(), g.end());
  return static_cast<int>(std::unique(g.begin(), g.end()) - g.begin());
}

std::vector<int> MixtureState::group_of_observations() const {
  std::vector<int> out(c.size());
  std::map<int, int> canon;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int raw = t.empty() ? c[i] : t[c[i]];
    auto it = canon.find(raw);
    if (it == canon.end()) it = canon.emplace(raw, static_cast<int>(canon.size())).first;
    out[i] = it->second;
  }
  return out;
}

void check_invariants(const MixtureState& st, std::size_t n, bool marginal) {
  auto fail = [](const std::string& what) { throw std::logic_error("state invariant violated: " + what); };
  if (st.c.size() != n) fail("allocation length");
  if (st.v.size() != st.x.size()) fail("variance count");
  if (!marginal && st.s.size() != st.v.size()) fail("jump count");
  if (marginal && static_cast<int>(st.v.size()) != st.k_active) fail("marginal state carries non-active atoms");
  if (!(st.u > 0.0)) fail("u must be positive");
  std::vector<int> cnt(st.k_active, 0);
  for (int ci : st.c) {
    if (ci < 0 || ci >= st.k_active) fail("allocation outside active atoms");
    ++cnt[ci];
  }
  for (int x : cnt)
    if (x < 1) fail("empty active atom");
  for (double v : st.v)
    if (!(v > 0.0)) fail("non-positive variance");
  for (double s : st.s)
    if (!(s > 0.0)) fail("non-positive jump");
  if (!st.t.empty()) {
    if (st.t.size() != st.v.size()) fail("center label count");
    for (int t : st.t)
      if (t < 0 || t >= static_cast<int>(st.centers.size())) fail("center label out of range");
  }
}

void validate(const ChainConfig& cfg) {
  if (cfg.n_iter <= cfg.burn_in || cfg.burn_in < 0) throw std::invalid_argument("chain: need n_iter > burn_in >= 0");
  if (cfg.thin < 1) throw std::invalid_argument("chain: thin >= 1");
  if (cfg.neal_l < 1) throw std::invalid_argument("chain: neal_l >= 1");
  if (!(cfg.atom_step > 0.0) || !(cfg.log_u_step > 0.0)) throw std::invalid_argument("chain: step sizes > 0");
  if (cfg.atom_mh_steps < 1 || cfg.gibbs_bd_sweeps < 1) throw std::invalid_argument("chain: step counts >= 1");
  if (cfg.init_clusters < 1) throw std::invalid_argument("chain: init_clusters >= 1");
}

MixtureState initial_state(const Dataset& data, const Model& m, const ChainConfig& cfg, Rng& rng) {
  const int q = data.dim();
  const std::size_t n = data.size();
  if (dim(m.pp) != q) throw std::invalid_argument("data dimension does not match the process");
  MixtureState st(q);
  const Region* r = support(m.pp);
  const int k0 = static_cast<int>(std::min<std::size_t>(cfg.init_clusters, n));
  // seeds at evenly spaced observations in the order of the first coordinate
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return data.points[a][0] < data.points[b][0]; });
  std::vector<double> y(q);
  for (int h = 0; h < k0; ++h) {
    const int i = idx[(2 * h + 1) * n / (2 * k0)];
    for (int d = 0; d < q; ++d) {
      y[d] = data.points[i][d];
      if (r) {
        const double pad = 1e-3 * r->side(d);
        y[d] = std::clamp(y[d], r->lower[d] + pad * (h + 1), r->upper[d] - pad * (k0 - h));
      }
    }
    st.x.push_back(y.data());
  }
  st.c.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int h = 0; h < k0; ++h) {
      const double d2 = sqdist(data.points[i], st.x[h], q);
      if (d2 < best) {
        best = d2;
        st.c[i] = h;
      }
    }
  }
  // data spread as the initial variance
  std::vector<double> mean(q, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < q; ++d) mean[d] += data.points[i][d] / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < q; ++d) ss += std::pow(data.points[i][d] - mean[d], 2);
  const double v0 = n > 1 && ss > 0.0 ? ss / (q * (n - 1.0)) : m.vprior.scale / (m.vprior.shape + 1.0);
  st.v.assign(k0, v0);
  relabel(st);
  truncate_to_active(st);
  if (cfg.algorithm == Algorithm::conditional || std::holds_alternative<Sncp>(m.pp)) {
    st.s.assign(st.k_active, m.jm.mean());
    if (std::holds_alternative<Sncp>(m.pp)) {
      for (int h = 0; h < st.k_active; ++h) {
        st.centers.push_back(st.x[h]);
        st.t.push_back(h);
      }
    }
  }
  st.u = static_cast<double>(n) / std::max(1e-12, st.k_active * m.jm.mean());
  (void)rng;
  return st;
}

// --- non-active part ---------------------------------------------------------

DiscreteMeasure sample_nonactive(const ProcessModel& pp, const PointConfig& anchors, double u,
                                 const JumpModel& jm, const InvGamma& vprior, Rng& rng,
                                 const PointConfig* current, int bd_sweeps) {
  const double psi = jm.psi(u);
  const int q = dim(pp);
  PointConfig pts(q);
  if (const auto* p = std::get_if<Poisson>(&pp)) {
    const long nn = rpois(rng, psi * p->rate * p->region.volume());
    std::vector<double> x(q);
    for (long i = 0; i < nn; ++i) {
      p->region.sample_uniform(rng, x.data());
      pts.push_back(x.data());
    }
  } else if (const auto* st = std::get_if<Strauss>(&pp)) {
    const long per = std::max<long>(10, static_cast<long>(std::ceil(st->beta * st->region.volume())));
    pts = strauss_birth_death(*st, anchors, st->beta * psi, current ? *current : PointConfig(q), bd_sweeps * per,
                              rng);
  } else if (const auto* d = std::get_if<Dpp>(&pp)) {
    const SpectralBasis& sb = *d->spectrum;
    const Eigen::MatrixXd g = dpp_cform_palm(sb, anchors);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    std::vector<int> sel;
    for (int j = 0; j < sb.rank(); ++j) {
      const double gj = std::max(0.0, es.eigenvalues()[j]) * psi;
      const double lam = gj / (1.0 + gj);
      if (!(lam < 1.0)) throw std::domain_error("tilted Palm eigenvalue >= 1");
      if (runif(rng) < lam) sel.push_back(j);
    }
    Eigen::MatrixXd coeffs(static_cast<Eigen::Index>(sel.size()), sb.rank());
    for (std::size_t i = 0; i < sel.size(); ++i)
      coeffs.row(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(sel[i]).transpose();
    pts = sample_projection_dpp(sb, coeffs, sb.sup_norm_sq(), rng);
  } else {
    throw std::invalid_argument("sample_nonactive: the SNCP uses sncp_conditional_step");
  }
  DiscreteMeasure out(q);
  for (std::size_t i = 0; i < pts.size(); ++i) out.add(pts[i], vprior.sample(rng), jm.sample(u, 0, rng));
  return out;
}

// --- conditional sampler -----------------------------------------------------

void conditional_step(MixtureState& st, const Dataset& data, const Model& m, const ChainConfig& cfg,
                      Rng& rng) {
  if (const auto* s = std::get_if<Sncp>(&m.pp)) {
    sncp_conditional_step(st, data, *s, m.jm, m.vprior, cfg, rng);
    return;
  }
  const int q = data.dim();
  const double n = static_cast<double>(data.size());
  // 1. auxiliary u
  st.u = rgamma(rng, n, st.total_mass());
  // 2. allocations
  allocate(st, data, rng);
  relabel(st);
  // 3. active jumps and the non-active part
  const int k = st.k_active;
  const std::vector<int> cnt = st.counts();
  for (int h = 0; h < k; ++h) st.s[h] = m.jm.sample(st.u, cnt[h], rng);
  PointConfig current_na(q);
  for (std::size_t h = k; h < st.n_atoms(); ++h) current_na.push_back(st.x[h]);
  truncate_to_active(st);
  const DiscreteMeasure na = sample_nonactive(m.pp, st.x, st.u, m.jm, m.vprior, rng, &current_na, cfg.gibbs_bd_sweeps);
  for (std::size_t j = 0; j < na.size(); ++j) {
    st.x.push_back(na.locations[j]);
    st.v.push_back(na.variances[j]);
    st.s.push_back(na.jumps[j]);
  }
  // 4. active atom locations
  const auto mem = members(st);
  const bool dpp = std::holds_alternative<Dpp>(m.pp);
  double cur_f = dpp ? log_process_density(m.pp, st.x) : 0.0;
  std::vector<double> y(q);
  for (int h = 0; h < k; ++h) {
    double cur_ll = cluster_loglik(data, mem[h], st.x[h], st.v[h]);
    for (int rep = 0; rep < cfg.atom_mh_steps; ++rep)
      for (int d = 0; d < q; ++d) {
        std::copy(st.x[h], st.x[h] + q, y.begin());
        y[d] += cfg.atom_step * rnorm(rng);
        double prop_f, old_local = 0.0;
        if (dpp) {
          const Region& r = std::get<Dpp>(m.pp).region;
          if (!r.contains(y.data())) continue;
          PointConfig trial = st.x;
          std::copy(y.begin(), y.end(), trial[h]);
          prop_f = log_process_density(m.pp, trial);
        } else {
          prop_f = log_density_local(m.pp, st.x, h, y.data());
          old_local = log_density_local(m.pp, st.x, h, st.x[h]);
        }
        if (prop_f == kNegInf) continue;
        const double prop_ll = cluster_loglik(data, mem[h], y.data(), st.v[h]);
        const double log_ratio = dpp ? prop_f - cur_f + prop_ll - cur_ll : prop_f - old_local + prop_ll - cur_ll;
        if (std::log(runif(rng)) < log_ratio) {
          std::copy(y.begin(), y.end(), st.x[h]);
          cur_ll = prop_ll;
          if (dpp) cur_f = prop_f;
        }
      }
  }
  // 5. variances
  update_variances(st, data, m.vprior, rng);
}

// --- SNCP conditional sampler ------------------------------------------------

void sncp_conditional_step(MixtureState& st, const Dataset& data, const Sncp& s, const JumpModel& jm,
                           const InvGamma& vprior, const ChainConfig& cfg, Rng& rng) {
  (void)cfg;
  const int q = data.dim();
  const double n = static_cast<double>(data.size());
  const double a2 = s.kernel_sd * s.kernel_sd;
  // 1. u
  st.u = rgamma(rng, n, st.total_mass());
  const double psi = jm.psi(st.u);
  // 2. allocations
  allocate(st, data, rng);
  relabel(st);
  const int k = st.k_active;
  const std::vector<int> cnt = st.counts();
  // 3. active jumps, locations (conjugate given the center) and variances
  {
    const auto mem = members(st);
    for (int h = 0; h < k; ++h) {
      st.s[h] = jm.sample(st.u, cnt[h], rng);
      const double prec = 1.0 / a2 + cnt[h] / st.v[h];
      for (int d = 0; d < q; ++d) {
        double sz = 0.0;
        for (int i : mem[h]) sz += data.points[i][d];
        const double mean = (st.centers[st.t[h]][d] / a2 + sz / st.v[h]) / prec;
        st.x[h][d] = mean + rnorm(rng) / std::sqrt(prec);
      }
    }
    update_variances(st, data, vprior, rng);
  }
  truncate_to_active(st);
  // 4. shared parents of the active groups, their offspring, and parents without active children
  PointConfig centers(q);
  std::map<int, int> group;
  for (int h = 0; h < k; ++h)
    if (!group.count(st.t[h])) group.emplace(st.t[h], static_cast<int>(group.size()));
  std::vector<PointConfig> blocks(group.size(), PointConfig(q));
  for (int h = 0; h < k; ++h) blocks[group[st.t[h]]].push_back(st.x[h]);
  std::vector<double> z(q), off(q);
  auto add_offspring = [&](int center_idx) {
    const long no = rpois(rng, s.gamma * psi);
    for (long j = 0; j < no; ++j) {
      for (int d = 0; d < q; ++d) off[d] = centers[center_idx][d] + s.kernel_sd * rnorm(rng);
      st.x.push_back(off.data());
      st.v.push_back(vprior.sample(rng));
      st.s.push_back(jm.sample(st.u, 0, rng));
      st.t.push_back(center_idx);
    }
  };
  for (std::size_t g = 0; g < blocks.size(); ++g) {
    sncp_sample_parent(s, blocks[g], rng, z.data());
    centers.push_back(z.data());
  }
  for (int h = 0; h < k; ++h) st.t[h] = group[st.t[h]];
  for (std::size_t g = 0; g < blocks.size(); ++g) add_offspring(static_cast<int>(g));
  const long n0 = rpois(rng, s.base.lambda * std::exp(s.gamma * (psi - 1.0)));
  PointConfig empty(q);
  for (long j = 0; j < n0; ++j) {
    sncp_sample_parent(s, empty, rng, z.data());
    centers.push_back(z.data());
    add_offspring(static_cast<int>(centers.size()) - 1);
  }
  st.centers = std::move(centers);
  // 5. center labels of all atoms, then the centers given their children
  const std::size_t nc = st.centers.size();
  std::vector<double> logw(nc);
  for (std::size_t h = 0; h < st.n_atoms(); ++h) {
    for (std::size_t mm = 0; mm < nc; ++mm) logw[mm] = sncp_log_kernel(s, st.x[h], st.centers[mm]);
    st.t[h] = categorical_log(logw, rng);
  }
  std::vector<PointConfig> kids(nc, PointConfig(q));
  for (std::size_t h = 0; h < st.n_atoms(); ++h) kids[st.t[h]].push_back(st.x[h]);
  for (std::size_t mm = 0; mm < nc; ++mm) sncp_sample_parent(s, kids[mm], rng, st.centers[mm]);
}

// --- predictive structure ------------------------------------------------------

Predictive::Predictive(const ProcessModel& pp, const JumpModel& jm, double u, const PointConfig& anchors,
                       const GibbsBatch* batch)
    : pp_(&pp), jm_(&jm), batch_(batch), u_(u), psi_(jm.psi(u)), log_kappa1_(jm.log_kappa(u, 1)), anchors_(anchors) {
  if (std::holds_alternative<Sncp>(pp))
    throw std::invalid_argument("Predictive: the SNCP prior uses the conditional sampler");
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    if (!batch_) throw std::invalid_argument("Predictive: Strauss requires a reference batch");
    gibbs_den_ = gibbs_log_expectation(*st, *batch_, anchors_, psi_).value;
    log_laplace_ = gibbs_den_ - gibbs_log_expectation(*st, *batch_, anchors_, 1.0).value;
  } else if (std::holds_alternative<Dpp>(pp)) {
    palm_ = reduced_palm(pp, anchors_);
    log_laplace_ = log_tilted_laplace(pp, palm_, u_, jm).value;
  } else {
    log_laplace_ = log_tilted_laplace(pp, palm_, u_, jm).value;
  }
}

double Predictive::log_existing_weight(long n_j) const { return std::log(jm_->kappa_ratio(u_, n_j)); }

double Predictive::log_new_density(const double* y) const {
  const Region* r = support(*pp_);
  if (r && !r->contains(y)) return kNegInf;
  if (const auto* p = std::get_if<Poisson>(pp_)) return log_kappa1_ + std::log(p->rate);
  if (const auto* st = std::get_if<Strauss>(pp_)) {
    PointConfig ext = anchors_;
    ext.push_back(y);
    return log_kappa1_ + gibbs_log_expectation(*st, *batch_, ext, psi_).value - gibbs_den_;
  }
  const auto& pd = std::get<PalmDpp>(palm_);
  const Eigen::VectorXd e = pd.basis->eval(y);
  const Eigen::VectorXd me = pd.m * e;
  const double kyy = e.dot(me);
  if (!(kyy > 1e-300)) return kNegInf;
  Eigen::MatrixXd m2 = pd.m - me * me.transpose() / kyy;
  m2 = 0.5 * (m2 + m2.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m2, Eigen::EigenvaluesOnly);
  double lap = 0.0;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    lap += std::log1p(-std::clamp(es.eigenvalues()[j], 0.0, 1.0) * (1.0 - psi_));
  return log_kappa1_ + std::log(kyy) + lap - log_laplace_;
}

double marginal_log_target(const ProcessModel& pp, const JumpModel& jm, double u, const PointConfig& ystar,
                           const std::vector<int>& counts, const GibbsBatch* batch) {
  long n = 0;
  double lk = 0.0;
  for (int c : counts) {
    n += c;
    lk += jm.log_kappa(u, c);
  }
  return (n - 1) * std::log(u) + lk + log_joint_unique(pp, jm, u, ystar, batch);
}

// --- marginal sampler ----------------------------------------------------------

void marginal_step(MixtureState& st, const Dataset& data, const Model& m, const ChainConfig& cfg, Rng& rng) {
  if (std::holds_alternative<Sncp>(m.pp))
    throw std::invalid_argument("marginal sampler: the SNCP prior uses the conditional sampler");
  const int q = data.dim();
  const Region& region = *support(m.pp);
  const double log_vol = std::log(region.volume());
  std::optional<GibbsBatch> batch;
  if (const auto* s = std::get_if<Strauss>(&m.pp)) batch = make_gibbs_batch(*s, s->mc_samples, rng);
  const GibbsBatch* bp = batch ? &*batch : nullptr;

  // 1. u by random-walk MH on log u
  {
    std::vector<int> cnt = st.counts();
    const double cur = marginal_log_target(m.pp, m.jm, st.u, st.x, cnt, bp) + std::log(st.u);
    const double up = st.u * std::exp(cfg.log_u_step * rnorm(rng));
    const double prop = marginal_log_target(m.pp, m.jm, up, st.x, cnt, bp) + std::log(up);
    if (std::log(runif(rng)) < prop - cur) st.u = up;
  }

  // 2. allocations with L auxiliary values drawn uniformly on the region
  std::vector<int> cnt = st.counts();
  std::optional<Predictive> pred;
  const int L = cfg.neal_l;
  PointConfig aux(q);
  std::vector<double> aux_v(L);
  std::vector<double> y(q);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int j = st.c[i];
    --cnt[j];
    aux.clear();
    int first_fresh = 0;
    if (cnt[j] == 0) {
      // singleton: its value becomes the first auxiliary
      aux.push_back(st.x[j]);
      aux_v[0] = st.v[j];
      first_fresh = 1;
      st.x.erase(j);
      st.v.erase(st.v.begin() + j);
      cnt.erase(cnt.begin() + j);
      --st.k_active;
      for (int& ci : st.c)
        if (ci > j) --ci;
      pred.reset();
    }
    for (int l = first_fresh; l < L; ++l) {
      region.sample_uniform(rng, y.data());
      aux.push_back(y.data());
      aux_v[l] = m.vprior.sample(rng);
    }
    if (!pred) pred.emplace(m.pp, m.jm, st.u, st.x, bp);
    const int k = st.k_active;
    std::vector<double> logw(k + L);
    for (int h = 0; h < k; ++h)
      logw[h] = pred->log_existing_weight(cnt[h]) + log_kernel(data.points[i], st.x[h], st.v[h], q);
    for (int l = 0; l < L; ++l)
      logw[k + l] = -std::log(static_cast<double>(L)) + log_vol + pred->log_new_density(aux[l]) +
                    log_kernel(data.points[i], aux[l], aux_v[l], q);
    const int pick = categorical_log(logw, rng);
    if (pick < k) {
      st.c[i] = pick;
      ++cnt[pick];
    } else {
      st.x.push_back(aux[pick - k]);
      st.v.push_back(aux_v[pick - k]);
      cnt.push_back(1);
      st.c[i] = st.k_active++;
      pred.reset();
    }
  }
  relabel(st);
  cnt = st.counts();

  // 3. distinct values
  const auto mem = members(st);
  double cur_joint = log_joint_unique(m.pp, m.jm, st.u, st.x, bp);
  for (int h = 0; h < st.k_active; ++h) {
    double cur_ll = cluster_loglik(data, mem[h], st.x[h], st.v[h]);
    for (int rep = 0; rep < cfg.atom_mh_steps; ++rep)
      for (int d = 0; d < q; ++d) {
        PointConfig trial = st.x;
        trial[h][d] += cfg.atom_step * rnorm(rng);
        if (!region.contains(trial[h])) continue;
        const double pj = log_joint_unique(m.pp, m.jm, st.u, trial, bp);
        if (pj == kNegInf) continue;
        const double pl = cluster_loglik(data, mem[h], trial[h], st.v[h]);
        if (std::log(runif(rng)) < pj - cur_joint + pl - cur_ll) {
          st.x = std::move(trial);
          cur_joint = pj;
          cur_ll = pl;
        }
      }
  }
  // 4. variances
  update_variances(st, data, m.vprior, rng);
}

// --- chains ----------------------------------------------------------------------

namespace {

DiscreteMeasure snapshot(const MixtureState& st, const Model& m, const ChainConfig& cfg, Rng& rng) {
  const int q = st.x.dim();
  DiscreteMeasure mu(q);
  if (cfg.algorithm == Algorithm::conditional || std::holds_alternative<Sncp>(m.pp)) {
    for (std::size_t h = 0; h < st.n_atoms(); ++h) mu.add(st.x[h], st.v[h], st.s[h]);
    return mu;
  }
  // posterior draw of the measure given the marginal state
  const std::vector<int> cnt = st.counts();
  for (int h = 0; h < st.k_active; ++h) mu.add(st.x[h], st.v[h], m.jm.sample(st.u, cnt[h], rng));
  const DiscreteMeasure na = sample_nonactive(m.pp, st.x, st.u, m.jm, m.vprior, rng, nullptr, cfg.gibbs_bd_sweeps * 4);
  for (std::size_t j = 0; j < na.size(); ++j) mu.add(na.locations[j], na.variances[j], na.jumps[j]);
  return mu;
}

}  // namespace

Trace run_chain(const ChainConfig& cfg, const Dataset& data, const Model& m, int chain,
                const std::function<void(const TraceRecord&)>& on_record) {
  validate(cfg);
  Rng rng = make_rng(cfg.seed, "chain", static_cast<std::uint64_t>(chain));
  Rng snap_rng = make_rng(cfg.seed, "snapshot", static_cast<std::uint64_t>(chain));
  MixtureState st = initial_state(data, m, cfg, rng);
  const bool sncp = std::holds_alternative<Sncp>(m.pp);
  const bool marginal = cfg.algorithm == Algorithm::marginal && !sncp;
  if (cfg.algorithm == Algorithm::marginal && sncp)
    throw std::invalid_argument("marginal sampler: the SNCP prior uses the conditional sampler");
  Trace tr;
  tr.algorithm = marginal ? "marginal" : "conditional";
  tr.family = family_name(m.pp);
  tr.has_groups = sncp;
  for (long it = 1; it <= cfg.n_iter; ++it) {
    if (marginal) marginal_step(st, data, m, cfg, rng);
    else conditional_step(st, data, m, cfg, rng);
#ifndef NDEBUG
    check_invariants(st, data.size(), marginal);
#endif
    if (it <= cfg.burn_in || (it - cfg.burn_in) % cfg.thin != 0) continue;
    TraceRecord rec;
    rec.iteration = it;
    rec.k = st.k_active;
    rec.n_groups = sncp ? st.n_groups() : st.k_active;
    rec.n_atoms = static_cast<int>(st.n_atoms());
    rec.u = st.u;
    rec.total_mass = marginal ? std::numeric_limits<double>::quiet_NaN() : st.total_mass();
    rec.allocations = st.c;
    if (sncp) rec.groups = st.group_of_observations();
    if (cfg.store_measures) tr.measures.push_back(snapshot(st, m, cfg, snap_rng));
    if (on_record) on_record(rec);
    tr.records.push_back(std::move(rec));
  }
  return tr;
}

std::string trace_record_json(const TraceRecord& r, const DiscreteMeasure* atoms) {
  nlohmann::json j;
  j["iteration"] = r.iteration;
  j["k"] = r.k;
  j["n_groups"] = r.n_groups;
  j["n_atoms"] = r.n_atoms;
  j["u"] = r.u;
  if (std::isfinite(r.total_mass)) j["total_mass"] = r.total_mass;
  else j["total_mass"] = nullptr;
  j["allocations"] = r.allocations;
  if (!r.groups.empty()) j["groups"] = r.groups;
  if (atoms) {
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t h = 0; h < atoms->size(); ++h) {
      const double* x = atoms->locations[h];
      a.push_back({{"x", std::vector<double>(x, x + atoms->locations.dim())},
                   {"v", atoms->variances[h]},
                   {"s", atoms->jumps[h]}});
    }
    j["atoms"] = std::move(a);
  }
  return j.dump();
}

void write_trace_ndjson(const Trace& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const bool with_atoms = tr.measures.size() == tr.records.size();
  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    const auto& r = tr.records[i];
    out << trace_record_json(r, with_atoms ? &tr.measures[i] : nullptr) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path + " at iteration " + std::to_string(r.iteration));
  }
}

void write_trace_csv(const Trace& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iteration,k,n_groups,n_atoms,u,total_mass\n";
  out.precision(10);
  for (const auto& r : tr.records) {
    out << r.iteration << ',' << r.k << ',' << r.n_groups << ',' << r.n_atoms << ',' << r.u << ',';
    if (std::isfinite(r.total_mass)) out << r.total_mass;
    out << '\n';
    if (!out) throw std::runtime_error("write failed for " + path + " at iteration " + std::to_string(r.iteration));
  }
}

}  // namespace nrmpp
