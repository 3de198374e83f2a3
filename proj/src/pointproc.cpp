#include "nrmpp/pointproc.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nrmpp/specfun.hpp"

namespace nrmpp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_distinct(const PointConfig& pts) {
  const int q = pts.dim();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (sqdist(pts[i], pts[j], q) == 0.0)
        throw std::invalid_argument("duplicate points in configuration");
}

bool all_inside(const Region& r, const PointConfig& pts) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!r.contains(pts[i])) return false;
  return true;
}

double log_diff_cdf(double a, double b) {
  // log(Phi(b) - Phi(a)), a < b, stable in both tails
  if (a >= b) return kNegInf;
  double d;
  if (a > 0.0) d = 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
  else if (b < 0.0) d = 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
  else d = 1.0 - 0.5 * std::erfc(b / std::numbers::sqrt2) - 0.5 * std::erfc(-a / std::numbers::sqrt2);
  return d > 0.0 ? std::log(d) : kNegInf;
}

// standard normal truncated to (a, b) by inversion on the tail-appropriate side
double rtruncnorm(Rng& rng, double a, double b) {
  const double u = runif(rng);
  if (a > 0.0) {
    const double qa = std::erfc(a / std::numbers::sqrt2), qb = std::erfc(b / std::numbers::sqrt2);
    const double t = qa - u * (qa - qb);
    return std::numbers::sqrt2 * boost::math::erfc_inv(std::clamp(t, 1e-300, 2.0 - 1e-16));
  }
  const double pa = std::erfc(-a / std::numbers::sqrt2), pb = std::erfc(-b / std::numbers::sqrt2);
  const double t = pa + u * (pb - pa);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(std::clamp(t, 1e-300, 2.0 - 1e-16));
}

double poisson_log_pmf(long r, double mean) {
  if (mean <= 0.0) return r == 0 ? 0.0 : kNegInf;
  return r * std::log(mean) - mean - std::lgamma(r + 1.0);
}

}  // namespace

// --- models -----------------------------------------------------------------

int Sncp::dim() const {
  return base.kind == SncpBase::Kind::gaussian ? static_cast<int>(base.mean.size())
                                               : base.region.dim();
}

Dpp make_dpp(double rho, double alpha, const Region& region, DppBasis basis, double cutoff_tol,
             int nystrom_m, bool validate) {
  Dpp d;
  d.rho = rho;
  d.alpha = alpha;
  d.region = region;
  if (basis == DppBasis::fourier) {
    auto sb = std::make_shared<SpectralBasis>(SpectralBasis::fourier(rho, alpha, region, cutoff_tol));
    if (validate) sb->validate_dpp();
    d.spectrum = sb;
  } else {
    auto sb = std::make_shared<SpectralBasis>(
        SpectralBasis::nystrom(gaussian_kernel(rho, alpha, region.dim()), region, nystrom_m));
    if (validate) sb->validate_dpp();
    d.spectrum = sb;
  }
  return d;
}

int dim(const ProcessModel& pp) {
  return std::visit(overloaded{[](const Poisson& p) { return p.region.dim(); },
                               [](const Strauss& s) { return s.region.dim(); },
                               [](const Dpp& d) { return d.region.dim(); },
                               [](const Sncp& s) { return s.dim(); }},
                    pp);
}

const Region* support(const ProcessModel& pp) {
  return std::visit(overloaded{[](const Poisson& p) -> const Region* { return &p.region; },
                               [](const Strauss& s) -> const Region* { return &s.region; },
                               [](const Dpp& d) -> const Region* { return &d.region; },
                               [](const Sncp&) -> const Region* { return nullptr; }},
                    pp);
}

const char* family_name(const ProcessModel& pp) {
  static const char* names[] = {"poisson", "strauss", "dpp", "sncp"};
  return names[pp.index()];
}

// --- Strauss ------------------------------------------------------------------

long strauss_pairs(const Strauss& st, const PointConfig& a) {
  const double r2 = st.radius * st.radius;
  const int q = a.dim();
  long c = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if (sqdist(a[i], a[j], q) <= r2) ++c;
  return c;
}

long strauss_pairs(const Strauss& st, const PointConfig& a, const PointConfig& b) {
  const double r2 = st.radius * st.radius;
  const int q = a.dim();
  long c = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (sqdist(a[i], b[j], q) <= r2) ++c;
  return c;
}

namespace {

long close_to(const Strauss& st, const double* x, const PointConfig& pts, long skip = -1) {
  const double r2 = st.radius * st.radius;
  long c = 0;
  for (std::size_t j = 0; j < pts.size(); ++j)
    if (static_cast<long>(j) != skip && sqdist(x, pts[j], pts.dim()) <= r2) ++c;
  return c;
}

double log_gamma_pow(double gamma_s, long count) {
  if (count == 0) return 0.0;
  return gamma_s > 0.0 ? count * std::log(gamma_s) : kNegInf;
}

}  // namespace

long strauss_default_steps(const Strauss& st) {
  const double mass = st.beta * st.region.volume();
  const long sweeps = st.bd_sweeps > 0 ? st.bd_sweeps
                                       : std::max<long>(50, static_cast<long>(std::ceil(10.0 * mass)));
  const long per = std::max<long>(10, static_cast<long>(std::ceil(mass)));
  return sweeps * per;
}

PointConfig strauss_birth_death(const Strauss& st, const PointConfig& anchors, double activity,
                                PointConfig cur, long steps, Rng& rng) {
  const double vol = st.region.volume();
  const int q = st.region.dim();
  std::vector<double> xi(q);
  if (activity <= 0.0) return PointConfig(q);
  const double log_act = std::log(activity);
  for (long it = 0; it < steps; ++it) {
    const double n = static_cast<double>(cur.size());
    if (runif(rng) < 0.5) {
      st.region.sample_uniform(rng, xi.data());
      const long c = close_to(st, xi.data(), cur) + close_to(st, xi.data(), anchors);
      const double lr = log_act + log_gamma_pow(st.gamma_s, c) + std::log(vol / (n + 1.0));
      if (std::log(runif(rng)) < lr) cur.push_back(xi.data());
    } else {
      if (cur.empty()) continue;
      const std::size_t i = std::min<std::size_t>(cur.size() - 1, static_cast<std::size_t>(runif(rng) * n));
      const long c = close_to(st, cur[i], cur, static_cast<long>(i)) + close_to(st, cur[i], anchors);
      const double lr = std::log(n / vol) - log_act - log_gamma_pow(st.gamma_s, c);
      if (std::log(runif(rng)) < lr) cur.erase(i);
    }
  }
  return cur;
}

GibbsBatch make_gibbs_batch(const Strauss& st, int m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("make_gibbs_batch: m < 1");
  GibbsBatch b;
  const int q = st.region.dim();
  std::vector<double> x(q);
  b.configs.reserve(m);
  b.marks.reserve(m);
  for (int i = 0; i < m; ++i) {
    const long n = rpois(rng, st.beta * st.region.volume());
    PointConfig pc(q);
    std::vector<double> mk;
    for (long j = 0; j < n; ++j) {
      st.region.sample_uniform(rng, x.data());
      pc.push_back(x.data());
      mk.push_back(runif(rng));
    }
    b.configs.push_back(std::move(pc));
    b.marks.push_back(std::move(mk));
  }
  return b;
}

GibbsBatch default_gibbs_batch(const Strauss& st) {
  Rng rng = make_rng(st.mc_seed, "gibbs-batch");
  return make_gibbs_batch(st, st.mc_samples, rng);
}

Estimate gibbs_log_expectation(const Strauss& st, const GibbsBatch& batch, const PointConfig& y,
                               double psi) {
  const std::size_t m = batch.configs.size();
  if (m == 0) throw std::invalid_argument("gibbs_log_expectation: empty batch");
  const long sy = strauss_pairs(st, y);
  double sum = 0.0, sum2 = 0.0;
  PointConfig sub(st.region.dim());
  for (std::size_t i = 0; i < m; ++i) {
    sub.clear();
    const PointConfig& c = batch.configs[i];
    for (std::size_t j = 0; j < c.size(); ++j)
      if (batch.marks[i][j] < psi) sub.push_back(c[j]);
    const long s = strauss_pairs(st, sub) + strauss_pairs(st, sub, y) + sy;
    const double w = std::exp(log_gamma_pow(st.gamma_s, s));
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / m;
  const double var = std::max(0.0, sum2 / m - mean * mean);
  const double base = (psi * st.beta - 1.0) * st.region.volume() +
                      static_cast<double>(y.size()) * std::log(st.beta);
  if (mean <= 0.0) return {kNegInf, std::numeric_limits<double>::infinity()};
  return {base + std::log(mean), std::sqrt(var / m) / mean};
}

// --- DPP ----------------------------------------------------------------------

PointConfig sample_projection_dpp(const SpectralBasis& basis, const Eigen::MatrixXd& coeffs,
                                  double envelope, Rng& rng) {
  const int n = static_cast<int>(coeffs.rows());
  const int q = basis.dim();
  PointConfig out(q);
  if (n == 0) return out;
  Eigen::MatrixXd w(n, n);
  Eigen::VectorXd e(basis.rank()), v(n);
  std::vector<double> x(q);
  const long max_tries = 10000000;
  for (int i = 0; i < n; ++i) {
    long tries = 0;
    while (true) {
      if (++tries > max_tries) throw std::runtime_error("projection DPP sampler: envelope too loose");
      basis.region().sample_uniform(rng, x.data());
      basis.eval(x.data(), e.data());
      v.noalias() = coeffs * e;
      double p = v.squaredNorm();
      if (i > 0) p -= (w.leftCols(i).transpose() * v).squaredNorm();
      if (runif(rng) * envelope < p) break;
    }
    Eigen::VectorXd r = v;
    for (int pass = 0; pass < 2; ++pass)
      if (i > 0) r -= w.leftCols(i) * (w.leftCols(i).transpose() * r);
    const double nr = r.norm();
    if (!(nr > 0.0)) throw std::runtime_error("projection DPP sampler: degenerate direction");
    w.col(i) = r / nr;
    out.push_back(x.data());
  }
  return out;
}

double PalmDpp::kernel(const double* x, const double* y) const {
  Eigen::VectorXd ex = basis->eval(x), ey = basis->eval(y);
  return ex.dot(m * ey);
}

namespace {

PalmDpp dpp_palm(const Dpp& d, const PointConfig& anchors) {
  const SpectralBasis& sb = *d.spectrum;
  const int r = sb.rank();
  PalmDpp palm;
  palm.basis = d.spectrum;
  palm.anchors = anchors;
  Eigen::MatrixXd lam = sb.eigenvalues().asDiagonal();
  if (anchors.empty()) {
    palm.m = lam;
  } else {
    require_distinct(anchors);
    if (static_cast<int>(anchors.size()) > r)
      throw std::domain_error("anchors degenerate for DPP Palm");
    Eigen::MatrixXd e = sb.eval_matrix(anchors);
    Eigen::MatrixXd b = sb.eigenvalues().asDiagonal() * e;
    Eigen::MatrixXd s = e.transpose() * b;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) throw std::domain_error("anchors degenerate for DPP Palm");
    palm.m = lam - b * s.ldlt().solve(b.transpose());
  }
  palm.m = 0.5 * (palm.m + palm.m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(palm.m);
  palm.lambda = es.eigenvalues().cwiseMax(0.0);
  palm.vectors = es.eigenvectors();
  return palm;
}

double pb_log_laplace(const Eigen::VectorXd& lam, double psi) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < lam.size(); ++j) s += std::log1p(-std::min(1.0, lam[j]) * (1.0 - psi));
  return s;
}

}  // namespace

double dpp_log_cdet(const SpectralBasis& basis, const PointConfig& pts) {
  if (pts.empty()) return 0.0;
  if (static_cast<int>(pts.size()) > basis.rank()) return kNegInf;
  Eigen::VectorXd g = basis.eigenvalues();
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (g[j] >= 1.0) throw std::domain_error("DPP existence violated: eigenvalue >= 1");
    g[j] = g[j] / (1.0 - g[j]);
  }
  Eigen::MatrixXd e = basis.eval_matrix(pts);
  Eigen::MatrixXd s = e.transpose() * g.asDiagonal() * e;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) return kNegInf;
  double ld = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) ld += 2.0 * std::log(llt.matrixL()(i, i));
  return std::isfinite(ld) ? ld : kNegInf;
}

Eigen::MatrixXd dpp_cform_palm(const SpectralBasis& basis, const PointConfig& anchors) {
  Eigen::VectorXd g = basis.eigenvalues();
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (g[j] >= 1.0) throw std::domain_error("DPP existence violated: eigenvalue >= 1");
    g[j] = g[j] / (1.0 - g[j]);
  }
  Eigen::MatrixXd gm = g.asDiagonal();
  if (anchors.empty()) return gm;
  Eigen::MatrixXd e = basis.eval_matrix(anchors);
  Eigen::MatrixXd b = g.asDiagonal() * e;
  Eigen::MatrixXd s = e.transpose() * b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) throw std::domain_error("anchors degenerate for DPP Palm");
  Eigen::MatrixXd out = gm - b * s.ldlt().solve(b.transpose());
  return 0.5 * (out + out.transpose());
}

// --- SNCP -----------------------------------------------------------------------

double sncp_log_kernel(const Sncp& s, const double* x, const double* center) {
  const int q = s.dim();
  const double a2 = s.kernel_sd * s.kernel_sd;
  return -0.5 * q * std::log(2.0 * std::numbers::pi * a2) - 0.5 * sqdist(x, center, q) / a2;
}

double sncp_log_eta(const Sncp& s, const PointConfig& pts) {
  const int q = s.dim();
  const double c = static_cast<double>(pts.size());
  if (pts.empty()) return std::log(s.base.lambda);
  const double a2 = s.kernel_sd * s.kernel_sd;
  double out = std::log(s.base.lambda);
  for (int d = 0; d < q; ++d) {
    double sx = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sx += pts[i][d];
      sxx += pts[i][d] * pts[i][d];
    }
    if (s.base.kind == SncpBase::Kind::gaussian) {
      const double m = s.base.mean[d], s2 = s.base.sd * s.base.sd;
      const double prec = c / a2 + 1.0 / s2;
      const double b = sx / a2 + m / s2;
      const double cc = sxx / a2 + m * m / s2;
      out += -0.5 * c * std::log(2.0 * std::numbers::pi * a2) - 0.5 * std::log(2.0 * std::numbers::pi * s2) +
             0.5 * std::log(2.0 * std::numbers::pi / prec) + 0.5 * b * b / prec - 0.5 * cc;
    } else {
      const double lo = s.base.region.lower[d], hi = s.base.region.upper[d];
      const double xbar = sx / c;
      const double ss = std::max(0.0, sxx - c * xbar * xbar);
      const double sdm = s.kernel_sd / std::sqrt(c);
      out += -0.5 * c * std::log(2.0 * std::numbers::pi * a2) - 0.5 * ss / a2 +
             0.5 * std::log(2.0 * std::numbers::pi * a2 / c) +
             log_diff_cdf((lo - xbar) / sdm, (hi - xbar) / sdm) - std::log(hi - lo);
    }
  }
  return out;
}

void sncp_sample_parent(const Sncp& s, const PointConfig& block, Rng& rng, double* out) {
  const int q = s.dim();
  const double c = static_cast<double>(block.size());
  const double a2 = s.kernel_sd * s.kernel_sd;
  for (int d = 0; d < q; ++d) {
    double sx = 0.0;
    for (std::size_t i = 0; i < block.size(); ++i) sx += block[i][d];
    if (s.base.kind == SncpBase::Kind::gaussian) {
      const double s2 = s.base.sd * s.base.sd;
      const double prec = c / a2 + 1.0 / s2;
      const double mean = (sx / a2 + s.base.mean[d] / s2) / prec;
      out[d] = mean + rnorm(rng) / std::sqrt(prec);
    } else {
      const double lo = s.base.region.lower[d], hi = s.base.region.upper[d];
      if (c == 0.0) {
        out[d] = lo + (hi - lo) * runif(rng);
        continue;
      }
      const double mean = sx / c, sd = s.kernel_sd / std::sqrt(c);
      out[d] = mean + sd * rtruncnorm(rng, (lo - mean) / sd, (hi - mean) / sd);
      out[d] = std::clamp(out[d], lo, hi);
    }
  }
}

double sncp_box_mass(const Sncp& s, const Region& a) {
  const int q = s.dim();
  double mass = 1.0;
  const double k = s.kernel_sd;
  auto gfun = [](double z) { return z * normal_cdf(z) + std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); };
  for (int d = 0; d < q; ++d) {
    if (s.base.kind == SncpBase::Kind::gaussian) {
      const double sd = std::sqrt(s.base.sd * s.base.sd + k * k);
      mass *= normal_cdf((a.upper[d] - s.base.mean[d]) / sd) - normal_cdf((a.lower[d] - s.base.mean[d]) / sd);
    } else {
      const double lo = s.base.region.lower[d], hi = s.base.region.upper[d];
      auto prim = [&](double c) {  // int_{A} Phi((c - x)/k) dx
        return k * (gfun((c - a.lower[d]) / k) - gfun((c - a.upper[d]) / k));
      };
      mass *= (prim(hi) - prim(lo)) / (hi - lo);
    }
  }
  return mass;
}

SncpDraw simulate_sncp(const Sncp& s, Rng& rng) {
  const int q = s.dim();
  SncpDraw out{PointConfig(q), PointConfig(q), {}};
  const long nc = rpois(rng, s.base.lambda);
  std::vector<double> c(q), x(q);
  PointConfig empty(q);
  for (long m = 0; m < nc; ++m) {
    sncp_sample_parent(s, empty, rng, c.data());
    out.centers.push_back(c.data());
    const long no = rpois(rng, s.gamma);
    for (long j = 0; j < no; ++j) {
      for (int d = 0; d < q; ++d) x[d] = c[d] + s.kernel_sd * rnorm(rng);
      out.points.push_back(x.data());
      out.labels.push_back(static_cast<int>(m));
    }
  }
  return out;
}

namespace {

void sncp_tables(const Sncp& s, const PointConfig& anchors, PalmSncp& palm) {
  const int k = static_cast<int>(anchors.size());
  if (k > 12) throw std::invalid_argument("SNCP partition sums limited to 12 points");
  const int full = (1 << k) - 1;
  palm.log_eta.assign(full + 1, kNegInf);
  for (int mask = 1; mask <= full; ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < k; ++i)
      if (mask & (1 << i)) idx.push_back(i);
    palm.log_eta[mask] = sncp_log_eta(s, anchors.subset(idx));
  }
  // per-mask, per-block-count partition sums
  std::vector<std::vector<double>> fj(full + 1, std::vector<double>(k + 1, kNegInf));
  fj[0][0] = 0.0;
  palm.log_f.assign(full + 1, kNegInf);
  palm.log_f[0] = 0.0;
  for (int mask = 1; mask <= full; ++mask) {
    const int low = mask & (-mask);
    const int rest = mask ^ low;
    // enumerate subsets of rest, add low
    for (int sub = rest;; sub = (sub - 1) & rest) {
      const int blk = sub | low;
      const int rem = mask ^ blk;
      for (int j = 0; j < k; ++j)
        if (fj[rem][j] > kNegInf) fj[mask][j + 1] = log_add_exp(fj[mask][j + 1], palm.log_eta[blk] + fj[rem][j]);
      palm.log_f[mask] = log_add_exp(palm.log_f[mask], palm.log_eta[blk] + palm.log_f[rem]);
      if (sub == 0) break;
    }
  }
  palm.block_prob.assign(k + 1, 0.0);
  for (int j = 0; j <= k; ++j)
    palm.block_prob[j] = k == 0 ? (j == 0 ? 1.0 : 0.0) : std::exp(fj[full][j] - palm.log_f[full]);
}

}  // namespace

std::vector<std::pair<std::vector<std::vector<int>>, double>> PalmSncp::partition_terms() const {
  std::vector<std::pair<std::vector<std::vector<int>>, double>> out;
  const int k = static_cast<int>(anchors.size());
  if (!fixed_blocks.empty()) {
    out.emplace_back(fixed_blocks, 1.0);
    return out;
  }
  const int full = (1 << k) - 1;
  for_each_set_partition(k, [&](const std::vector<int>& rgs, int nb) {
    std::vector<std::vector<int>> blocks(nb);
    std::vector<int> masks(nb, 0);
    for (int i = 0; i < k; ++i) {
      blocks[rgs[i]].push_back(i);
      masks[rgs[i]] |= 1 << i;
    }
    double lw = -log_f[full];
    for (int m : masks) lw += log_eta[m];
    out.emplace_back(std::move(blocks), std::exp(lw));
  });
  return out;
}

std::vector<std::vector<int>> PalmSncp::sample_partition(Rng& rng) const {
  if (!fixed_blocks.empty()) return fixed_blocks;
  const int k = static_cast<int>(anchors.size());
  std::vector<std::vector<int>> blocks;
  int mask = (1 << k) - 1;
  while (mask) {
    const int low = mask & (-mask);
    const int rest = mask ^ low;
    const double target = std::log(runif(rng)) + log_f[mask];
    double acc = kNegInf;
    int chosen = low;
    for (int sub = rest;; sub = (sub - 1) & rest) {
      const int blk = sub | low;
      acc = log_add_exp(acc, log_eta[blk] + log_f[mask ^ blk]);
      chosen = blk;
      if (acc >= target || sub == 0) break;
    }
    std::vector<int> b;
    for (int i = 0; i < k; ++i)
      if (chosen & (1 << i)) b.push_back(i);
    blocks.push_back(std::move(b));
    mask ^= chosen;
  }
  return blocks;
}

PalmSncp sncp_palm_fixed(const Sncp& s, const PointConfig& anchors,
                         std::vector<std::vector<int>> blocks) {
  (void)s;
  PalmSncp p;
  p.anchors = anchors;
  const int k = static_cast<int>(anchors.size());
  p.block_prob.assign(k + 1, 0.0);
  p.block_prob[blocks.size()] = 1.0;
  p.fixed_blocks = std::move(blocks);
  return p;
}

// --- generic operations -----------------------------------------------------

PointConfig simulate(const ProcessModel& pp, Rng& rng) {
  return std::visit(
      overloaded{
          [&](const Poisson& p) {
            PointConfig out(p.region.dim());
            const long n = rpois(rng, p.rate * p.region.volume());
            std::vector<double> x(p.region.dim());
            for (long i = 0; i < n; ++i) {
              p.region.sample_uniform(rng, x.data());
              out.push_back(x.data());
            }
            return out;
          },
          [&](const Strauss& st) {
            return strauss_birth_death(st, PointConfig(st.region.dim()), st.beta,
                                       PointConfig(st.region.dim()), strauss_default_steps(st), rng);
          },
          [&](const Dpp& d) {
            const SpectralBasis& sb = *d.spectrum;
            std::vector<int> sel;
            for (int j = 0; j < sb.rank(); ++j)
              if (runif(rng) < sb.eigenvalues()[j]) sel.push_back(j);
            Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sel.size()), sb.rank());
            double env = 0.0;
            for (std::size_t i = 0; i < sel.size(); ++i) {
              coeffs(static_cast<Eigen::Index>(i), sel[i]) = 1.0;
              env += sb.sup_single_sq(sel[i]);
            }
            env = std::min(env, sb.sup_norm_sq());
            return sample_projection_dpp(sb, coeffs, env, rng);
          },
          [&](const Sncp& s) { return simulate_sncp(s, rng).points; }},
      pp);
}

double log_papangelou(const ProcessModel& pp, const PointConfig& nu, const PointConfig& xs) {
  if (const auto* p = std::get_if<Poisson>(&pp)) return static_cast<double>(nu.size()) * std::log(p->rate);
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    const long s = strauss_pairs(*st, nu) + strauss_pairs(*st, nu, xs);
    return static_cast<double>(nu.size()) * std::log(st->beta) + log_gamma_pow(st->gamma_s, s);
  }
  throw std::invalid_argument("log_papangelou: defined for Poisson and Strauss models");
}

Estimate log_moment_density(const ProcessModel& pp, const PointConfig& pts, const GibbsBatch& batch) {
  require_distinct(pts);
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    if (!all_inside(st->region, pts)) return {kNegInf, 0.0};
    Estimate a = gibbs_log_expectation(*st, batch, pts, 1.0);
    Estimate z = gibbs_log_expectation(*st, batch, PointConfig(pts.dim()), 1.0);
    return {a.value - z.value, std::hypot(a.se, z.se)};
  }
  return log_moment_density(pp, pts);
}

Estimate log_moment_density(const ProcessModel& pp, const PointConfig& pts) {
  require_distinct(pts);
  return std::visit(
      overloaded{
          [&](const Poisson& p) -> Estimate {
            if (!all_inside(p.region, pts)) return {kNegInf, 0.0};
            return {static_cast<double>(pts.size()) * std::log(p.rate), 0.0};
          },
          [&](const Strauss& st) -> Estimate {
            return log_moment_density(pp, pts, default_gibbs_batch(st));
          },
          [&](const Dpp& d) -> Estimate {
            if (!all_inside(d.region, pts)) return {kNegInf, 0.0};
            if (pts.empty()) return {0.0, 0.0};
            const SpectralBasis& sb = *d.spectrum;
            if (static_cast<int>(pts.size()) > sb.rank()) return {kNegInf, 0.0};
            Eigen::MatrixXd e = sb.eval_matrix(pts);
            Eigen::MatrixXd s = e.transpose() * sb.eigenvalues().asDiagonal() * e;
            Eigen::LLT<Eigen::MatrixXd> llt(s);
            if (llt.info() != Eigen::Success) return {kNegInf, 0.0};
            double ld = 0.0;
            for (Eigen::Index i = 0; i < s.rows(); ++i) ld += 2.0 * std::log(llt.matrixL()(i, i));
            return {std::isfinite(ld) ? ld : kNegInf, 0.0};
          },
          [&](const Sncp& s) -> Estimate {
            if (pts.empty()) return {0.0, 0.0};
            PalmSncp tmp;
            sncp_tables(s, pts, tmp);
            return {static_cast<double>(pts.size()) * std::log(s.gamma) + tmp.log_f.back(), 0.0};
          }},
      pp);
}

PalmDescriptor reduced_palm(const ProcessModel& pp, const PointConfig& anchors) {
  return std::visit(overloaded{[&](const Poisson&) -> PalmDescriptor { return PalmSamePoisson{}; },
                               [&](const Strauss&) -> PalmDescriptor {
                                 require_distinct(anchors);
                                 return PalmGibbs{anchors};
                               },
                               [&](const Dpp& d) -> PalmDescriptor { return dpp_palm(d, anchors); },
                               [&](const Sncp& s) -> PalmDescriptor {
                                 require_distinct(anchors);
                                 PalmSncp p;
                                 p.anchors = anchors;
                                 sncp_tables(s, anchors, p);
                                 return p;
                               }},
                    pp);
}

Estimate log_tilted_laplace(const ProcessModel& pp, const PalmDescriptor& palm, double u,
                            const JumpModel& jm, const GibbsBatch* batch) {
  const double psi = jm.psi(u);
  if (const auto* p = std::get_if<Poisson>(&pp)) return {p->rate * p->region.volume() * (psi - 1.0), 0.0};
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    const auto& g = std::get<PalmGibbs>(palm);
    GibbsBatch own;
    if (batch == nullptr) {
      own = default_gibbs_batch(*st);
      batch = &own;
    }
    Estimate a = gibbs_log_expectation(*st, *batch, g.anchors, psi);
    Estimate b = gibbs_log_expectation(*st, *batch, g.anchors, 1.0);
    return {a.value - b.value, std::hypot(a.se, b.se)};
  }
  if (std::holds_alternative<Dpp>(pp)) return {pb_log_laplace(std::get<PalmDpp>(palm).lambda, psi), 0.0};
  const auto& s = std::get<Sncp>(pp);
  const auto& sp = std::get<PalmSncp>(palm);
  const double t = s.gamma * (psi - 1.0);
  std::vector<double> terms;
  for (std::size_t j = 0; j < sp.block_prob.size(); ++j)
    if (sp.block_prob[j] > 0.0) terms.push_back(std::log(sp.block_prob[j]) + j * t);
  return {s.base.lambda * std::expm1(t) + log_sum_exp(terms), 0.0};
}

Estimate log_tilted_laplace(const ProcessModel& pp, const PointConfig& anchors, double u,
                            const JumpModel& jm, int mc_samples) {
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    if (mc_samples < 100) throw std::invalid_argument("log_tilted_laplace: mc_samples must be >= 100");
    Rng rng = make_rng(st->mc_seed, "gibbs-batch");
    GibbsBatch b = make_gibbs_batch(*st, mc_samples, rng);
    return log_tilted_laplace(pp, reduced_palm(pp, anchors), u, jm, &b);
  }
  return log_tilted_laplace(pp, reduced_palm(pp, anchors), u, jm, nullptr);
}

CountLaw palm_count_law(const ProcessModel& pp, const PalmDescriptor& palm, int r_max) {
  if (r_max < 0) throw std::invalid_argument("palm_count_law: negative r_max");
  CountLaw law;
  law.pmf.assign(r_max + 1, 0.0);
  if (const auto* p = std::get_if<Poisson>(&pp)) {
    const double mean = p->rate * p->region.volume();
    double s = 0.0;
    for (int r = 0; r <= r_max; ++r) s += law.pmf[r] = std::exp(poisson_log_pmf(r, mean));
    law.tail = std::max(0.0, 1.0 - s);
    return law;
  }
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    const auto& g = std::get<PalmGibbs>(palm);
    GibbsBatch b = default_gibbs_batch(*st);
    const long sy = strauss_pairs(*st, g.anchors);
    double tot = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < b.configs.size(); ++i) {
      const long s = strauss_pairs(*st, b.configs[i]) + strauss_pairs(*st, b.configs[i], g.anchors) + sy;
      const double w = std::exp(log_gamma_pow(st->gamma_s, s));
      tot += w;
      const std::size_t n = b.configs[i].size();
      if (n <= static_cast<std::size_t>(r_max)) law.pmf[n] += w;
      else tail += w;
    }
    if (!(tot > 0.0)) throw std::runtime_error("palm_count_law: all Gibbs weights vanish");
    for (double& v : law.pmf) v /= tot;
    law.tail = tail / tot;
    return law;
  }
  if (std::holds_alternative<Dpp>(pp)) {
    const auto& d = std::get<PalmDpp>(palm);
    std::vector<double> dp{1.0};
    for (Eigen::Index j = 0; j < d.lambda.size(); ++j) {
      const double l = d.lambda[j];
      if (l > 1.0 + 1e-9) throw std::domain_error("Palm kernel eigenvalue exceeds 1");
      const double p = std::clamp(l, 0.0, 1.0);
      std::vector<double> nx(dp.size() + 1, 0.0);
      for (std::size_t r = 0; r < dp.size(); ++r) {
        nx[r] += dp[r] * (1.0 - p);
        nx[r + 1] += dp[r] * p;
      }
      dp = std::move(nx);
    }
    double s = 0.0;
    for (std::size_t r = 0; r < dp.size() && r <= static_cast<std::size_t>(r_max); ++r) s += law.pmf[r] = dp[r];
    law.tail = std::max(0.0, 1.0 - s);
    return law;
  }
  const auto& s = std::get<Sncp>(pp);
  const auto& sp = std::get<PalmSncp>(palm);
  // M ~ Poisson(lambda) parents, truncated where the Poisson tail is negligible
  long mmax = static_cast<long>(s.base.lambda + 12.0 * std::sqrt(s.base.lambda) + 30.0);
  double total = 0.0;
  for (std::size_t j = 0; j < sp.block_prob.size(); ++j) {
    if (sp.block_prob[j] <= 0.0) continue;
    for (long m = 0; m <= mmax; ++m) {
      const double wm = sp.block_prob[j] * std::exp(poisson_log_pmf(m, s.base.lambda));
      if (wm == 0.0) continue;
      const double mean = s.gamma * (static_cast<double>(j) + m);
      for (int r = 0; r <= r_max; ++r) law.pmf[r] += wm * std::exp(poisson_log_pmf(r, mean));
    }
  }
  for (double v : law.pmf) total += v;
  law.tail = std::max(0.0, 1.0 - total);
  return law;
}

double palm_mean_count(const ProcessModel& pp, const PalmDescriptor& palm) {
  if (const auto* p = std::get_if<Poisson>(&pp)) return p->rate * p->region.volume();
  if (const auto* st = std::get_if<Strauss>(&pp)) {
    const auto& g = std::get<PalmGibbs>(palm);
    GibbsBatch b = default_gibbs_batch(*st);
    const long sy = strauss_pairs(*st, g.anchors);
    double tot = 0.0, acc = 0.0;
    for (const auto& c : b.configs) {
      const long s = strauss_pairs(*st, c) + strauss_pairs(*st, c, g.anchors) + sy;
      const double w = std::exp(log_gamma_pow(st->gamma_s, s));
      tot += w;
      acc += w * static_cast<double>(c.size());
    }
    return acc / tot;
  }
  if (std::holds_alternative<Dpp>(pp)) return std::get<PalmDpp>(palm).lambda.sum();
  const auto& s = std::get<Sncp>(pp);
  const auto& sp = std::get<PalmSncp>(palm);
  double ej = 0.0;
  for (std::size_t j = 0; j < sp.block_prob.size(); ++j) ej += j * sp.block_prob[j];
  return s.gamma * (ej + s.base.lambda);
}

}  // namespace nrmpp
