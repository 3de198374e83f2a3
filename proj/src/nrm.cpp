#include "nrmpp/nrm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nrmpp/specfun.hpp"

namespace nrmpp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// second antiderivative of exp(-beta z^2)
double gauss_h(double z, double beta) {
  const double sb = std::sqrt(beta);
  return z * std::sqrt(std::numbers::pi) / (2.0 * sb) * std::erf(sb * z) + std::exp(-beta * z * z) / (2.0 * beta);
}

// int_A int_B exp(-beta (x - y)^2) dy dx for intervals A, B
double gauss_pair_integral(double a1, double a2, double b1, double b2, double beta) {
  return gauss_h(a2 - b1, beta) - gauss_h(a1 - b1, beta) - gauss_h(a2 - b2, beta) + gauss_h(a1 - b2, beta);
}

void require_inside(const ProcessModel& pp, const Region& a) {
  if (const Region* r = support(pp))
    if (!r->contains(a)) throw std::invalid_argument("prior_moments: box not contained in the region");
  if (a.dim() != dim(pp)) throw std::invalid_argument("prior_moments: dimension mismatch");
}

double log_gamma_ratio(int k, long r, double alpha, int n) {
  const double x = (k + r) * alpha;
  return std::lgamma(x) - std::lgamma(x + n);
}

double box_mass_1d(const Sncp& s, double lo, double hi, double v) {
  const double k = s.kernel_sd;
  return normal_cdf((hi - v) / k) - normal_cdf((lo - v) / k);
}

// int omega(dv) P_k(A - v) P_k(B - v) for the SNCP, factorized by dimension
double sncp_shared_parent_mass(const Sncp& s, const Region& a, const Region& b) {
  double out = s.base.lambda;
  for (int d = 0; d < s.dim(); ++d) {
    std::function<double(double)> f;
    double lo, hi;
    if (s.base.kind == SncpBase::Kind::gaussian) {
      const double m = s.base.mean[d], sd = s.base.sd;
      f = [&, m, sd](double v) {
        const double z = (v - m) / sd;
        return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi)) *
               box_mass_1d(s, a.lower[d], a.upper[d], v) * box_mass_1d(s, b.lower[d], b.upper[d], v);
      };
      lo = m - 12.0 * sd;
      hi = m + 12.0 * sd;
    } else {
      lo = s.base.region.lower[d];
      hi = s.base.region.upper[d];
      const double w = 1.0 / (hi - lo);
      f = [&, w](double v) {
        return w * box_mass_1d(s, a.lower[d], a.upper[d], v) * box_mass_1d(s, b.lower[d], b.upper[d], v);
      };
    }
    out *= integrate_interval(f, lo, hi, 1e-10);
  }
  return out;
}

// tensor Gauss-Legendre over a box
template <class F>
double box_quadrature(const Region& a, int per_dim, F&& f) {
  const int q = a.dim();
  std::vector<std::vector<double>> nodes(q), weights(q);
  for (int d = 0; d < q; ++d) gauss_legendre(per_dim, a.lower[d], a.upper[d], nodes[d], weights[d]);
  long total = 1;
  for (int d = 0; d < q; ++d) total *= per_dim;
  std::vector<double> x(q);
  double s = 0.0;
  for (long i = 0; i < total; ++i) {
    long r = i;
    double w = 1.0;
    for (int d = 0; d < q; ++d) {
      const int j = static_cast<int>(r % per_dim);
      r /= per_dim;
      x[d] = nodes[d][j];
      w *= weights[d][j];
    }
    s += w * f(x.data());
  }
  return s;
}

double mean_p_integrand_integral(const std::function<double(double)>& log_laplace, const JumpModel& jm) {
  return integrate_halfline([&](double u) { return std::exp(jm.log_kappa(u, 1) + log_laplace(u)); }, 1e-10);
}

}  // namespace

DiscreteMeasure sample_nrm(const ProcessModel& pp, const JumpModel& jm, const InvGamma& vprior,
                           Rng& rng) {
  PointConfig pts = simulate(pp, rng);
  DiscreteMeasure mu(pts.dim());
  for (std::size_t i = 0; i < pts.size(); ++i) mu.add(pts[i], vprior.sample(rng), jm.sample(0.0, 0, rng));
  return mu;
}

double moment_measure(const ProcessModel& pp, const Region& a) {
  if (const auto* p = std::get_if<Poisson>(&pp)) return p->rate * p->region.intersect(a).volume();
  if (const auto* d = std::get_if<Dpp>(&pp)) return d->rho * d->region.intersect(a).volume();
  if (const auto* s = std::get_if<Sncp>(&pp)) return s->gamma * s->base.lambda * sncp_box_mass(*s, a);
  throw std::invalid_argument("moment_measure: no closed form for the Strauss process");
}

double factorial_moment_measure2(const ProcessModel& pp, const Region& a, const Region& b) {
  if (std::holds_alternative<Poisson>(pp)) return moment_measure(pp, a) * moment_measure(pp, b);
  if (const auto* d = std::get_if<Dpp>(&pp)) {
    const Region ar = d->region.intersect(a), br = d->region.intersect(b);
    double cross = 1.0;
    for (int i = 0; i < ar.dim(); ++i)
      cross *= gauss_pair_integral(ar.lower[i], ar.upper[i], br.lower[i], br.upper[i], 2.0 / d->alpha);
    return d->rho * d->rho * (ar.volume() * br.volume() - cross);
  }
  if (const auto* s = std::get_if<Sncp>(&pp))
    return moment_measure(pp, a) * moment_measure(pp, b) + s->gamma * s->gamma * sncp_shared_parent_mass(*s, a, b);
  throw std::invalid_argument("factorial_moment_measure2: no closed form for the Strauss process");
}

PriorMoments prior_moments(const ProcessModel& pp, const JumpModel& jm, const Region& a,
                           const Region& b, int mc_samples, std::uint64_t seed) {
  require_inside(pp, a);
  require_inside(pp, b);
  if (std::holds_alternative<Strauss>(pp)) {
    Rng rng = make_rng(seed, "prior-moments");
    return prior_moments_mc(pp, jm, a, b, mc_samples, rng);
  }
  PriorMoments out;
  const double es = jm.mean(), es2 = jm.variance() + es * es;
  const Region ab = a.intersect(b);
  const double ma = moment_measure(pp, a), mb = moment_measure(pp, b);
  out.mean_mu_a = ma * es;
  out.cov_mu_ab = es * es * (factorial_moment_measure2(pp, a, b) - ma * mb) +
                  es2 * (ab.volume() > 0.0 ? moment_measure(pp, ab) : 0.0);

  if (const auto* p = std::get_if<Poisson>(&pp)) {
    const double mass = p->rate * p->region.volume();
    out.mean_p_a = ma * mean_p_integrand_integral([&](double u) { return mass * (jm.psi(u) - 1.0); }, jm);
  } else if (const auto* s = std::get_if<Sncp>(&pp)) {
    out.mean_p_a = ma * mean_p_integrand_integral(
                            [&](double u) {
                              const double t = s->gamma * (jm.psi(u) - 1.0);
                              return s->base.lambda * std::expm1(t) + t;
                            },
                            jm);
  } else {
    const auto& d = std::get<Dpp>(pp);
    const SpectralBasis& sb = *d.spectrum;
    const int per_dim = a.dim() == 1 ? 16 : (a.dim() == 2 ? 8 : 5);
    out.mean_p_a = box_quadrature(a, per_dim, [&](const double* x) {
      PointConfig anchor(a.dim());
      anchor.push_back(x);
      const Eigen::VectorXd ex = sb.eval(x);
      const double m1 = (ex.array().square() * sb.eigenvalues().array()).sum();
      const PalmDescriptor palm = reduced_palm(pp, anchor);
      const auto& lam = std::get<PalmDpp>(palm).lambda;
      return m1 * mean_p_integrand_integral(
                      [&](double u) {
                        const double w = 1.0 - jm.psi(u);
                        double s = 0.0;
                        for (Eigen::Index j = 0; j < lam.size(); ++j) s += std::log1p(-std::min(1.0, lam[j]) * w);
                        return s;
                      },
                      jm);
    });
  }
  return out;
}

PriorMoments prior_moments_mc(const ProcessModel& pp, const JumpModel& jm, const Region& a,
                              const Region& b, int n_sim, Rng& rng) {
  if (n_sim < 2) throw std::invalid_argument("prior_moments_mc: at least two draws required");
  InvGamma vprior(2.0, 2.0);
  std::vector<double> xa(n_sim), xb(n_sim), pa(n_sim);
  for (int i = 0; i < n_sim; ++i) {
    DiscreteMeasure mu = sample_nrm(pp, jm, vprior, rng);
    double sa = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (a.contains(mu.locations[j])) sa += mu.jumps[j];
      if (b.contains(mu.locations[j])) sb += mu.jumps[j];
    }
    const double t = mu.total_mass();
    xa[i] = sa;
    xb[i] = sb;
    pa[i] = t > 0.0 ? sa / t : 0.0;
  }
  auto mean_se = [](const std::vector<double>& v) {
    double m = 0.0, m2 = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) m2 += (x - m) * (x - m);
    return std::pair{m, std::sqrt(m2 / (v.size() - 1) / v.size())};
  };
  PriorMoments out;
  out.monte_carlo = true;
  std::tie(out.mean_mu_a, out.se_mean_mu_a) = mean_se(xa);
  std::tie(out.mean_p_a, out.se_mean_p_a) = mean_se(pa);
  const double mb = mean_se(xb).first;
  std::vector<double> prod(n_sim);
  for (int i = 0; i < n_sim; ++i) prod[i] = (xa[i] - out.mean_mu_a) * (xb[i] - mb);
  auto [c, cse] = mean_se(prod);
  out.cov_mu_ab = c * n_sim / (n_sim - 1.0);
  out.se_cov_mu_ab = cse;
  return out;
}

KnJoint joint_kn_law(const ProcessModel& pp, const JumpModel& jm, int n, const PointConfig& anchors,
                     int r_max) {
  const int k = static_cast<int>(anchors.size());
  if (n < 1 || k < 1 || k > n) throw std::invalid_argument("joint_kn_law: need 1 <= k <= n");
  KnJoint out;
  const Estimate lm = log_moment_density(pp, anchors);
  if (lm.value == kNegInf) {
    out.log_value = kNegInf;
    return out;
  }
  const PalmDescriptor palm = reduced_palm(pp, anchors);
  const CountLaw law = palm_count_law(pp, palm, r_max);
  const double alpha = jm.shape;
  double partial = 0.0;
  std::vector<double> terms;
  for (int r = 0; r <= r_max; ++r)
    if (law.pmf[r] > 0.0) terms.push_back(std::log(law.pmf[r]) + log_gamma_ratio(k, r, alpha, n));
  const double log_sum = log_sum_exp(terms);
  partial = std::exp(log_sum);
  out.tail_bound = law.tail * std::exp(log_gamma_ratio(k, r_max + 1, alpha, n));
  if (out.tail_bound > 1e-8 * partial)
    throw std::runtime_error("joint_kn_law: truncation tail too large, widen r_max (r_max=" +
                             std::to_string(r_max) + ")");
  const SignedLogReal c = gfc(n, k, -alpha);
  if (c.sign == 0) {
    out.log_value = kNegInf;
    return out;
  }
  if (c.sign * (n % 2 == 0 ? 1 : -1) < 0) throw std::runtime_error("joint_kn_law: negative coefficient");
  out.log_value = c.log_magnitude + log_sum + lm.value;
  out.value = std::exp(out.log_value);
  return out;
}

SncpKnPmf sncp_kn_pmf(const Sncp& s, const JumpModel& jm, int n, int r_max) {
  if (n < 1) throw std::invalid_argument("sncp_kn_pmf: n >= 1 required");
  if (n > 25) throw std::invalid_argument("sncp_kn_pmf: n <= 25 (Stirling numbers)");
  const double alpha = jm.shape, lambda = s.base.lambda, gamma = s.gamma;
  const long mmax = static_cast<long>(lambda + 12.0 * std::sqrt(lambda) + 30.0);
  SncpKnPmf out;
  out.pmf.assign(n + 1, 0.0);
  // q_r given j shared-parent blocks: Poisson(gamma (j + M)) mixed over M ~ Poisson(lambda)
  auto count_pmf = [&](int j) {
    std::vector<double> q(r_max + 1, 0.0);
    for (long m = 0; m <= mmax; ++m) {
      const double wm = std::exp(m * std::log(lambda) - lambda - std::lgamma(m + 1.0));
      const double mean = gamma * (j + m);
      for (int r = 0; r <= r_max; ++r) {
        const double lp = mean > 0.0 ? r * std::log(mean) - mean - std::lgamma(r + 1.0) : (r == 0 ? 0.0 : kNegInf);
        q[r] += wm * std::exp(lp);
      }
    }
    return q;
  };
  std::vector<std::vector<double>> qj(n + 1);
  for (int j = 1; j <= n; ++j) qj[j] = count_pmf(j);
  double total = 0.0;
  for (int k = 1; k <= n; ++k) {
    const SignedLogReal c = gfc(n, k, -alpha);
    const SignedLogReal signed_c = (n % 2 == 0) ? c : c * -1.0;  // (-1)^n C(n,k;-alpha)
    double inner = 0.0, tail = 0.0;
    for (int j = 1; j <= k; ++j) {
      double acc = 0.0, qsum = 0.0;
      for (int r = 0; r <= r_max; ++r) {
        acc += qj[j][r] * std::exp(log_gamma_ratio(k, r, alpha, n));
        qsum += qj[j][r];
      }
      const double w = stirling2(k, j) * std::pow(lambda, j);
      inner += w * acc;
      tail += w * std::max(0.0, 1.0 - qsum) * std::exp(log_gamma_ratio(k, r_max + 1, alpha, n));
    }
    const double mass = signed_c.value() * std::pow(gamma, k) * inner;
    if (mass < 0.0) throw std::runtime_error("sncp_kn_pmf: negative mass at k=" + std::to_string(k));
    out.pmf[k] = mass;
    out.tail_bound += std::fabs(signed_c.value()) * std::pow(gamma, k) * tail;
    total += mass;
  }
  if (!(total > 0.0)) throw std::runtime_error("sncp_kn_pmf: zero total mass");
  for (double& p : out.pmf) p /= total;
  out.normalizer = total;
  return out;
}

}  // namespace nrmpp
