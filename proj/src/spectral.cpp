#include "nrmpp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nrmpp {

KernelFn gaussian_kernel(double rho, double alpha, int q) {
  if (!(rho > 0.0) || !(alpha > 0.0)) throw std::invalid_argument("gaussian_kernel: rho, alpha > 0");
  return [rho, alpha, q](const double* x, const double* y) {
    return rho * std::exp(-sqdist(x, y, q) / alpha);
  };
}

double SpectralBasis::max_eigenvalue() const {
  return rank() == 0 ? 0.0 : eigenvalues_.maxCoeff();
}

void SpectralBasis::validate_dpp() const {
  if (rank() > 0 && max_eigenvalue() >= 1.0)
    throw std::domain_error("DPP existence violated: eigenvalue " +
                            std::to_string(max_eigenvalue()) + " >= 1");
}

void SpectralBasis::eval(const double* x, double* out) const {
  const int q = dim();
  if (kind_ == Kind::fourier) {
    const double vol = region_.volume();
    const double c0 = 1.0 / std::sqrt(vol), c1 = std::sqrt(2.0 / vol);
    for (int j = 0; j < rank(); ++j) {
      if (types_[j] == 0) {
        out[j] = c0;
        continue;
      }
      double theta = 0.0;
      for (int i = 0; i < q; ++i)
        theta += freqs_[j][i] * (x[i] - region_.lower[i]) / region_.side(i);
      theta *= 2.0 * std::numbers::pi;
      out[j] = c1 * (types_[j] == 1 ? std::cos(theta) : std::sin(theta));
    }
    return;
  }
  const int m = static_cast<int>(landmarks_.size());
  Eigen::VectorXd kv(m);
  for (int b = 0; b < m; ++b) kv[b] = kernel_fn_(x, landmarks_[b]);
  Eigen::VectorXd proj = vecs_.transpose() * kv;
  const double sw = std::sqrt(weight_);
  for (int j = 0; j < rank(); ++j) out[j] = sw * proj[j] / eigenvalues_[j];
}

Eigen::VectorXd SpectralBasis::eval(const double* x) const {
  Eigen::VectorXd out(rank());
  eval(x, out.data());
  return out;
}

Eigen::MatrixXd SpectralBasis::eval_matrix(const PointConfig& pts) const {
  Eigen::MatrixXd e(rank(), static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) eval(pts[i], e.col(i).data());
  return e;
}

double SpectralBasis::kernel(const double* x, const double* y) const {
  Eigen::VectorXd ex = eval(x), ey = eval(y);
  return (ex.array() * eigenvalues_.array() * ey.array()).sum();
}

namespace {

void enumerate_lattice(const std::vector<int>& bound, std::vector<int>& cur, std::size_t axis,
                       std::vector<std::vector<int>>& out) {
  if (axis == bound.size()) {
    out.push_back(cur);
    return;
  }
  for (int h = -bound[axis]; h <= bound[axis]; ++h) {
    cur[axis] = h;
    enumerate_lattice(bound, cur, axis + 1, out);
  }
}

bool in_half_lattice(const std::vector<int>& h) {
  for (int v : h) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return false;
}

}  // namespace

SpectralBasis SpectralBasis::fourier(double rho, double alpha, const Region& region,
                                     double cutoff_tol) {
  if (!(rho > 0.0) || !(alpha > 0.0)) throw std::invalid_argument("fourier: rho, alpha > 0");
  if (!(cutoff_tol > 0.0 && cutoff_tol < 1.0))
    throw std::invalid_argument("fourier: cutoff_tol must lie in (0,1)");
  const int q = region.dim();
  const double pi2a = std::numbers::pi * std::numbers::pi * alpha;
  auto raw = [&](const std::vector<int>& h) {
    double s = 0.0;
    for (int i = 0; i < q; ++i) {
      const double f = h[i] / region.side(i);
      s += f * f;
    }
    return rho * std::pow(std::numbers::pi * alpha, 0.5 * q) * std::exp(-pi2a * s);
  };
  // lattice box wide enough that dropped terms are below 1e-20 of the leading one
  std::vector<int> bound(q);
  for (int i = 0; i < q; ++i)
    bound[i] = static_cast<int>(std::ceil(region.side(i) * std::sqrt(46.0 / pi2a))) + 1;
  std::vector<std::vector<int>> lattice;
  std::vector<int> cur(q, 0);
  enumerate_lattice(bound, cur, 0, lattice);

  double total = 0.0;
  struct Mode {
    std::vector<int> h;
    double lam;
    bool pair;
  };
  std::vector<Mode> modes;
  for (const auto& h : lattice) {
    const double l = raw(h);
    total += l;
    const bool zero = std::all_of(h.begin(), h.end(), [](int v) { return v == 0; });
    if (zero) modes.push_back({h, l, false});
    else if (in_half_lattice(h)) modes.push_back({h, l, true});
  }
  const double scale = rho * region.volume() / total;
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.lam > b.lam; });

  SpectralBasis sb;
  sb.kind_ = Kind::fourier;
  sb.region_ = region;
  std::vector<double> lams;
  double kept = 0.0;
  const double target = total * (1.0 - cutoff_tol);
  for (const auto& md : modes) {
    if (kept >= target) break;
    const int mult = md.pair ? 2 : 1;
    for (int t = 0; t < mult; ++t) {
      sb.freqs_.push_back(md.h);
      sb.types_.push_back(md.pair ? 1 + t : 0);
      lams.push_back(md.lam * scale);
      sb.sup_single_sq_.push_back((md.pair ? 2.0 : 1.0) / region.volume());
    }
    kept += mult * md.lam;
  }
  sb.eigenvalues_ = Eigen::Map<Eigen::VectorXd>(lams.data(), static_cast<Eigen::Index>(lams.size()));
  sb.residual_ = std::max(0.0, 1.0 - kept / total);
  sb.sup_norm_sq_ = static_cast<double>(lams.size()) / region.volume();
  return sb;
}

SpectralBasis SpectralBasis::nystrom(const KernelFn& kernel, const Region& region, int m_landmarks,
                                     double rel_cutoff) {
  if (m_landmarks < 8) throw std::invalid_argument("nystrom: at least 8 landmarks required");
  const int q = region.dim();
  const int per = std::max(2, static_cast<int>(std::lround(std::pow(m_landmarks, 1.0 / q))));
  int m = 1;
  for (int i = 0; i < q; ++i) m *= per;

  SpectralBasis sb;
  sb.kind_ = Kind::nystrom;
  sb.region_ = region;
  sb.kernel_fn_ = kernel;
  sb.landmarks_ = PointConfig(q);
  std::vector<int> idx(q, 0);
  std::vector<double> x(q);
  for (int a = 0; a < m; ++a) {
    int r = a;
    for (int i = 0; i < q; ++i) {
      idx[i] = r % per;
      r /= per;
      x[i] = region.lower[i] + (idx[i] + 0.5) * region.side(i) / per;
    }
    sb.landmarks_.push_back(x.data());
  }
  sb.weight_ = region.volume() / m;

  Eigen::MatrixXd kmat(m, m);
  double kmax = 0.0, asym = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      kmat(a, b) = kernel(sb.landmarks_[a], sb.landmarks_[b]);
      kmax = std::max(kmax, std::fabs(kmat(a, b)));
    }
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) asym = std::max(asym, std::fabs(kmat(a, b) - kmat(b, a)));
  if (asym > 1e-8 * std::max(1.0, kmax))
    throw std::invalid_argument("nystrom: kernel matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sb.weight_ * 0.5 * (kmat + kmat.transpose()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev[m - 1];
  const double trace = ev.cwiseMax(0.0).sum();
  std::vector<int> keep;
  for (int j = m - 1; j >= 0; --j)
    if (ev[j] > 0.0 && ev[j] > rel_cutoff * top) keep.push_back(j);
  sb.eigenvalues_.resize(static_cast<Eigen::Index>(keep.size()));
  sb.vecs_.resize(m, static_cast<Eigen::Index>(keep.size()));
  double kept = 0.0;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    sb.eigenvalues_[c] = ev[keep[c]];
    sb.vecs_.col(c) = es.eigenvectors().col(keep[c]);
    kept += ev[keep[c]];
  }
  sb.residual_ = trace > 0.0 ? std::max(0.0, 1.0 - kept / trace) : 0.0;

  // envelope constants from a grid three times finer than the landmarks
  const int fine = 3 * per + 1;
  int nf = 1;
  for (int i = 0; i < q; ++i) nf *= fine;
  sb.sup_single_sq_.assign(keep.size(), 0.0);
  Eigen::VectorXd e(sb.rank());
  for (int a = 0; a < nf; ++a) {
    int r = a;
    for (int i = 0; i < q; ++i) {
      x[i] = region.lower[i] + (r % fine) * region.side(i) / (fine - 1);
      r /= fine;
    }
    sb.eval(x.data(), e.data());
    sb.sup_norm_sq_ = std::max(sb.sup_norm_sq_, e.squaredNorm());
    for (int j = 0; j < sb.rank(); ++j)
      sb.sup_single_sq_[j] = std::max(sb.sup_single_sq_[j], e[j] * e[j]);
  }
  sb.sup_norm_sq_ *= 1.25;
  for (double& v : sb.sup_single_sq_) v *= 1.25;
  return sb;
}

SpectralBasis spectral_decompose(double rho, double alpha, const Region& region,
                                 double cutoff_tol) {
  SpectralBasis sb = SpectralBasis::fourier(rho, alpha, region, cutoff_tol);
  sb.validate_dpp();
  return sb;
}

SpectralBasis nystrom(const KernelFn& kernel, const Region& region, int m_landmarks) {
  return SpectralBasis::nystrom(kernel, region, m_landmarks);
}

}  // namespace nrmpp
