#include "nrmpp/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace nrmpp {

namespace {

std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> m;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = m.find(labels[i]);
    if (it == m.end()) it = m.emplace(labels[i], static_cast<int>(m.size())).first;
    out[i] = it->second;
  }
  return out;
}

}  // namespace

std::vector<std::vector<int>> partitions(const Trace& tr, Level level) {
  if (tr.records.empty()) throw std::invalid_argument("summaries: empty trace");
  if (level == Level::group && !tr.has_groups)
    throw std::invalid_argument("summaries: group level requires an SNCP trace");
  std::vector<std::vector<int>> out;
  out.reserve(tr.records.size());
  for (const auto& r : tr.records) out.push_back(level == Level::group ? r.groups : r.allocations);
  return out;
}

Eigen::MatrixXd coclustering(const std::vector<std::vector<int>>& parts) {
  if (parts.empty()) throw std::invalid_argument("coclustering: no partitions");
  const Eigen::Index n = static_cast<Eigen::Index>(parts.front().size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& p : parts) {
    if (static_cast<Eigen::Index>(p.size()) != n) throw std::invalid_argument("coclustering: ragged partitions");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        if (p[i] == p[j]) m(i, j) += 1.0;
  }
  m /= static_cast<double>(parts.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

Eigen::MatrixXd coclustering(const Trace& tr, Level level) { return coclustering(partitions(tr, level)); }

std::vector<double> kn_posterior(const std::vector<std::vector<int>>& parts) {
  if (parts.empty()) throw std::invalid_argument("kn_posterior: no partitions");
  std::vector<double> pmf;
  for (const auto& p : parts) {
    const std::size_t k = std::set<int>(p.begin(), p.end()).size();
    if (pmf.size() <= k) pmf.resize(k + 1, 0.0);
    pmf[k] += 1.0;
  }
  for (double& x : pmf) x /= static_cast<double>(parts.size());
  return pmf;
}

std::vector<double> kn_posterior(const Trace& tr, Level level) { return kn_posterior(partitions(tr, level)); }

std::vector<int> point_partition(const Eigen::MatrixXd& ccm, const std::vector<std::vector<int>>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("point_partition: no candidates");
  const Eigen::Index n = ccm.rows();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> arg;
  std::set<std::vector<int>> seen;
  for (const auto& raw : candidates) {
    std::vector<int> p = canonical(raw);
    if (!seen.insert(p).second) continue;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d = (p[i] == p[j] ? 1.0 : 0.0) - ccm(i, j);
        loss += d * d;
      }
    if (loss < best) {
      best = loss;
      arg = std::move(p);
    }
  }
  return arg;
}

double ess(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= n;
  if (!(c0 > 0.0)) return 0.0;
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    return s / n;
  };
  // Geyer: sum pairs Gamma_m = rho_{2m} + rho_{2m+1} while positive
  double sum = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double g = (acov(2 * m) + acov(2 * m + 1)) / c0;
    if (g <= 0.0) break;
    sum += g;
  }
  const double tau = -1.0 + 2.0 * sum;
  return n / std::max(tau, 1e-12);
}

}  // namespace nrmpp
