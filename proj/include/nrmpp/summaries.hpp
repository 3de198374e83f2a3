#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nrmpp/mcmc.hpp"

namespace nrmpp {

enum class Level { component, group };

/// Labels per observation for every record at the requested level.
std::vector<std::vector<int>> partitions(const Trace& tr, Level level);

/// Posterior frequency that observations i and j share a label.
Eigen::MatrixXd coclustering(const Trace& tr, Level level);
Eigen::MatrixXd coclustering(const std::vector<std::vector<int>>& parts);

/// Empirical pmf of the number of distinct labels, indexed by k.
std::vector<double> kn_posterior(const Trace& tr, Level level);
std::vector<double> kn_posterior(const std::vector<std::vector<int>>& parts);

/// Candidate partition whose co-clustering indicator matrix is closest to ccm in
/// Frobenius norm. Labels are returned canonically (first appearance order).
std::vector<int> point_partition(const Eigen::MatrixXd& ccm, const std::vector<std::vector<int>>& candidates);

/// Effective sample size by the initial positive sequence estimator; 0 for a constant series.
double ess(const std::vector<double>& series);

}  // namespace nrmpp
