#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace nrmpp {

/// A real number stored as sign * exp(log_magnitude).
struct SignedLogReal {
  double log_magnitude = 0.0;
  int sign = 0;

  static SignedLogReal zero() { return {0.0, 0}; }
  static SignedLogReal from_double(double v);
  double value() const;
};

SignedLogReal operator+(const SignedLogReal& a, const SignedLogReal& b);
SignedLogReal operator*(const SignedLogReal& a, double b);

/// Central generalized factorial coefficient C(n,k;alpha).
SignedLogReal gfc(long n, long k, double alpha);

/// Bell number B_k, k <= 25.
std::uint64_t bell(int k);

/// Stirling numbers of the second kind S(k, j), as doubles.
double stirling2(int k, int j);

/// log of the rising factorial (alpha)_n.
double log_pochhammer(double alpha, long n);

/// Integral of a non-negative f over (0, inf).
double integrate_halfline(const std::function<double(double)>& f, double rel_tol);

/// Integral of f over [a, b] by adaptive Gauss-Kronrod.
double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          double rel_tol);

/// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int m, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights);

double log_sum_exp(std::span<const double> xs);
double log_add_exp(double a, double b);

/// Calls visit(block_of, n_blocks) for every set partition of {0..k-1},
/// encoded as a restricted growth string.
void for_each_set_partition(int k, const std::function<void(const std::vector<int>&, int)>& visit);

double normal_cdf(double z);

}  // namespace nrmpp
