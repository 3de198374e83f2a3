#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <numbers>
#include <set>

#include "doctest.h"
#include "nrmpp/specfun.hpp"
#include "oracles.hpp"

using namespace nrmpp;

TEST_SUITE("specfun") {
  TEST_CASE("gfc boundary values") {
    CHECK(gfc(0, 0, 0.7).value() == doctest::Approx(1.0));
    CHECK(gfc(0, 0, 0.7).sign == 1);
    CHECK(gfc(3, 4, 0.5).sign == 0);
    CHECK(gfc(3, 0, 0.5).sign == 0);
    CHECK(gfc(2, 1, -1.0).value() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(gfc(-1, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gfc(2, -1, 1.0), std::invalid_argument);
    CHECK_THROWS(gfc(10001, 1, 1.0));
  }

  TEST_CASE("gfc matches the composition oracle") {
    for (double a : {0.5, 1.0, 2.0})
      for (int n = 1; n <= 8; ++n)
        for (int k = 1; k <= n; ++k) {
          const SignedLogReal c = gfc(n, k, -a);
          const double v = (n % 2 ? -1.0 : 1.0) * c.value();
          CHECK(v == doctest::Approx(oracle::composition_sum(n, k, a)).epsilon(1e-10));
        }
  }

  TEST_CASE("gfc stays finite beyond double range") {
    const SignedLogReal c = gfc(400, 3, -1.0);
    CHECK(c.sign != 0);
    CHECK(std::isfinite(c.log_magnitude));
    CHECK(c.log_magnitude > 709.0);
  }

  TEST_CASE("signed log arithmetic") {
    const auto a = SignedLogReal::from_double(3.0);
    const auto b = SignedLogReal::from_double(-5.0);
    CHECK((a + b).value() == doctest::Approx(-2.0));
    CHECK((a + SignedLogReal::from_double(-3.0)).sign == 0);
    CHECK((b * -2.0).value() == doctest::Approx(10.0));
    CHECK(SignedLogReal::from_double(0.0).sign == 0);
  }

  TEST_CASE("bell numbers") {
    CHECK(bell(0) == 1);
    CHECK(bell(3) == 5);
    CHECK(bell(5) == 52);
    CHECK(bell(25) == 4638590332229999353ULL);
    CHECK_THROWS(bell(26));
    int count = 0;
    for_each_set_partition(5, [&](const std::vector<int>&, int) { ++count; });
    CHECK(count == 52);
  }

  TEST_CASE("set partitions are distinct restricted growth strings") {
    std::set<std::vector<int>> seen;
    for_each_set_partition(4, [&](const std::vector<int>& b, int nb) {
      CHECK(b[0] == 0);
      int mx = 0;
      for (int v : b) {
        CHECK(v <= mx + 1);
        mx = std::max(mx, v);
      }
      CHECK(nb == mx + 1);
      seen.insert(b);
    });
    CHECK(seen.size() == 15);
  }

  TEST_CASE("stirling numbers of the second kind") {
    CHECK(stirling2(0, 0) == 1.0);
    CHECK(stirling2(5, 2) == 15.0);
    CHECK(stirling2(6, 3) == 90.0);
    double s = 0.0;
    for (int j = 0; j <= 7; ++j) s += stirling2(7, j);
    CHECK(s == doctest::Approx(static_cast<double>(bell(7))));
  }

  TEST_CASE("log pochhammer") {
    CHECK(log_pochhammer(0.3, 0) == 0.0);
    CHECK(log_pochhammer(1.0, 3) == doctest::Approx(std::log(6.0)));
    CHECK(log_pochhammer(2.5, 2) == doctest::Approx(std::log(8.75)));
    CHECK_THROWS_AS(log_pochhammer(0.0, 2), std::invalid_argument);
  }

  TEST_CASE("half-line quadrature oracles") {
    const double tol = 1e-10;
    CHECK(integrate_halfline([](double u) { return std::exp(-u); }, tol) == doctest::Approx(1.0).epsilon(tol));
    CHECK(integrate_halfline([](double u) { return u * std::exp(-u); }, tol) == doctest::Approx(1.0).epsilon(tol));
    CHECK(integrate_halfline([](double u) { return std::pow(u, 4) * std::pow(1 + u, -7); }, tol) ==
          doctest::Approx(1.0 / 30.0).epsilon(tol));
  }

  TEST_CASE("interval quadrature and Gauss-Legendre") {
    CHECK(integrate_interval([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-12) ==
          doctest::Approx(2.0).epsilon(1e-12));
    std::vector<double> x, w;
    gauss_legendre(6, -1.0, 2.0, x, w);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 11);
    CHECK(s == doctest::Approx((std::pow(2.0, 12) - 1.0) / 12.0).epsilon(1e-12));
  }

  TEST_CASE("log-sum-exp") {
    std::vector<double> v{1000.0, 1000.0};
    CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
    CHECK(log_add_exp(-INFINITY, 3.0) == 3.0);
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  }
}
