#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <numbers>

#include "doctest.h"
#include "nrmpp/nrm.hpp"
#include "nrmpp/pointproc.hpp"
#include "nrmpp/specfun.hpp"
#include "oracles.hpp"

using namespace nrmpp;

namespace {

const Region unit = Region::interval(-0.5, 0.5);

struct Campbell {
  std::vector<double> count, sq;
};

Campbell campbell(const ProcessModel& pp, int n_sim, Rng& rng) {
  Campbell c;
  for (int i = 0; i < n_sim; ++i) {
    const PointConfig p = simulate(pp, rng);
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += p[j][0] * p[j][0];
    c.count.push_back(static_cast<double>(p.size()));
    c.sq.push_back(s);
  }
  return c;
}

Sncp default_sncp() {
  Sncp s;
  s.gamma = 1.0;
  s.kernel_sd = 1.0;
  s.base.kind = SncpBase::Kind::gaussian;
  s.base.lambda = 1.0;
  s.base.mean = {0.5};
  s.base.sd = 2.0;
  return s;
}

}  // namespace

TEST_SUITE("pointproc") {
  TEST_CASE("region and point configuration") {
    CHECK(unit.volume() == 1.0);
    CHECK_THROWS(Region({0.0}, {0.0}));
    CHECK_THROWS(Region({0.0, 1.0}, {1.0}));
    const Region r({0.0, 0.0}, {1.0, 2.0});
    CHECK(r.volume() == 2.0);
    CHECK(r.intersect(Region({0.5, -1.0}, {3.0, 1.0})).volume() == doctest::Approx(0.5));
    CHECK(r.intersect(Region({5.0, 5.0}, {6.0, 6.0})).volume() == 0.0);
    PointConfig p(2, {0.0, 1.0, 2.0, 3.0});
    CHECK(p.size() == 2);
    p.erase(0);
    CHECK(p[0][1] == 3.0);
  }

  TEST_CASE("Poisson simulation and Campbell") {
    Rng rng = make_rng(1, "poisson");
    const ProcessModel pp = Poisson{1.0, unit};
    const auto c = campbell(pp, 100000, rng);
    CHECK(oracle::zscore(c.count, 1.0) < 4.0);
    CHECK(oracle::zscore(c.sq, 1.0 / 12.0) < 4.0);
  }

  TEST_CASE("Strauss with gamma_s = 1 is Poisson(beta |R|)") {
    Strauss st;
    st.beta = 2.0;
    st.gamma_s = 1.0;
    st.radius = 0.1;
    st.region = unit;
    Rng rng = make_rng(2, "strauss");
    const int n_sim = 20000;
    std::vector<double> hist(12, 0.0), counts;
    for (int i = 0; i < n_sim; ++i) {
      const auto n = simulate(ProcessModel(st), rng).size();
      hist[std::min<std::size_t>(n, 11)] += 1.0;
      counts.push_back(static_cast<double>(n));
    }
    double chi2 = 0.0, tail = 1.0;
    for (int k = 0; k < 11; ++k) {
      const double p = std::exp(-2.0 + k * std::log(2.0) - std::lgamma(k + 1.0));
      tail -= p;
      if (n_sim * p > 5.0) chi2 += std::pow(hist[k] - n_sim * p, 2) / (n_sim * p);
    }
    // at most 8 cells with expected count > 5; chi2(8) upper 0.001 quantile is 26.1
    CHECK(chi2 < 26.1);
    CHECK(oracle::zscore(counts, 2.0) < 4.0);
  }

  TEST_CASE("Strauss repulsion lowers the mean count") {
    Strauss st;
    st.beta = 20.0;
    st.gamma_s = 0.1;
    st.radius = 0.1;
    st.region = unit;
    Rng rng = make_rng(3, "strauss");
    std::vector<double> counts;
    for (int i = 0; i < 2000; ++i) counts.push_back(static_cast<double>(simulate(ProcessModel(st), rng).size()));
    CHECK(oracle::mean(counts) < 15.0);
  }

  TEST_CASE("Papangelou intensity") {
    const ProcessModel pois = Poisson{1.0, unit};
    CHECK(log_papangelou(pois, PointConfig(1, {0.1}), PointConfig(1, {0.0, 0.3})) == 0.0);
    Strauss st;
    st.beta = 2.0;
    st.gamma_s = 1.0;
    st.radius = 0.1;
    st.region = unit;
    CHECK(log_papangelou(st, PointConfig(1, {0.1}), PointConfig(1, {0.12})) == doctest::Approx(std::log(2.0)));
    st.beta = 1.0;
    st.gamma_s = 0.5;
    CHECK(log_papangelou(st, PointConfig(1, {0.0}), PointConfig(1, {-0.05, 0.05, 0.3})) ==
          doctest::Approx(2.0 * std::log(0.5)));
    st.gamma_s = 0.0;
    CHECK(log_papangelou(st, PointConfig(1, {0.0}), PointConfig(1, {0.05})) == -INFINITY);
  }

  TEST_CASE("Strauss pair counts by brute force") {
    Strauss st;
    st.radius = 0.1;
    st.region = unit;
    Rng rng = make_rng(4);
    PointConfig a(1), b(1);
    for (int i = 0; i < 30; ++i) a.push_back(runif(rng) - 0.5);
    for (int i = 0; i < 10; ++i) b.push_back(runif(rng) - 0.5);
    long within = 0, across = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = i + 1; j < a.size(); ++j) within += std::abs(a[i][0] - a[j][0]) <= 0.1;
      for (std::size_t j = 0; j < b.size(); ++j) across += std::abs(a[i][0] - b[j][0]) <= 0.1;
    }
    CHECK(strauss_pairs(st, a) == within);
    CHECK(strauss_pairs(st, a, b) == across);
  }

  TEST_CASE("DPP spectrum") {
    const SpectralBasis sb = SpectralBasis::fourier(5.0, 0.3, unit, 1e-6);
    CHECK(sb.eigen_sum() == doctest::Approx(5.0).epsilon(1e-3));
    CHECK(sb.truncation_residual() < 1e-6);
    const Dpp d = make_dpp(3.0, 0.02, unit);
    CHECK(d.spectrum->max_eigenvalue() < 1.0);
    CHECK(d.spectrum->eigen_sum() == doctest::Approx(3.0).epsilon(1e-6));
    CHECK_THROWS_WITH(make_dpp(5.0, 0.3, unit), doctest::Contains("DPP existence violated"));
  }

  TEST_CASE("Nystrom eigenpairs") {
    const SpectralBasis c = nystrom([](const double*, const double*) { return 2.0; }, unit, 50);
    CHECK(c.eigenvalues()[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(c.eigen_sum() == doctest::Approx(2.0).epsilon(1e-6));
    CHECK_THROWS(nystrom([](const double* x, const double*) { return x[0]; }, unit, 20));
    CHECK_THROWS(nystrom([](const double*, const double*) { return 1.0; }, unit, 4));

    const SpectralBasis f = spectral_decompose(3.0, 0.002, unit, 1e-8);
    const SpectralBasis ny = nystrom(gaussian_kernel(3.0, 0.002, 1), unit, 600);
    std::vector<double> fe(f.eigenvalues().data(), f.eigenvalues().data() + f.rank());
    std::sort(fe.rbegin(), fe.rend());
    for (int j = 0; j < 5; ++j) CHECK(ny.eigenvalues()[j] == doctest::Approx(fe[j]).epsilon(0.01));
    // the extension reproduces the kernel between grid points
    const double x = 0.123, y = -0.071;
    CHECK(ny.kernel(&x, &y) == doctest::Approx(gaussian_kernel(3.0, 0.002, 1)(&x, &y)).epsilon(1e-3));
  }

  TEST_CASE("DPP simulation is under-dispersed and Campbell-consistent") {
    const ProcessModel pp = make_dpp(3.0, 0.02, unit);
    Rng rng = make_rng(5, "dpp");
    const auto c = campbell(pp, 100000, rng);
    CHECK(oracle::zscore(c.count, 3.0) < 4.0);
    CHECK(oracle::zscore(c.sq, 3.0 / 12.0) < 4.0);
    CHECK(oracle::variance(c.count) < oracle::mean(c.count));
    double vpb = 0.0;
    const auto& lam = std::get<Dpp>(pp).spectrum->eigenvalues();
    for (Eigen::Index j = 0; j < lam.size(); ++j) vpb += lam[j] * (1.0 - lam[j]);
    CHECK(oracle::variance(c.count) == doctest::Approx(vpb).epsilon(0.03));
  }

  TEST_CASE("DPP moment densities and Palm") {
    const Dpp d = make_dpp(3.0, 0.02, unit);
    const ProcessModel pp = d;
    CHECK(log_moment_density(pp, PointConfig(1, {0.2})).value == doctest::Approx(std::log(3.0)).epsilon(1e-6));
    const PointConfig two(1, {-0.1, 0.05});
    const double k01 = d.spectrum->kernel(two[0], two[1]);
    CHECK(log_moment_density(pp, two).value == doctest::Approx(std::log(9.0 - k01 * k01)).epsilon(1e-6));
    CHECK_THROWS(log_moment_density(pp, PointConfig(1, {0.1, 0.1})));

    const PointConfig y(1, {0.1});
    const auto palm = std::get<PalmDpp>(reduced_palm(pp, y));
    for (double x : {-0.4, 0.0, 0.1, 0.33}) CHECK(std::abs(palm.kernel(y[0], &x)) < 1e-8);
    // E[Phi^!(R)] = rho |R| - int K(x,y)^2 dx / K(y,y)
    const Eigen::VectorXd e = d.spectrum->eval(y[0]);
    const double removed = (d.spectrum->eigenvalues().array().square() * e.array().square()).sum() / 3.0;
    CHECK(palm_mean_count(pp, palm) == doctest::Approx(3.0 - removed).epsilon(1e-6));
    CHECK_THROWS_WITH(reduced_palm(pp, PointConfig(1, {0.1, 0.1 + 1e-12})), doctest::Contains("degenerate"));
  }

  TEST_CASE("DPP K-form and C-form Palm agree") {
    const Dpp d = make_dpp(3.0, 0.02, unit);
    const PointConfig y(1, {-0.2, 0.15});
    const auto palm = std::get<PalmDpp>(reduced_palm(ProcessModel(d), y));
    const Eigen::MatrixXd g = dpp_cform_palm(*d.spectrum, y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    std::vector<double> from_c;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
      const double gm = std::max(0.0, es.eigenvalues()[j]);
      from_c.push_back(gm / (1.0 + gm));
    }
    std::vector<double> from_k(palm.lambda.data(), palm.lambda.data() + palm.lambda.size());
    std::sort(from_c.begin(), from_c.end());
    std::sort(from_k.begin(), from_k.end());
    REQUIRE(from_c.size() == from_k.size());
    for (std::size_t j = 0; j < from_c.size(); ++j) CHECK(from_k[j] == doctest::Approx(from_c[j]).epsilon(1e-6));
  }

  TEST_CASE("tilted Laplace functionals") {
    const JumpModel g11(1, 1);
    const ProcessModel pois = Poisson{1.0, unit};
    CHECK(log_tilted_laplace(pois, PointConfig(1), 1.0, g11).value == doctest::Approx(-0.5));
    CHECK(log_tilted_laplace(pois, PointConfig(1, {0.1}), 0.0, g11).value == doctest::Approx(0.0));
    const ProcessModel sn = default_sncp();
    CHECK(log_tilted_laplace(sn, PointConfig(1), 1.0, g11).value ==
          doctest::Approx(std::exp(-0.5) - 1.0).epsilon(1e-10));
    CHECK(log_tilted_laplace(sn, PointConfig(1, {0.3}), 0.0, g11).value == doctest::Approx(0.0));

    // DPP: exact Poisson-binomial product over the Palm eigenvalues vs simulation
    const Dpp d = make_dpp(3.0, 0.02, unit);
    const PointConfig y(1, {0.0});
    const double lt = log_tilted_laplace(ProcessModel(d), y, 1.0, g11).value;
    const auto palm = std::get<PalmDpp>(reduced_palm(ProcessModel(d), y));
    double prod = 0.0;
    for (Eigen::Index j = 0; j < palm.lambda.size(); ++j) prod += std::log1p(-palm.lambda[j] * 0.5);
    CHECK(lt == doctest::Approx(prod).epsilon(1e-10));

    Strauss st;
    st.beta = 2.0;
    st.gamma_s = 1.0;
    st.radius = 0.1;
    st.region = unit;
    const Estimate e = log_tilted_laplace(ProcessModel(st), PointConfig(1, {0.0}), 1.0, g11, 4000);
    CHECK(std::abs(e.value - 2.0 * (0.5 - 1.0)) < 4.0 * e.se + 1e-9);
    CHECK_THROWS(log_tilted_laplace(ProcessModel(st), PointConfig(1), 1.0, g11, 50));
  }

  TEST_CASE("Strauss moment density with gamma_s = 1 is beta^k") {
    Strauss st;
    st.beta = 2.0;
    st.gamma_s = 1.0;
    st.radius = 0.1;
    st.region = unit;
    const Estimate e = log_moment_density(ProcessModel(st), PointConfig(1, {0.0, 0.2}));
    CHECK(e.value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
  }

  TEST_CASE("SNCP moment densities against quadrature") {
    const Sncp s = default_sncp();
    const ProcessModel pp = s;
    auto eta = [&](std::vector<double> xs) {
      return integrate_interval(
          [&](double v) {
            double f = std::exp(-0.5 * std::pow((v - 0.5) / 2.0, 2)) / (2.0 * std::sqrt(2 * std::numbers::pi));
            for (double x : xs) f *= std::exp(-0.5 * (x - v) * (x - v)) / std::sqrt(2 * std::numbers::pi);
            return f;
          },
          -40.0, 40.0, 1e-12);
    };
    Rng rng = make_rng(6);
    for (int i = 0; i < 10; ++i) {
      const double x = 6.0 * runif(rng) - 3.0;
      CHECK(log_moment_density(pp, PointConfig(1, {x})).value == doctest::Approx(std::log(s.gamma * eta({x}))).epsilon(1e-6));
      CHECK(sncp_log_eta(s, PointConfig(1, {x})) == doctest::Approx(std::log(eta({x}))).epsilon(1e-6));
    }
    const double x1 = -0.3, x2 = 1.1;
    CHECK(std::exp(log_moment_density(pp, PointConfig(1, {x1, x2})).value) ==
          doctest::Approx(eta({x1}) * eta({x2}) + eta({x1, x2})).epsilon(1e-6));
    PointConfig big(1);
    for (int i = 0; i < 13; ++i) big.push_back(0.1 * i);
    CHECK_THROWS(log_moment_density(pp, big));
  }

  TEST_CASE("SNCP simulation and Palm decomposition") {
    const Sncp s = default_sncp();
    Rng rng = make_rng(7, "sncp");
    const auto c = campbell(ProcessModel(s), 100000, rng);
    CHECK(oracle::zscore(c.count, 1.0) < 4.0);
    CHECK(oracle::zscore(c.sq, 0.25 + 4.0 + 1.0) < 4.0);
    const auto palm = std::get<PalmSncp>(reduced_palm(ProcessModel(s), PointConfig(1, {0.0, 0.4})));
    const auto terms = palm.partition_terms();
    REQUIRE(terms.size() == 2);
    double total = 0.0;
    for (const auto& [blocks, p] : terms) total += p;
    CHECK(total == doctest::Approx(1.0));
    const auto fixed = sncp_palm_fixed(s, PointConfig(1, {0.0, 0.4}), {{0}, {1}});
    CHECK(fixed.is_fixed());
  }

  TEST_CASE("SNCP parent draw is the conjugate Gaussian") {
    const Sncp s = default_sncp();
    Rng rng = make_rng(8);
    const PointConfig block(1, {1.0});
    std::vector<double> z(100000);
    for (double& v : z) sncp_sample_parent(s, block, rng, &v);
    const double prec = 1.0 + 1.0 / 4.0, m = (1.0 + 0.5 / 4.0) / prec;
    CHECK(oracle::zscore(z, m) < 4.0);
    CHECK(oracle::variance(z) == doctest::Approx(1.0 / prec).epsilon(0.03));
  }

  TEST_CASE("determinism given the seed") {
    const ProcessModel pp = make_dpp(3.0, 0.02, unit);
    Rng a = make_rng(9), b = make_rng(9);
    for (int i = 0; i < 20; ++i) CHECK(simulate(pp, a).data() == simulate(pp, b).data());
  }
}
