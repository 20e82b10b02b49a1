#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gpss/detail/cholesky.hpp"
#include "gpss/errors.hpp"
#include "gpss/kernel.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace gpss;

namespace {

MsmKernelParams simple(double variance, double lengthscale,
                       std::vector<MsmComponent> comps) {
  MsmKernelParams p;
  p.variance = variance;
  p.lengthscale = lengthscale;
  p.components = std::move(comps);
  return p;
}

} // namespace

TEST_CASE("msm_eval at zero lag") {
  const auto p = simple(1.0, 1.0, {{1.0, 0.0}});
  CHECK(msm_eval(p, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("msm_eval matches scalar substitution") {
  const auto p = simple(2.0, 1.0, {{1.0, 0.0}});
  const double expected = oracle::msm_scalar(2.0, 1.0, {{1.0, 0.0}}, 1.0);
  CHECK(expected == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(msm_eval(p, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(msm_eval(p, 1.0) == doctest::Approx(0.735758882342885).epsilon(1e-12));
}

TEST_CASE("msm_eval cosine cancellation at negligible decay") {
  const auto p = simple(1.0, 1e6, {{1.0, 0.0}, {1.0, M_PI}});
  CHECK(std::abs(msm_eval(p, 1.0)) < 1e-12);
}

TEST_CASE("msm_eval rejects invalid parameters") {
  CHECK_THROWS_AS(msm_eval(simple(-1.0, 1.0, {{1.0, 0.0}}), 0.5), ParameterError);
  CHECK_THROWS_AS(msm_eval(simple(1.0, 0.0, {{1.0, 0.0}}), 0.5), ParameterError);
  CHECK_THROWS_AS(msm_eval(simple(1.0, 1.0, {{1.0, 0.0}}), -0.5), ParameterError);
  CHECK_THROWS_AS(msm_eval(simple(1.0, 1.0, {}), 0.5), ParameterError);
  CHECK_THROWS_AS(msm_eval(simple(1.0, 1.0, {{0.0, 0.0}, {0.0, 1.0}}), 0.5),
                  ParameterError);
  // unsorted frequencies must go through canonicalize() first
  CHECK_THROWS_AS(msm_eval(simple(1.0, 1.0, {{1.0, 5.0}, {1.0, 2.0}}), 0.5),
                  ParameterError);
}

TEST_CASE("canonicalize sorts and merges duplicate frequencies") {
  auto p = simple(1.0, 1.0, {{0.25, 7.0}, {0.5, 2.0}, {0.25, 7.0}});
  p.canonicalize();
  REQUIRE(p.num_components() == 2);
  CHECK(p.components[0].angular_frequency == 2.0);
  CHECK(p.components[1].angular_frequency == 7.0);
  CHECK(p.components[1].weight == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("gram of a single point") {
  const auto p = simple(1.3, 0.2, {{0.7, 10.0}, {0.3, 80.0}});
  Eigen::VectorXd t(1);
  t << 0.0;
  const auto g = gram(p, t, t);
  REQUIRE(g.values.rows() == 1);
  CHECK(g.values(0, 0) == doctest::Approx(p.k0()).epsilon(1e-15));
}

TEST_CASE("gram 2x2 closed form") {
  const auto p = simple(1.0, 0.1, {{1.0, 0.0}});
  Eigen::VectorXd t(2);
  t << 0.0, 0.01;
  const auto g = gram(p, t, t);
  CHECK(g.values(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g.values(0, 1) == doctest::Approx(std::exp(-0.1)).epsilon(1e-14));
  CHECK(g.values(1, 0) == g.values(0, 1));
}

TEST_CASE("gram of a sum of two identical parts doubles the single gram") {
  std::mt19937_64 gen(41);
  const auto part = oracle::random_kernel(gen);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(17, 0.0, 0.4);
  const auto single = gram(part, t, t);
  const auto doubled = gram(SumKernel{{part, part}}, t, t);
  CHECK(((doubled.values - 2.0 * single.values).cwiseAbs().maxCoeff()) <=
        1e-12 * single.values.cwiseAbs().maxCoeff());
}

TEST_CASE("gram is exactly symmetric on both build paths") {
  std::mt19937_64 gen(42);
  const auto p = oracle::random_kernel(gen);
  // uniform grid (Toeplitz path)
  Eigen::VectorXd uniform = Eigen::VectorXd::LinSpaced(32, 0.0, 0.25);
  auto g1 = gram(p, uniform, uniform);
  CHECK((g1.values - g1.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // irregular grid
  Eigen::VectorXd irregular(5);
  irregular << 0.0, 0.013, 0.0131, 0.2, 0.21;
  auto g2 = gram(p, irregular, irregular);
  CHECK((g2.values - g2.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stationarity: only the lag matters") {
  std::mt19937_64 gen(43);
  const auto p = oracle::random_kernel(gen);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double a = unit(gen), b = unit(gen), shift = unit(gen);
    const double tau = std::abs(a - b);
    CHECK(msm_eval(p, std::abs((a + shift) - (b + shift))) ==
          doctest::Approx(msm_eval(p, tau)).epsilon(1e-12));
  }
}

TEST_CASE("bound: |k(tau)| <= k(0)") {
  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = oracle::random_kernel(gen);
    const double k0 = p.k0();
    for (int i = 0; i < 1000; ++i) {
      const double tau = 2.0 * unit(gen);
      CHECK(std::abs(msm_eval(p, tau)) <= k0 + 1e-12);
    }
  }
}

TEST_CASE("gram plus relative jitter is positive definite") {
  std::mt19937_64 gen(45);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = oracle::random_kernel(gen);
    const int n = 8 + static_cast<int>(unit(gen) * 56);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t[i] = unit(gen);
    std::sort(t.data(), t.data() + n);
    auto g = gram(p, t, t);
    g.values.diagonal().array() += 1e-8 * p.k0();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(g.values);
    CHECK(eigensolver.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("additivity: sum-kernel gram equals the sum of part grams") {
  std::mt19937_64 gen(46);
  SumKernel sum;
  for (int j = 0; j < 3; ++j) sum.parts.push_back(oracle::random_kernel(gen));
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(24, 0.0, 0.3);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(24, 24);
  for (const auto& part : sum.parts) expected += gram(part, t, t).values;
  const auto combined = gram(sum, t, t);
  CHECK((combined.values - expected).cwiseAbs().maxCoeff() <=
        1e-12 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("spectral density closed form at zero frequency") {
  const double variance = 1.7, lengthscale = 0.05, weight = 1.0;
  const auto p = simple(variance, lengthscale, {{weight, 0.0}});
  Eigen::VectorXd w(1);
  w << 0.0;
  const double expected = variance * weight * lengthscale / M_PI;
  CHECK(spectral_density(p, w)[0] == doctest::Approx(expected).epsilon(1e-12));

  // cross-check by quadrature of (1/pi) * integral_0^T k(tau) cos(w tau) dtau
  const int quad_n = 40000;
  Eigen::VectorXd tau = Eigen::VectorXd::LinSpaced(quad_n, 0.0, 40.0 * lengthscale);
  Eigen::VectorXd integrand(quad_n);
  for (int i = 0; i < quad_n; ++i) integrand[i] = msm_eval(p, tau[i]);
  const double numeric = oracle::trapezoid(tau, integrand) / M_PI;
  CHECK(spectral_density(p, w)[0] == doctest::Approx(numeric).epsilon(1e-3));
}

TEST_CASE("spectral density peaks near the component frequencies") {
  const auto p = simple(1.0, 0.05, {{0.5, 2.0 * M_PI * 400.0}, {0.5, 2.0 * M_PI * 1500.0}});
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(20000, 0.0, 2.0 * M_PI * 2000.0);
  const Eigen::VectorXd density = spectral_density(p, grid);
  // argmax within a window around each component
  for (const auto& c : p.components) {
    double best_w = 0.0, best_v = -1.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      if (std::abs(grid[i] - c.angular_frequency) < 0.2 * c.angular_frequency &&
          density[i] > best_v) {
        best_v = density[i];
        best_w = grid[i];
      }
    }
    CHECK(std::abs(best_w - c.angular_frequency) <
          0.01 * c.angular_frequency + 2.0 * (grid[1] - grid[0]));
  }
}

TEST_CASE("spectral density integrates to k(0)") {
  std::mt19937_64 gen(47);
  for (int rep = 0; rep < 5; ++rep) {
    const auto p = oracle::random_kernel(gen);
    double w_max = 60.0 / p.lengthscale;
    for (const auto& c : p.components) w_max = std::max(w_max, c.angular_frequency * 4.0);
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(400000, -w_max, w_max);
    Eigen::VectorXd density = spectral_density(p, grid.cwiseAbs()); // even in omega
    const double integral = oracle::trapezoid(grid, density);
    CHECK(integral == doctest::Approx(p.k0()).epsilon(0.01));
  }
}

TEST_CASE("singleton query with all weight on one component is maximal") {
  const auto p = simple(1.0, 0.1, {{1.0, 2.0 * M_PI * 300.0}});
  Eigen::VectorXd at_peak(1), elsewhere(1);
  at_peak << p.components[0].angular_frequency;
  elsewhere << 2.0 * M_PI * 900.0;
  CHECK(spectral_density(p, at_peak)[0] > spectral_density(p, elsewhere)[0]);
}

TEST_CASE("jittered cholesky repairs a singular gram and reports the jitter") {
  // two identical rows: exactly singular without jitter
  Eigen::MatrixXd k(3, 3);
  k << 1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 0.5, 0.5, 1.0;
  const auto chol = gpss::detail::cholesky_with_jitter(k, 1.0);
  CHECK(chol.jitter > 0.0);
  CHECK(chol.jitter <= 1e-4);
}

TEST_CASE("jittered cholesky gives up on an indefinite matrix") {
  Eigen::MatrixXd m = -Eigen::MatrixXd::Identity(4, 4);
  CHECK_THROWS_AS(gpss::detail::cholesky_with_jitter(m, 1.0), ConditioningError);
}
