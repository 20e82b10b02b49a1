#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gpss/errors.hpp"
#include "gpss/gpcore.hpp"

#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace gpss;

namespace {

GpMixturePrior unit_prior(double noise) {
  GpMixturePrior prior;
  MsmKernelParams k;
  k.variance = 1.0;
  k.lengthscale = 1.0;
  k.components = {{1.0, 0.0}};
  prior.kernels = {k};
  prior.noise_variance = noise;
  return prior;
}

} // namespace

TEST_CASE("log_marginal scalar case") {
  Eigen::VectorXd t(1), y(1);
  t << 0.0;
  y << 0.0;
  const double expected = -0.5 * (std::log(2.0) + std::log(2.0 * M_PI));
  CHECK(log_marginal(unit_prior(1.0), t, y) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-1.2655121234846454).epsilon(1e-9));
}

TEST_CASE("log_marginal with zero data drops the quadratic term") {
  std::mt19937_64 gen(11);
  const auto prior = oracle::random_prior(gen, 2);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(12, 0.0, 0.11);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(12);
  Eigen::MatrixXd h = oracle::dense_gram(prior, t, t);
  h.diagonal().array() += prior.noise_variance;
  const double log_det = h.partialPivLu().matrixLU().diagonal().array().abs().log().sum();
  const double expected = -0.5 * (log_det + 12.0 * std::log(2.0 * M_PI));
  CHECK(log_marginal(prior, t, zero) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("log_marginal matches a closed-form 2x2 evaluation") {
  const auto prior = unit_prior(0.3);
  Eigen::VectorXd t(2), y(2);
  t << 0.0, 0.05;
  y << 0.7, -0.2;
  const double k01 = std::exp(-0.05);
  const double a = 1.3, b = k01;
  const double det = a * a - b * b;
  Eigen::Matrix2d h_inv;
  h_inv << a / det, -b / det, -b / det, a / det;
  const Eigen::Vector2d yy(0.7, -0.2);
  const double expected =
      -0.5 * (yy.dot(h_inv * yy) + std::log(det) + 2.0 * std::log(2.0 * M_PI));
  CHECK(log_marginal(prior, t, y) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log_marginal agrees with the dense-inverse oracle") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int rep = 0; rep < 12; ++rep) {
    const auto prior = oracle::random_prior(gen, 1 + rep % 3);
    const int n = 4 + rep * 2;
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, 0.011 * n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = unit(gen);
    const double expected = oracle::dense_log_marginal(prior, t, y);
    CHECK(log_marginal(prior, t, y) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("posterior with zero data has zero means and positive variances") {
  std::mt19937_64 gen(13);
  const auto prior = oracle::random_prior(gen, 2);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(20, 0.0, 0.19);
  const auto post = posterior(prior, t, Eigen::VectorXd::Zero(20), true);
  for (int j = 0; j < 2; ++j) {
    CHECK(post.source_means[j].cwiseAbs().maxCoeff() == 0.0);
    CHECK(post.source_variances[j].minCoeff() >= 0.0);
    CHECK(post.source_variances[j].maxCoeff() > 0.0);
  }
  CHECK(post.mixture_mean.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-source posterior mean equals the mixture mean") {
  std::mt19937_64 gen(14);
  const auto prior = oracle::random_prior(gen, 1);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(25, 0.0, 0.24);
  const auto sample = sample_prior(prior, t, 99);
  const auto post = posterior(prior, t, sample.mixture, false);
  CHECK((post.source_means[0] - post.mixture_mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("huge noise damps the posterior mean") {
  std::mt19937_64 gen(15);
  auto prior = oracle::random_prior(gen, 2);
  prior.noise_variance = 1e6 * prior.mixture_k0();
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(40, 0.0, 0.39);
  Eigen::VectorXd y(40);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < 40; ++i) y[i] = unit(gen);
  const auto post = posterior(prior, t, y, false);
  CHECK(post.mixture_mean.norm() <= 1e-4 * y.norm());
}

TEST_CASE("source means add up to the mixture mean") {
  std::mt19937_64 gen(16);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int rep = 0; rep < 8; ++rep) {
    const auto prior = oracle::random_prior(gen, 1 + rep % 4);
    const int n = 16 + 30 * rep;
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, n * 1e-3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = unit(gen);
    const auto post = posterior(prior, t, y, false);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(n);
    for (const auto& mean : post.source_means) total += mean;
    const double scale = std::max(post.mixture_mean.cwiseAbs().maxCoeff(), 1e-30);
    CHECK((total - post.mixture_mean).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  }
}

TEST_CASE("posterior variances stay within [0, k_j(0)]") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int rep = 0; rep < 6; ++rep) {
    const auto prior = oracle::random_prior(gen, 2);
    const int n = 30;
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, 0.2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = unit(gen);
    const auto post = posterior(prior, t, y, true);
    for (int j = 0; j < 2; ++j) {
      CHECK(post.source_variances[j].minCoeff() >= 0.0);
      CHECK(post.source_variances[j].maxCoeff() <=
            prior.kernels[j].k0() + 1e-8);
    }
  }
}

TEST_CASE("posterior matches the dense-inverse oracle") {
  std::mt19937_64 gen(18);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto prior = oracle::random_prior(gen, 2);
  const int n = 24;
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, 0.2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = unit(gen);
  const auto post = posterior(prior, t, y, true);
  const auto expected = oracle::dense_posterior(prior, t, y);
  for (int j = 0; j < 2; ++j) {
    CHECK((post.source_means[j] - expected.source_means[j]).cwiseAbs().maxCoeff() <=
          1e-10 * (1.0 + expected.source_means[j].cwiseAbs().maxCoeff()));
    for (int i = 0; i < n; ++i) {
      CHECK(post.source_variances[j][i] ==
            doctest::Approx(std::max(expected.source_variances[j][i], 0.0))
                .epsilon(1e-8)
                .scale(prior.kernels[j].k0()));
    }
  }
}

TEST_CASE("near-zero noise interpolates the data") {
  MsmKernelParams k;
  k.variance = 1.0;
  k.lengthscale = 5e-4; // rough relative to the 1 ms spacing below
  k.components = {{1.0, 0.0}};
  GpMixturePrior prior;
  prior.kernels = {k};
  prior.noise_variance = 1e-8 * k.k0();
  const int n = 64;
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, (n - 1) * 1e-3);
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = unit(gen);
  const auto post = posterior(prior, t, y, false);
  CHECK((post.mixture_mean - y).cwiseAbs().maxCoeff() <
        1e-3 * y.cwiseAbs().maxCoeff());
}

TEST_CASE("sample_prior is deterministic per seed") {
  std::mt19937_64 gen(20);
  const auto prior = oracle::random_prior(gen, 2);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(50, 0.0, 0.49);
  const auto a = sample_prior(prior, t, 1234);
  const auto b = sample_prior(prior, t, 1234);
  CHECK((a.mixture - b.mixture).cwiseAbs().maxCoeff() == 0.0);
  for (int j = 0; j < 2; ++j) {
    CHECK((a.sources[j] - b.sources[j]).cwiseAbs().maxCoeff() == 0.0);
  }
  const auto c = sample_prior(prior, t, 1235);
  CHECK((a.mixture - c.mixture).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sample covariance approaches the source gram") {
  std::mt19937_64 gen(21);
  const auto prior = oracle::random_prior(gen, 1);
  Eigen::VectorXd t(3);
  t << 0.0, 0.004, 0.011;
  const Eigen::MatrixXd k = oracle::dense_source_gram(prior.kernels[0], t);
  const int draws = 200;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  for (int r = 0; r < draws; ++r) {
    const auto s = sample_prior(prior, t, 5000 + r);
    cov += s.sources[0] * s.sources[0].transpose();
  }
  cov /= static_cast<double>(draws);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double se =
          std::sqrt((k(i, i) * k(j, j) + k(i, j) * k(i, j)) / draws);
      CHECK(std::abs(cov(i, j) - k(i, j)) <= 3.0 * se);
    }
  }
}

TEST_CASE("zero noise variance is rejected") {
  auto prior = unit_prior(0.0);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(4, 0.0, 0.3);
  CHECK_THROWS_AS(sample_prior(prior, t, 1), ParameterError);
}

TEST_CASE("sample_prior rejects oversized requests") {
  const auto prior = unit_prior(1e-3);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(10001, 0.0, 1.0);
  CHECK_THROWS_AS(sample_prior(prior, t, 1), InputSizeError);
}
