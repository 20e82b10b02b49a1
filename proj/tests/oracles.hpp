// Independent reference implementations used to compute expected values in
// tests. Everything here is deliberately brute-force (explicit inverses,
// explicit n x n matrices, quadrature) and shares no code path with the
// library's solvers.
#pragma once

#include "gpss/gpcore.hpp"
#include "gpss/kernel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

inline double msm_scalar(double variance, double lengthscale,
                         const std::vector<std::pair<double, double>>& comps,
                         double tau) {
  double mix = 0.0;
  for (const auto& [weight, omega] : comps) mix += weight * std::cos(omega * tau);
  return variance * std::exp(-tau / lengthscale) * mix;
}

inline Eigen::MatrixXd dense_gram(const gpss::GpMixturePrior& prior,
                                  const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      for (const auto& kernel : prior.kernels) {
        double mix = 0.0;
        for (const auto& c : kernel.components) {
          mix += c.weight * std::cos(c.angular_frequency * std::abs(a[i] - b[j]));
        }
        k(i, j) += kernel.variance * std::exp(-std::abs(a[i] - b[j]) / kernel.lengthscale) * mix;
      }
    }
  }
  return k;
}

inline Eigen::MatrixXd dense_source_gram(const gpss::MsmKernelParams& kernel,
                                         const Eigen::VectorXd& t) {
  gpss::GpMixturePrior single;
  single.kernels = {kernel};
  single.noise_variance = 1.0;
  return dense_gram(single, t, t);
}

// Eq. of the exact log evidence via explicit inverse and determinant.
inline double dense_log_marginal(const gpss::GpMixturePrior& prior,
                                 const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
  const Eigen::Index n = t.size();
  Eigen::MatrixXd h = dense_gram(prior, t, t);
  h.diagonal().array() += prior.noise_variance;
  const Eigen::MatrixXd h_inv = h.inverse();
  const double log_det = h.partialPivLu().matrixLU().diagonal().array().abs().log().sum();
  return -0.5 * (y.dot(h_inv * y) + log_det + n * std::log(2.0 * M_PI));
}

struct DensePosterior {
  std::vector<Eigen::VectorXd> source_means;
  std::vector<Eigen::VectorXd> source_variances;
  Eigen::VectorXd mixture_mean;
};

inline DensePosterior dense_posterior(const gpss::GpMixturePrior& prior,
                                      const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
  Eigen::MatrixXd h = dense_gram(prior, t, t);
  h.diagonal().array() += prior.noise_variance;
  const Eigen::MatrixXd h_inv = h.inverse();
  DensePosterior post;
  Eigen::MatrixXd k_f = Eigen::MatrixXd::Zero(t.size(), t.size());
  for (const auto& kernel : prior.kernels) {
    const Eigen::MatrixXd k_j = dense_source_gram(kernel, t);
    k_f += k_j;
    post.source_means.push_back(k_j.transpose() * h_inv * y);
    const Eigen::MatrixXd cov = k_j - k_j.transpose() * h_inv * k_j;
    post.source_variances.push_back(cov.diagonal());
  }
  post.mixture_mean = k_f.transpose() * h_inv * y;
  return post;
}

// Literal dense construction of the collapsed bound:
// log N(y | 0, Q + nu I) - tr(K - Q)/(2 nu),  Q = K_nm K_mm^-1 K_mn.
inline double dense_elbo(const gpss::GpMixturePrior& prior, const Eigen::VectorXd& t,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
  const Eigen::Index n = t.size();
  const Eigen::MatrixXd k_nn = dense_gram(prior, t, t);
  const Eigen::MatrixXd k_nm = dense_gram(prior, t, z);
  const Eigen::MatrixXd k_mm = dense_gram(prior, z, z);
  const Eigen::MatrixXd q = k_nm * k_mm.inverse() * k_nm.transpose();
  Eigen::MatrixXd sigma = q;
  sigma.diagonal().array() += prior.noise_variance;
  const Eigen::MatrixXd sigma_inv = sigma.inverse();
  const double log_det =
      sigma.partialPivLu().matrixLU().diagonal().array().abs().log().sum();
  const double fit = -0.5 * (y.dot(sigma_inv * y) + log_det + n * std::log(2.0 * M_PI));
  return fit - (k_nn - q).trace() / (2.0 * prior.noise_variance);
}

inline double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
  double area = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    area += 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
  }
  return area;
}

// Random valid kernels/priors for property tests (seeded, reproducible).
inline gpss::MsmKernelParams random_kernel(std::mt19937_64& gen, int max_components = 3) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  gpss::MsmKernelParams params;
  params.variance = 0.2 + 2.0 * unit(gen);
  params.lengthscale = 0.01 + 0.2 * unit(gen);
  const int d = 1 + static_cast<int>(unit(gen) * max_components) % max_components;
  for (int i = 0; i < d; ++i) {
    params.components.push_back({0.05 + unit(gen), 400.0 * unit(gen) + 60.0 * i});
  }
  params.canonicalize();
  double sum = 0.0;
  for (auto& c : params.components) sum += c.weight;
  for (auto& c : params.components) c.weight /= sum;
  return params;
}

inline gpss::GpMixturePrior random_prior(std::mt19937_64& gen, int num_sources,
                                         double noise_lo = 1e-3, double noise_hi = 1e-1) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  gpss::GpMixturePrior prior;
  for (int j = 0; j < num_sources; ++j) prior.kernels.push_back(random_kernel(gen));
  prior.noise_variance =
      (noise_lo + (noise_hi - noise_lo) * unit(gen)) * prior.mixture_k0();
  return prior;
}

} // namespace oracle
