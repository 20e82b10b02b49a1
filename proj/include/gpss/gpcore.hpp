#pragma once

#include "gpss/kernel.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace gpss {

// Additive GP model: J zero-mean sources with their own kernels, observed as
// a sum plus iid Gaussian noise of variance noise_variance.
struct GpMixturePrior {
  std::vector<MsmKernelParams> kernels;
  double noise_variance = 1e-3;

  int num_sources() const { return static_cast<int>(kernels.size()); }
  SumKernel mixture_kernel() const;
  double mixture_k0() const;
  void validate() const;
};

struct PosteriorResult {
  std::vector<Eigen::VectorXd> source_means;
  std::vector<Eigen::VectorXd> source_variances; // empty unless requested
  Eigen::VectorXd mixture_mean;
  double log_marginal = 0.0;
  // entries below -1e-10 before the clamp-to-zero of tiny negatives
  int variance_clamp_audit = 0;
};

// Exact log-marginal likelihood of y at `times` under the mixture prior.
double log_marginal(const GpMixturePrior& prior, const Eigen::VectorXd& times,
                    const Eigen::VectorXd& y);

// Exact posterior means (and optionally marginal variances) of each source
// and of the mixture. One Cholesky of K_f + noise*I is shared by all outputs.
PosteriorResult posterior(const GpMixturePrior& prior, const Eigen::VectorXd& times,
                          const Eigen::VectorXd& y, bool want_variance = false);

struct PriorSample {
  std::vector<Eigen::VectorXd> sources;
  Eigen::VectorXd mixture; // sum of sources plus observation noise
};

// Draws one realization of every source and the noisy mixture. Deterministic
// for a fixed seed. Dense sampling, limited to 10^4 points.
PriorSample sample_prior(const GpMixturePrior& prior, const Eigen::VectorXd& times,
                         std::uint64_t seed);

} // namespace gpss
