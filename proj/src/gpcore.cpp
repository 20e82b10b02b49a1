#include "gpss/gpcore.hpp"

#include "gpss/detail/cholesky.hpp"
#include "gpss/detail/rng.hpp"
#include "gpss/errors.hpp"

#include <cmath>

namespace gpss {

SumKernel GpMixturePrior::mixture_kernel() const { return SumKernel{kernels}; }

double GpMixturePrior::mixture_k0() const {
  double total = 0.0;
  for (const auto& k : kernels) total += k.k0();
  return total;
}

void GpMixturePrior::validate() const {
  if (kernels.empty()) throw ParameterError("GpMixturePrior: needs at least one source");
  for (const auto& k : kernels) k.validate();
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw ParameterError("GpMixturePrior: noise_variance must be positive");
  }
}

namespace {

void check_inputs(const GpMixturePrior& prior, const Eigen::VectorXd& times,
                  const Eigen::VectorXd& y) {
  prior.validate();
  if (times.size() != y.size() || times.size() < 1) {
    throw InputSizeError("gpcore: times and y must have equal, positive length");
  }
  if (!times.allFinite() || !y.allFinite()) {
    throw ParameterError("gpcore: times and y must be finite");
  }
}

double log_marginal_from_chol(const gpss::detail::CholeskyResult& chol,
                              const Eigen::VectorXd& y,
                              const Eigen::VectorXd& alpha) {
  const double n = static_cast<double>(y.size());
  return -0.5 * (y.dot(alpha) + chol.log_det() + n * std::log(2.0 * M_PI));
}

} // namespace

double log_marginal(const GpMixturePrior& prior, const Eigen::VectorXd& times,
                    const Eigen::VectorXd& y) {
  check_inputs(prior, times, y);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(times.size(), times.size());
  for (const auto& k : prior.kernels) h += detail::gram_values(k, times);
  h.diagonal().array() += prior.noise_variance;
  const auto chol = detail::cholesky_with_jitter(std::move(h), prior.mixture_k0());
  const Eigen::VectorXd alpha = chol.llt.solve(y);
  return log_marginal_from_chol(chol, y, alpha);
}

PosteriorResult posterior(const GpMixturePrior& prior, const Eigen::VectorXd& times,
                          const Eigen::VectorXd& y, bool want_variance) {
  check_inputs(prior, times, y);
  const Eigen::Index n = times.size();
  const int num_sources = prior.num_sources();

  std::vector<Eigen::MatrixXd> source_grams;
  source_grams.reserve(num_sources);
  Eigen::MatrixXd mixture_gram = Eigen::MatrixXd::Zero(n, n);
  for (const auto& k : prior.kernels) {
    source_grams.push_back(detail::gram_values(k, times));
    mixture_gram += source_grams.back();
  }
  Eigen::MatrixXd h = mixture_gram;
  h.diagonal().array() += prior.noise_variance;
  const auto chol = detail::cholesky_with_jitter(std::move(h), prior.mixture_k0());
  const Eigen::VectorXd alpha = chol.llt.solve(y);

  PosteriorResult result;
  result.log_marginal = log_marginal_from_chol(chol, y, alpha);
  result.mixture_mean = mixture_gram * alpha;
  result.source_means.reserve(num_sources);
  for (int j = 0; j < num_sources; ++j) {
    result.source_means.push_back(source_grams[j] * alpha);
  }

  if (want_variance) {
    result.source_variances.reserve(num_sources);
    const auto& l = chol.llt.matrixL();
    for (int j = 0; j < num_sources; ++j) {
      // diag(K_j - K_j H^-1 K_j) = k_j(0) - column norms of L^-1 K_j
      Eigen::MatrixXd v = source_grams[j];
      l.solveInPlace(v);
      Eigen::VectorXd var =
          Eigen::VectorXd::Constant(n, prior.kernels[j].k0()) -
          v.colwise().squaredNorm().transpose();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (var[i] < 0.0) {
          if (var[i] < -1e-10) ++result.variance_clamp_audit;
          var[i] = 0.0;
        }
      }
      result.source_variances.push_back(std::move(var));
    }
  }
  return result;
}

PriorSample sample_prior(const GpMixturePrior& prior, const Eigen::VectorXd& times,
                         std::uint64_t seed) {
  prior.validate();
  if (times.size() < 1 || times.size() > 10000) {
    throw InputSizeError("sample_prior: dense sampling supports 1..10^4 points");
  }
  if (!times.allFinite()) throw ParameterError("sample_prior: non-finite times");

  const Eigen::Index n = times.size();
  detail::GaussianSampler sampler(seed);
  PriorSample sample;
  sample.mixture = Eigen::VectorXd::Zero(n);
  for (const auto& k : prior.kernels) {
    auto chol = detail::cholesky_with_jitter(detail::gram_values(k, times), k.k0());
    Eigen::VectorXd draw =
        chol.llt.matrixL() * sampler.vector(n);
    sample.mixture += draw;
    sample.sources.push_back(std::move(draw));
  }
  sample.mixture += std::sqrt(prior.noise_variance) * sampler.vector(n);
  return sample;
}

} // namespace gpss
