#pragma once

#include "gpss/gpcore.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace gpss {

// Inducing point locations in the time domain.
struct InducingSet {
  Eigen::VectorXd points; // sorted, unique

  int size() const { return static_cast<int>(points.size()); }
  void validate(double t_min, double t_max) const;
};

// Strict local extrema of the frame data, thinned to the m_max largest |y|
// (ties toward earlier time). Fewer than 2 extrema fall back to a uniform
// grid of m_max points over the frame span.
InducingSet select_inducing_extrema(const Eigen::VectorXd& frame_y,
                                    const Eigen::VectorXd& frame_t, int m_max);

struct ElboReport {
  double value = 0.0;      // fit_term + trace_term
  double fit_term = 0.0;   // Gaussian log-density of y under Q + noise*I
  double trace_term = 0.0; // -(1/(2 noise)) tr(K - Q), never positive
  GpMixturePrior learned;
  int iterations = 0;
  bool converged = false;
  std::vector<double> elbo_trace;  // accepted values, non-decreasing
  std::vector<bool> silent;       // per source: variance pinned at its floor
};

// Optimization diverged; carries the best iterate seen.
class OptimizationFailureError : public std::runtime_error {
public:
  OptimizationFailureError(const std::string& message, ElboReport best)
      : std::runtime_error(message), best_iterate(std::move(best)) {}
  ElboReport best_iterate;
};

// Collapsed variational lower bound on the log-marginal likelihood:
//   L = log N(y | 0, Q + noise*I) - (1/(2 noise)) tr(K - Q),
//   Q = K_nm K_mm^-1 K_mn  built from the mixture kernel.
// Cost O(n m^2); the n x n Gram matrix is never formed.
ElboReport elbo(const GpMixturePrior& prior, const Eigen::VectorXd& frame_t,
                const Eigen::VectorXd& frame_y, const InducingSet& inducing);

struct ElboGradient {
  double value = 0.0;
  Eigen::VectorXd wrt_log_sigma2; // one entry per source
  double wrt_log_noise = 0.0;
};

// Bound value with analytic derivatives with respect to the log source
// variances and the log noise variance.
ElboGradient elbo_gradient(const GpMixturePrior& prior, const Eigen::VectorXd& frame_t,
                           const Eigen::VectorXd& frame_y, const InducingSet& inducing);

// Selects which hyperparameters the learners may move. Everything else
// (lengthscales, component weights and frequencies) stays fixed.
struct FreeMask {
  std::vector<char> sigma2; // per source
  bool noise = false;

  static FreeMask all_sigma2(int num_sources, bool noise = false);
  void validate(int num_sources) const; // at least one free parameter
};

struct LearnOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-7;
  double variance_floor_ratio = 1e-12; // floor = ratio * initial value
};

// Maximizes the collapsed bound over the log of the free parameters with
// analytic gradients. Variances collapsing to their floor are flagged silent.
ElboReport learn_variances(const GpMixturePrior& prior, const Eigen::VectorXd& frame_t,
                           const Eigen::VectorXd& frame_y, const InducingSet& inducing,
                           const FreeMask& free, const LearnOptions& options = {});

// Same learner driven by the exact dense log-marginal likelihood (the full-GP
// baseline). fit_term == value and trace_term == 0 in the returned report.
ElboReport learn_variances_dense(const GpMixturePrior& prior,
                                 const Eigen::VectorXd& frame_t,
                                 const Eigen::VectorXd& frame_y, const FreeMask& free,
                                 const LearnOptions& options = {});

} // namespace gpss
