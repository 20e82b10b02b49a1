#pragma once

#include "gpss/kernel.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gpss {

// Isolated-source training recording on a uniform grid x_i = i / sample_rate.
// The mean is subtracted on construction.
struct TrainingClip {
  Eigen::VectorXd samples;
  double sample_rate = 0.0;

  static TrainingClip from_samples(Eigen::VectorXd samples, double sample_rate);
  double duration() const { return samples.size() / sample_rate; }
};

// Time-averaged autocovariance on the sample-aligned lag grid.
struct AutocovEstimate {
  Eigen::VectorXd lags;   // seconds, starting at 0, strictly increasing
  Eigen::VectorXd values; // signal units^2
  double window_seconds = 0.0;

  void validate() const;
};

struct FitReport {
  MsmKernelParams params;
  double final_mse = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace; // accepted values, non-increasing
};

// Fit diverged (non-finite objective); carries the best iterate seen.
class FitFailureError : public std::runtime_error {
public:
  FitFailureError(const std::string& message, FitReport best)
      : std::runtime_error(message), best_iterate(std::move(best)) {}
  FitReport best_iterate;
};

// C(tau_k) = (1/M) sum_i g(x_i + tau_k) g(x_i) with M = floor(window * rate)
// and tau_k = k / rate for k = 0 .. floor(max_lag * rate). Biased (1/M)
// normalization.
AutocovEstimate estimate_autocovariance(const TrainingClip& clip, double max_lag,
                                        double window);
// window defaults to the full clip minus max_lag
AutocovEstimate estimate_autocovariance(const TrainingClip& clip,
                                        double max_lag = 0.030);

// Mean squared error between the kernel and the autocovariance estimate over
// its lag grid.
double msm_mse(const MsmKernelParams& params, const AutocovEstimate& target);

// Deterministic starting point: frequencies at the D largest magnitude peaks
// of the zero-padded DFT of the target (ties toward lower frequency), weights
// proportional to peak magnitudes with sum 1, variance C(0), lengthscale a
// third of the maximum lag. Missing peaks are drawn uniformly over the
// Nyquist band from the seed.
MsmKernelParams init_msm(const AutocovEstimate& target, int num_components,
                         std::uint64_t seed);

struct FitOptions {
  int max_iterations = 2000;
  double relative_tolerance = 1e-9;
  int restarts = 4;
  std::optional<MsmKernelParams> init; // replaces the first restart's start point
};

// Minimizes the MSE objective over log-transformed positive parameters with
// multi-start; the best restart wins (ties by restart order).
FitReport fit_msm(const AutocovEstimate& target, int num_components,
                  std::uint64_t seed, const FitOptions& options = {});

} // namespace gpss
