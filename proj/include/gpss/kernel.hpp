#pragma once

#include <Eigen/Core>

#include <vector>

namespace gpss {

// One spectral component: weight alpha^2 at angular frequency omega (rad/s).
struct MsmComponent {
  double weight = 1.0;
  double angular_frequency = 0.0;
};

// Exponentially damped cosine mixture covariance
//   k(tau) = variance * exp(-tau/lengthscale) * sum_d weight_d * cos(omega_d * tau)
// with tau = |t - t'|. Frequencies are kept in rad/s; file formats use Hz.
struct MsmKernelParams {
  double variance = 1.0;    // signal units^2
  double lengthscale = 1.0; // seconds
  std::vector<MsmComponent> components;

  int num_components() const { return static_cast<int>(components.size()); }

  // k(0) = variance * sum of weights
  double k0() const;

  // Sorts components by frequency (taking |omega|), merges exact duplicate
  // frequencies by summing their weights. Evaluation is invariant to this.
  void canonicalize();

  // Throws ParameterError unless: variance > 0, lengthscale > 0, weights >= 0
  // with at least one > 0, frequencies >= 0 and strictly increasing.
  void validate() const;
};

// Additive mixture kernel: evaluation is the sum over parts.
struct SumKernel {
  std::vector<MsmKernelParams> parts;

  int num_parts() const { return static_cast<int>(parts.size()); }
  double k0() const;
  void validate() const; // at least one part, every part valid
};

// Kernel evaluated at all row/column time pairs.
struct GramMatrix {
  Eigen::VectorXd rows_times;
  Eigen::VectorXd cols_times;
  Eigen::MatrixXd values;
};

// k(tau) for tau >= 0. Validates the parameters.
double msm_eval(const MsmKernelParams& params, double tau);
double sum_eval(const SumKernel& kernel, double tau);

GramMatrix gram(const MsmKernelParams& params, const Eigen::VectorXd& rows,
                const Eigen::VectorXd& cols);
GramMatrix gram(const SumKernel& kernel, const Eigen::VectorXd& rows,
                const Eigen::VectorXd& cols);

// Closed-form spectral density of the kernel: a half-weight Lorentzian pair
// at +-omega_d per component, normalized so the integral over the whole real
// line equals k(0). Frequencies in rad/s.
Eigen::VectorXd spectral_density(const MsmKernelParams& params,
                                 const Eigen::VectorXd& angular_frequencies);

namespace detail {

// Raw symmetric Gram values at `times`; uses a Toeplitz fill when the grid is
// uniform. Parameters are not validated here.
Eigen::MatrixXd gram_values(const MsmKernelParams& params,
                            const Eigen::VectorXd& times);
Eigen::MatrixXd gram_values(const MsmKernelParams& params,
                            const Eigen::VectorXd& rows,
                            const Eigen::VectorXd& cols);
double msm_eval_unchecked(const MsmKernelParams& params, double tau);

} // namespace detail

} // namespace gpss
