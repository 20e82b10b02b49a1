#include "gpss/kernel.hpp"

#include "gpss/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gpss {

double MsmKernelParams::k0() const {
  double weight_sum = 0.0;
  for (const auto& c : components) weight_sum += c.weight;
  return variance * weight_sum;
}

void MsmKernelParams::canonicalize() {
  for (auto& c : components) {
    c.angular_frequency = std::abs(c.angular_frequency); // cos is even in omega
  }
  std::sort(components.begin(), components.end(),
            [](const MsmComponent& a, const MsmComponent& b) {
              return a.angular_frequency < b.angular_frequency;
            });
  std::vector<MsmComponent> merged;
  for (const auto& c : components) {
    if (!merged.empty() &&
        merged.back().angular_frequency == c.angular_frequency) {
      merged.back().weight += c.weight;
    } else {
      merged.push_back(c);
    }
  }
  components = std::move(merged);
}

void MsmKernelParams::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw ParameterError("MsmKernelParams: variance must be positive and finite");
  }
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw ParameterError("MsmKernelParams: lengthscale must be positive and finite");
  }
  if (components.empty()) {
    throw ParameterError("MsmKernelParams: at least one component required");
  }
  double prev = -1.0;
  bool any_positive = false;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw ParameterError("MsmKernelParams: component weights must be >= 0 and finite");
    }
    if (!(c.angular_frequency >= 0.0) || !std::isfinite(c.angular_frequency)) {
      throw ParameterError("MsmKernelParams: frequencies must be >= 0 and finite");
    }
    if (c.angular_frequency <= prev) {
      throw ParameterError(
          "MsmKernelParams: frequencies must be strictly increasing (canonicalize first)");
    }
    prev = c.angular_frequency;
    any_positive = any_positive || c.weight > 0.0;
  }
  if (!any_positive) {
    throw ParameterError("MsmKernelParams: all component weights are zero");
  }
}

double SumKernel::k0() const {
  double total = 0.0;
  for (const auto& p : parts) total += p.k0();
  return total;
}

void SumKernel::validate() const {
  if (parts.empty()) throw ParameterError("SumKernel: needs at least one part");
  for (const auto& p : parts) p.validate();
}

namespace detail {

double msm_eval_unchecked(const MsmKernelParams& params, double tau) {
  double mixture = 0.0;
  for (const auto& c : params.components) {
    mixture += c.weight * std::cos(c.angular_frequency * tau);
  }
  return params.variance * std::exp(-tau / params.lengthscale) * mixture;
}

Eigen::MatrixXd gram_values(const MsmKernelParams& params,
                            const Eigen::VectorXd& rows,
                            const Eigen::VectorXd& cols) {
  Eigen::MatrixXd values(rows.size(), cols.size());
  for (Eigen::Index j = 0; j < cols.size(); ++j) {
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
      values(i, j) = msm_eval_unchecked(params, std::abs(rows[i] - cols[j]));
    }
  }
  return values;
}

namespace {

bool is_uniform_grid(const Eigen::VectorXd& t, double* spacing) {
  const Eigen::Index n = t.size();
  if (n < 2) return false;
  const double step = (t[n - 1] - t[0]) / static_cast<double>(n - 1);
  if (!(step > 0.0)) return false;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(t[i + 1] - t[i] - step) > 1e-9 * step) return false;
  }
  *spacing = step;
  return true;
}

} // namespace

Eigen::MatrixXd gram_values(const MsmKernelParams& params,
                            const Eigen::VectorXd& times) {
  const Eigen::Index n = times.size();
  Eigen::MatrixXd values(n, n);
  double spacing = 0.0;
  if (is_uniform_grid(times, &spacing)) {
    Eigen::VectorXd by_lag(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      by_lag[k] = msm_eval_unchecked(params, static_cast<double>(k) * spacing);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        values(i, j) = by_lag[std::abs(i - j)];
      }
    }
    return values;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    values(j, j) = msm_eval_unchecked(params, 0.0);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = msm_eval_unchecked(params, std::abs(times[i] - times[j]));
      values(i, j) = v;
      values(j, i) = v;
    }
  }
  return values;
}

} // namespace detail

double msm_eval(const MsmKernelParams& params, double tau) {
  params.validate();
  if (!(tau >= 0.0) || !std::isfinite(tau)) {
    throw ParameterError("msm_eval: tau must be >= 0 (use |t - t'|)");
  }
  return detail::msm_eval_unchecked(params, tau);
}

double sum_eval(const SumKernel& kernel, double tau) {
  kernel.validate();
  if (!(tau >= 0.0) || !std::isfinite(tau)) {
    throw ParameterError("sum_eval: tau must be >= 0");
  }
  double total = 0.0;
  for (const auto& p : kernel.parts) total += detail::msm_eval_unchecked(p, tau);
  return total;
}

namespace {

bool same_times(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}

void require_finite_times(const Eigen::VectorXd& t, const char* what) {
  if (!t.allFinite()) throw ParameterError(std::string(what) + ": non-finite time value");
}

} // namespace

GramMatrix gram(const MsmKernelParams& params, const Eigen::VectorXd& rows,
                const Eigen::VectorXd& cols) {
  params.validate();
  require_finite_times(rows, "gram");
  require_finite_times(cols, "gram");
  GramMatrix gm{rows, cols, {}};
  gm.values = same_times(rows, cols) ? detail::gram_values(params, rows)
                                     : detail::gram_values(params, rows, cols);
  return gm;
}

GramMatrix gram(const SumKernel& kernel, const Eigen::VectorXd& rows,
                const Eigen::VectorXd& cols) {
  kernel.validate();
  require_finite_times(rows, "gram");
  require_finite_times(cols, "gram");
  GramMatrix gm{rows, cols, Eigen::MatrixXd::Zero(rows.size(), cols.size())};
  const bool symmetric = same_times(rows, cols);
  for (const auto& p : kernel.parts) {
    gm.values += symmetric ? detail::gram_values(p, rows)
                           : detail::gram_values(p, rows, cols);
  }
  return gm;
}

Eigen::VectorXd spectral_density(const MsmKernelParams& params,
                                 const Eigen::VectorXd& angular_frequencies) {
  params.validate();
  const double inv_ell = 1.0 / params.lengthscale;
  // Lorentzian normalized to unit integral over the real line
  const auto lorentzian = [inv_ell](double x) {
    return (inv_ell / M_PI) / (inv_ell * inv_ell + x * x);
  };
  Eigen::VectorXd density(angular_frequencies.size());
  for (Eigen::Index i = 0; i < angular_frequencies.size(); ++i) {
    const double w = angular_frequencies[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ParameterError("spectral_density: frequencies must be >= 0");
    }
    double s = 0.0;
    for (const auto& c : params.components) {
      s += c.weight * 0.5 *
           (lorentzian(w - c.angular_frequency) + lorentzian(w + c.angular_frequency));
    }
    density[i] = params.variance * s;
  }
  return density;
}

} // namespace gpss
