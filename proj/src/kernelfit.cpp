#include "gpss/kernelfit.hpp"

#include "gpss/detail/lbfgs.hpp"
#include "gpss/detail/rng.hpp"
#include "gpss/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gpss {

TrainingClip TrainingClip::from_samples(Eigen::VectorXd samples, double sample_rate) {
  if (samples.size() < 2) throw InputSizeError("TrainingClip: need at least 2 samples");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw ParameterError("TrainingClip: sample_rate must be positive");
  }
  if (!samples.allFinite()) throw ParameterError("TrainingClip: non-finite samples");
  samples.array() -= samples.mean();
  return TrainingClip{std::move(samples), sample_rate};
}

void AutocovEstimate::validate() const {
  if (lags.size() < 1 || lags.size() != values.size()) {
    throw InputSizeError("AutocovEstimate: lags/values size mismatch");
  }
  if (lags[0] != 0.0) throw ParameterError("AutocovEstimate: lag grid must start at 0");
  for (Eigen::Index i = 0; i + 1 < lags.size(); ++i) {
    if (!(lags[i + 1] > lags[i])) {
      throw ParameterError("AutocovEstimate: lags must be strictly increasing");
    }
  }
  if (!lags.allFinite() || !values.allFinite()) {
    throw ParameterError("AutocovEstimate: non-finite data");
  }
  if (!(values[0] > 0.0)) {
    throw DegenerateSignalError("AutocovEstimate: C(0) must be positive");
  }
}

AutocovEstimate estimate_autocovariance(const TrainingClip& clip, double max_lag,
                                        double window) {
  if (!(window > 0.0) || !(max_lag >= 0.0)) {
    throw ParameterError("estimate_autocovariance: window > 0 and max_lag >= 0 required");
  }
  if (max_lag + window > clip.duration() + 1e-12) {
    throw InputSizeError("estimate_autocovariance: max_lag + window exceeds clip duration");
  }
  const Eigen::Index n = clip.samples.size();
  const Eigen::Index m = static_cast<Eigen::Index>(std::floor(window * clip.sample_rate));
  const Eigen::Index num_lags =
      static_cast<Eigen::Index>(std::floor(max_lag * clip.sample_rate)) + 1;
  if (m < 1 || m + num_lags - 1 > n) {
    throw InputSizeError("estimate_autocovariance: clip too short for window + max_lag");
  }

  AutocovEstimate estimate;
  estimate.window_seconds = window;
  estimate.lags = Eigen::VectorXd::LinSpaced(num_lags, 0.0,
                                             static_cast<double>(num_lags - 1) /
                                                 clip.sample_rate);
  estimate.values.resize(num_lags);
  const Eigen::VectorXd head = clip.samples.head(m);
  for (Eigen::Index k = 0; k < num_lags; ++k) {
    estimate.values[k] = clip.samples.segment(k, m).dot(head) / static_cast<double>(m);
  }
  if (!(estimate.values[0] > 0.0)) {
    throw DegenerateSignalError(
        "estimate_autocovariance: zero variance at lag 0 (silent clip?)");
  }
  return estimate;
}

AutocovEstimate estimate_autocovariance(const TrainingClip& clip, double max_lag) {
  const double window = clip.duration() - max_lag;
  return estimate_autocovariance(clip, max_lag, window);
}

double msm_mse(const MsmKernelParams& params, const AutocovEstimate& target) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < target.lags.size(); ++i) {
    const double r = detail::msm_eval_unchecked(params, target.lags[i]) - target.values[i];
    acc += r * r;
  }
  return acc / static_cast<double>(target.lags.size());
}

namespace {

// magnitude of the DFT of the zero-padded values, bins 0 .. pad/2
Eigen::VectorXd padded_dft_magnitude(const Eigen::VectorXd& values, Eigen::Index pad) {
  const Eigen::Index half = pad / 2;
  Eigen::VectorXd magnitude(half + 1);
  for (Eigen::Index b = 0; b <= half; ++b) {
    const double theta = 2.0 * M_PI * static_cast<double>(b) / static_cast<double>(pad);
    double re = 0.0, im = 0.0;
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      re += values[k] * std::cos(theta * static_cast<double>(k));
      im -= values[k] * std::sin(theta * static_cast<double>(k));
    }
    magnitude[b] = std::sqrt(re * re + im * im);
  }
  return magnitude;
}

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p *= 2;
  return p;
}

struct Peak {
  double magnitude;
  Eigen::Index bin;
};

std::vector<Peak> magnitude_peaks(const Eigen::VectorXd& magnitude) {
  std::vector<Peak> peaks;
  const Eigen::Index n = magnitude.size();
  for (Eigen::Index b = 0; b < n; ++b) {
    const bool left_ok = (b == 0) || magnitude[b] > magnitude[b - 1];
    const bool right_ok = (b == n - 1) || magnitude[b] > magnitude[b + 1];
    if (left_ok && right_ok && (n > 1)) peaks.push_back({magnitude[b], b});
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.bin < b.bin; // ties toward lower frequency
  });
  return peaks;
}

// Parameter vector layout: [log variance, log lengthscale,
//                           log weight_1..D, omega_1..D]
Eigen::VectorXd pack(const MsmKernelParams& p) {
  const int d = p.num_components();
  Eigen::VectorXd x(2 + 2 * d);
  x[0] = std::log(p.variance);
  x[1] = std::log(p.lengthscale);
  for (int i = 0; i < d; ++i) {
    x[2 + i] = std::log(std::max(p.components[i].weight, 1e-300));
    x[2 + d + i] = p.components[i].angular_frequency;
  }
  return x;
}

MsmKernelParams unpack(const Eigen::VectorXd& x, int d) {
  MsmKernelParams p;
  p.variance = std::exp(x[0]);
  p.lengthscale = std::exp(x[1]);
  p.components.resize(d);
  for (int i = 0; i < d; ++i) {
    p.components[i].weight = std::exp(x[2 + i]);
    p.components[i].angular_frequency = x[2 + d + i];
  }
  return p;
}

// MSE objective and gradient in the packed parameterization. omega is left
// unconstrained; the kernel is even in omega so only |omega| matters.
double mse_objective(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                     const AutocovEstimate& target, int d) {
  const Eigen::Index n = target.lags.size();
  const double variance = std::exp(x[0]);
  const double lengthscale = std::exp(x[1]);
  double acc = 0.0;
  if (grad) grad->setZero(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tau = target.lags[i];
    const double decay = std::exp(-tau / lengthscale);
    double mixture = 0.0;
    for (int c = 0; c < d; ++c) {
      mixture += std::exp(x[2 + c]) * std::cos(x[2 + d + c] * tau);
    }
    const double k = variance * decay * mixture;
    const double r = k - target.values[i];
    acc += r * r;
    if (grad) {
      const double common = 2.0 * r / static_cast<double>(n);
      (*grad)[0] += common * k;                          // d/d log variance
      (*grad)[1] += common * k * (tau / lengthscale);    // d/d log lengthscale
      for (int c = 0; c < d; ++c) {
        const double weight = std::exp(x[2 + c]);
        const double omega = x[2 + d + c];
        (*grad)[2 + c] += common * variance * decay * weight * std::cos(omega * tau);
        (*grad)[2 + d + c] -=
            common * variance * decay * weight * tau * std::sin(omega * tau);
      }
    }
  }
  return acc / static_cast<double>(n);
}

} // namespace

MsmKernelParams init_msm(const AutocovEstimate& target, int num_components,
                         std::uint64_t seed) {
  target.validate();
  if (num_components < 1) throw ParameterError("init_msm: need at least one component");

  const Eigen::Index n = target.lags.size();
  const double lag_step = n > 1 ? target.lags[1] - target.lags[0] : 1.0;
  const double nyquist = M_PI / lag_step; // rad/s

  std::vector<Peak> peaks;
  Eigen::Index pad = 0;
  if (n > 1) {
    pad = next_pow2(std::max<Eigen::Index>(8 * n, 1024));
    peaks = magnitude_peaks(padded_dft_magnitude(target.values, pad));
  }

  MsmKernelParams params;
  params.variance = target.values[0];
  params.lengthscale = n > 1 ? target.lags[n - 1] / 3.0 : 1.0;

  const int found = std::min<int>(num_components, static_cast<int>(peaks.size()));
  double min_magnitude = 1.0;
  for (int i = 0; i < found; ++i) {
    MsmComponent c;
    c.weight = peaks[i].magnitude;
    c.angular_frequency =
        2.0 * M_PI * static_cast<double>(peaks[i].bin) / (static_cast<double>(pad) * lag_step);
    params.components.push_back(c);
    min_magnitude = std::min(min_magnitude, peaks[i].magnitude);
  }
  if (found < num_components) {
    detail::GaussianSampler sampler(detail::mix_seed(seed, 0x696e6974));
    for (int i = found; i < num_components; ++i) {
      MsmComponent c;
      c.weight = found > 0 ? min_magnitude : 1.0;
      c.angular_frequency = sampler.next_uniform() * nyquist;
      params.components.push_back(c);
    }
  }
  double weight_sum = 0.0;
  for (const auto& c : params.components) weight_sum += c.weight;
  for (auto& c : params.components) c.weight /= weight_sum;

  params.canonicalize();
  params.validate();
  return params;
}

FitReport fit_msm(const AutocovEstimate& target, int num_components,
                  std::uint64_t seed, const FitOptions& options) {
  target.validate();
  if (num_components < 1) throw ParameterError("fit_msm: need at least one component");
  if (options.restarts < 1) throw ParameterError("fit_msm: restarts must be >= 1");

  const int d = num_components;
  detail::LbfgsOptions lbfgs_options;
  lbfgs_options.max_iterations = options.max_iterations;
  lbfgs_options.relative_tolerance = options.relative_tolerance;

  const auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    return mse_objective(x, grad, target, d);
  };

  bool have_best = false;
  FitReport best;
  for (int restart = 0; restart < options.restarts; ++restart) {
    MsmKernelParams start;
    if (restart == 0 && options.init) {
      start = *options.init;
      start.canonicalize();
      start.validate();
      if (start.num_components() != d) {
        throw ParameterError("fit_msm: init has a different number of components");
      }
    } else {
      start = init_msm(target, d, seed + static_cast<std::uint64_t>(restart));
      if (restart > 0) {
        // perturb so restarts explore distinct basins
        detail::GaussianSampler sampler(
            detail::mix_seed(seed, 0x7065727475ULL, static_cast<std::uint64_t>(restart)));
        start.lengthscale *= std::exp(0.4 * sampler.next());
        start.variance *= std::exp(0.2 * sampler.next());
        const double nyquist = target.lags.size() > 1
                                   ? M_PI / (target.lags[1] - target.lags[0])
                                   : M_PI;
        for (auto& c : start.components) {
          c.angular_frequency =
              std::min(std::abs(c.angular_frequency * (1.0 + 0.02 * sampler.next())),
                       nyquist);
        }
      }
    }

    auto opt = detail::lbfgs_minimize(objective, pack(start), lbfgs_options);
    FitReport report;
    report.params = unpack(opt.x, d);
    report.iterations = opt.iterations;
    report.converged = opt.converged;
    report.objective_trace = std::move(opt.trace);
    if (opt.x.allFinite()) report.params.canonicalize();
    report.final_mse = msm_mse(report.params, target);

    if (opt.nonfinite || !std::isfinite(report.final_mse)) {
      if (restart + 1 == options.restarts && !have_best) {
        report.converged = false;
        throw FitFailureError("fit_msm: objective became non-finite", report);
      }
      continue;
    }
    if (!have_best || report.final_mse < best.final_mse) {
      best = std::move(report);
      have_best = true;
    }
  }
  if (!have_best) {
    throw FitFailureError("fit_msm: no restart produced a finite objective", FitReport{});
  }
  best.params.validate();
  return best;
}

} // namespace gpss
