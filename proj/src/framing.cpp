#include "gpss/framing.hpp"

#include "gpss/errors.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <mutex>
#include <ostream>
#include <thread>

namespace gpss {

FramePlan make_plan(int signal_length, double sample_rate, double frame_seconds,
                    double overlap) {
  if (signal_length < 1) throw ParameterError("make_plan: signal_length must be >= 1");
  if (!(sample_rate > 0.0)) throw ParameterError("make_plan: sample_rate must be positive");
  if (!(frame_seconds > 0.0)) throw ParameterError("make_plan: frame_seconds must be positive");
  if (!(overlap >= 0.0) || !(overlap < 1.0)) {
    throw ParameterError("make_plan: overlap must lie in [0, 1)");
  }

  FramePlan plan;
  plan.sample_rate = sample_rate;
  plan.signal_length = signal_length;
  int frame_length = static_cast<int>(std::llround(frame_seconds * sample_rate));
  if (frame_length < 1) frame_length = 1;
  if (frame_length % 2 == 0) ++frame_length;
  plan.frame_length = frame_length;

  plan.hop = static_cast<int>(std::llround(frame_length * (1.0 - overlap)));
  if (plan.hop < 1) throw ParameterError("make_plan: overlap leaves an empty hop");
  if (plan.hop > frame_length) plan.hop = frame_length;

  plan.num_frames =
      signal_length <= frame_length
          ? 1
          : static_cast<int>(std::ceil(static_cast<double>(signal_length - frame_length) /
                                       plan.hop)) +
                1;

  // Half-sample-offset Hann taper: strictly positive, so the per-residue
  // normalization below is always defined and yields exact COLA. With
  // hop == frame_length the normalization collapses to an all-ones window.
  Eigen::VectorXd taper(frame_length);
  for (int i = 0; i < frame_length; ++i) {
    taper[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 0.5) / frame_length);
  }
  Eigen::VectorXd residue_sum = Eigen::VectorXd::Zero(plan.hop);
  for (int i = 0; i < frame_length; ++i) residue_sum[i % plan.hop] += taper[i];
  plan.window.resize(frame_length);
  for (int i = 0; i < frame_length; ++i) {
    plan.window[i] = taper[i] / residue_sum[i % plan.hop];
  }
  return plan;
}

std::vector<Frame> extract_frames(const Eigen::VectorXd& y, const FramePlan& plan) {
  if (y.size() != plan.signal_length) {
    throw InputSizeError("extract_frames: signal length does not match the plan");
  }
  std::vector<Frame> frames;
  frames.reserve(plan.num_frames);
  for (int w = 0; w < plan.num_frames; ++w) {
    Frame frame;
    frame.index = w;
    frame.start = w * plan.hop;
    frame.times.resize(plan.frame_length);
    frame.values = Eigen::VectorXd::Zero(plan.frame_length);
    for (int i = 0; i < plan.frame_length; ++i) {
      const int idx = frame.start + i;
      frame.times[i] = idx / plan.sample_rate;
      if (idx < plan.signal_length) frame.values[i] = y[idx];
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

Eigen::VectorXd overlap_add(const std::vector<Eigen::VectorXd>& frames,
                            const FramePlan& plan) {
  if (static_cast<int>(frames.size()) != plan.num_frames) {
    throw InputSizeError("overlap_add: frame count does not match the plan");
  }
  for (const auto& f : frames) {
    if (f.size() != plan.frame_length) {
      throw InputSizeError("overlap_add: frame length does not match the plan");
    }
  }
  const int padded = (plan.num_frames - 1) * plan.hop + plan.frame_length;
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(padded);
  Eigen::VectorXd coverage = Eigen::VectorXd::Zero(padded);
  for (int w = 0; w < plan.num_frames; ++w) {
    const int start = w * plan.hop;
    weighted.segment(start, plan.frame_length) +=
        plan.window.cwiseProduct(frames[static_cast<std::size_t>(w)]);
    coverage.segment(start, plan.frame_length) += plan.window;
  }
  Eigen::VectorXd out(plan.signal_length);
  for (int i = 0; i < plan.signal_length; ++i) {
    out[i] = coverage[i] > 1e-12 ? weighted[i] / coverage[i] : weighted[i];
  }
  return out;
}

namespace {

struct FrameOutput {
  std::vector<Eigen::VectorXd> source_means;
  FrameRecord record;
};

FrameOutput process_frame(const Frame& frame, const GpMixturePrior& prior_template,
                          const SeparateOptions& options, const FramePlan& plan) {
  const int num_sources = prior_template.num_sources();
  FrameOutput output;
  output.record.w = frame.index;
  output.source_means.assign(num_sources,
                             Eigen::VectorXd::Zero(plan.frame_length));

  try {
    GpMixturePrior prior = prior_template;
    const double template_k0 = prior_template.mixture_k0();

    int m_max = options.m_max > 0 ? options.m_max : std::max(1, plan.frame_length / 4);
    m_max = std::min(m_max, plan.frame_length);

    InducingSet inducing;
    if (plan.frame_length >= 3) {
      inducing = select_inducing_extrema(frame.values, frame.times, m_max);
    } else {
      inducing.points = frame.times; // degenerate frame: exact regime
    }
    output.record.m = inducing.size();

    const auto t0 = std::chrono::steady_clock::now();
    if (options.preset) {
      const auto& preset = options.preset->at(static_cast<std::size_t>(frame.index));
      if (static_cast<int>(preset.sigma2.size()) != num_sources) {
        throw ParameterError("separate: preset sigma2 size mismatch");
      }
      for (int j = 0; j < num_sources; ++j) {
        prior.kernels[j].variance = preset.sigma2[j];
      }
      prior.noise_variance = preset.nu2;
      const ElboReport report = elbo(prior, frame.times, frame.values, inducing);
      output.record.elbo = report.value;
      output.record.converged = true;
    } else {
      const double frame_var =
          (frame.values.array() - frame.values.mean()).square().mean();
      prior.noise_variance = std::max(1e-3 * frame_var, 1e-12 * template_k0);

      const FreeMask mask = FreeMask::all_sigma2(num_sources, options.free_noise);
      const ElboReport report =
          options.full
              ? learn_variances_dense(prior, frame.times, frame.values, mask)
              : learn_variances(prior, frame.times, frame.values, inducing, mask);
      prior = report.learned;
      output.record.elbo = report.value;
      output.record.iterations = report.iterations;
      output.record.converged = report.converged;
      output.record.elbo_trace = report.elbo_trace;
    }
    const auto t1 = std::chrono::steady_clock::now();
    output.record.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    output.record.sigma2.resize(num_sources);
    for (int j = 0; j < num_sources; ++j) {
      output.record.sigma2[static_cast<std::size_t>(j)] = prior.kernels[j].variance;
    }
    output.record.nu2 = prior.noise_variance;

    const PosteriorResult post = posterior(prior, frame.times, frame.values, false);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(plan.frame_length);
    for (int j = 0; j < num_sources; ++j) {
      output.source_means[static_cast<std::size_t>(j)] = post.source_means[j];
      total += post.source_means[j];
    }
    output.record.mix_residual = (total - frame.values).norm();
  } catch (const std::exception& e) {
    if (options.strict) throw;
    output.record.failed = true;
    output.record.error = e.what();
    for (auto& mean : output.source_means) mean.setZero();
  }
  return output;
}

} // namespace

SeparationResult separate(const Eigen::VectorXd& y, const FramePlan& plan,
                          const GpMixturePrior& prior_template,
                          const SeparateOptions& options) {
  prior_template.validate();
  if (!y.allFinite()) throw ParameterError("separate: signal must be finite");
  if (y.size() != plan.signal_length) {
    throw InputSizeError("separate: signal length does not match the plan");
  }
  if (options.preset &&
      static_cast<int>(options.preset->size()) != plan.num_frames) {
    throw InputSizeError("separate: preset must have one entry per frame");
  }

  const std::vector<Frame> frames = extract_frames(y, plan);
  std::vector<FrameOutput> outputs(frames.size());

  int jobs = options.jobs;
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(frames.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t w = next.fetch_add(1);
      if (w >= frames.size()) return;
      try {
        outputs[w] = process_frame(frames[w], prior_template, options, plan);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SeparationResult result;
  result.plan = plan;
  result.prior_template = prior_template;
  const int num_sources = prior_template.num_sources();

  std::vector<std::vector<Eigen::VectorXd>> per_source_frames(
      static_cast<std::size_t>(num_sources));
  for (auto& v : per_source_frames) v.resize(frames.size());
  for (std::size_t w = 0; w < frames.size(); ++w) {
    for (int j = 0; j < num_sources; ++j) {
      per_source_frames[static_cast<std::size_t>(j)][w] =
          std::move(outputs[w].source_means[static_cast<std::size_t>(j)]);
    }
    if (outputs[w].record.failed) {
      std::cerr << "separate: frame " << outputs[w].record.w
                << " failed, contributing zeros: " << outputs[w].record.error << "\n";
    }
    result.learn_seconds_total += outputs[w].record.ms / 1000.0;
    result.per_frame.push_back(std::move(outputs[w].record));
  }
  for (int j = 0; j < num_sources; ++j) {
    result.sources.push_back(
        overlap_add(per_source_frames[static_cast<std::size_t>(j)], plan));
  }
  return result;
}

void write_run_log(std::ostream& out, const SeparationResult& result) {
  for (const auto& record : result.per_frame) {
    nlohmann::json j{{"w", record.w},
                     {"elbo", record.elbo},
                     {"sigma2", record.sigma2},
                     {"nu2", record.nu2},
                     {"m", record.m},
                     {"ms", record.ms},
                     {"iterations", record.iterations},
                     {"converged", record.converged},
                     {"mix_residual", record.mix_residual},
                     {"elbo_trace", record.elbo_trace}};
    if (record.failed) j["error"] = record.error;
    out << j.dump() << "\n";
  }
}

} // namespace gpss
