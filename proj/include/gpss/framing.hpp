#pragma once

#include "gpss/gpcore.hpp"
#include "gpss/sparsevi.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gpss {

// Partition of an n-sample signal into overlapping frames plus the synthesis
// window. The window is a positive Hann-style taper rescaled so its shifted
// copies sum to exactly 1 over interior samples (constant overlap-add).
struct FramePlan {
  int frame_length = 0;  // odd
  int hop = 0;           // 0 < hop <= frame_length
  Eigen::VectorXd window;
  int num_frames = 0;
  int signal_length = 0;
  double sample_rate = 0.0;
};

// frame_length = round(frame_seconds * rate), forced odd; hop from the
// overlap fraction. overlap = 0 yields a rectangular (all-ones) window.
FramePlan make_plan(int signal_length, double sample_rate,
                    double frame_seconds = 0.125, double overlap = 0.5);

struct Frame {
  int index = 0;
  int start = 0;          // first sample covered
  Eigen::VectorXd times;  // absolute seconds
  Eigen::VectorXd values; // zero-padded past the signal tail
};

std::vector<Frame> extract_frames(const Eigen::VectorXd& y, const FramePlan& plan);

// out[i] = sum_w window[i - w*hop] * frame_w[i - w*hop], truncated to the
// original length; edge samples with partial window coverage are rescaled by
// the accumulated window sum.
Eigen::VectorXd overlap_add(const std::vector<Eigen::VectorXd>& frames,
                            const FramePlan& plan);

struct FrameRecord {
  int w = 0;
  double elbo = 0.0;
  std::vector<double> sigma2;
  double nu2 = 0.0;
  int m = 0;
  double ms = 0.0; // variance-learning wall time
  int iterations = 0;
  bool converged = false;
  double mix_residual = 0.0; // || sum_j posterior means - y || on the frame
  std::vector<double> elbo_trace;
  bool failed = false;
  std::string error;
};

struct SeparationResult {
  std::vector<Eigen::VectorXd> sources; // J full-length signals
  std::vector<FrameRecord> per_frame;
  FramePlan plan;
  GpMixturePrior prior_template;
  double learn_seconds_total = 0.0;
};

// Per-frame hyperparameters to reuse instead of learning (e.g. from a
// previous run's records).
struct FramePreset {
  std::vector<double> sigma2;
  double nu2 = 0.0;
};

struct SeparateOptions {
  bool full = false;       // learn with the dense log-marginal instead of the bound
  bool strict = false;     // propagate frame failures instead of zero-filling
  bool free_noise = false; // also learn the noise variance per frame
  int m_max = 0;           // inducing-point cap; 0 = frame_length / 4
  int jobs = 1;            // worker threads; 0 = hardware concurrency
  std::optional<std::vector<FramePreset>> preset;
};

// Full pipeline: per frame select inducing points at the data extrema, learn
// the source variances, then compute the exact per-source posterior means
// with the learned prior; windowed frames are overlap-added into full-length
// sources. Failed frames contribute zeros unless options.strict.
SeparationResult separate(const Eigen::VectorXd& y, const FramePlan& plan,
                          const GpMixturePrior& prior_template,
                          const SeparateOptions& options = {});

// One JSON object per frame: {"w", "elbo", "sigma2", "nu2", "m", "ms", ...}.
void write_run_log(std::ostream& out, const SeparationResult& result);

} // namespace gpss
