#pragma once

#include "gpss/gpcore.hpp"

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace gpss {

// Energy-ratio separation metrics for one source estimate. Ratios that would
// be infinite (exact reconstruction, zero error component) are capped at
// +-200 dB.
struct BssMetrics {
  double sdr_db = 0.0;
  double sir_db = 0.0;
  double sar_db = 0.0;
  double rmse = 0.0;
};

inline constexpr double kBssCapDb = 200.0;

// Projection-based decomposition: s_target is the projection of the estimate
// onto its own reference, e_interf the remainder of the projection onto the
// span of all references, e_artif everything else.
std::vector<BssMetrics> bss_eval(const std::vector<Eigen::VectorXd>& true_sources,
                                 const std::vector<Eigen::VectorXd>& estimates);

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct BenchmarkSpec {
  std::vector<MsmKernelParams> kernels; // one per source
  double duration_seconds = 2.0;
  double sample_rate = 16000.0;
  double noise_variance = 1e-4;
  std::uint64_t seed = 0;
  bool note_sequence = false; // 3 sources through the 7-segment activation pattern
  double block_seconds = 0.125;
  double crossfade_seconds = 0.03125;
};

struct Benchmark {
  std::vector<Eigen::VectorXd> sources;
  Eigen::VectorXd mixture;
  nlohmann::json metadata;
};

// Draws each source blockwise from its GP prior with equal-power crossfades
// between independent blocks, then mixes with additive Gaussian noise.
// Deterministic for a fixed seed.
Benchmark make_benchmark(const BenchmarkSpec& spec);

// Harmonic MSM kernel: `partials` components at multiples of the fundamental
// with geometrically decaying weights (normalized to sum 1).
MsmKernelParams harmonic_kernel(double fundamental_hz, int partials,
                                double lengthscale_seconds, double variance,
                                double weight_decay = 0.7);

} // namespace gpss
