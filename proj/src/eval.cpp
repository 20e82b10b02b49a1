#include "gpss/eval.hpp"

#include "gpss/detail/rng.hpp"
#include "gpss/errors.hpp"

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include <cmath>

namespace gpss {

namespace {

double ratio_db(double numerator, double denominator) {
  if (numerator <= 0.0) return -kBssCapDb;
  if (denominator <= 0.0) return kBssCapDb;
  const double db = 10.0 * std::log10(numerator / denominator);
  return std::clamp(db, -kBssCapDb, kBssCapDb);
}

} // namespace

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw InputSizeError("rmse: vectors must have equal, positive length");
  }
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

std::vector<BssMetrics> bss_eval(const std::vector<Eigen::VectorXd>& true_sources,
                                 const std::vector<Eigen::VectorXd>& estimates) {
  const int num_sources = static_cast<int>(true_sources.size());
  if (num_sources == 0 || estimates.size() != true_sources.size()) {
    throw InputSizeError("bss_eval: need equally many references and estimates");
  }
  const Eigen::Index n = true_sources[0].size();
  for (const auto& s : true_sources) {
    if (s.size() != n) throw InputSizeError("bss_eval: reference length mismatch");
    if (s.squaredNorm() == 0.0) {
      throw DegenerateSignalError("bss_eval: zero-norm reference source");
    }
  }
  for (const auto& s : estimates) {
    if (s.size() != n) throw InputSizeError("bss_eval: estimate length mismatch");
  }

  Eigen::MatrixXd gram(num_sources, num_sources);
  for (int i = 0; i < num_sources; ++i) {
    for (int j = i; j < num_sources; ++j) {
      gram(i, j) = gram(j, i) = true_sources[i].dot(true_sources[j]);
    }
  }
  const Eigen::LDLT<Eigen::MatrixXd> gram_ldlt(gram);

  std::vector<BssMetrics> metrics;
  metrics.reserve(estimates.size());
  for (int j = 0; j < num_sources; ++j) {
    const Eigen::VectorXd& estimate = estimates[static_cast<std::size_t>(j)];
    const Eigen::VectorXd& reference = true_sources[static_cast<std::size_t>(j)];

    const Eigen::VectorXd s_target =
        (estimate.dot(reference) / gram(j, j)) * reference;

    Eigen::VectorXd cross(num_sources);
    for (int k = 0; k < num_sources; ++k) {
      cross[k] = true_sources[static_cast<std::size_t>(k)].dot(estimate);
    }
    const Eigen::VectorXd coeffs = gram_ldlt.solve(cross);
    Eigen::VectorXd span_projection = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < num_sources; ++k) {
      span_projection += coeffs[k] * true_sources[static_cast<std::size_t>(k)];
    }

    const Eigen::VectorXd e_interf = span_projection - s_target;
    const Eigen::VectorXd e_artif = estimate - span_projection;

    BssMetrics m;
    m.sdr_db = ratio_db(s_target.squaredNorm(), (e_interf + e_artif).squaredNorm());
    m.sir_db = ratio_db(s_target.squaredNorm(), e_interf.squaredNorm());
    m.sar_db = ratio_db((s_target + e_interf).squaredNorm(), e_artif.squaredNorm());
    m.rmse = rmse(estimate, reference);
    metrics.push_back(m);
  }
  return metrics;
}

MsmKernelParams harmonic_kernel(double fundamental_hz, int partials,
                                double lengthscale_seconds, double variance,
                                double weight_decay) {
  if (partials < 1) throw ParameterError("harmonic_kernel: partials must be >= 1");
  MsmKernelParams params;
  params.variance = variance;
  params.lengthscale = lengthscale_seconds;
  double weight = 1.0;
  double weight_sum = 0.0;
  for (int d = 1; d <= partials; ++d) {
    params.components.push_back(
        {weight, 2.0 * M_PI * fundamental_hz * static_cast<double>(d)});
    weight_sum += weight;
    weight *= weight_decay;
  }
  for (auto& c : params.components) c.weight /= weight_sum;
  params.canonicalize();
  params.validate();
  return params;
}

namespace {

// Equal-power crossfade of independent per-block GP draws; preserves the
// marginal variance across seams.
Eigen::VectorXd sample_source_blockwise(const MsmKernelParams& kernel,
                                        Eigen::Index n, double sample_rate,
                                        Eigen::Index block, Eigen::Index fade,
                                        std::uint64_t seed, int source_index) {
  GpMixturePrior single;
  single.kernels = {kernel};
  single.noise_variance = 1.0; // unused: only the noiseless source draw is kept

  const Eigen::Index hop = block - fade;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);

  for (Eigen::Index start = 0, b = 0; start < n; start += hop, ++b) {
    const Eigen::Index len = std::min(block, n - start);
    Eigen::VectorXd times(len);
    for (Eigen::Index i = 0; i < len; ++i) {
      times[i] = static_cast<double>(start + i) / sample_rate;
    }
    const auto draw =
        sample_prior(single, times,
                     detail::mix_seed(seed, static_cast<std::uint64_t>(source_index) + 1,
                                      static_cast<std::uint64_t>(b)));
    const bool fades_out = start + block < n;           // another block follows
    const bool fades_in = b > 0 && start + fade < n;    // the previous one faded out
    for (Eigen::Index i = 0; i < len; ++i) {
      double w = 1.0;
      if (fades_in && i < fade) {
        w = std::sin(0.5 * M_PI * (static_cast<double>(i) + 0.5) / static_cast<double>(fade));
      }
      if (fades_out && i >= len - fade) {
        const double k = static_cast<double>(i - (len - fade));
        w = std::cos(0.5 * M_PI * (k + 0.5) / static_cast<double>(fade));
      }
      out[start + i] += w * draw.sources[0][i];
    }
    if (start + len >= n) break;
  }
  return out;
}

} // namespace

Benchmark make_benchmark(const BenchmarkSpec& spec) {
  if (spec.kernels.empty()) throw ParameterError("make_benchmark: no kernels given");
  for (const auto& k : spec.kernels) k.validate();
  if (!(spec.duration_seconds > 0.0) || !(spec.sample_rate > 0.0)) {
    throw ParameterError("make_benchmark: duration and sample_rate must be positive");
  }
  const Eigen::Index n =
      static_cast<Eigen::Index>(std::llround(spec.duration_seconds * spec.sample_rate));
  if (n < 2) throw ParameterError("make_benchmark: too few samples");
  if (n > 1000000) throw ParameterError("make_benchmark: more than 10^6 samples");
  const int num_sources = static_cast<int>(spec.kernels.size());
  if (spec.note_sequence && num_sources != 3) {
    throw ParameterError("make_benchmark: the note-sequence pattern needs exactly 3 sources");
  }

  double noise_variance = spec.noise_variance;
  bool noise_floored = false;
  if (!(noise_variance > 0.0)) {
    noise_variance = 1e-12;
    noise_floored = true;
  }

  Eigen::Index block =
      static_cast<Eigen::Index>(std::llround(spec.block_seconds * spec.sample_rate));
  block = std::min<Eigen::Index>(std::max<Eigen::Index>(block, 16), std::min<Eigen::Index>(n, 10000));
  Eigen::Index fade =
      static_cast<Eigen::Index>(std::llround(spec.crossfade_seconds * spec.sample_rate));
  fade = std::min<Eigen::Index>(std::max<Eigen::Index>(fade, 1), block / 2);

  Benchmark benchmark;
  for (int j = 0; j < num_sources; ++j) {
    benchmark.sources.push_back(sample_source_blockwise(
        spec.kernels[static_cast<std::size_t>(j)], n, spec.sample_rate, block, fade,
        spec.seed, j));
  }

  // 7-segment activation pattern over 3 sources: solos, pairs, tutti
  static const int kPattern[7][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},
                                     {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  nlohmann::json masks = nlohmann::json::array();
  if (spec.note_sequence) {
    const Eigen::Index seg = n / 7;
    for (int s = 0; s < 7; ++s) {
      const Eigen::Index begin = s * seg;
      const Eigen::Index end = (s == 6) ? n : (s + 1) * seg;
      masks.push_back({{"segment", s},
                       {"begin", begin},
                       {"end", end},
                       {"active", {kPattern[s][0], kPattern[s][1], kPattern[s][2]}}});
      for (int j = 0; j < 3; ++j) {
        if (!kPattern[s][j]) {
          benchmark.sources[static_cast<std::size_t>(j)].segment(begin, end - begin).setZero();
        }
      }
    }
  }

  benchmark.mixture = Eigen::VectorXd::Zero(n);
  for (const auto& s : benchmark.sources) benchmark.mixture += s;
  detail::GaussianSampler noise(detail::mix_seed(spec.seed, 0x6e6f697365ULL));
  benchmark.mixture += std::sqrt(noise_variance) * noise.vector(n);

  benchmark.metadata = {
      {"generator", "blockwise GP sampling with equal-power crossfade"},
      {"num_sources", num_sources},
      {"samples", n},
      {"duration_seconds", spec.duration_seconds},
      {"sample_rate_hz", spec.sample_rate},
      {"noise_variance", noise_variance},
      {"noise_variance_floored", noise_floored},
      {"seed", spec.seed},
      {"block_samples", block},
      {"crossfade_samples", fade},
      {"note_sequence", spec.note_sequence},
      {"segments", masks}};
  return benchmark;
}

} // namespace gpss
