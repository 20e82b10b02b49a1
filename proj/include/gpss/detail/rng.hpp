#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace gpss::detail {

// Mixes several integers into one seed (used to derive independent streams).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

// Deterministic N(0,1) stream. std::normal_distribution is implementation
// defined, so Box-Muller is applied directly to mt19937_64 output; the
// value sequence depends only on the seed.
class GaussianSampler {
public:
  explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

  // uniform on (0,1), strictly inside the open interval
  double next_uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double next() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = next();
    return v;
  }

private:
  std::mt19937_64 gen_;
};

} // namespace gpss::detail
