#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pushrl {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic per-subsystem seed derivation from one master seed.
// Streams are indexed, so two runs with the same master seed replay the
// same random sequences in every subsystem.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t x = master ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  return splitmix64(x);
}

// xoshiro256** with hand-rolled uniform/normal draws. The standard library
// distributions are implementation-defined, this keeps every sampled value a
// pure function of the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t x = seed;
    for (auto& w : state_) w = splitmix64(x);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) { return int(next() % std::uint64_t(n)); }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller, one value per call; the sine branch is discarded so the
  // draw count per call is fixed.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi_ * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  const std::array<std::uint64_t, 4>& state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static constexpr double kTwoPi_ = 6.28318530717958647692;

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace pushrl
