#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace fatigue {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based splittable generator.
//
// A stream is identified by a 64-bit key. Draw n returns
// mix64(key + n * 0x9e3779b97f4a7c15). A child stream with id s has key
// mix64(key ^ mix64(s + 1)), so every random quantity in a run is a pure
// function of the run seed and the path of stream ids leading to it.
//
// Stream ids in use:
//   run seed -> 1 data generation, 2 detector init/shuffle, 3 policy
//   training, 4 evaluation, 5 gradcheck, 6 denoiser, 7 sentiment.
//   episode e of any stage -> split(e); user noise inside an episode ->
//   split(1), profile/device draws -> split(2), behaviour policy -> split(3).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return mix64(key_ + counter_++ * 0x9e3779b97f4a7c15ULL);
  }

  Rng split(std::uint64_t stream) const noexcept {
    Rng child(0);
    child.key_ = mix64(key_ ^ mix64(stream + 1));
    return child;
  }

  std::uint64_t key() const noexcept { return key_; }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(*this); }
  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(*this);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fatigue
