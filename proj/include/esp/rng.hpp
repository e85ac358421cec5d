#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace esp {

// xoshiro256** seeded through splitmix64. The generator is pinned so a given
// seed yields the same sample sequence on every platform; std:: distributions
// are avoided for the same reason. Each consumer of randomness takes its own
// stream via Rng::stream(seed, tag), never a shared instance.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent generator for a named consumer of the run seed.
  static Rng stream(std::uint64_t seed, std::string_view tag);

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double stddev = 1.0);

  // Uniform over [0, n); n must be positive.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = index(i + 1);
      std::swap(v[i], v[j]);
    }
  }

  // k distinct indices drawn uniformly from [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t state_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace esp
