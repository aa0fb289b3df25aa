#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace polyner {

// Counter-based splittable stream. A stream is fully determined by
// (master_seed, purpose_tag, index), so parallel workers can derive their own
// streams without coordinating and draws are independent of scheduling order.
// All distributions are implemented here rather than taken from <random>:
// the standard distributions are implementation-defined, and checkpoints must
// be byte-identical across compilers.
class RngStream {
 public:
  RngStream() : state_(0x9e3779b97f4a7c15ULL) {}
  RngStream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t index = 0);

  // Child stream keyed off this stream's identity; does not disturb this one.
  RngStream derive(std::string_view purpose, std::uint64_t index = 0) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random mantissa bits.
  double next_double();

  // Uniform on [lo, hi).
  double next_double(double lo, double hi);

  // Uniform integer in [0, n), n >= 1. Unbiased (Lemire rejection).
  std::uint64_t next_index(std::uint64_t n);

  bool next_bernoulli(double p);

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double next_normal();

  // Index sampled from unnormalized non-negative weights.
  std::size_t next_categorical(const std::vector<double>& weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view data);

}  // namespace polyner
