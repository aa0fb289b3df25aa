#include "polyner/rng.hpp"

#include <cmath>

#include "polyner/errors.hpp"

namespace polyner {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view purpose,
                     std::uint64_t index) {
  std::uint64_t key = mix64(master_seed);
  key = mix64(key ^ fnv1a64(purpose));
  key = mix64(key ^ index);
  state_ = key;
}

RngStream RngStream::derive(std::string_view purpose, std::uint64_t index) const {
  return RngStream(mix64(state_), purpose, index);
}

std::uint64_t RngStream::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_double(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

std::uint64_t RngStream::next_index(std::uint64_t n) {
  if (n == 0) raise(ErrorKind::InvalidArgument, "next_index requires n >= 1");
  // Lemire's multiply-shift with rejection of the biased region.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  std::uint64_t lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    std::uint64_t threshold = (0 - n) % n;
    while (lo < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

bool RngStream::next_bernoulli(double p) {
  return next_double() < p;
}

double RngStream::next_normal() {
  double u1 = next_double();
  double u2 = next_double();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t RngStream::next_categorical(const std::vector<double>& weights) {
  if (weights.empty()) raise(ErrorKind::InvalidArgument, "empty categorical weights");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      raise(ErrorKind::InvalidArgument, "categorical weights must be finite and >= 0");
    }
    total += w;
  }
  if (total <= 0.0) raise(ErrorKind::InvalidArgument, "categorical weights sum to zero");
  double u = next_double() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

}  // namespace polyner
