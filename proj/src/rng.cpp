#include "genrl/numkit/rng.hpp"

#include <cmath>

#include "genrl/error.hpp"

namespace genrl::numkit {
namespace {

constexpr std::uint64_t kMultiplier = 0xD2B74407B1CE6E93ULL;
constexpr std::uint64_t kWeylStep = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kDeriveKey = 0x243F6A8885A308D3ULL;

struct Block {
  std::uint64_t x0, x1;
};

inline Block philox2x64(std::uint64_t c0, std::uint64_t c1, std::uint64_t key) {
  std::uint64_t x0 = c0, x1 = c1, k = key;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(kMultiplier) * x0;
    const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
    const std::uint64_t lo = static_cast<std::uint64_t>(prod);
    x0 = hi ^ k ^ x1;
    x1 = lo;
    k += kWeylStep;
  }
  return {x0, x1};
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  key_ = philox2x64(seed, stream_id, kDeriveKey).x0;
}

void RngStream::refill() {
  const Block b = philox2x64(counter_++, 0, key_);
  buffer_[0] = b.x0;
  buffer_[1] = b.x1;
  buffer_pos_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (buffer_pos_ >= 2) refill();
  return buffer_[buffer_pos_++];
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  require(n >= 1, "uniform_below: n must be positive");
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::gaussian() {
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

RngStream RngStream::split(std::uint64_t child_id) const {
  RngStream child;
  child.seed_ = seed_;
  child.stream_id_ = child_id;
  child.key_ = philox2x64(key_, child_id, kDeriveKey).x0;
  child.counter_ = 0;
  child.buffer_pos_ = 2;
  return child;
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace genrl::numkit
