#pragma once

#include <cstdint>
#include <vector>

namespace genrl::numkit {

// Counter-based stream built on a Philox-style 2x64 bijection (10 rounds,
// multiplier 0xD2B74407B1CE6E93, Weyl key step 0x9E3779B97F4A7C15). A stream
// is (key, counter): the key is derived from (seed, stream_id), each draw
// encrypts the next counter value, and split(child_id) derives an
// independent key by encrypting (key, child_id) under a fixed derivation
// key. Distinct (key, counter) pairs never collide within a stream, so
// derived streams are non-overlapping by construction. Value semantics:
// copying a stream copies its position.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  // Unbiased integer in [0, n), n >= 1. Rejection sampling.
  std::uint64_t uniform_below(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via the Marsaglia polar method (one value per call).
  double gaussian();

  // Independent child stream; the child starts at counter zero.
  RngStream split(std::uint64_t child_id) const;

  // Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::uint64_t buffer_[2] = {0, 0};
  int buffer_pos_ = 2;  // 2 = empty

  void refill();
};

}  // namespace genrl::numkit
