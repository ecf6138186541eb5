#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace costsens {

/// Philox4x32-10 block cipher (Salmon et al., SC'11) used as a counter-based
/// generator. The key holds the 64-bit seed; the counter holds the
/// replication index, a stream id and a running block number, so every
/// (seed, replication, stream) triple owns an independent sequence.
class PhiloxEngine {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  PhiloxEngine(std::uint64_t seed, std::uint64_t replication, std::uint32_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        replication_(replication),
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (index_ == 4) {
      // Counter words: block (32 bits), stream, replication low, replication high.
      buffer_ = encrypt({block_, stream_, static_cast<std::uint32_t>(replication_),
                         static_cast<std::uint32_t>(replication_ >> 32)},
                        key_);
      ++block_;
      index_ = 0;
    }
    return buffer_[index_++];
  }

  static Block encrypt(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  /// Uniform double on the open interval (0, 1) from 53 random bits.
  double uniform01() noexcept {
    const std::uint64_t hi = operator()() >> 5;
    const std::uint64_t lo = operator()() >> 6;
    return (static_cast<double>(hi * 67108864u + lo) + 0.5) * 0x1.0p-53;
  }

 private:
  Key key_;
  std::uint64_t replication_;
  std::uint32_t stream_;
  std::uint32_t block_ = 0;
  Block buffer_{};
  int index_ = 4;
};

}  // namespace costsens
