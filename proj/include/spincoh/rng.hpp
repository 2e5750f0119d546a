#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random streams. A draw depends only on (seed, stream index,
// domain, draw number), so ensembles can be split across threads in any way
// and still reproduce bit for bit.

namespace spincoh {

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Domain tags keep independent consumers of the same (seed, index) apart.
enum class StreamDomain : std::uint32_t {
  FieldNoise = 1,
  Measurement = 2,
  SyntheticData = 3,
};

/// Sequential draws from the stream identified by (seed, index, domain).
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t index, StreamDomain domain = StreamDomain::FieldNoise)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_(index),
        domain_(static_cast<std::uint32_t>(domain)) {}

  std::uint32_t next_u32() {
    if (used_ == 4) refill();
    return buf_[used_++];
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = next_u32() >> 5;  // 27 bits
    const std::uint64_t lo = next_u32() >> 6;  // 26 bits
    return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; pairs are consumed together.
  double normal() {
    if (haveSpare_) {
      haveSpare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 6.283185307179586 * uniform();
    spare_ = r * std::sin(theta);
    haveSpare_ = true;
    return r * std::cos(theta);
  }

 private:
  void refill() {
    buf_ = Philox4x32::generate({block_, domain_, static_cast<std::uint32_t>(index_),
                                 static_cast<std::uint32_t>(index_ >> 32)},
                                key_);
    ++block_;
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t index_;
  std::uint32_t domain_;
  std::uint32_t block_ = 0;
  Philox4x32::Block buf_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool haveSpare_ = false;
};

}  // namespace spincoh
