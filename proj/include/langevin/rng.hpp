#pragma once

// Counter-based random streams.
//
// Every stream is a pure function of (master_seed, stream_index): the Philox
// key holds the seed, the upper half of the counter holds the stream index
// and the lower half counts blocks. Path i can therefore be regenerated in
// isolation and in any order, which is what makes path-parallel runs
// reproducible byte for byte.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace langevin {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Block apply(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

// Identifies one independent stream. `zero_noise` is a test hook: a stream in
// that mode yields exact zeros and must never feed a statistical estimate.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  bool zero_noise = false;

  static RngStream zero() { return RngStream{0, 0, true}; }
};

// Independent channels derived from one path index.
enum class Channel : std::uint64_t {
  kDriving = 0,    // W (and the conditional part of Y) for the construction
  kIntegrator = 1, // B for the time-stepping solver
  kBPrime = 2,     // the auxiliary Brownian motion used for recovery
  kAux = 3,        // bridge refinement and other local resampling
  kImpactAux = 4,  // bridge draws inside refined integrator steps
};

// Same path and seed, different channel.
inline RngStream rechannel(const RngStream& s, Channel channel) {
  return RngStream{s.master_seed, (s.stream_index & ~std::uint64_t{0xF}) |
                                      static_cast<std::uint64_t>(channel),
                   s.zero_noise};
}

inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t path_index,
                               Channel channel) {
  return RngStream{master_seed, (path_index << 4) | static_cast<std::uint64_t>(channel), false};
}

// Sequential standard-normal draws from one stream (Box-Muller on Philox
// blocks; each block yields two doubles with 53 random bits each).
class NormalSource {
 public:
  explicit NormalSource(const RngStream& stream)
      : key_{static_cast<std::uint32_t>(stream.master_seed),
             static_cast<std::uint32_t>(stream.master_seed >> 32)},
        stream_index_(stream.stream_index),
        zero_(stream.zero_noise) {}

  double next() {
    if (zero_) return 0.0;
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto block = Philox4x32::apply(
        {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
         static_cast<std::uint32_t>(stream_index_),
         static_cast<std::uint32_t>(stream_index_ >> 32)},
        key_);
    ++counter_;
    const double u1 = 1.0 - to_unit(block[0], block[1]);  // (0, 1]
    const double u2 = to_unit(block[2], block[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform on [0, 1), consuming one whole block.
  double uniform() {
    if (zero_) return 0.0;
    const auto block = Philox4x32::apply(
        {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
         static_cast<std::uint32_t>(stream_index_),
         static_cast<std::uint32_t>(stream_index_ >> 32)},
        key_);
    ++counter_;
    return to_unit(block[0], block[1]);
  }

  bool zero_noise() const { return zero_; }

 private:
  static double to_unit(std::uint32_t a, std::uint32_t b) {
    return ((a >> 5) * 67108864.0 + (b >> 6)) * (1.0 / 9007199254740992.0);
  }

  Philox4x32::Key key_;
  std::uint64_t stream_index_;
  std::uint64_t counter_ = 0;
  bool zero_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace langevin
