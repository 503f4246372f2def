#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace mpfusion {

/// Philox4x32-10 counter-based block function (Salmon et al., SC'11).
///
/// Multipliers 0xD2511F53 / 0xCD9E8D57, Weyl key increments 0x9E3779B9 /
/// 0xBB67AE85, ten rounds. Output matches the Random123 known-answer vectors.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  static constexpr int kRounds = 10;

  static Counter block(Counter counter, Key key);
};

/// Mixes a tuple of integers into one 64-bit stream id (splitmix64 chain).
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts);

/// One reproducible random stream: key = seed, counter = (block index, stream id).
///
/// Any (seed, stream) pair can be regenerated from scratch, so work split over
/// threads draws the same numbers no matter how it is scheduled.
class CounterRng {
 public:
  using result_type = std::uint32_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u32(); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  void fill_normal(std::span<double> out);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Stream purposes; combined with a seed and indices via derive_stream.
enum class StreamPurpose : std::uint64_t {
  training = 1,
  calibration = 2,
  evaluation = 3,
  couplings = 4,
  probes = 5,
  activity = 6,
  generic = 7,
};

}  // namespace mpfusion
