#pragma once

#include <cstdint>
#include <random>

namespace surveymix {

/// Seeded random stream. Identical (seed, stream_id) pairs reproduce identical
/// variate sequences; distinct stream ids give statistically independent streams.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  engine_type& engine() { return engine_; }

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal.
  double normal() { return normal_(engine_); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace surveymix
