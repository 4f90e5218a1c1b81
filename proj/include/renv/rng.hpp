#pragma once

#include <cstdint>

namespace renv {

// Deterministic random stream (xoshiro256++ behind a splitmix64 seeder).
// Identical (seed, stream) pairs give identical draw sequences on any
// platform; substreams are decorrelated by seed mixing and never share
// state with their parent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();                 // open interval (0,1)
  double normal();                  // standard normal (Box-Muller, cosine branch)
  double exponential(double rate);  // mean 1/rate, rate > 0

  RngStream substream(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;  // u64 words consumed
  std::uint64_t state_[4] = {};
};

}  // namespace renv
