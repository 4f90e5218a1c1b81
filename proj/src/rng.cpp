#include "renv/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace renv {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  std::uint64_t mix = seed ^ (0x6a09e667f3bcc909ULL * (stream + 1));
  for (auto& s : state_) s = splitmix64(mix);
}

std::uint64_t RngStream::next_u64() {
  std::uint64_t* s = state_;
  const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl(s[3], 45);
  ++counter_;
  return result;
}

double RngStream::uniform() {
  // 53-bit mantissa, shifted into (0,1) so log() is always safe.
  const double u = (next_u64() >> 11) * 0x1.0p-53;
  return u == 0.0 ? 0x1.0p-53 : u;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("RngStream::exponential: rate must be > 0");
  return -std::log(uniform()) / rate;
}

RngStream RngStream::substream(std::uint64_t id) const {
  std::uint64_t mix = seed_ ^ (0x9e3779b97f4a7c15ULL * (stream_ + 3));
  return RngStream(splitmix64(mix) ^ id, stream_ * 0x10001ULL + id + 1);
}

}  // namespace renv
