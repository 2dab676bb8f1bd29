#include "factex/rng.hpp"

namespace factex {

namespace {

inline std::uint32_t rotl32(std::uint32_t x, int r) {
  return (x << r) | (x >> (32 - r));
}

// rotation schedule of Threefry-2x32, repeated over the 20 rounds
constexpr int kRotations[8] = {13, 15, 26, 6, 17, 29, 16, 24};

}  // namespace

std::array<std::uint32_t, 2> threefry2x32(std::array<std::uint32_t, 2> key,
                                          std::array<std::uint32_t, 2> ctr) {
  const std::uint32_t ks0 = key[0];
  const std::uint32_t ks1 = key[1];
  const std::uint32_t ks2 = ks0 ^ ks1 ^ 0x1BD11BDAu;

  std::uint32_t x0 = ctr[0] + ks0;
  std::uint32_t x1 = ctr[1] + ks1;

  auto round = [&](int r) {
    x0 += x1;
    x1 = rotl32(x1, kRotations[r]);
    x1 ^= x0;
  };

  // 20 rounds, key injection after every 4
  for (int r = 0; r < 4; ++r) round(r);
  x0 += ks1; x1 += ks2 + 1;
  for (int r = 4; r < 8; ++r) round(r);
  x0 += ks2; x1 += ks0 + 2;
  for (int r = 0; r < 4; ++r) round(r);
  x0 += ks0; x1 += ks1 + 3;
  for (int r = 4; r < 8; ++r) round(r);
  x0 += ks1; x1 += ks2 + 4;
  for (int r = 0; r < 4; ++r) round(r);
  x0 += ks2; x1 += ks0 + 5;

  return {x0, x1};
}

std::uint64_t derive_stream_key(std::uint64_t seed, std::uint32_t domain,
                                std::uint64_t index) {
  // two encryption passes fold the 96 bits of (domain, index) into 64
  const std::array<std::uint32_t, 2> seed_key = {static_cast<std::uint32_t>(seed),
                                                 static_cast<std::uint32_t>(seed >> 32)};
  std::array<std::uint32_t, 2> first =
      threefry2x32(seed_key, {domain, static_cast<std::uint32_t>(index)});
  std::array<std::uint32_t, 2> second =
      threefry2x32(first, {static_cast<std::uint32_t>(index >> 32), 0u});
  return (static_cast<std::uint64_t>(second[1]) << 32) | second[0];
}

CounterRng::CounterRng(std::uint64_t seed, std::uint32_t domain, std::uint64_t index) {
  std::uint64_t stream = derive_stream_key(seed, domain, index);
  key_ = {static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

std::uint32_t CounterRng::next_u32() {
  if (avail_ == 0) {
    block_ = threefry2x32(key_, {static_cast<std::uint32_t>(counter_),
                                 static_cast<std::uint32_t>(counter_ >> 32)});
    ++counter_;
    avail_ = 2;
  }
  return block_[static_cast<std::size_t>(--avail_)];
}

std::uint64_t CounterRng::next_u64() {
  std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double CounterRng::next_unit() {
  // top 53 bits of a 64-bit draw, scaled by 2^-53
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint32_t CounterRng::below(std::uint32_t bound) {
  // rejection below the largest multiple of bound, so every residue is
  // equally likely
  const std::uint32_t limit = ~0u - (~0u % bound) - 1;
  std::uint32_t draw;
  do {
    draw = next_u32();
  } while (draw > limit);
  return draw % bound;
}

}  // namespace factex
