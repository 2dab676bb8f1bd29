#pragma once
// Counter-based random number generation (Threefry-2x32, 20 rounds). Every
// random quantity is a pure function of (seed, domain, index, counter), so
// draws are reproducible bit-for-bit across runs, platforms and thread
// counts. Substreams are derived by encrypting the (domain, index) pair
// under the master seed, so independent draws never share a counter
// sequence.

#include <array>
#include <cstdint>
#include <vector>

namespace factex {

// one 64-bit block of the 20-round Threefry-2x32 function
std::array<std::uint32_t, 2> threefry2x32(std::array<std::uint32_t, 2> key,
                                          std::array<std::uint32_t, 2> ctr);

// substream domains; keeps e.g. column permutations and assignment draws
// on disjoint keys even for equal indices
enum : std::uint32_t {
  kRngDomainGeneric = 0,
  kRngDomainPermute = 1,
  kRngDomainAssign = 2,
  kRngDomainProtocol = 3,
};

// stable 64-bit substream key for (seed, domain, index)
std::uint64_t derive_stream_key(std::uint64_t seed, std::uint32_t domain,
                                std::uint64_t index);

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t domain, std::uint64_t index);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // uniform in [0,1) with 53 random bits
  double next_unit();

  // uniform on {0, ..., bound-1}, exact via rejection sampling; bound > 0
  std::uint32_t below(std::uint32_t bound);

  // Fisher-Yates shuffle
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 2> block_{};
  int avail_ = 0;  // unconsumed 32-bit words in block_
};

}  // namespace factex
