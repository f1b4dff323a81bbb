#pragma once

#include <cstddef>
#include <cstdint>

namespace corefine {

struct Hash128 {
  uint64_t lo = 0;
  uint64_t hi = 0;
};

// MurmurHash3 x64 128-bit variant (Austin Appleby's public-domain algorithm).
// Used with a single fixed seed everywhere so block identities are stable
// across processes and hosts.
Hash128 murmur3_x64_128(const void* data, size_t len, uint32_t seed);

inline constexpr uint32_t kSigSeed = 0x5eedc0deu;

}  // namespace corefine
