#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace podscale {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a root seed, a stream label and an
// index, so one root seed fans out to every agent and generator.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

// 64-bit FNV-1a, used for config hashes and stream labels.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace podscale
