#pragma once

#include <cstdint>
#include <string_view>

namespace glow {

// All randomness in a run flows from one top-level seed. Stage- and
// item-level generators use child seeds derived as
//   derive_seed(seed, label) = splitmix64(seed ^ fnv1a64(label))
// so adding a stage never perturbs the streams of existing ones.

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return splitmix64(seed ^ fnv1a64(label));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                    std::uint64_t index) {
  return splitmix64(derive_seed(seed, label) ^ splitmix64(index + 0x51ed2701));
}

}  // namespace glow
