#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tgadv {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr auto mix_seed(std::uint64_t x) -> std::uint64_t {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline auto derive_seed(std::initializer_list<std::uint64_t> parts) -> std::uint64_t {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto p : parts) h = mix_seed(h ^ mix_seed(p));
  return h;
}

inline auto make_rng(std::initializer_list<std::uint64_t> parts) -> Rng {
  return Rng(derive_seed(parts));
}

}  // namespace tgadv
