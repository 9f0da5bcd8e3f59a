/**
 * @file rng.hpp
 * @brief Seed derivation for reproducible, order-independent sampling.
 *
 * Every stochastic operation takes an explicit 64-bit seed. Sub-seeds are
 * derived with splitmix64 from (master, stream tag, index) so per-sample
 * generation does not depend on processing order or thread count.
 */
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace xlvr {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_tag(std::string_view tag) {
  // FNV-1a 64-bit.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t derive_seed(uint64_t master, std::string_view stream, uint64_t index) {
  uint64_t s = splitmix64(master ^ hash_tag(stream));
  return splitmix64(s ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace xlvr
