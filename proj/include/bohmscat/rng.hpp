#pragma once

#include <cstdint>
#include <random>

namespace bohmscat {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream k of a master seed: seed_k = splitmix64(master ^ splitmix64(k)).
// Every parallel job draws from its own stream, so worker count never
// changes the numbers.
inline std::mt19937_64 stream_rng(std::uint64_t master, std::uint64_t k) {
  return std::mt19937_64(splitmix64(master ^ splitmix64(k + 1)));
}

}  // namespace bohmscat
