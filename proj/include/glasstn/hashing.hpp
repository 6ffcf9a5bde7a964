#ifndef GLASSTN_HASHING_HPP
#define GLASSTN_HASHING_HPP

#include <cstdint>
#include <span>
#include <string>

namespace glasstn {

// FNV-1a, 64 bit. Content labels for manifests and checkpoints, not security.
inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                             std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t seed = 1469598103934665603ull) {
  return fnv1a64(
      std::span<const unsigned char>(
          reinterpret_cast<const unsigned char*>(s.data()), s.size()),
      seed);
}

template <typename T>
std::uint64_t fnv1a64_pod(const T& v, std::uint64_t seed = 1469598103934665603ull) {
  return fnv1a64(std::span<const unsigned char>(
                     reinterpret_cast<const unsigned char*>(&v), sizeof(T)),
                 seed);
}

}  // namespace glasstn

#endif
