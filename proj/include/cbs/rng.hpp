#pragma once

#include <cstdint>
#include <random>

namespace cbs {

/// splitmix64 finalizer. Used to derive well-separated engine seeds from a
/// base seed plus stream tags, so that independent random streams (shuffle,
/// augmentation, mixing, ...) stay stable when unrelated code changes.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return mix64(mix64(base) ^ tag);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a, std::uint64_t tag_b) {
    return mix64(derive_seed(base, tag_a) ^ mix64(tag_b));
}

/// Stream tags for the trainer's per-epoch random streams.
namespace stream {
inline constexpr std::uint64_t kCentroids = 0x11;
inline constexpr std::uint64_t kBlobNoise = 0x12;
inline constexpr std::uint64_t kLabelNoise = 0x13;
inline constexpr std::uint64_t kTestSplit = 0x14;
inline constexpr std::uint64_t kShuffle = 0x21;
inline constexpr std::uint64_t kWeak = 0x22;
inline constexpr std::uint64_t kStrong = 0x23;
inline constexpr std::uint64_t kMix = 0x24;
inline constexpr std::uint64_t kInit = 0x25;
inline constexpr std::uint64_t kGrid = 0x31;
}  // namespace stream

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace cbs
