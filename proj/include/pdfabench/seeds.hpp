#pragma once

#include <cstdint>
#include <string_view>

namespace pdfabench {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stable per-task seed: FNV-1a over the key, mixed with the base seed.
/// Identical across runs, platforms and thread schedules.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view key) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return splitmix64(h ^ splitmix64(base));
}

}  // namespace pdfabench
