#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lethe {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

// FNV-1a over bytes; cheap, stable, good enough for ids and input digests.
inline std::uint64_t fnv1a_64(std::string_view data, std::uint64_t state = kFnvOffset) {
    for (unsigned char c : data) {
        state ^= c;
        state *= kFnvPrime;
    }
    return state;
}

std::string hex_digest(std::uint64_t value);

}  // namespace lethe
