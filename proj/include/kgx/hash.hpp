#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace kgx {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// FNV-1a; stable across platforms, used to derive per-bucket seed streams.
constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace kgx
